// Copyright 2026 The mvedit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mvedit/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mvedit/errors.hpp"
#include "mvedit/image_io.hpp"

namespace mvedit {

std::string view_image_name(int view) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03d.png", view);
  return buf;
}

void write_cameras(std::ostream& out, const std::vector<Camera>& cams) {
  std::ostringstream line;
  line.precision(17);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const auto& c = cams[i];
    line.str("");
    line << i << ' ' << c.intrinsics.fx << ' ' << c.intrinsics.fy << ' ' << c.intrinsics.cx << ' '
         << c.intrinsics.cy;
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) line << ' ' << c.rotation(r, col);
    }
    for (int k = 0; k < 3; ++k) line << ' ' << c.translation[k];
    line << ' ' << c.height << ' ' << c.width << '\n';
    out << line.str();
  }
}

std::vector<Camera> read_cameras(std::istream& in, const std::string& source_name) {
  std::vector<Camera> cams;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto fail = [&](const std::string& why) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": " + why);
    };
    std::istringstream fields(line);
    long long id = -1;
    Camera c;
    if (!(fields >> id)) fail("missing camera id");
    if (id != static_cast<long long>(cams.size())) fail("camera ids must be 0, 1, 2, ... in order");
    if (!(fields >> c.intrinsics.fx >> c.intrinsics.fy >> c.intrinsics.cx >> c.intrinsics.cy)) {
      fail("malformed intrinsics");
    }
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) {
        if (!(fields >> c.rotation(r, col))) fail("malformed rotation");
      }
    }
    for (int k = 0; k < 3; ++k) {
      if (!(fields >> c.translation[k])) fail("malformed translation");
    }
    if (!(fields >> c.height >> c.width)) fail("malformed resolution");
    std::string extra;
    if (fields >> extra) fail("unexpected trailing field '" + extra + "'");
    try {
      c.validate();
    } catch (const DataError& e) {
      fail(e.what());
    }
    cams.push_back(c);
  }
  return cams;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  if (data.images.size() != data.cameras.size()) {
    throw UsageError("dataset needs one image per camera");
  }
  std::filesystem::create_directories(dir / "images");
  for (std::size_t v = 0; v < data.images.size(); ++v) {
    write_png(dir / "images" / view_image_name(static_cast<int>(v)), data.images[v]);
  }
  {
    std::ofstream out(dir / "cameras.txt");
    if (!out) throw DataError("cannot write " + (dir / "cameras.txt").string());
    write_cameras(out, data.cameras);
  }
  const auto corr_path = dir / "correspondence.txt";
  if (data.correspondences) {
    save_correspondences(corr_path, *data.correspondences);
  } else {
    std::filesystem::remove(corr_path);
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto cam_path = dir / "cameras.txt";
  std::ifstream cam_in(cam_path);
  if (!cam_in) throw DataError("missing " + cam_path.string());
  Dataset data;
  data.cameras = read_cameras(cam_in, cam_path.string());
  if (data.cameras.empty()) throw DataError(cam_path.string() + ": no cameras");
  for (std::size_t v = 0; v < data.cameras.size(); ++v) {
    const auto path = dir / "images" / view_image_name(static_cast<int>(v));
    if (!std::filesystem::exists(path)) throw DataError("missing " + path.string());
    Raster img = read_png(path);
    if (img.height != data.cameras[v].height || img.width != data.cameras[v].width) {
      throw DataError(path.string() + ": size does not match camera " + std::to_string(v));
    }
    data.images.push_back(std::move(img));
  }
  const auto corr_path = dir / "correspondence.txt";
  if (std::filesystem::exists(corr_path)) {
    const auto& c0 = data.cameras.front();
    for (const auto& c : data.cameras) {
      if (c.height != c0.height || c.width != c0.width) {
        throw DataError("correspondences need cameras of one resolution");
      }
    }
    data.correspondences = load_correspondences(corr_path, static_cast<int>(data.cameras.size()),
                                                c0.height, c0.width);
  }
  return data;
}

}  // namespace mvedit
