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

#include <cstring>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mvedit/checkpoint.hpp"
#include "mvedit/dataset.hpp"
#include "mvedit/errors.hpp"
#include "mvedit/image_io.hpp"
#include "support.hpp"

namespace mvedit {
namespace {

using testing::TempDir;
using testing::read_bytes;
using testing::uniform_raster;

TEST(Png, RoundTripOfQuantizedImage) {
  TempDir dir("png");
  Rng rng = make_stream(1, 0);
  const Raster img = quantize8(uniform_raster(rng, 3, 7, 9));
  write_png(dir / "a.png", img);
  EXPECT_EQ(read_png(dir / "a.png"), img);
}

TEST(Png, HeaderIsEightBitRgb) {
  TempDir dir("png");
  write_png(dir / "a.png", Raster(3, 5, 6, 0.5));
  const std::string bytes = read_bytes(dir / "a.png");
  ASSERT_GT(bytes.size(), 26u);
  EXPECT_EQ(bytes.substr(1, 3), "PNG");
  EXPECT_EQ(bytes.substr(12, 4), "IHDR");
  EXPECT_EQ(static_cast<unsigned char>(bytes[19]), 6u);   // width
  EXPECT_EQ(static_cast<unsigned char>(bytes[23]), 5u);   // height
  EXPECT_EQ(static_cast<unsigned char>(bytes[24]), 8u);   // bit depth
  EXPECT_EQ(static_cast<unsigned char>(bytes[25]), 2u);   // colour type RGB
}

TEST(Png, ClampsOnWriteAndRejectsGarbage) {
  TempDir dir("png");
  Raster img(3, 1, 2);
  img.at(0, 0, 0) = -0.5;
  img.at(1, 0, 1) = 1.7;
  write_png(dir / "a.png", img);
  const Raster back = read_png(dir / "a.png");
  EXPECT_EQ(back.at(0, 0, 0), 0.0);
  EXPECT_EQ(back.at(1, 0, 1), 1.0);
  std::ofstream(dir / "bad.png") << "definitely not a png";
  EXPECT_THROW(read_png(dir / "bad.png"), DataError);
  EXPECT_THROW(read_png(dir / "missing.png"), DataError);
}

TEST(Cameras, TextFormat) {
  const auto cams = ring_cameras(3, 3.0, 1.2, 40.0, 16, 24);
  std::stringstream buf;
  write_cameras(buf, cams);
  std::string first;
  std::getline(buf, first);
  std::istringstream fields(first);
  std::vector<std::string> tokens;
  for (std::string t; fields >> t;) tokens.push_back(t);
  ASSERT_EQ(tokens.size(), 19u);  // id, 4 intrinsics, 9 rotation, 3 translation, H, W
  EXPECT_EQ(tokens[0], "0");
  EXPECT_EQ(tokens[17], "16");
  EXPECT_EQ(tokens[18], "24");

  buf.clear();
  buf.seekg(0);
  const auto back = read_cameras(buf);
  ASSERT_EQ(back.size(), cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    EXPECT_EQ(back[i].intrinsics, cams[i].intrinsics);
    EXPECT_LE((back[i].rotation - cams[i].rotation).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((back[i].translation - cams[i].translation).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Cameras, MalformedLineNamesLocation) {
  std::istringstream in("0 1 1 0 0 1 0 0 0 1 0 0 0 1 0 0 0 8 8\n1 1 1 0 0 1 0 0\n");
  try {
    read_cameras(in, "cams.txt");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("cams.txt:2"), std::string::npos) << e.what();
  }
}

Dataset small_dataset(bool with_corr) {
  Dataset d;
  d.cameras = ring_cameras(3, 3.0, 1.2, 40.0, 16, 16);
  for (const auto& c : d.cameras) {
    d.images.push_back(quantize8(render_ground_truth(default_scene(), c).image));
  }
  if (with_corr) d.correspondences = derive_correspondences(default_scene(), d.cameras, 1e-2, 2);
  return d;
}

TEST(Dataset, RoundTrip) {
  TempDir dir("ds");
  const Dataset d = small_dataset(true);
  save_dataset(dir.path(), d);
  EXPECT_TRUE(std::filesystem::exists(dir / "images/view_000.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "cameras.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "correspondence.txt"));
  const Dataset back = load_dataset(dir.path());
  EXPECT_EQ(back.images, d.images);
  ASSERT_TRUE(back.correspondences);
  EXPECT_EQ(*back.correspondences, *d.correspondences);
  for (std::size_t i = 0; i < d.cameras.size(); ++i) {
    EXPECT_LE((back.cameras[i].rotation - d.cameras[i].rotation).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Dataset, MissingCorrespondenceFileIsAbsentNotEmpty) {
  TempDir dir("ds");
  save_dataset(dir.path(), small_dataset(false));
  EXPECT_FALSE(load_dataset(dir.path()).correspondences.has_value());
}

TEST(Dataset, BadCorrespondenceLineIsReported) {
  TempDir dir("ds");
  save_dataset(dir.path(), small_dataset(false));
  std::ofstream(dir / "correspondence.txt") << "2 0:0:0 1:0:0\n2 0:1:1 1:99:0\n";
  try {
    load_dataset(dir.path());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(Dataset, MissingImageIsDataError) {
  TempDir dir("ds");
  save_dataset(dir.path(), small_dataset(false));
  std::filesystem::remove(dir / "images/view_001.png");
  EXPECT_THROW(load_dataset(dir.path()), DataError);
}

Checkpoint sample_checkpoint(bool extras) {
  Rng rng = make_stream(2, 0);
  Checkpoint ck;
  ck.field = VoxelField::uniform(4, Eigen::Vector3d(-1, -2, -3), Eigen::Vector3d(1, 2, 3.5), 0, 0);
  // f32-representable so the round trip is exact.
  for (double& v : ck.field.density) v = static_cast<float>(std::normal_distribution<double>()(rng));
  for (double& v : ck.field.color) v = static_cast<float>(std::normal_distribution<double>()(rng));
  if (extras) {
    FieldOptimizer opt = FieldOptimizer::for_field(ck.field, AdamConfig{0.01, 0.9, 0.999, 1e-8},
                                                   AdamConfig{0.03, 0.8, 0.99, 1e-7});
    opt.density.step = 17;
    opt.color.step = 17;
    for (double& v : opt.density.m) v = 0.25;
    for (double& v : opt.color.v) v = 0.125;
    ck.optimizer = opt;
    ck.schedule = make_schedule(50, 0.02, 0.3);
  }
  return ck;
}

TEST(Checkpoint, RoundTrip) {
  for (bool extras : {false, true}) {
    std::stringstream buf;
    const Checkpoint ck = sample_checkpoint(extras);
    write_checkpoint(buf, ck);
    EXPECT_EQ(read_checkpoint(buf), ck);
  }
}

TEST(Checkpoint, ByteLayout) {
  const Checkpoint ck = sample_checkpoint(false);
  std::ostringstream out;
  write_checkpoint(out, ck);
  const std::string b = out.str();
  ASSERT_EQ(b.size(), 4u + 4 + 4 + 48 + 4 * 64 + 4 * 64 * 3);
  EXPECT_EQ(b.substr(0, 4), "MVDF");
  std::uint32_t version = 0;
  std::uint32_t res = 0;
  double bmax_z = 0.0;
  float d0 = 0.0f;
  float c_last = 0.0f;
  std::memcpy(&version, b.data() + 4, 4);
  std::memcpy(&res, b.data() + 8, 4);
  std::memcpy(&bmax_z, b.data() + 12 + 5 * 8, 8);
  std::memcpy(&d0, b.data() + 60, 4);
  std::memcpy(&c_last, b.data() + b.size() - 4, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  EXPECT_EQ(res, 4u);
  EXPECT_EQ(bmax_z, 3.5);
  EXPECT_EQ(d0, static_cast<float>(ck.field.density[0]));
  EXPECT_EQ(c_last, static_cast<float>(ck.field.color.back()));
}

TEST(Checkpoint, CorruptInputRejected) {
  std::ostringstream out;
  write_checkpoint(out, sample_checkpoint(true));
  const std::string good = out.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::istringstream a(bad_magic);
  EXPECT_THROW(read_checkpoint(a), DataError);

  std::istringstream b(good.substr(0, good.size() - 3));
  EXPECT_THROW(read_checkpoint(b), DataError);

  std::istringstream c(good + "JUNK");
  EXPECT_THROW(read_checkpoint(c), DataError);
}

TEST(Checkpoint, FileHelpers) {
  TempDir dir("ck");
  const Checkpoint ck = sample_checkpoint(true);
  save_checkpoint(dir / "a.mvdf", ck);
  EXPECT_EQ(load_checkpoint(dir / "a.mvdf"), ck);
  EXPECT_THROW(load_checkpoint(dir / "missing.mvdf"), DataError);
}

}  // namespace
}  // namespace mvedit
