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

#include "mvedit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mvedit/errors.hpp"

namespace mvedit {
namespace {

constexpr char kMagic[4] = {'M', 'V', 'D', 'F'};
constexpr char kAdamTag[4] = {'A', 'D', 'A', 'M'};
constexpr char kScheduleTag[4] = {'S', 'C', 'H', 'D'};

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError("checkpoint truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void put_f32_array(std::ostream& out, const std::vector<double>& values) {
  for (double v : values) put<float>(out, static_cast<float>(v));
}

void get_f32_array(std::istream& in, std::vector<double>& values) {
  for (double& v : values) v = static_cast<double>(get<float>(in));
}

void put_adam(std::ostream& out, const AdamState& s) {
  put<std::uint64_t>(out, s.step);
  put<double>(out, s.config.lr);
  put<double>(out, s.config.beta1);
  put<double>(out, s.config.beta2);
  put<double>(out, s.config.eps);
  put_f32_array(out, s.m);
  put_f32_array(out, s.v);
}

AdamState get_adam(std::istream& in, std::size_t n) {
  AdamState s;
  s.step = get<std::uint64_t>(in);
  s.config.lr = get<double>(in);
  s.config.beta1 = get<double>(in);
  s.config.beta2 = get<double>(in);
  s.config.eps = get<double>(in);
  s.m.resize(n);
  s.v.resize(n);
  get_f32_array(in, s.m);
  get_f32_array(in, s.v);
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& f = ckpt.field;
  f.validate();
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.resolution));
  for (int a = 0; a < 3; ++a) put<double>(out, f.bounds_min[a]);
  for (int a = 0; a < 3; ++a) put<double>(out, f.bounds_max[a]);
  put_f32_array(out, f.density);
  put_f32_array(out, f.color);
  if (ckpt.optimizer) {
    out.write(kAdamTag, 4);
    put_adam(out, ckpt.optimizer->density);
    put_adam(out, ckpt.optimizer->color);
  }
  if (ckpt.schedule) {
    out.write(kScheduleTag, 4);
    const auto betas = ckpt.schedule->betas();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(betas.size()));
    for (double b : betas) put<double>(out, b);
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("not an MVDF checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto res = get<std::uint32_t>(in);
  if (res < 2 || res > 1024) throw DataError("checkpoint resolution out of range");
  Checkpoint ckpt;
  auto& f = ckpt.field;
  f.resolution = static_cast<int>(res);
  for (int a = 0; a < 3; ++a) f.bounds_min[a] = get<double>(in);
  for (int a = 0; a < 3; ++a) f.bounds_max[a] = get<double>(in);
  f.density.resize(f.voxel_count());
  f.color.resize(3 * f.voxel_count());
  get_f32_array(in, f.density);
  get_f32_array(in, f.color);
  f.validate();
  char tag[4];
  while (in.read(tag, 4)) {
    if (std::memcmp(tag, kAdamTag, 4) == 0 && !ckpt.optimizer) {
      FieldOptimizer opt;
      opt.density = get_adam(in, f.density.size());
      opt.color = get_adam(in, f.color.size());
      ckpt.optimizer = std::move(opt);
    } else if (std::memcmp(tag, kScheduleTag, 4) == 0 && !ckpt.schedule) {
      const auto steps = get<std::uint32_t>(in);
      if (steps < 1 || steps > 100000) throw DataError("checkpoint schedule length out of range");
      std::vector<double> betas(steps);
      for (double& b : betas) b = get<double>(in);
      try {
        ckpt.schedule = BetaSchedule::from_betas(std::move(betas), false);
      } catch (const std::exception& e) {
        throw DataError(std::string("checkpoint schedule invalid: ") + e.what());
      }
    } else {
      throw DataError("unknown or repeated checkpoint block");
    }
  }
  if (in.gcount() != 0) throw DataError("checkpoint truncated");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_checkpoint(out, ckpt);
  if (!out) throw DataError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace mvedit
