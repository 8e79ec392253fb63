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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mvedit/adam.hpp"
#include "mvedit/errors.hpp"
#include "mvedit/field.hpp"
#include "mvedit/parallel.hpp"
#include "support.hpp"

namespace mvedit {
namespace {

using testing::rel_err;

VoxelField random_field(Rng& rng, int n) {
  VoxelField f = VoxelField::uniform(n, Eigen::Vector3d::Constant(-1), Eigen::Vector3d::Constant(1),
                                     0.0, 0.0);
  std::uniform_real_distribution<double> dens(-1.0, 2.0);
  std::uniform_real_distribution<double> col(-2.0, 2.0);
  for (double& v : f.density) v = dens(rng);
  for (double& v : f.color) v = col(rng);
  return f;
}

Camera front_camera(int size) {
  return look_at({0.0, 0.0, 3.0}, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY(),
                 intrinsics_from_fov(40.0, size, size), size, size);
}

RenderConfig config(int samples, double near = 1.0, double far = 5.0) {
  RenderConfig c;
  c.samples_per_ray = samples;
  c.near = near;
  c.far = far;
  return c;
}

TEST(Render, EmptyFieldShowsBackground) {
  const auto f = VoxelField::uniform(8, Eigen::Vector3d::Constant(-1), Eigen::Vector3d::Constant(1),
                                     -60.0, 1.0);
  RenderConfig cfg = config(32);
  cfg.background = {0.2, 0.4, 0.6};
  const Raster img = render_image(f, front_camera(9), cfg);
  for (int r = 0; r < 9; ++r) {
    for (int c = 0; c < 9; ++c) {
      for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(img.at(ch, r, c), cfg.background[ch], 1e-12);
    }
  }
}

TEST(Render, HomogeneousMediumMatchesClosedForm) {
  const double density_raw = -0.5;
  const double color_raw = 0.7;
  const auto f = VoxelField::uniform(16, Eigen::Vector3d::Constant(-1), Eigen::Vector3d::Constant(1),
                                     density_raw, color_raw);
  const double sigma = std::log1p(std::exp(density_raw));
  const double color = 1.0 / (1.0 + std::exp(-color_raw));
  // The centre ray crosses the cube from z = 1 to z = -1.
  const std::vector<Pixel> centre = {{8, 8}};
  const auto value = render(f, front_camera(17), centre, config(64));
  const double expected = (1.0 - std::exp(-sigma * 2.0)) * color;
  for (int c = 0; c < 3; ++c) EXPECT_LT(std::abs(value[0][c] - expected) / expected, 0.02);
}

TEST(Render, OpaqueFrontTakesFirstColour) {
  auto f = VoxelField::uniform(8, Eigen::Vector3d::Constant(-1), Eigen::Vector3d::Constant(1),
                               80.0, -0.3);
  const std::vector<Pixel> centre = {{4, 4}};
  const auto value = render(f, front_camera(9), centre, config(64));
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(value[0][c], 1.0 / (1.0 + std::exp(0.3)), 1e-12);
}

TEST(Render, WeightsSumToOne) {
  Rng rng = make_stream(1, 0);
  const auto f = random_field(rng, 8);
  const Camera cam = front_camera(12);
  for (const auto& p : all_pixels(cam)) {
    const auto w = compositing_weights(f, cam, p, config(24));
    ASSERT_EQ(w.size(), 25u);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Render, PermutationOfPixelListPermutesOutput) {
  Rng rng = make_stream(2, 0);
  const auto f = random_field(rng, 8);
  const Camera cam = front_camera(10);
  auto pixels = all_pixels(cam);
  const auto base = render(f, cam, pixels, config(16));
  std::vector<std::size_t> order(pixels.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Pixel> shuffled;
  for (auto i : order) shuffled.push_back(pixels[i]);
  const auto out = render(f, cam, shuffled, config(16));
  for (std::size_t k = 0; k < order.size(); ++k) EXPECT_EQ(out[k], base[order[k]]);
}

TEST(Render, RejectsInvalidInput) {
  Rng rng = make_stream(3, 0);
  const auto f = random_field(rng, 4);
  const std::vector<Pixel> outside = {{10, 0}};
  EXPECT_THROW(render(f, front_camera(8), outside, config(8)), UsageError);
  EXPECT_THROW(render(f, front_camera(8), std::vector<Pixel>{{0, 0}}, config(1)), UsageError);
  EXPECT_THROW(render(f, front_camera(8), std::vector<Pixel>{{0, 0}}, config(8, 3.0, 2.0)),
               UsageError);
}

TEST(RenderBackward, ZeroUpstreamGivesZeroGradient) {
  Rng rng = make_stream(4, 0);
  const auto f = random_field(rng, 6);
  const Camera cam = front_camera(8);
  const auto pixels = all_pixels(cam);
  const std::vector<Rgb> up(pixels.size(), Rgb{0, 0, 0});
  const auto g = render_backward(f, cam, pixels, config(16), up);
  for (double v : g.density) EXPECT_EQ(v, 0.0);
  for (double v : g.color) EXPECT_EQ(v, 0.0);
}

TEST(RenderBackward, RayMissingTheGridTouchesNothing) {
  Rng rng = make_stream(5, 0);
  const auto f = random_field(rng, 6);
  const Camera away = look_at({0.0, 0.0, 3.0}, {0.0, 0.0, 6.0}, Eigen::Vector3d::UnitY(),
                              intrinsics_from_fov(40.0, 8, 8), 8, 8);
  const auto pixels = all_pixels(away);
  const std::vector<Rgb> up(pixels.size(), Rgb{1, 1, 1});
  const auto g = render_backward(f, away, pixels, config(16), up);
  for (double v : g.density) EXPECT_EQ(v, 0.0);
  for (double v : g.color) EXPECT_EQ(v, 0.0);
}

double weighted_sum(const VoxelField& f, const Camera& cam, const std::vector<Pixel>& px,
                    const RenderConfig& cfg, const std::vector<Rgb>& up) {
  const auto v = render(f, cam, px, cfg);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (int c = 0; c < 3; ++c) s += up[i][c] * v[i][c];
  }
  return s;
}

TEST(RenderBackward, MatchesCentralDifferences) {
  Rng rng = make_stream(6, 0);
  auto f = random_field(rng, 6);
  const Camera cam = front_camera(8);
  const auto pixels = all_pixels(cam);
  const RenderConfig cfg = config(24);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Rgb> up(pixels.size());
  for (auto& u : up) u = {n(rng), n(rng), n(rng)};
  const auto g = render_backward(f, cam, pixels, cfg, up);

  std::vector<std::size_t> dens_idx;
  std::vector<std::size_t> col_idx;
  for (std::size_t i = 0; i < g.density.size(); ++i) if (g.density[i] != 0.0) dens_idx.push_back(i);
  for (std::size_t i = 0; i < g.color.size(); ++i) if (g.color[i] != 0.0) col_idx.push_back(i);
  ASSERT_GT(dens_idx.size(), 20u);
  std::shuffle(dens_idx.begin(), dens_idx.end(), rng);
  std::shuffle(col_idx.begin(), col_idx.end(), rng);
  const double h = 1e-4;
  for (std::size_t k = 0; k < 20; ++k) {
    for (bool density : {true, false}) {
      const std::size_t i = density ? dens_idx[k] : col_idx[k];
      double& p = density ? f.density[i] : f.color[i];
      const double saved = p;
      p = saved + h;
      const double plus = weighted_sum(f, cam, pixels, cfg, up);
      p = saved - h;
      const double minus = weighted_sum(f, cam, pixels, cfg, up);
      p = saved;
      const double analytic = density ? g.density[i] : g.color[i];
      EXPECT_LT(rel_err((plus - minus) / (2 * h), analytic), 1e-6) << (density ? "density " : "color ") << i;
    }
  }
}

TEST(RenderBackward, BitIdenticalAcrossThreadCounts) {
  Rng rng = make_stream(7, 0);
  const auto f = random_field(rng, 8);
  const Camera cam = front_camera(24);
  const auto pixels = all_pixels(cam);
  std::vector<Rgb> up(pixels.size(), Rgb{0.3, -0.2, 0.5});
  const int saved = thread_count();
  set_thread_count(1);
  const auto img1 = render_image(f, cam, config(16));
  const auto g1 = render_backward(f, cam, pixels, config(16), up);
  set_thread_count(8);
  const auto img8 = render_image(f, cam, config(16));
  const auto g8 = render_backward(f, cam, pixels, config(16), up);
  set_thread_count(saved);
  EXPECT_EQ(img1, img8);
  EXPECT_EQ(g1.density, g8.density);
  EXPECT_EQ(g1.color, g8.color);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p = {1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  AdamState s(3, AdamConfig{});
  for (int i = 0; i < 5; ++i) adam_step(p, g, s);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(s.step, 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p = {0.5, 0.5, 0.5, 0.5};
  const std::vector<double> g = {3.0, -0.2, 1e3, -7.0};
  AdamState s(4, AdamConfig{0.01, 0.9, 0.999, 1e-8});
  adam_step(p, g, s);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(p[i], 0.5 - 0.01 * (g[i] > 0 ? 1.0 : -1.0), 1e-6);
  }
}

TEST(Adam, ThreeStepScalarTrace) {
  // Hand-executed recurrence with lr 0.1, b1 0.9, b2 0.999, eps 1e-8 and
  // gradients 1, -2, 0.5:
  //   m1 = 0.1,    v1 = 0.001,       mhat = 1,          vhat = 1
  //   m2 = -0.11,  v2 = 0.004999,    mhat = -0.578947,  vhat = 2.500750
  //   m3 = -0.049, v3 = 0.005244001, mhat = -0.180812,  vhat = 1.749749
  const double step1 = 0.1 * 1.0 / (1.0 + 1e-8);
  const double step2 = 0.1 * (-0.11 / 0.19) / (std::sqrt(0.004999 / 0.001999) + 1e-8);
  const double step3 = 0.1 * (-0.049 / 0.271) / (std::sqrt(0.005244001 / 0.002997001) + 1e-8);
  std::vector<double> p = {2.0};
  AdamState s(1, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  const double grads[] = {1.0, -2.0, 0.5};
  const double expected[] = {2.0 - step1, 2.0 - step1 - step2, 2.0 - step1 - step2 - step3};
  for (int i = 0; i < 3; ++i) {
    const std::vector<double> g = {grads[i]};
    adam_step(p, g, s);
    EXPECT_NEAR(p[0], expected[i], 1e-12) << "step " << i + 1;
  }
  EXPECT_NEAR(s.m[0], -0.049, 1e-15);
  EXPECT_NEAR(s.v[0], 0.005244001, 1e-15);
}

TEST(Adam, RejectsNonFiniteGradientAndShapeMismatch) {
  std::vector<double> p = {1.0};
  AdamState s(1, AdamConfig{});
  EXPECT_THROW(adam_step(p, std::vector<double>{std::nan("")}, s), NumericError);
  EXPECT_THROW(adam_step(p, std::vector<double>{1.0, 2.0}, s), UsageError);
}

}  // namespace
}  // namespace mvedit
