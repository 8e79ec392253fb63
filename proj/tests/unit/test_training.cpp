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

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "mvedit/errors.hpp"
#include "mvedit/parallel.hpp"
#include "mvedit/training.hpp"
#include "support.hpp"

namespace mvedit {
namespace {

using testing::rel_err;
using testing::uniform_raster;

// Independent feature computation: direct 3x3x3 correlation at every valid
// position, then (1/P) sum over positions of f_i f_j.
Eigen::MatrixXd brute_gram(const Raster& patch, const GramFeatureBank& bank) {
  const int rows = patch.height - 2;
  const int cols = patch.width - 2;
  const int f = bank.size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(f, f);
  for (int r = 0; r < rows; ++r) {
    for (int q = 0; q < cols; ++q) {
      std::vector<double> feat(static_cast<std::size_t>(f), 0.0);
      for (int k = 0; k < f; ++k) {
        const auto& kern = bank.kernels()[static_cast<std::size_t>(k)];
        for (int c = 0; c < 3; ++c) {
          for (int dr = 0; dr < 3; ++dr) {
            for (int dc = 0; dc < 3; ++dc) {
              feat[static_cast<std::size_t>(k)] +=
                  kern[static_cast<std::size_t>(c * 9 + dr * 3 + dc)] * patch.at(c, r + dr, q + dc);
            }
          }
        }
      }
      for (int i = 0; i < f; ++i) {
        for (int j = 0; j < f; ++j) g(i, j) += feat[i] * feat[j];
      }
    }
  }
  return g / static_cast<double>(rows * cols);
}

TEST(GramFeatureBank, LayoutAndDeterminism) {
  const auto bank = GramFeatureBank::make(3);
  ASSERT_EQ(bank.size(), 19);
  for (int c = 0; c < 3; ++c) {
    for (int t = 0; t < GramFeatureBank::kTaps; ++t) {
      EXPECT_EQ(bank.kernels()[c][t], t == c * 9 + 4 ? 1.0 : 0.0);
    }
  }
  EXPECT_EQ(bank.kernels(), GramFeatureBank::make(3).kernels());
  EXPECT_NE(bank.kernels(), GramFeatureBank::make(4).kernels());
  EXPECT_EQ(GramFeatureBank::make(3, 0).size(), 3);
}

TEST(Gram, MatchesBruteForce) {
  Rng rng = make_stream(1, 0);
  const auto bank = GramFeatureBank::make(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Raster patch = uniform_raster(rng, 3, 8, 8);
    EXPECT_LE((gram(patch, bank) - brute_gram(patch, bank)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Gram, ConstantPatchIsRankOne) {
  const auto bank = GramFeatureBank::make(6);
  Raster patch(3, 6, 6);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      patch.at(0, r, c) = 0.2;
      patch.at(1, r, c) = 0.5;
      patch.at(2, r, c) = 0.9;
    }
  }
  const Eigen::MatrixXd g = gram(patch, bank);
  const Eigen::VectorXd f = bank.features(patch).col(0);
  EXPECT_LE((g - f * f.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  const auto& ev = eig.eigenvalues();
  EXPECT_GT(ev(ev.size() - 1), 1e-3);
  EXPECT_LT(std::abs(ev(ev.size() - 2)), 1e-12);
}

TEST(Gram, InvariantToPositionPermutation) {
  Rng rng = make_stream(2, 0);
  const auto bank = GramFeatureBank::make(7);
  const Raster patch = uniform_raster(rng, 3, 10, 10);
  const Eigen::MatrixXd f = bank.features(patch);
  std::vector<int> order(static_cast<std::size_t>(f.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd permuted(f.rows(), f.cols());
  for (int i = 0; i < f.cols(); ++i) permuted.col(i) = f.col(order[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd g = permuted * permuted.transpose() / static_cast<double>(f.cols());
  EXPECT_LE((g - gram(patch, bank)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Gram, RejectsTinyPatch) {
  EXPECT_THROW(gram(Raster(3, 2, 5), GramFeatureBank::make(0)), UsageError);
}

struct PatchPair {
  std::vector<Raster> rendered;
  std::vector<Raster> generated;
};

PatchPair random_patches(std::uint64_t seed, int n, int size) {
  Rng rng = make_stream(seed, 0);
  PatchPair p;
  for (int i = 0; i < n; ++i) {
    p.rendered.push_back(uniform_raster(rng, 3, size, size));
    p.generated.push_back(uniform_raster(rng, 3, size, size));
  }
  return p;
}

TEST(CombinedLoss, PerfectMatchIsZero) {
  const auto p = random_patches(3, 3, 8);
  const auto bank = GramFeatureBank::make(0);
  Rng rng = make_stream(0, 0);
  const auto r = combined_loss(p.rendered, p.rendered, bank, 0.1, LossMode::kCombined, rng);
  EXPECT_EQ(r.loss, 0.0);
  for (const auto& g : r.grad) {
    for (double v : g.data) EXPECT_EQ(v, 0.0);
  }
}

TEST(CombinedLoss, ZeroLambdaIsMeanSquaredError) {
  const auto p = random_patches(4, 3, 8);
  const auto bank = GramFeatureBank::make(0);
  Rng rng = make_stream(0, 0);
  const auto r = combined_loss(p.rendered, p.generated, bank, 0.0, LossMode::kCombined, rng);
  double mse = 0.0;
  for (int n = 0; n < 3; ++n) mse += mean_squared_error(p.rendered[n], p.generated[n]) / 3.0;
  EXPECT_NEAR(r.loss, mse, 1e-15);
  EXPECT_NEAR(r.photometric, mse, 1e-15);
}

TEST(CombinedLoss, StyleTermIsMeanSquaredGramDifference) {
  const auto p = random_patches(5, 2, 8);
  const auto bank = GramFeatureBank::make(1);
  Rng rng = make_stream(0, 0);
  const auto r = combined_loss(p.rendered, p.generated, bank, 0.3, LossMode::kCombined, rng);
  double style = 0.0;
  for (int n = 0; n < 2; ++n) {
    const Eigen::MatrixXd d = brute_gram(p.rendered[n], bank) - brute_gram(p.generated[n], bank);
    style += d.squaredNorm() / static_cast<double>(d.size()) / 2.0;
  }
  EXPECT_NEAR(r.style, style, 1e-14);
  EXPECT_NEAR(r.loss, r.photometric + 0.3 * style, 1e-14);
}

TEST(CombinedLoss, GradientMatchesCentralDifferences) {
  auto p = random_patches(6, 2, 8);
  const auto bank = GramFeatureBank::make(2);
  const double lambda = 2.0;
  Rng rng = make_stream(0, 0);
  const auto r = combined_loss(p.rendered, p.generated, bank, lambda, LossMode::kCombined, rng);
  const double h = 1e-4;
  Rng pick = make_stream(7, 0);
  std::uniform_int_distribution<std::size_t> elem(0, p.rendered[0].size() - 1);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = static_cast<std::size_t>(k % 2);
    const std::size_t i = elem(pick);
    double& v = p.rendered[n].data[i];
    const double saved = v;
    v = saved + h;
    const double plus = combined_loss(p.rendered, p.generated, bank, lambda, LossMode::kCombined, rng).loss;
    v = saved - h;
    const double minus = combined_loss(p.rendered, p.generated, bank, lambda, LossMode::kCombined, rng).loss;
    v = saved;
    EXPECT_LT(rel_err((plus - minus) / (2 * h), r.grad[n].data[i]), 1e-6) << "patch " << n << " elem " << i;
  }
}

TEST(CombinedLoss, RandomSwitchAveragesToHalfTheCombinedLoss) {
  const auto p = random_patches(8, 2, 8);
  const auto bank = GramFeatureBank::make(3);
  const double lambda = 5.0;
  Rng rng = make_stream(9, 0);
  const auto full = combined_loss(p.rendered, p.generated, bank, lambda, LossMode::kCombined, rng);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    sum += combined_loss(p.rendered, p.generated, bank, lambda, LossMode::kRandomSwitch, rng).loss;
  }
  const double expected = 0.5 * (full.photometric + lambda * full.style);
  EXPECT_LT(std::abs(sum / 10000 - expected) / expected, 0.02);
}

TEST(CombinedLoss, OnlySwitchModeDrawsFromRng) {
  const auto p = random_patches(10, 2, 8);
  const auto bank = GramFeatureBank::make(3);
  Rng rng = make_stream(11, 0);
  const Rng before = rng;
  combined_loss(p.rendered, p.generated, bank, 0.1, LossMode::kCombined, rng);
  combined_loss(p.rendered, p.generated, bank, 0.1, LossMode::kPhotometric, rng);
  EXPECT_EQ(rng, before);
  combined_loss(p.rendered, p.generated, bank, 0.1, LossMode::kRandomSwitch, rng);
  EXPECT_NE(rng, before);
}

TEST(CombinedLoss, PhotometricModeIgnoresStyle) {
  const auto p = random_patches(12, 2, 8);
  const auto bank = GramFeatureBank::make(3);
  Rng rng = make_stream(0, 0);
  const auto a = combined_loss(p.rendered, p.generated, bank, 0.7, LossMode::kPhotometric, rng);
  const auto b = combined_loss(p.rendered, p.generated, bank, 0.0, LossMode::kCombined, rng);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grad, b.grad);
}

TEST(LossMode, StringRoundTrip) {
  for (auto m : {LossMode::kCombined, LossMode::kRandomSwitch, LossMode::kPhotometric}) {
    EXPECT_EQ(parse_loss_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_loss_mode("lpips"), UsageError);
}

// Small scene so loops with real editor calls stay fast.
struct Toy {
  std::vector<Raster> inputs;
  std::vector<Camera> cameras;
  CorrespondenceSet corr;
  VoxelField field;
  TrainConfig cfg;

  Editor editor(int t_end = 10) const {
    return Editor{make_schedule(50, 0.02, 0.3), RegConfig{t_end, 2, false},
                  EditRecipe{{"swap_rb"}, {}, 0.05}, corr};
  }
  EditSession session(std::uint64_t seed, int t_end = 10) const {
    return EditSession(inputs, cameras, field, editor(t_end), cfg, seed);
  }
};

Toy make_toy(int views = 5) {
  Toy t;
  t.cameras = ring_cameras(views, 3.0, 1.2, 40.0, 16, 16);
  for (const auto& c : t.cameras) t.inputs.push_back(render_ground_truth(default_scene(), c).image);
  t.corr = derive_correspondences(default_scene(), t.cameras, 2e-2, 1);
  t.field = VoxelField::uniform(8, Eigen::Vector3d::Constant(-1), Eigen::Vector3d::Constant(1),
                                -1.0, 0.0);
  t.cfg.batch_views = 2;
  t.cfg.rounds = 2;
  t.cfg.n_su = 5;
  t.cfg.n_iu = 10;
  t.cfg.iterative_steps = 100;
  t.cfg.hybrid_steps = 40;
  t.cfg.switch_step = 15;
  t.cfg.patch_size = 8;
  t.cfg.patches_per_step = 2;
  t.cfg.consistency_every = 7;
  t.cfg.render.samples_per_ray = 8;
  t.cfg.render.near = 1.5;
  t.cfg.render.far = 4.5;
  return t;
}

TEST(SinglePass, EditorCallsPerRoundAreCeilOfViewsOverBatch) {
  const Toy toy = make_toy(5);
  const auto r = run_single_pass(toy.session(1));
  EXPECT_EQ(r.editor_calls, 3 * 2);
  EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(6 * toy.cfg.n_su));
  EXPECT_EQ(r.trace.back().editor_calls, 6);
  for (std::size_t i = 0; i < r.trace.size(); ++i) EXPECT_EQ(r.trace[i].step, static_cast<int>(i) + 1);
}

TEST(SinglePass, FullBatchOneRoundIsOneCall) {
  Toy toy = make_toy(4);
  toy.cfg.batch_views = 4;
  toy.cfg.rounds = 1;
  EditSession s = toy.session(2);
  s.run_single_pass(1000);
  EXPECT_EQ(s.editor_calls(), 1);
  for (const auto& g : s.generated()) EXPECT_TRUE(g.has_value());
}

TEST(SinglePass, StepCapStopsEarly) {
  const Toy toy = make_toy(5);
  EditSession s = toy.session(3);
  s.run_single_pass(7);
  EXPECT_EQ(s.field_steps(), 7);
  EXPECT_EQ(s.editor_calls(), 2);
}

TEST(Iterative, OneEditPerWindowAndFullDataset) {
  const Toy toy = make_toy(5);
  const auto r = run_iterative(toy.session(4));
  EXPECT_EQ(r.editor_calls, 10);
  EXPECT_EQ(r.trace.size(), 100u);
  EXPECT_EQ(r.generated.size(), toy.inputs.size());
}

TEST(Iterative, EditsRunWithoutCorrespondences) {
  Toy toy = make_toy(4);
  toy.cfg.iterative_steps = 20;
  Editor ed = toy.editor();
  ed.corr.reset();
  EXPECT_NO_THROW(run_iterative(EditSession(toy.inputs, toy.cameras, toy.field, ed, toy.cfg, 5)));
}

TEST(Hybrid, SwitchAtZeroEqualsIterative) {
  Toy toy = make_toy(4);
  toy.cfg.hybrid_steps = toy.cfg.iterative_steps;
  const auto h = run_hybrid(toy.session(6), 0);
  const auto i = run_iterative(toy.session(6));
  EXPECT_EQ(h.trace, i.trace);
  EXPECT_EQ(h.field, i.field);
  EXPECT_EQ(h.editor_calls, i.editor_calls);
}

TEST(Hybrid, SwitchAtEndEqualsSinglePass) {
  Toy toy = make_toy(4);
  toy.cfg.hybrid_steps = 2 * 2 * toy.cfg.n_su;  // rounds * ceil(V/B) * n_su
  const auto h = run_hybrid(toy.session(7), toy.cfg.hybrid_steps);
  const auto s = run_single_pass(toy.session(7));
  EXPECT_EQ(h.trace, s.trace);
  EXPECT_EQ(h.field, s.field);
  EXPECT_EQ(h.generated, s.generated);
}

TEST(Hybrid, SwitchesStrategyAtTheGivenStep) {
  const Toy toy = make_toy(4);
  const auto h = run_hybrid(toy.session(8), 15);
  EXPECT_EQ(h.trace.size(), 40u);
  // Three single-pass batches start by step 15, then one edit per 10 steps.
  EXPECT_EQ(h.trace[14].editor_calls, 3);
  EXPECT_EQ(h.editor_calls, 3 + 3);
  EXPECT_THROW(run_hybrid(toy.session(8), 41), UsageError);
}

TEST(Training, DeterministicAcrossRunsAndThreads) {
  const Toy toy = make_toy(4);
  const int saved = thread_count();
  set_thread_count(1);
  const auto a = run_hybrid(toy.session(9), 15);
  set_thread_count(4);
  const auto b = run_hybrid(toy.session(9), 15);
  set_thread_count(saved);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.field, b.field);
  EXPECT_EQ(a.optimizer, b.optimizer);
  const auto c = run_hybrid(toy.session(10), 15);
  EXPECT_NE(a.field, c.field);
}

TEST(Training, MonitorCanStopTheRun) {
  const Toy toy = make_toy(4);
  EditSession s = toy.session(11);
  int seen = 0;
  s.set_monitor([&](const TraceRow& row, const SessionView&) {
    ++seen;
    return row.step == 12;
  });
  s.run_single_pass(1000);
  EXPECT_EQ(seen, 12);
  EXPECT_EQ(s.field_steps(), 12);
}

TEST(Training, ConsistencyIsSampledAndCarriedForward) {
  const Toy toy = make_toy(4);
  const auto r = run_single_pass(toy.session(12));
  // Measured at steps 1, 8, 15, ...; carried between measurements.
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    if (i % 7 != 0) EXPECT_EQ(r.trace[i].consistency, r.trace[i - 1].consistency);
  }
  EXPECT_GT(r.trace[0].consistency, 0.0);
}

TEST(Training, RegularizedEditRequiresCorrespondences) {
  Toy toy = make_toy(4);
  Editor ed = toy.editor(10);
  ed.corr.reset();
  const std::vector<int> views = {0, 1};
  EXPECT_THROW(ed.edit(toy.inputs, views, 1), DataError);
  EXPECT_NO_THROW(ed.edit(toy.inputs, views, 1, 0));
}

TEST(Training, RejectsBatchLargerThanDataset) {
  Toy toy = make_toy(3);
  toy.cfg.batch_views = 4;
  EXPECT_THROW(toy.session(0), UsageError);
}

TEST(EvalConsistency, GroundTruthViewsAreConsistent) {
  const Toy toy = make_toy(5);
  EXPECT_LE(eval_consistency(toy.inputs, toy.corr), 1e-6);
}

TEST(TraceCsv, HeaderAndRows) {
  const std::vector<TraceRow> rows = {{1, 0.5, 0.25, 0.125, 0.0625, 1}, {2, 0.1, 0.2, 0.3, 0.4, 2}};
  std::ostringstream out;
  write_trace_csv(out, rows);
  EXPECT_EQ(out.str(),
            "step,loss,photometric,style,consistency,editor_calls\n"
            "1,0.5,0.25,0.125,0.0625,1\n"
            "2,0.10000000000000001,0.20000000000000001,0.29999999999999999,"
            "0.40000000000000002,2\n");
}

}  // namespace
}  // namespace mvedit
