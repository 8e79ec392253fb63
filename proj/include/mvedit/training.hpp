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

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvedit/correspondence.hpp"
#include "mvedit/diffusion.hpp"
#include "mvedit/fit.hpp"
#include "mvedit/rng.hpp"
#include "mvedit/sampler.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {

/// Fixed 3x3 convolution kernels over 3-channel patches. The first three
/// pick out the raw channels at the window centre; the rest are drawn once
/// from a seeded normal stream.
class GramFeatureBank {
 public:
  static constexpr int kTaps = 27;  // channel-major (c, dr, dc)
  using Kernel = std::array<double, kTaps>;

  static GramFeatureBank make(std::uint64_t seed, int random_kernels = 16);

  int size() const { return static_cast<int>(kernels_.size()); }
  const std::vector<Kernel>& kernels() const { return kernels_; }

  /// Feature vectors at every valid (fully inside) 3x3 position: F x P,
  /// positions ordered row-major.
  Eigen::MatrixXd features(const Raster& patch) const;

 private:
  std::vector<Kernel> kernels_;
};

/// (1/P) sum_p f_p f_p^T over the valid positions of the patch.
Eigen::MatrixXd gram(const Raster& patch, const GramFeatureBank& bank);

enum class LossMode { kCombined, kRandomSwitch, kPhotometric };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(const std::string& text);

struct LossResult {
  double loss = 0.0;         // value that was differentiated
  double photometric = 0.0;  // mean over patches, unweighted
  double style = 0.0;        // mean over patches, without the lambda factor
  std::vector<Raster> grad;  // d loss / d rendered patch
};

/// (1/N) sum_n [mean (I_n - G_n)^2 + lambda * mean (Gram(I_n) - Gram(G_n))^2]
/// and its gradient with respect to the rendered patches I_n. kRandomSwitch
/// keeps only one of the two terms, chosen by a fair coin from rng;
/// kPhotometric keeps only the first term. rng is untouched otherwise.
LossResult combined_loss(std::span<const Raster> rendered, std::span<const Raster> generated,
                         const GramFeatureBank& bank, double lambda, LossMode mode, Rng& rng);

/// A p x p window of one view.
struct PatchWindow {
  int view = 0;
  int row0 = 0;
  int col0 = 0;
};

/// Named transforms and weights that turn a source view into its target
/// distribution: one transform gives a Gaussian edit, more give a mixture.
struct EditRecipe {
  std::vector<std::string> transforms = {"warm"};
  std::vector<double> weights;  // empty means uniform
  double std = 0.05;

  EditSpec spec_for(const Raster& source) const;
  void validate() const;
};

/// Conditioning on the original input view; reverse diffusion from noise.
struct Editor {
  BetaSchedule schedule;
  RegConfig reg;
  EditRecipe recipe;
  std::optional<CorrespondenceSet> corr;  // full-resolution, over all views

  /// Edits the listed views jointly. Correspondences are restricted to the
  /// listed views; with t_end > 0 they are required.
  std::vector<Raster> edit(std::span<const Raster> inputs, std::span<const int> views,
                           std::uint64_t seed, std::optional<int> t_end_override = {}) const;
};

struct TrainConfig {
  // Single-pass: each round edits every view once in ceil(V / B) batches,
  // each batch followed by n_su field steps.
  int batch_views = 4;
  int rounds = 10;
  int n_su = 200;
  // Iterative: one single-view edit every n_iu field steps.
  int n_iu = 10;
  int iterative_steps = 3000;
  // Hybrid: single-pass until switch_step, then iterative up to hybrid_steps.
  int switch_step = 400;
  int hybrid_steps = 1200;

  int patch_size = 32;
  int patches_per_step = 8;
  double lambda = 0.1;
  LossMode loss_mode = LossMode::kCombined;
  LossMode iterative_loss = LossMode::kPhotometric;
  int consistency_every = 50;

  RenderConfig render;
  AdamConfig density_adam;
  AdamConfig color_adam;
  int gram_random_kernels = 16;

  void validate() const;
};

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double photometric = 0.0;
  double style = 0.0;
  double consistency = 0.0;
  int editor_calls = 0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace);

struct SessionView;

/// Called after every field step; returning true stops the run early.
using StepMonitor = std::function<bool(const TraceRow&, const SessionView&)>;

/// Training state shared by the single-pass, iterative and hybrid loops.
class EditSession {
 public:
  EditSession(std::vector<Raster> inputs, std::vector<Camera> cameras, VoxelField field,
              Editor editor, TrainConfig cfg, std::uint64_t seed);

  const std::vector<Raster>& inputs() const { return inputs_; }
  const std::vector<Camera>& cameras() const { return cameras_; }
  const std::vector<std::optional<Raster>>& generated() const { return gen_; }
  const VoxelField& field() const { return field_; }
  const FieldOptimizer& optimizer() const { return optimizer_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  const Editor& editor() const { return editor_; }
  const TrainConfig& config() const { return cfg_; }
  const GramFeatureBank& bank() const { return bank_; }
  int editor_calls() const { return editor_calls_; }
  int field_steps() const { return step_; }

  void set_monitor(StepMonitor monitor) { monitor_ = std::move(monitor); }
  /// Fills views that have no edit yet with their input image.
  void fill_missing_from_inputs();

  /// Single-pass loop until `rounds` complete or `max_steps` field steps ran.
  void run_single_pass(int max_steps);
  /// Iterative loop for `steps` field steps.
  void run_iterative(int steps);

  /// Renders every view at full resolution and measures correspondence distance.
  double render_consistency() const;
  std::vector<Raster> render_views() const;

 private:
  bool field_step(LossMode mode);
  void record_edits(std::span<const int> views, std::vector<Raster> edited);
  std::uint64_t next_editor_seed();

  std::vector<Raster> inputs_;
  std::vector<Camera> cameras_;
  VoxelField field_;
  Editor editor_;
  TrainConfig cfg_;
  std::uint64_t seed_;
  GramFeatureBank bank_;
  FieldOptimizer optimizer_;
  std::vector<std::optional<Raster>> gen_;
  std::vector<TraceRow> trace_;
  Rng view_rng_;
  Rng patch_rng_;
  Rng switch_rng_;
  int editor_calls_ = 0;
  int step_ = 0;
  bool stopped_ = false;
  double last_consistency_ = 0.0;
  StepMonitor monitor_;
};

struct SessionView {
  const EditSession& session;
};

struct TrainResult {
  VoxelField field;
  FieldOptimizer optimizer;
  std::vector<TraceRow> trace;
  int editor_calls = 0;
  std::vector<Raster> generated;  // latest edit per view; unedited views hold their input
};

TrainResult run_single_pass(EditSession session);
TrainResult run_iterative(EditSession session);
TrainResult run_hybrid(EditSession session, int switch_step);

/// Correspondence distance used as an evaluation metric.
double eval_consistency(std::span<const Raster> views, const CorrespondenceSet& corr);

}  // namespace mvedit
