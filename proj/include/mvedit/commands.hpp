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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvedit/config.hpp"
#include "mvedit/dataset.hpp"
#include "mvedit/sampler.hpp"
#include "mvedit/training.hpp"

namespace mvedit {

namespace fs = std::filesystem;

struct SceneGenReport {
  Dataset data;
  std::size_t class_count = 0;
};

/// Renders the default scene from a camera ring and writes the dataset.
SceneGenReport cmd_scene_gen(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log);

struct FitReport {
  double psnr = 0.0;
  double final_loss = 0.0;
  bool converged = false;  // training-view PSNR >= kFitWarnPsnr
};

inline constexpr double kFitWarnPsnr = 20.0;

/// Fits a field to the dataset and writes an MVDF checkpoint.
FitReport cmd_fit(const fs::path& data_dir, const RunConfig& cfg, const fs::path& ckpt_out,
                  std::ostream& log);

struct EditReport {
  std::vector<ProfileEntry> profile;  // one per t_end in cfg.edit_t_ends
};

/// Edits every view once per t_end in cfg.edit_t_ends with the same seed.
/// Writes out_dir/t_end_XX/view_NNN.png and out_dir/metrics.csv. With a
/// checkpoint the metrics also report the field's render PSNR against each
/// edit.
EditReport cmd_edit(const fs::path& data_dir, const std::optional<fs::path>& ckpt,
                    const RunConfig& cfg, const fs::path& out_dir, std::ostream& log);

struct TrainReport {
  int editor_calls = 0;
  int field_steps = 0;
  double final_loss = 0.0;
};

/// Runs the configured dataset-update strategy. Writes final.mvdf,
/// trace.csv, edited/view_NNN.png and frames/frame_NNN.png under out_dir.
TrainReport cmd_train(const fs::path& data_dir, const fs::path& ckpt, const RunConfig& cfg,
                      const fs::path& out_dir, std::ostream& log);

/// Renders the checkpoint from the dataset cameras when data_dir is given,
/// else from a turntable ring of cfg.turntable_frames cameras.
void cmd_render(const fs::path& ckpt, const std::optional<fs::path>& data_dir,
                const RunConfig& cfg, const fs::path& out_dir, std::ostream& log);

struct BenchStrategy {
  std::string name;
  bool reached = false;
  int editor_calls = 0;
  int field_steps = 0;
  double target_mse = 0.0;
  double consistency = 0.0;
};

struct BenchReport {
  double target_mse_threshold = 0.0;
  double consistency_threshold = 0.0;
  BenchStrategy single_pass;
  BenchStrategy iterative;
  std::optional<double> editor_call_ratio;  // single-pass / iterative
  std::optional<double> field_step_ratio;

  std::string to_json() const;
};

/// Runs single-pass and iterative updates from the same starting field until
/// every training view renders within bench_target_mse of its edit target
/// and the renders' correspondence distance is at most bench_consistency.
/// The field is fitted first when no checkpoint is given.
BenchReport cmd_bench(const fs::path& data_dir, const std::optional<fs::path>& ckpt,
                      const RunConfig& cfg, std::ostream& log);

/// Shared by cmd_bench and the acceptance suite.
BenchReport run_bench(const Dataset& data, const VoxelField& start, const RunConfig& cfg,
                      std::ostream& log);

struct EvalReport {
  std::optional<double> image_consistency;
  std::optional<double> render_consistency;
  std::optional<double> render_psnr;  // against the dataset images
};

/// Correspondence distance of a directory of views and/or of checkpoint
/// renders, plus render PSNR against the dataset.
EvalReport cmd_eval(const fs::path& data_dir, const std::optional<fs::path>& images_dir,
                    const std::optional<fs::path>& ckpt, const RunConfig& cfg,
                    std::ostream& log);

/// Mean over views of the squared error to the nearest edit-target mode.
double target_mse(std::span<const Raster> renders, std::span<const EditSpec> specs);

}  // namespace mvedit
