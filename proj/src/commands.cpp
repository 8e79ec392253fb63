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

#include "mvedit/commands.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "mvedit/checkpoint.hpp"
#include "mvedit/errors.hpp"
#include "mvedit/image_io.hpp"

namespace mvedit {
namespace {

constexpr std::uint64_t kFitStream = 0x666974;

std::string numbered(const char* pattern, int i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, i);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

void write_views(const fs::path& dir, std::span<const Raster> views, const char* pattern) {
  ensure_dir(dir);
  for (std::size_t v = 0; v < views.size(); ++v) {
    write_png(dir / numbered(pattern, static_cast<int>(v)), views[v]);
  }
}

const CorrespondenceSet& require_corr(const Dataset& data, const std::string& why) {
  if (!data.correspondences) throw DataError("dataset has no correspondence.txt; " + why);
  return *data.correspondences;
}

std::vector<EditSpec> edit_specs(const Dataset& data, const EditRecipe& recipe) {
  std::vector<EditSpec> specs;
  for (const auto& img : data.images) specs.push_back(recipe.spec_for(img));
  return specs;
}

Editor make_editor(const RunConfig& cfg, const Dataset& data) {
  return {cfg.schedule(), cfg.reg(), cfg.recipe(), data.correspondences};
}

std::vector<Camera> turntable(const RunConfig& cfg) {
  return ring_cameras(cfg.turntable_frames, cfg.ring_radius, cfg.ring_elevation, cfg.fov,
                      cfg.image_size, cfg.image_size, cfg.start_angle);
}

nlohmann::json strategy_json(const BenchStrategy& s) {
  return {{"reached", s.reached},
          {"editor_calls", s.editor_calls},
          {"field_steps", s.field_steps},
          {"target_mse", s.target_mse},
          {"consistency", s.consistency}};
}

BenchStrategy bench_one(EditSession session, Strategy strategy, const Dataset& data,
                        const RunConfig& cfg, std::ostream& log) {
  const auto specs = edit_specs(data, cfg.recipe());
  const auto& corr = require_corr(data, "the benchmark measures consistency");
  BenchStrategy out;
  out.name = to_string(strategy);
  session.set_monitor([&](const TraceRow& row, const SessionView& view) {
    if (row.step % cfg.bench_eval_every != 0) return false;
    const auto renders = view.session.render_views();
    out.target_mse = target_mse(renders, specs);
    out.consistency = correspondence_distance(renders, corr);
    out.field_steps = row.step;
    out.editor_calls = row.editor_calls;
    out.reached = out.target_mse <= cfg.bench_target_mse &&
                  out.consistency <= cfg.bench_consistency;
    return out.reached;
  });
  if (strategy == Strategy::kSinglePass) {
    session.run_single_pass(std::numeric_limits<int>::max());
  } else {
    session.run_iterative(cfg.field_steps);
  }
  if (!out.reached) {
    out.field_steps = session.field_steps();
    out.editor_calls = session.editor_calls();
  }
  log << out.name << ": " << (out.reached ? "reached" : "threshold unreached") << " after "
      << out.editor_calls << " editor calls, " << out.field_steps << " field steps (mse "
      << out.target_mse << ", consistency " << out.consistency << ")\n";
  return out;
}

}  // namespace

double target_mse(std::span<const Raster> renders, std::span<const EditSpec> specs) {
  if (renders.size() != specs.size() || renders.empty()) {
    throw UsageError("target_mse: one spec per render required");
  }
  double total = 0.0;
  for (std::size_t v = 0; v < renders.size(); ++v) {
    double best = std::numeric_limits<double>::infinity();
    if (const auto* g = std::get_if<GaussianEdit>(&specs[v].mode)) {
      best = mean_squared_error(renders[v], g->target);
    } else {
      for (const auto& t : std::get<MixtureEdit>(specs[v].mode).targets) {
        best = std::min(best, mean_squared_error(renders[v], t));
      }
    }
    total += best;
  }
  return total / static_cast<double>(renders.size());
}

SceneGenReport cmd_scene_gen(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  if (cfg.views < 2) throw UsageError("correspondences require >= 2 views");
  const SyntheticScene scene = default_scene();
  SceneGenReport report;
  report.data.cameras = cfg.cameras();
  for (const auto& cam : report.data.cameras) {
    report.data.images.push_back(quantize8(render_ground_truth(scene, cam).image));
  }
  report.data.correspondences =
      derive_correspondences(scene, report.data.cameras, cfg.depth_tol, cfg.stride);
  report.class_count = report.data.correspondences->size();
  save_dataset(out_dir, report.data);
  log << "views: " << cfg.views << "\nclasses: " << report.class_count << '\n';
  return report;
}

FitReport cmd_fit(const fs::path& data_dir, const RunConfig& cfg, const fs::path& ckpt_out,
                  std::ostream& log) {
  cfg.validate();
  const Dataset data = load_dataset(data_dir);
  Rng rng = make_stream(cfg.seed, kFitStream);
  FitResult fit = fit_field(cfg.initial_field(), data.images, data.cameras, cfg.fit(), rng);
  FitReport report;
  report.final_loss = fit.final_loss;
  report.psnr = mean_psnr(fit.field, data.images, data.cameras, cfg.render());
  report.converged = report.psnr >= kFitWarnPsnr;
  save_checkpoint(ckpt_out, {fit.field, fit.optimizer, cfg.schedule()});
  log << "final_loss: " << report.final_loss << "\npsnr: " << report.psnr << '\n';
  if (!report.converged) {
    log << "warning: training-view PSNR below " << kFitWarnPsnr << " dB; fit did not converge\n";
  }
  return report;
}

EditReport cmd_edit(const fs::path& data_dir, const std::optional<fs::path>& ckpt,
                    const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const Dataset data = load_dataset(data_dir);
  std::optional<std::vector<Raster>> renders;
  if (ckpt) {
    const Checkpoint c = load_checkpoint(*ckpt);
    renders.emplace();
    for (const auto& cam : data.cameras) renders->push_back(render_image(c.field, cam, cfg.render()));
  }
  const auto specs = edit_specs(data, cfg.recipe());
  const BetaSchedule schedule = cfg.schedule();
  const int n = static_cast<int>(data.images.size());
  const CorrespondenceSet empty(n, data.images.front().height, data.images.front().width);

  for (int t_end : cfg.edit_t_ends) {
    if (t_end > 0) require_corr(data, "t_end > 0 needs correspondences");
  }
  ensure_dir(out_dir);
  std::ofstream metrics(out_dir / "metrics.csv");
  if (!metrics) throw DataError("cannot write " + (out_dir / "metrics.csv").string());
  metrics.precision(17);
  metrics << "t_end,consistency,hf_energy" << (renders ? ",render_psnr" : "") << '\n';

  EditReport report;
  for (int t_end : cfg.edit_t_ends) {
    RegConfig reg = cfg.reg();
    reg.t_end = t_end;
    const CorrespondenceSet& corr = t_end > 0 ? *data.correspondences : empty;
    const auto edited = edit_views(data.images, specs, corr, reg, schedule, cfg.seed);
    double hf = 0.0;
    for (const auto& img : edited) hf += high_frequency_energy(img);
    const double consistency = data.correspondences
                                   ? correspondence_distance(edited, *data.correspondences)
                                   : std::numeric_limits<double>::quiet_NaN();
    report.profile.push_back({t_end, consistency, hf / n});
    write_views(out_dir / numbered("t_end_%02d", t_end), edited, "view_%03d.png");
    metrics << t_end << ',' << consistency << ',' << hf / n;
    if (renders) {
      double p = 0.0;
      for (int v = 0; v < n; ++v) p += psnr((*renders)[v], edited[v]) / n;
      metrics << ',' << p;
    }
    metrics << '\n';
    log << "t_end " << t_end << ": consistency " << consistency << ", hf_energy " << hf / n
        << '\n';
  }
  return report;
}

TrainReport cmd_train(const fs::path& data_dir, const fs::path& ckpt, const RunConfig& cfg,
                      const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const Dataset data = load_dataset(data_dir);
  if (cfg.strategy != Strategy::kIterative && cfg.t_end > 0) {
    require_corr(data, "t_end > 0 needs correspondences");
  }
  const Checkpoint start = load_checkpoint(ckpt);
  EditSession session(data.images, data.cameras, start.field, make_editor(cfg, data), cfg.train(),
                      cfg.seed);
  TrainResult result;
  switch (cfg.strategy) {
    case Strategy::kSinglePass: result = run_single_pass(std::move(session)); break;
    case Strategy::kIterative: result = run_iterative(std::move(session)); break;
    case Strategy::kHybrid: result = run_hybrid(std::move(session), cfg.switch_step); break;
  }

  ensure_dir(out_dir);
  save_checkpoint(out_dir / "final.mvdf", {result.field, result.optimizer, cfg.schedule()});
  {
    std::ofstream trace(out_dir / "trace.csv");
    if (!trace) throw DataError("cannot write " + (out_dir / "trace.csv").string());
    write_trace_csv(trace, result.trace);
  }
  write_views(out_dir / "edited", result.generated, "view_%03d.png");
  std::vector<Raster> frames;
  for (const auto& cam : turntable(cfg)) frames.push_back(render_image(result.field, cam, cfg.render()));
  write_views(out_dir / "frames", frames, "frame_%03d.png");

  TrainReport report;
  report.editor_calls = result.editor_calls;
  report.field_steps = static_cast<int>(result.trace.size());
  report.final_loss = result.trace.empty() ? 0.0 : result.trace.back().loss;
  log << "strategy: " << to_string(cfg.strategy) << "\neditor_calls: " << report.editor_calls
      << "\nfield_steps: " << report.field_steps << "\nfinal_loss: " << report.final_loss
      << '\n';
  return report;
}

void cmd_render(const fs::path& ckpt, const std::optional<fs::path>& data_dir,
                const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const Checkpoint c = load_checkpoint(ckpt);
  const std::vector<Camera> cams = data_dir ? load_dataset(*data_dir).cameras : turntable(cfg);
  std::vector<Raster> frames;
  for (const auto& cam : cams) frames.push_back(render_image(c.field, cam, cfg.render()));
  write_views(out_dir, frames, data_dir ? "view_%03d.png" : "frame_%03d.png");
  log << "rendered: " << frames.size() << '\n';
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["thresholds"] = {{"target_mse", target_mse_threshold},
                     {"consistency", consistency_threshold}};
  j["single_pass"] = strategy_json(single_pass);
  j["iterative"] = strategy_json(iterative);
  j["editor_call_ratio"] = editor_call_ratio ? nlohmann::json(*editor_call_ratio) : nlohmann::json(nullptr);
  j["field_step_ratio"] = field_step_ratio ? nlohmann::json(*field_step_ratio) : nlohmann::json(nullptr);
  j["status"] = single_pass.reached && iterative.reached ? "ok" : "threshold unreached";
  return j.dump(2);
}

BenchReport run_bench(const Dataset& data, const VoxelField& start, const RunConfig& cfg,
                      std::ostream& log) {
  cfg.validate();
  BenchReport report;
  report.target_mse_threshold = cfg.bench_target_mse;
  report.consistency_threshold = cfg.bench_consistency;
  const Editor editor = make_editor(cfg, data);
  report.single_pass =
      bench_one(EditSession(data.images, data.cameras, start, editor, cfg.train(), cfg.seed),
                Strategy::kSinglePass, data, cfg, log);
  report.iterative =
      bench_one(EditSession(data.images, data.cameras, start, editor, cfg.train(), cfg.seed),
                Strategy::kIterative, data, cfg, log);
  if (report.single_pass.reached && report.iterative.reached) {
    report.editor_call_ratio =
        static_cast<double>(report.single_pass.editor_calls) / report.iterative.editor_calls;
    report.field_step_ratio =
        static_cast<double>(report.single_pass.field_steps) / report.iterative.field_steps;
  }
  return report;
}

BenchReport cmd_bench(const fs::path& data_dir, const std::optional<fs::path>& ckpt,
                      const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Dataset data = load_dataset(data_dir);
  VoxelField start;
  if (ckpt) {
    start = load_checkpoint(*ckpt).field;
  } else {
    Rng rng = make_stream(cfg.seed, kFitStream);
    start = fit_field(cfg.initial_field(), data.images, data.cameras, cfg.fit(), rng).field;
  }
  return run_bench(data, start, cfg, log);
}

EvalReport cmd_eval(const fs::path& data_dir, const std::optional<fs::path>& images_dir,
                    const std::optional<fs::path>& ckpt, const RunConfig& cfg,
                    std::ostream& log) {
  cfg.validate();
  const Dataset data = load_dataset(data_dir);
  EvalReport report;
  if (images_dir) {
    const auto& corr = require_corr(data, "consistency needs correspondences");
    std::vector<Raster> views;
    for (std::size_t v = 0; v < data.images.size(); ++v) {
      const fs::path path = *images_dir / view_image_name(static_cast<int>(v));
      if (!fs::exists(path)) throw DataError("missing " + path.string());
      views.push_back(read_png(path));
      require_same_shape(views.back(), data.images[v], "evaluated view");
    }
    report.image_consistency = eval_consistency(views, corr);
    log << "image_consistency: " << *report.image_consistency << '\n';
  }
  if (ckpt) {
    const Checkpoint c = load_checkpoint(*ckpt);
    std::vector<Raster> renders;
    for (const auto& cam : data.cameras) renders.push_back(render_image(c.field, cam, cfg.render()));
    double p = 0.0;
    for (std::size_t v = 0; v < renders.size(); ++v) p += psnr(renders[v], data.images[v]);
    report.render_psnr = p / static_cast<double>(renders.size());
    log << "render_psnr: " << *report.render_psnr << '\n';
    if (data.correspondences) {
      report.render_consistency = eval_consistency(renders, *data.correspondences);
      log << "render_consistency: " << *report.render_consistency << '\n';
    }
  }
  if (!images_dir && !ckpt) throw UsageError("eval needs --images and/or --ckpt");
  return report;
}

}  // namespace mvedit
