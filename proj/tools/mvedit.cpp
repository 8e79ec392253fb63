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

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
// format error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mvedit/commands.hpp"
#include "mvedit/errors.hpp"
#include "mvedit/parallel.hpp"

namespace {

using mvedit::RunConfig;
namespace fs = std::filesystem;

struct Options {
  std::optional<std::string> config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  std::string data;
  std::string out;
  std::string ckpt;
  std::string images;

  std::optional<int> views;
  std::optional<int> t_end;
  std::optional<std::string> strategy;
  std::optional<int> field_steps;
  std::optional<int> n_iu;
  std::optional<int> switch_step;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg;
  if (o.config_path) {
    std::ifstream in(*o.config_path);
    if (!in) throw mvedit::UsageError("cannot open config " + *o.config_path);
    cfg = mvedit::parse_config(in, *o.config_path);
  }
  for (const auto& a : o.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw mvedit::UsageError("--set expects key=value, got " + a);
    mvedit::set_config_value(cfg, a.substr(0, eq), a.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.views) cfg.views = *o.views;
  if (o.t_end) {
    cfg.t_end = *o.t_end;
    cfg.edit_t_ends = {*o.t_end};
  }
  if (o.strategy) cfg.strategy = mvedit::parse_strategy(*o.strategy);
  if (o.field_steps) {
    (cfg.strategy == mvedit::Strategy::kHybrid ? cfg.hybrid_steps : cfg.field_steps) =
        *o.field_steps;
  }
  if (o.n_iu) cfg.n_iu = *o.n_iu;
  if (o.switch_step) cfg.switch_step = *o.switch_step;
  cfg.validate();
  if (cfg.threads > 0) mvedit::set_thread_count(cfg.threads);
  return cfg;
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

int run(int argc, char** argv) {
  CLI::App app{"Multiview-consistent diffusion editing of voxel radiance fields"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "key = value config file");
  app.add_option("--set", o.assignments, "config override key=value (repeatable)");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--threads", o.threads, "worker threads (default: MVEDIT_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  auto* scene_gen = app.add_subcommand("scene-gen", "render the synthetic dataset");
  scene_gen->add_option("--out", o.out, "output dataset directory")->required();
  scene_gen->add_option("--views", o.views, "number of ring cameras");

  auto* fit = app.add_subcommand("fit", "fit a radiance field to a dataset");
  fit->add_option("--data", o.data, "dataset directory")->required();
  fit->add_option("--out", o.out, "checkpoint to write")->required();

  auto* edit = app.add_subcommand("edit", "edit all views with the regularized sampler");
  edit->add_option("--data", o.data, "dataset directory")->required();
  edit->add_option("--ckpt", o.ckpt, "fitted checkpoint (adds render PSNR to the metrics)");
  edit->add_option("--out", o.out, "output directory")->required();
  edit->add_option("--t-end", o.t_end, "single regularization window to run");

  auto* train = app.add_subcommand("train", "edit the field with a dataset-update strategy");
  train->add_option("--data", o.data, "dataset directory")->required();
  train->add_option("--ckpt", o.ckpt, "starting checkpoint")->required();
  train->add_option("--out", o.out, "output directory")->required();
  train->add_option("--strategy", o.strategy, "single-pass, iterative or hybrid");
  train->add_option("--field-steps", o.field_steps, "iterative and hybrid step budget");
  train->add_option("--n-iu", o.n_iu, "field steps per iterative edit");
  train->add_option("--switch-step", o.switch_step, "hybrid switch step");
  train->add_option("--t-end", o.t_end, "regularization window for single-pass edits");

  auto* render = app.add_subcommand("render", "render a checkpoint");
  render->add_option("--ckpt", o.ckpt, "checkpoint")->required();
  render->add_option("--data", o.data, "render the dataset cameras instead of a turntable");
  render->add_option("--out", o.out, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "compare single-pass and iterative updates");
  bench->add_option("--data", o.data, "dataset directory")->required();
  bench->add_option("--ckpt", o.ckpt, "starting checkpoint (fitted when absent)");
  bench->add_option("--out", o.out, "write the JSON report here as well");

  auto* eval = app.add_subcommand("eval", "measure consistency and render quality");
  eval->add_option("--data", o.data, "dataset directory")->required();
  eval->add_option("--images", o.images, "directory of view_NNN.png to measure");
  eval->add_option("--ckpt", o.ckpt, "checkpoint to render and measure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mvedit::kExitUsage;
  }

  const RunConfig cfg = resolve_config(o);
  auto& log = std::cout;
  if (*scene_gen) {
    mvedit::cmd_scene_gen(cfg, o.out, log);
  } else if (*fit) {
    mvedit::cmd_fit(o.data, cfg, o.out, log);
  } else if (*edit) {
    mvedit::cmd_edit(o.data, optional_path(o.ckpt), cfg, o.out, log);
  } else if (*train) {
    mvedit::cmd_train(o.data, o.ckpt, cfg, o.out, log);
  } else if (*render) {
    mvedit::cmd_render(o.ckpt, optional_path(o.data), cfg, o.out, log);
  } else if (*bench) {
    const auto report = mvedit::cmd_bench(o.data, optional_path(o.ckpt), cfg, log);
    const std::string json = report.to_json();
    std::cout << json << '\n';
    if (!o.out.empty()) {
      std::ofstream out(o.out);
      if (!out) throw mvedit::DataError("cannot write " + o.out);
      out << json << '\n';
    }
  } else if (*eval) {
    mvedit::cmd_eval(o.data, optional_path(o.images), optional_path(o.ckpt), cfg, log);
  }
  return mvedit::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mvedit::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mvedit::kExitUsage;
  } catch (const mvedit::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return mvedit::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mvedit::kExitData;
  }
}
