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

#include "mvedit/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "mvedit/edit_transforms.hpp"
#include "mvedit/errors.hpp"

namespace mvedit {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw UsageError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw UsageError("config key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
std::string format_number(T value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

template <typename T>
std::string format_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += values[i];
    } else {
      out += format_number(values[i]);
    }
  }
  return out;
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Entry number(std::string key, T RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); },
          [member](const RunConfig& c) { return format_number(c.*member); }};
}

Entry boolean(std::string key, bool RunConfig::*member) {
  return {key, [key, member](RunConfig& c, const std::string& v) { c.*member = parse_bool(key, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Entry loss_mode(std::string key, LossMode RunConfig::*member) {
  return {key, [member](RunConfig& c, const std::string& v) { c.*member = parse_loss_mode(v); },
          [member](const RunConfig& c) { return to_string(c.*member); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back(number("seed", &RunConfig::seed));
    t.push_back(number("threads", &RunConfig::threads));
    t.push_back(number("views", &RunConfig::views));
    t.push_back(number("image_size", &RunConfig::image_size));
    t.push_back(number("ring_radius", &RunConfig::ring_radius));
    t.push_back(number("ring_elevation", &RunConfig::ring_elevation));
    t.push_back(number("fov", &RunConfig::fov));
    t.push_back(number("start_angle", &RunConfig::start_angle));
    t.push_back(number("depth_tol", &RunConfig::depth_tol));
    t.push_back(number("stride", &RunConfig::stride));
    t.push_back(number("diffusion_steps", &RunConfig::diffusion_steps));
    t.push_back(number("beta_start", &RunConfig::beta_start));
    t.push_back(number("beta_end", &RunConfig::beta_end));
    t.push_back(number("t_end", &RunConfig::t_end));
    t.push_back(number("latent_factor", &RunConfig::latent_factor));
    t.push_back(boolean("shared_init_noise", &RunConfig::shared_init_noise));
    t.push_back({"transforms",
                 [](RunConfig& c, const std::string& v) { c.transforms = split_list(v); },
                 [](const RunConfig& c) { return format_list(c.transforms); }});
    t.push_back({"weights",
                 [](RunConfig& c, const std::string& v) {
                   c.weights.clear();
                   for (const auto& item : split_list(v)) {
                     c.weights.push_back(parse_number<double>("weights", item));
                   }
                 },
                 [](const RunConfig& c) { return format_list(c.weights); }});
    t.push_back(number("edit_std", &RunConfig::edit_std));
    t.push_back({"edit_t_ends",
                 [](RunConfig& c, const std::string& v) {
                   c.edit_t_ends.clear();
                   for (const auto& item : split_list(v)) {
                     c.edit_t_ends.push_back(parse_number<int>("edit_t_ends", item));
                   }
                 },
                 [](const RunConfig& c) { return format_list(c.edit_t_ends); }});
    t.push_back(number("field_resolution", &RunConfig::field_resolution));
    t.push_back(number("samples_per_ray", &RunConfig::samples_per_ray));
    t.push_back(number("near", &RunConfig::near));
    t.push_back(number("far", &RunConfig::far));
    t.push_back(number("field_extent", &RunConfig::field_extent));
    t.push_back(number("density_init", &RunConfig::density_init));
    t.push_back(number("color_init", &RunConfig::color_init));
    t.push_back(number("lr_density", &RunConfig::lr_density));
    t.push_back(number("lr_color", &RunConfig::lr_color));
    t.push_back(number("adam_beta1", &RunConfig::adam_beta1));
    t.push_back(number("adam_beta2", &RunConfig::adam_beta2));
    t.push_back(number("adam_eps", &RunConfig::adam_eps));
    t.push_back(number("fit_steps", &RunConfig::fit_steps));
    t.push_back(number("fit_rays", &RunConfig::fit_rays));
    t.push_back({"strategy",
                 [](RunConfig& c, const std::string& v) { c.strategy = parse_strategy(v); },
                 [](const RunConfig& c) { return to_string(c.strategy); }});
    t.push_back(number("batch_views", &RunConfig::batch_views));
    t.push_back(number("rounds", &RunConfig::rounds));
    t.push_back(number("n_su", &RunConfig::n_su));
    t.push_back(number("n_iu", &RunConfig::n_iu));
    t.push_back(number("field_steps", &RunConfig::field_steps));
    t.push_back(number("switch_step", &RunConfig::switch_step));
    t.push_back(number("hybrid_steps", &RunConfig::hybrid_steps));
    t.push_back(number("patch_size", &RunConfig::patch_size));
    t.push_back(number("patches", &RunConfig::patches));
    t.push_back(number("lambda", &RunConfig::lambda));
    t.push_back(loss_mode("loss_mode", &RunConfig::loss_mode));
    t.push_back(loss_mode("iterative_loss", &RunConfig::iterative_loss));
    t.push_back(number("consistency_every", &RunConfig::consistency_every));
    t.push_back(number("turntable_frames", &RunConfig::turntable_frames));
    t.push_back(number("bench_target_mse", &RunConfig::bench_target_mse));
    t.push_back(number("bench_consistency", &RunConfig::bench_consistency));
    t.push_back(number("bench_eval_every", &RunConfig::bench_eval_every));
    return t;
  }();
  return table;
}

const Entry& find_entry(const std::string& key) {
  for (const auto& e : entries()) {
    if (e.key == key) return e;
  }
  throw UsageError("unknown config key '" + key + "'");
}

AdamConfig adam(const RunConfig& c, double lr) {
  return {lr, c.adam_beta1, c.adam_beta2, c.adam_eps};
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kSinglePass: return "single-pass";
    case Strategy::kIterative: return "iterative";
    case Strategy::kHybrid: return "hybrid";
  }
  return "single-pass";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "single-pass") return Strategy::kSinglePass;
  if (text == "iterative") return Strategy::kIterative;
  if (text == "hybrid") return Strategy::kHybrid;
  throw UsageError("unknown strategy '" + text + "' (single-pass, iterative, hybrid)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_entry(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  return find_entry(key).get(cfg);
}

void RunConfig::validate() const {
  if (threads < 0) throw UsageError("threads must be >= 0");
  if (views < 1) throw UsageError("views must be >= 1");
  if (image_size < 1) throw UsageError("image_size must be >= 1");
  if (!(ring_radius > 0.0)) throw UsageError("ring_radius must be > 0");
  if (!(fov > 0.0 && fov < 180.0)) throw UsageError("fov must lie in (0, 180)");
  if (!(depth_tol > 0.0)) throw UsageError("depth_tol must be > 0");
  if (stride < 1) throw UsageError("stride must be >= 1");
  if (diffusion_steps < 1) throw UsageError("diffusion_steps must be >= 1");
  schedule();
  if (t_end < 0 || t_end > diffusion_steps) {
    throw UsageError("t_end must lie in [0, diffusion_steps]");
  }
  for (int t : edit_t_ends) {
    if (t < 0 || t > diffusion_steps) throw UsageError("edit_t_ends values must lie in [0, T]");
  }
  if (latent_factor < 1) throw UsageError("latent_factor must be >= 1");
  if (image_size % latent_factor != 0) {
    throw UsageError("latent_factor must divide image_size");
  }
  recipe().validate();
  if (field_resolution < 2) throw UsageError("field_resolution must be >= 2");
  if (!(field_extent > 0.0)) throw UsageError("field_extent must be > 0");
  render().validate();
  if (!(lr_density > 0.0) || !(lr_color > 0.0)) throw UsageError("learning rates must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw UsageError("adam_eps must be > 0");
  if (fit_steps < 0 || fit_rays < 1) throw UsageError("fit_steps >= 0 and fit_rays >= 1 required");
  train().validate();
  if (batch_views > views) throw UsageError("batch_views must not exceed views");
  if (patch_size > image_size) throw UsageError("patch_size must not exceed image_size");
  if (strategy == Strategy::kHybrid && switch_step > hybrid_steps) throw UsageError("switch_step must not exceed hybrid_steps");
  if (turntable_frames < 0) throw UsageError("turntable_frames must be >= 0");
  if (!(bench_target_mse > 0.0) || !(bench_consistency > 0.0) || bench_eval_every < 1) {
    throw UsageError("bench thresholds must be positive");
  }
}

BetaSchedule RunConfig::schedule() const {
  return make_schedule(diffusion_steps, beta_start, beta_end);
}

RegConfig RunConfig::reg() const { return {t_end, latent_factor, shared_init_noise}; }

EditRecipe RunConfig::recipe() const { return {transforms, weights, edit_std}; }

RenderConfig RunConfig::render() const {
  RenderConfig r;
  r.samples_per_ray = samples_per_ray;
  r.near = near;
  r.far = far;
  return r;
}

FitConfig RunConfig::fit() const {
  FitConfig f;
  f.render = render();
  f.steps = fit_steps;
  f.rays_per_step = fit_rays;
  f.density_adam = adam(*this, lr_density);
  f.color_adam = adam(*this, lr_color);
  return f;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.batch_views = batch_views;
  t.rounds = rounds;
  t.n_su = n_su;
  t.n_iu = n_iu;
  t.iterative_steps = field_steps;
  t.switch_step = switch_step;
  t.hybrid_steps = hybrid_steps;
  t.patch_size = patch_size;
  t.patches_per_step = patches;
  t.lambda = lambda;
  t.loss_mode = loss_mode;
  t.iterative_loss = iterative_loss;
  t.consistency_every = consistency_every;
  t.render = render();
  t.density_adam = adam(*this, lr_density);
  t.color_adam = adam(*this, lr_color);
  return t;
}

std::vector<Camera> RunConfig::cameras() const {
  return ring_cameras(views, ring_radius, ring_elevation, fov, image_size, image_size,
                      start_angle);
}

VoxelField RunConfig::initial_field() const {
  return VoxelField::uniform(field_resolution, Eigen::Vector3d::Constant(-field_extent),
                             Eigen::Vector3d::Constant(field_extent), density_init, color_init);
}

RunConfig parse_config(std::istream& in, const std::string& source_name, RunConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source_name + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  return parse_config(in, path.string(), std::move(base));
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& e : entries()) out << e.key << " = " << e.get(cfg) << '\n';
}

}  // namespace mvedit
