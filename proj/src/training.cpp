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

#include "mvedit/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mvedit/edit_transforms.hpp"
#include "mvedit/errors.hpp"

namespace mvedit {
namespace {

constexpr std::uint64_t kBankStream = 0x62616e6b;
constexpr std::uint64_t kViewStream = 0x76696577;
constexpr std::uint64_t kPatchStream = 0x70617463;
constexpr std::uint64_t kSwitchStream = 0x73776974;
constexpr std::uint64_t kEditorStreamBase = 0x6564000000000000ull;

// Column p holds the 27 taps of the 3x3 window whose top-left corner is the
// p-th valid position in row-major order.
Eigen::MatrixXd im2col(const Raster& patch) {
  if (patch.channels != 3) throw UsageError("gram features need 3-channel patches");
  if (patch.height < 3 || patch.width < 3) throw UsageError("gram patch must be at least 3x3");
  const int rows = patch.height - 2;
  const int cols = patch.width - 2;
  Eigen::MatrixXd x(GramFeatureBank::kTaps, rows * cols);
  for (int r = 0; r < rows; ++r) {
    for (int q = 0; q < cols; ++q) {
      const int p = r * cols + q;
      int tap = 0;
      for (int c = 0; c < 3; ++c) {
        for (int dr = 0; dr < 3; ++dr) {
          for (int dc = 0; dc < 3; ++dc) x(tap++, p) = patch.at(c, r + dr, q + dc);
        }
      }
    }
  }
  return x;
}

Eigen::MatrixXd kernel_matrix(const GramFeatureBank& bank) {
  Eigen::MatrixXd k(bank.size(), GramFeatureBank::kTaps);
  for (int f = 0; f < bank.size(); ++f) {
    for (int t = 0; t < GramFeatureBank::kTaps; ++t) k(f, t) = bank.kernels()[f][t];
  }
  return k;
}

// Adds the transpose of im2col applied to cols into grad.
void col2im_add(const Eigen::MatrixXd& cols, Raster& grad) {
  const int rows = grad.height - 2;
  const int width = grad.width - 2;
  for (int r = 0; r < rows; ++r) {
    for (int q = 0; q < width; ++q) {
      const int p = r * width + q;
      int tap = 0;
      for (int c = 0; c < 3; ++c) {
        for (int dr = 0; dr < 3; ++dr) {
          for (int dc = 0; dc < 3; ++dc) grad.at(c, r + dr, q + dc) += cols(tap++, p);
        }
      }
    }
  }
}

Raster to_raster(const std::vector<Rgb>& values, int height, int width) {
  Raster out(3, height, width);
  for (int r = 0; r < height; ++r) {
    for (int q = 0; q < width; ++q) {
      const auto& v = values[static_cast<std::size_t>(r) * width + q];
      for (int c = 0; c < 3; ++c) out.at(c, r, q) = v[c];
    }
  }
  return out;
}

std::vector<Rgb> to_rgb(const Raster& r) {
  std::vector<Rgb> out(r.plane());
  for (int row = 0; row < r.height; ++row) {
    for (int col = 0; col < r.width; ++col) {
      for (int c = 0; c < 3; ++c) {
        out[static_cast<std::size_t>(row) * r.width + col][c] = r.at(c, row, col);
      }
    }
  }
  return out;
}

}  // namespace

GramFeatureBank GramFeatureBank::make(std::uint64_t seed, int random_kernels) {
  if (random_kernels < 0) throw UsageError("random kernel count must be >= 0");
  GramFeatureBank bank;
  for (int c = 0; c < 3; ++c) {
    Kernel k{};
    k[static_cast<std::size_t>(c * 9 + 4)] = 1.0;
    bank.kernels_.push_back(k);
  }
  Rng rng = make_stream(seed, kBankStream);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(double(kTaps)));
  for (int i = 0; i < random_kernels; ++i) {
    Kernel k;
    for (double& tap : k) tap = normal(rng);
    bank.kernels_.push_back(k);
  }
  return bank;
}

Eigen::MatrixXd GramFeatureBank::features(const Raster& patch) const {
  return kernel_matrix(*this) * im2col(patch);
}

Eigen::MatrixXd gram(const Raster& patch, const GramFeatureBank& bank) {
  const Eigen::MatrixXd f = bank.features(patch);
  return (f * f.transpose()) / static_cast<double>(f.cols());
}

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kCombined: return "combined";
    case LossMode::kRandomSwitch: return "random_switch";
    case LossMode::kPhotometric: return "photometric";
  }
  return "combined";
}

LossMode parse_loss_mode(const std::string& text) {
  if (text == "combined") return LossMode::kCombined;
  if (text == "random_switch") return LossMode::kRandomSwitch;
  if (text == "photometric") return LossMode::kPhotometric;
  throw UsageError("unknown loss mode '" + text + "'");
}

LossResult combined_loss(std::span<const Raster> rendered, std::span<const Raster> generated,
                         const GramFeatureBank& bank, double lambda, LossMode mode, Rng& rng) {
  if (rendered.size() != generated.size()) throw UsageError("combined_loss: batch sizes differ");
  if (rendered.empty()) throw UsageError("combined_loss: empty batch");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be >= 0");
  for (std::size_t n = 0; n < rendered.size(); ++n) {
    require_same_shape(rendered[n], generated[n], "combined_loss patches");
  }

  bool use_photo = true;
  bool use_style = mode == LossMode::kCombined;
  if (mode == LossMode::kRandomSwitch) {
    use_style = std::bernoulli_distribution(0.5)(rng);
    use_photo = !use_style;
  }

  const double inv_n = 1.0 / static_cast<double>(rendered.size());
  const Eigen::MatrixXd kernels = kernel_matrix(bank);
  const double inv_ff = 1.0 / static_cast<double>(bank.size() * bank.size());
  LossResult out;
  out.grad.reserve(rendered.size());
  for (std::size_t n = 0; n < rendered.size(); ++n) {
    const Raster& a = rendered[n];
    const Raster& b = generated[n];
    Raster g(a.channels, a.height, a.width);

    double photo = 0.0;
    const double inv_e = 1.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a.data[i] - b.data[i];
      photo += d * d * inv_e;
      if (use_photo) g.data[i] = 2.0 * d * inv_e * inv_n;
    }

    const Eigen::MatrixXd xa = im2col(a);
    const Eigen::MatrixXd fa = kernels * xa;
    const double inv_p = 1.0 / static_cast<double>(fa.cols());
    const Eigen::MatrixXd ga = (fa * fa.transpose()) / static_cast<double>(fa.cols());
    const Eigen::MatrixXd gb = gram(b, bank);
    const Eigen::MatrixXd diff = ga - gb;
    const double style = diff.squaredNorm() * inv_ff;
    if (use_style) {
      // d style / d f_p = (2/P) D f_p with D = 2 diff / F^2 (symmetric).
      const Eigen::MatrixXd df = (4.0 * inv_ff * inv_p * lambda * inv_n) * (diff * fa);
      col2im_add(kernels.transpose() * df, g);
    }

    out.photometric += photo * inv_n;
    out.style += style * inv_n;
    out.grad.push_back(std::move(g));
  }
  out.loss = (use_photo ? out.photometric : 0.0) + (use_style ? lambda * out.style : 0.0);
  return out;
}

EditSpec EditRecipe::spec_for(const Raster& source) const {
  validate();
  if (transforms.size() == 1) return make_gaussian_edit(source, transforms.front(), std);
  std::vector<double> w = weights;
  if (w.empty()) w.assign(transforms.size(), 1.0 / static_cast<double>(transforms.size()));
  return make_mixture_edit(source, transforms, std::move(w), std);
}

void EditRecipe::validate() const {
  if (transforms.empty()) throw UsageError("edit recipe needs at least one transform");
  for (const auto& t : transforms) {
    if (!is_known_transform(t)) throw UsageError("unknown transform '" + t + "'");
  }
  if (!weights.empty() && weights.size() != transforms.size()) {
    throw UsageError("edit weights must match the transform count");
  }
  if (!(std > 0.0) || !std::isfinite(std)) throw UsageError("edit std must be > 0");
}

std::vector<Raster> Editor::edit(std::span<const Raster> inputs, std::span<const int> views,
                                 std::uint64_t seed, std::optional<int> t_end_override) const {
  RegConfig cfg = reg;
  if (t_end_override) cfg.t_end = *t_end_override;
  std::vector<Raster> sources;
  std::vector<EditSpec> conds;
  for (int v : views) {
    if (v < 0 || v >= static_cast<int>(inputs.size())) throw UsageError("edit: view out of range");
    sources.push_back(inputs[static_cast<std::size_t>(v)]);
    conds.push_back(recipe.spec_for(sources.back()));
  }
  if (sources.empty()) return {};
  CorrespondenceSet sub(static_cast<int>(views.size()), sources.front().height,
                        sources.front().width);
  if (cfg.t_end > 0) {
    if (!corr) throw DataError("correspondences are required when t_end > 0");
    sub = restrict_to_views(*corr, views);
  }
  return edit_views(sources, conds, sub, cfg, schedule, seed);
}

void TrainConfig::validate() const {
  if (batch_views < 1) throw UsageError("batch size B must be >= 1");
  if (rounds < 0 || n_su < 0 || iterative_steps < 0 || hybrid_steps < 0) {
    throw UsageError("step and round counts must be >= 0");
  }
  if (n_iu < 1) throw UsageError("n_iu must be >= 1");
  if (switch_step < 0) throw UsageError("switch_step must be >= 0");
  if (patch_size < 3) throw UsageError("patch size must be >= 3");
  if (patches_per_step < 1) throw UsageError("patches per step must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be >= 0");
  if (consistency_every < 0) throw UsageError("consistency_every must be >= 0");
  if (gram_random_kernels < 0) throw UsageError("gram kernel count must be >= 0");
  render.validate();
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
  const auto old_precision = out.precision(17);
  out << "step,loss,photometric,style,consistency,editor_calls\n";
  for (const auto& r : trace) {
    out << r.step << ',' << r.loss << ',' << r.photometric << ',' << r.style << ','
        << r.consistency << ',' << r.editor_calls << '\n';
  }
  out.precision(old_precision);
}

EditSession::EditSession(std::vector<Raster> inputs, std::vector<Camera> cameras,
                         VoxelField field, Editor editor, TrainConfig cfg, std::uint64_t seed)
    : inputs_(std::move(inputs)),
      cameras_(std::move(cameras)),
      field_(std::move(field)),
      editor_(std::move(editor)),
      cfg_(std::move(cfg)),
      seed_(seed),
      bank_(GramFeatureBank::make(seed, cfg_.gram_random_kernels)),
      optimizer_(FieldOptimizer::for_field(field_, cfg_.density_adam, cfg_.color_adam)),
      gen_(inputs_.size()),
      view_rng_(make_stream(seed, kViewStream)),
      patch_rng_(make_stream(seed, kPatchStream)),
      switch_rng_(make_stream(seed, kSwitchStream)) {
  cfg_.validate();
  editor_.recipe.validate();
  field_.validate();
  if (inputs_.empty()) throw UsageError("edit session needs at least one view");
  if (inputs_.size() != cameras_.size()) throw UsageError("one camera per input view required");
  for (std::size_t v = 0; v < inputs_.size(); ++v) {
    require_same_shape(inputs_[v], inputs_.front(), "input views");
    if (inputs_[v].channels != 3) throw UsageError("input views must be RGB");
    if (cameras_[v].height != inputs_[v].height || cameras_[v].width != inputs_[v].width) {
      throw UsageError("camera and image sizes differ");
    }
  }
  if (cfg_.batch_views > static_cast<int>(inputs_.size())) {
    throw UsageError("batch size B exceeds the number of views");
  }
  if (cfg_.patch_size > inputs_.front().height || cfg_.patch_size > inputs_.front().width) {
    throw UsageError("patch size exceeds the image size");
  }
  if (editor_.corr) {
    const auto& c = *editor_.corr;
    if (c.n_views() != static_cast<int>(inputs_.size()) || c.height() != inputs_.front().height ||
        c.width() != inputs_.front().width) {
      throw DataError("correspondence set does not match the dataset");
    }
  }
}

void EditSession::fill_missing_from_inputs() {
  for (std::size_t v = 0; v < gen_.size(); ++v) {
    if (!gen_[v]) gen_[v] = inputs_[v];
  }
}

std::uint64_t EditSession::next_editor_seed() {
  return make_stream(seed_, kEditorStreamBase + static_cast<std::uint64_t>(editor_calls_))();
}

void EditSession::record_edits(std::span<const int> views, std::vector<Raster> edited) {
  for (std::size_t i = 0; i < views.size(); ++i) {
    gen_[static_cast<std::size_t>(views[i])] = std::move(edited[i]);
  }
}

std::vector<Raster> EditSession::render_views() const {
  std::vector<Raster> out;
  out.reserve(cameras_.size());
  for (const auto& cam : cameras_) out.push_back(render_image(field_, cam, cfg_.render));
  return out;
}

double EditSession::render_consistency() const {
  if (!editor_.corr) return std::numeric_limits<double>::quiet_NaN();
  return correspondence_distance(render_views(), *editor_.corr);
}

bool EditSession::field_step(LossMode mode) {
  std::vector<int> available;
  for (std::size_t v = 0; v < gen_.size(); ++v) {
    if (gen_[v]) available.push_back(static_cast<int>(v));
  }
  if (available.empty()) throw UsageError("no edited views to train on");

  const int p = cfg_.patch_size;
  const int h = inputs_.front().height;
  const int w = inputs_.front().width;
  std::uniform_int_distribution<std::size_t> pick(0, available.size() - 1);
  std::uniform_int_distribution<int> pick_row(0, h - p);
  std::uniform_int_distribution<int> pick_col(0, w - p);
  std::vector<PatchWindow> windows;
  for (int n = 0; n < cfg_.patches_per_step; ++n) {
    PatchWindow win;
    win.view = available[pick(patch_rng_)];
    win.row0 = pick_row(patch_rng_);
    win.col0 = pick_col(patch_rng_);
    windows.push_back(win);
  }

  std::vector<Raster> rendered;
  std::vector<Raster> targets;
  std::vector<std::vector<Pixel>> pixels;
  for (const auto& win : windows) {
    pixels.push_back(window_pixels(win.row0, win.col0, p, p));
    const auto values = render(field_, cameras_[static_cast<std::size_t>(win.view)],
                               pixels.back(), cfg_.render);
    rendered.push_back(to_raster(values, p, p));
    targets.push_back(crop(*gen_[static_cast<std::size_t>(win.view)], win.row0, win.col0, p, p));
  }

  const LossResult loss =
      combined_loss(rendered, targets, bank_, cfg_.lambda, mode, switch_rng_);
  FieldGradient grad = FieldGradient::zeros_like(field_);
  for (std::size_t n = 0; n < windows.size(); ++n) {
    const auto upstream = to_rgb(loss.grad[n]);
    render_backward(field_, cameras_[static_cast<std::size_t>(windows[n].view)], pixels[n],
                    cfg_.render, upstream, grad);
  }
  optimizer_.step(field_, grad);
  ++step_;

  if (cfg_.consistency_every > 0 && (step_ - 1) % cfg_.consistency_every == 0) {
    last_consistency_ = render_consistency();
  } else if (cfg_.consistency_every == 0) {
    last_consistency_ = std::numeric_limits<double>::quiet_NaN();
  }
  TraceRow row{step_, loss.loss, loss.photometric, loss.style, last_consistency_, editor_calls_};
  trace_.push_back(row);
  if (monitor_ && monitor_(row, SessionView{*this})) stopped_ = true;
  return !stopped_;
}

void EditSession::run_single_pass(int max_steps) {
  const int n_views = static_cast<int>(inputs_.size());
  const int b = cfg_.batch_views;
  for (int round = 0; round < cfg_.rounds; ++round) {
    if (stopped_ || step_ >= max_steps) return;
    std::vector<int> order(static_cast<std::size_t>(n_views));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), view_rng_);
    for (int start = 0; start < n_views; start += b) {
      if (stopped_ || step_ >= max_steps) return;
      const std::vector<int> batch(order.begin() + start,
                                   order.begin() + std::min(start + b, n_views));
      auto edited = editor_.edit(inputs_, batch, next_editor_seed());
      ++editor_calls_;
      record_edits(batch, std::move(edited));
      for (int i = 0; i < cfg_.n_su; ++i) {
        if (stopped_ || step_ >= max_steps) return;
        field_step(cfg_.loss_mode);
      }
    }
  }
}

void EditSession::run_iterative(int steps) {
  fill_missing_from_inputs();
  std::uniform_int_distribution<int> pick(0, static_cast<int>(inputs_.size()) - 1);
  for (int local = 0; local < steps; ++local) {
    if (stopped_) return;
    if (local % cfg_.n_iu == 0) {
      const int view = pick(view_rng_);
      const int batch[1] = {view};
      auto edited = editor_.edit(inputs_, batch, next_editor_seed(), 0);
      ++editor_calls_;
      record_edits(batch, std::move(edited));
    }
    field_step(cfg_.iterative_loss);
  }
}

namespace {

TrainResult finish(EditSession& session) {
  session.fill_missing_from_inputs();
  TrainResult out{session.field(), session.optimizer(), session.trace(), session.editor_calls(),
                  {}};
  for (const auto& g : session.generated()) out.generated.push_back(*g);
  return out;
}

}  // namespace

TrainResult run_single_pass(EditSession session) {
  session.run_single_pass(std::numeric_limits<int>::max());
  return finish(session);
}

TrainResult run_iterative(EditSession session) {
  session.run_iterative(session.config().iterative_steps);
  return finish(session);
}

TrainResult run_hybrid(EditSession session, int switch_step) {
  const int total = session.config().hybrid_steps;
  if (switch_step < 0 || switch_step > total) {
    throw UsageError("switch_step must lie in [0, hybrid_steps]");
  }
  session.run_single_pass(switch_step);
  session.run_iterative(total - session.field_steps());
  return finish(session);
}

double eval_consistency(std::span<const Raster> views, const CorrespondenceSet& corr) {
  return correspondence_distance(views, corr);
}

}  // namespace mvedit
