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

#include "mvedit/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mvedit/edit_transforms.hpp"
#include "mvedit/errors.hpp"

namespace mvedit {

BetaSchedule BetaSchedule::from_betas(std::vector<double> betas, bool require_terminal_noise) {
  if (betas.empty()) throw UsageError("schedule needs at least one step");
  BetaSchedule s;
  const std::size_t n = betas.size();
  s.alpha_.resize(n);
  s.alpha_bar_.resize(n);
  s.sigma_.resize(n);
  double running = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = betas[i];
    if (!(b > 0.0 && b < 1.0)) throw UsageError("beta values must lie in (0, 1)");
    s.alpha_[i] = 1.0 - b;
    const double prev = running;
    running *= s.alpha_[i];
    s.alpha_bar_[i] = running;
    // abar_0 := 1 makes the first reverse step deterministic.
    s.sigma_[i] = std::sqrt(b * (1.0 - prev) / (1.0 - running));
  }
  if (require_terminal_noise && !(s.alpha_bar_.back() < kTerminalAlphaBarLimit)) {
    throw UsageError("schedule leaves too much signal: alpha_bar(T) = " +
                     std::to_string(s.alpha_bar_.back()) + " must be < 1e-3");
  }
  s.beta_ = std::move(betas);
  return s;
}

std::size_t BetaSchedule::check(int t) const {
  if (t < 1 || t > steps()) {
    throw UsageError("step index " + std::to_string(t) + " outside [1, " +
                     std::to_string(steps()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

BetaSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw UsageError("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw UsageError("make_schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[static_cast<std::size_t>(i)] = beta_start + (beta_end - beta_start) * frac;
  }
  return BetaSchedule::from_betas(std::move(betas), true);
}

Raster forward_sample(const Raster& x0, int t, const Raster& noise, const BetaSchedule& s) {
  require_same_shape(x0, noise, "forward_sample");
  const double ab = s.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  Raster out = x0;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a * x0.data[i] + b * noise.data[i];
  return out;
}

Raster reverse_step(const Raster& x_t, int t, const Raster& eps_hat, const BetaSchedule& s,
                    const Raster& z) {
  require_same_shape(x_t, eps_hat, "reverse_step");
  require_finite(x_t, "reverse_step x_t");
  require_finite(eps_hat, "reverse_step eps_hat");
  const bool use_noise = t > 1;
  if (use_noise) {
    require_same_shape(x_t, z, "reverse_step noise");
    require_finite(z, "reverse_step z");
  }
  const double coef = s.beta(t) / std::sqrt(1.0 - s.alpha_bar(t));
  const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha(t));
  const double sigma = s.sigma(t);
  Raster out = x_t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = (x_t.data[i] - coef * eps_hat.data[i]) * inv_sqrt_alpha;
    if (use_noise) v += sigma * z.data[i];
    out.data[i] = v;
  }
  return out;
}

void EditSpec::validate() const {
  if (source.empty()) throw UsageError("edit spec has an empty source");
  if (const auto* g = std::get_if<GaussianEdit>(&mode)) {
    require_same_shape(source, g->target, "edit target");
    if (!(g->std > 0.0)) throw UsageError("edit std must be > 0");
    return;
  }
  const auto& m = std::get<MixtureEdit>(mode);
  if (m.targets.empty()) throw UsageError("mixture edit needs K >= 1 targets");
  if (m.targets.size() != m.weights.size()) {
    throw UsageError("mixture edit: weights and targets differ in length");
  }
  if (!(m.std > 0.0)) throw UsageError("edit std must be > 0");
  double total = 0.0;
  for (double w : m.weights) {
    if (!(w >= 0.0)) throw UsageError("mixture weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("mixture weights must sum to 1");
  for (const auto& y : m.targets) require_same_shape(source, y, "mixture target");
}

EditSpec make_gaussian_edit(const Raster& source, const std::string& transform, double std) {
  EditSpec spec{source, {transform}, GaussianEdit{apply_transform(source, transform), std}};
  spec.validate();
  return spec;
}

EditSpec make_mixture_edit(const Raster& source, const std::vector<std::string>& transforms,
                           std::vector<double> weights, double std) {
  MixtureEdit mix;
  mix.std = std;
  mix.weights = std::move(weights);
  for (const auto& name : transforms) mix.targets.push_back(apply_transform(source, name));
  EditSpec spec{source, transforms, std::move(mix)};
  spec.validate();
  return spec;
}

EditSpec to_latent(const EditSpec& spec, int factor) {
  EditSpec out;
  out.source = average_pool(spec.source, factor);
  out.transforms = spec.transforms;
  if (const auto* g = std::get_if<GaussianEdit>(&spec.mode)) {
    out.mode = GaussianEdit{average_pool(g->target, factor), g->std};
  } else {
    const auto& m = std::get<MixtureEdit>(spec.mode);
    MixtureEdit lm{{}, m.weights, m.std};
    for (const auto& y : m.targets) lm.targets.push_back(average_pool(y, factor));
    out.mode = std::move(lm);
  }
  return out;
}

namespace {

Raster gaussian_eps(const Raster& x_t, int t, const Raster& target, double std,
                    const BetaSchedule& s) {
  require_same_shape(x_t, target, "denoiser input");
  const double ab = s.alpha_bar(t);
  const double sa = std::sqrt(ab);
  const double scale = std::sqrt(1.0 - ab) / (ab * std * std + 1.0 - ab);
  Raster out = x_t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = scale * (x_t.data[i] - sa * target.data[i]);
  }
  return out;
}

}  // namespace

Raster analytic_gaussian_eps(const DenoiserInput& in, const BetaSchedule& s) {
  const auto* g = std::get_if<GaussianEdit>(&in.cond.mode);
  if (g == nullptr) throw UsageError("analytic_gaussian_eps requires a Gaussian edit");
  return gaussian_eps(in.x_t, in.t, g->target, g->std, s);
}

std::vector<double> mixture_responsibilities(const Raster& x_t, int t, const MixtureEdit& edit,
                                             const BetaSchedule& s) {
  const double ab = s.alpha_bar(t);
  const double sa = std::sqrt(ab);
  const double var = ab * edit.std * edit.std + 1.0 - ab;
  const std::size_t k = edit.targets.size();
  std::vector<double> logp(k, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < k; ++i) {
    require_same_shape(x_t, edit.targets[i], "mixture denoiser input");
    if (edit.weights[i] <= 0.0) continue;
    double sq = 0.0;
    for (std::size_t j = 0; j < x_t.size(); ++j) {
      const double d = x_t.data[j] - sa * edit.targets[i].data[j];
      sq += d * d;
    }
    logp[i] = std::log(edit.weights[i]) - 0.5 * sq / var;
  }
  const double peak = *std::max_element(logp.begin(), logp.end());
  if (!std::isfinite(peak)) {
    throw NumericError("mixture responsibilities underflow for every mode");
  }
  double total = 0.0;
  std::vector<double> r(k);
  for (std::size_t i = 0; i < k; ++i) {
    r[i] = std::exp(logp[i] - peak);
    total += r[i];
  }
  for (double& v : r) v /= total;
  return r;
}

Raster analytic_mixture_eps(const DenoiserInput& in, const BetaSchedule& s) {
  const auto* m = std::get_if<MixtureEdit>(&in.cond.mode);
  if (m == nullptr) throw UsageError("analytic_mixture_eps requires a mixture edit");
  const auto r = mixture_responsibilities(in.x_t, in.t, *m, s);
  Raster out(in.x_t.channels, in.x_t.height, in.x_t.width);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] == 0.0) continue;
    const Raster eps = gaussian_eps(in.x_t, in.t, m->targets[i], m->std, s);
    for (std::size_t j = 0; j < out.size(); ++j) out.data[j] += r[i] * eps.data[j];
  }
  return out;
}

Raster predict_noise(const DenoiserInput& in, const BetaSchedule& s) {
  return in.cond.is_mixture() ? analytic_mixture_eps(in, s) : analytic_gaussian_eps(in, s);
}

}  // namespace mvedit
