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

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mvedit/raster.hpp"

namespace mvedit {

/// Noise schedule constants for a T-step DDPM. Steps are indexed 1..T as in
/// the usual notation; alpha_bar(0) is defined as 1.
class BetaSchedule {
 public:
  /// Builds a schedule from explicit betas. With require_terminal_noise the
  /// schedule is rejected unless alpha_bar(T) < 1e-3.
  static BetaSchedule from_betas(std::vector<double> betas, bool require_terminal_noise = true);

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_[check(t)]; }
  double alpha(int t) const { return alpha_[check(t)]; }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[check(t)]; }
  /// Posterior standard deviation, sigma_t^2 = beta_t (1 - abar_{t-1}) / (1 - abar_t).
  double sigma(int t) const { return sigma_[check(t)]; }

  std::span<const double> betas() const { return beta_; }

  friend bool operator==(const BetaSchedule&, const BetaSchedule&) = default;

 private:
  std::size_t check(int t) const;

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<double> sigma_;
};

inline constexpr double kTerminalAlphaBarLimit = 1e-3;

/// Linear beta ramp from beta_start to beta_end over T steps.
BetaSchedule make_schedule(int steps, double beta_start, double beta_end);

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) noise.
Raster forward_sample(const Raster& x0, int t, const Raster& noise, const BetaSchedule& s);

/// One ancestral step: mu(x_t, eps_hat) + sigma_t z. z is ignored at t = 1.
Raster reverse_step(const Raster& x_t, int t, const Raster& eps_hat, const BetaSchedule& s,
                    const Raster& z);

struct GaussianEdit {
  Raster target;
  double std = 0.05;
};

struct MixtureEdit {
  std::vector<Raster> targets;
  std::vector<double> weights;
  double std = 0.05;
};

/// Conditioning for one view: the source image plus an analytic target
/// distribution built from named transforms of it.
struct EditSpec {
  Raster source;
  std::vector<std::string> transforms;
  std::variant<GaussianEdit, MixtureEdit> mode;

  bool is_mixture() const { return std::holds_alternative<MixtureEdit>(mode); }
  void validate() const;
};

EditSpec make_gaussian_edit(const Raster& source, const std::string& transform, double std);
EditSpec make_mixture_edit(const Raster& source, const std::vector<std::string>& transforms,
                           std::vector<double> weights, double std);

// Average-pools source and targets into the latent raster grid.
EditSpec to_latent(const EditSpec& spec, int factor);

struct DenoiserInput {
  const Raster& x_t;
  int t;
  const EditSpec& cond;
};

/// Exact E[eps | x_t] for x0 ~ N(y, s^2 I).
Raster analytic_gaussian_eps(const DenoiserInput& in, const BetaSchedule& s);

/// Posterior mode probabilities r_i for a mixture edit at (x_t, t).
std::vector<double> mixture_responsibilities(const Raster& x_t, int t, const MixtureEdit& edit,
                                             const BetaSchedule& s);

/// Responsibility-weighted blend of the per-mode Gaussian predictors.
Raster analytic_mixture_eps(const DenoiserInput& in, const BetaSchedule& s);

// Dispatches on cond.mode.
Raster predict_noise(const DenoiserInput& in, const BetaSchedule& s);

}  // namespace mvedit
