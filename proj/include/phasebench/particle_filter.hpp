// Copyright 2026 The phasebench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phasebench/angles.hpp"
#include "phasebench/errors.hpp"
#include "phasebench/probe_models.hpp"
#include "phasebench/random.hpp"

namespace phasebench {

/// How the point estimate and spread are read off the posterior.
enum class Estimator {
  circular,  ///< per-component circular mean, deviations wrapped into (-pi, pi]
  linear,    ///< plain weighted mean and variance of the raw angles
};

struct FilterOptions {
  double liu_west_a = 0.98;
  double ess_threshold_fraction = 0.5;
};

/// n weighted points on the p-torus approximating a posterior.
class ParticleCloud {
 public:
  /// `positions` is row-major n x p. Weights are normalized on construction.
  ParticleCloud(std::size_t p, std::vector<double> positions, std::vector<double> weights,
                FilterOptions options = {})
      : p_(p), positions_(std::move(positions)), weights_(std::move(weights)), options_(options) {
    if (p_ == 0) throw ConfigError("p", "parameter count must be at least 1");
    if (positions_.size() % p_ != 0 || positions_.size() / p_ != weights_.size()) {
      throw DomainError("particle positions and weights disagree in size");
    }
    if (weights_.empty()) throw ConfigError("n", "particle cloud needs at least one particle");
    if (!(options_.liu_west_a > 0.0 && options_.liu_west_a < 1.0)) {
      throw ConfigError("liu_west_a", "must lie in (0, 1)");
    }
    if (!(options_.ess_threshold_fraction > 0.0 && options_.ess_threshold_fraction <= 1.0)) {
      throw ConfigError("ess_threshold", "must lie in (0, 1]");
    }
    for (double& x : positions_) x = wrap_angle(x);
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("particle weights must be finite and non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw DomainError("particle weights sum to zero");
    for (double& w : weights_) w /= total;
  }

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dimension() const noexcept { return p_; }
  const FilterOptions& options() const noexcept { return options_; }

  std::span<const double> position(std::size_t i) const { return {positions_.data() + i * p_, p_}; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> positions() const noexcept { return positions_; }

 private:
  friend ParticleCloud bayes_update(ParticleCloud, const ProbeModel&, OutcomeId, const ControlVector&);
  friend ParticleCloud liu_west_resample(const ParticleCloud&, RandomEngine&);

  std::size_t p_;
  std::vector<double> positions_;
  std::vector<double> weights_;
  FilterOptions options_;
};

struct PosteriorSummary {
  PhaseVector estimate;
  Eigen::MatrixXd covariance;
  double variance_trace = 0.0;
  /// Set when some component has no defined circular mean (resultant length below 1e-12).
  bool low_confidence = false;
};

inline constexpr double kUnderflowWeight = 1e-300;
inline constexpr double kResultantFloor = 1e-12;

/// n particles drawn uniformly on [0, 2pi)^p, equal weights.
inline ParticleCloud init_uniform_prior(std::size_t n, std::size_t p, RandomEngine& rng, FilterOptions options = {}) {
  if (n < 2) throw ConfigError("n", "particle count must be at least 2");
  if (p < 1) throw ConfigError("p", "parameter count must be at least 1");
  std::vector<double> positions(n * p);
  for (double& x : positions) x = uniform_angle(rng);
  return ParticleCloud(p, std::move(positions), std::vector<double>(n, 1.0 / static_cast<double>(n)), options);
}

/// Multiplies every weight by p(m | particle, theta) and renormalizes.
///
/// Throws DegenerateUpdateError if every updated weight falls below 1e-300.
inline ParticleCloud bayes_update(ParticleCloud cloud, const ProbeModel& model, OutcomeId m,
                                  const ControlVector& theta) {
  const std::size_t p = cloud.dimension();
  if (model.parameter_count() != p || theta.size() != p) throw DomainError("bayes_update: parameter count mismatch");
  if (m.index >= model.outcome_count()) throw DomainError("bayes_update: outcome index out of range");

  std::vector<double> psi(p), probs(model.outcome_count());
  bool any_alive = false;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto pos = cloud.position(i);
    for (std::size_t k = 0; k < p; ++k) psi[k] = pos[k] + theta[k];
    model.outcome_probabilities(psi, probs);
    double& w = cloud.weights_[i];
    w *= probs[m.index];
    if (w >= kUnderflowWeight) any_alive = true;
  }
  if (!any_alive) throw DegenerateUpdateError("all particle weights underflowed");
  const double total = std::accumulate(cloud.weights_.begin(), cloud.weights_.end(), 0.0);
  for (double& w : cloud.weights_) w /= total;
  return cloud;
}

/// 1 / sum w_i^2.
inline double effective_sample_size(const ParticleCloud& cloud) {
  double sum_sq = 0.0;
  for (double w : cloud.weights()) sum_sq += w * w;
  return 1.0 / sum_sq;
}

inline bool needs_resampling(const ParticleCloud& cloud) {
  return effective_sample_size(cloud) < cloud.options().ess_threshold_fraction * static_cast<double>(cloud.size());
}

namespace detail {

struct CircularMean {
  double angle = 0.0;
  bool defined = true;
};

inline CircularMean weighted_circular_mean(std::span<const double> positions, std::span<const double> weights,
                                           std::size_t p, std::size_t component) {
  double c = 0.0, s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double x = positions[i * p + component];
    c += weights[i] * std::cos(x);
    s += weights[i] * std::sin(x);
  }
  if (std::hypot(c, s) < kResultantFloor) return {0.0, false};
  return {wrap_angle(std::atan2(s, c)), true};
}

}  // namespace detail

/// Point estimate and covariance of the weighted cloud.
///
/// With the circular estimator the covariance is the second moment of the deviations from the
/// estimate, each deviation wrapped into (-pi, pi].
inline PosteriorSummary summarize(const ParticleCloud& cloud, Estimator estimator = Estimator::circular) {
  const std::size_t p = cloud.dimension();
  const auto positions = cloud.positions();
  const auto weights = cloud.weights();

  PosteriorSummary out;
  out.estimate = PhaseVector(p);
  std::vector<double> center(p);
  for (std::size_t k = 0; k < p; ++k) {
    if (estimator == Estimator::circular) {
      const auto mean = detail::weighted_circular_mean(positions, weights, p, k);
      center[k] = mean.angle;
      out.low_confidence = out.low_confidence || !mean.defined;
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * positions[i * p + k];
      center[k] = acc;
    }
    out.estimate.set(k, center[k]);
  }

  out.covariance = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd dev(p);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    for (std::size_t k = 0; k < p; ++k) {
      const double x = positions[i * p + k];
      dev(k) = estimator == Estimator::circular ? wrapped_difference(x, center[k]) : x - center[k];
    }
    out.covariance.noalias() += weights[i] * dev * dev.transpose();
  }
  out.variance_trace = out.covariance.trace();
  return out;
}

/// Liu-West resampling on the torus.
///
/// Ancestors are drawn by systematic resampling. Each component is expressed in a chart centred on
/// its circular mean, shrunk toward the chart mean by a, and jittered with Gaussian noise of
/// covariance (1 - a^2) Sigma so the first two moments are preserved. Weights reset to 1/n.
inline ParticleCloud liu_west_resample(const ParticleCloud& cloud, RandomEngine& rng) {
  const std::size_t n = cloud.size();
  const std::size_t p = cloud.dimension();
  const double a = cloud.options().liu_west_a;
  const auto positions = cloud.positions();
  const auto weights = cloud.weights();

  std::vector<double> origin(p);
  for (std::size_t k = 0; k < p; ++k) origin[k] = detail::weighted_circular_mean(positions, weights, p, k).angle;

  Eigen::MatrixXd chart(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) chart(i, k) = wrapped_difference(positions[i * p + k], origin[k]);
  }
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd mean = chart.transpose() * w;
  const Eigen::MatrixXd centered = chart.rowwise() - mean.transpose();
  const Eigen::MatrixXd sigma = centered.transpose() * w.asDiagonal() * centered;

  Eigen::MatrixXd noise_factor;
  Eigen::LLT<Eigen::MatrixXd> llt((1.0 - a * a) * sigma);
  if (llt.info() == Eigen::Success) {
    noise_factor = llt.matrixL();
  } else {
    constexpr double kFloorVariance = 1e-6 * 1e-6;
    Eigen::VectorXd diag = sigma.diagonal().cwiseMax(kFloorVariance);
    noise_factor = ((1.0 - a * a) * diag).cwiseSqrt().asDiagonal();
  }

  // systematic resampling
  std::vector<std::size_t> ancestors(n);
  const double step = 1.0 / static_cast<double>(n);
  double u = uniform01(rng) * step;
  double cdf = weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (u > cdf && j + 1 < n) cdf += weights[++j];
    ancestors[i] = j;
    u += step;
  }

  std::vector<double> next(n * p);
  Eigen::VectorXd z(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) z(k) = standard_normal(rng);
    const Eigen::VectorXd jitter = noise_factor * z;
    for (std::size_t k = 0; k < p; ++k) {
      const double x = a * chart(ancestors[i], k) + (1.0 - a) * mean(k) + jitter(k);
      next[i * p + k] = wrap_angle(origin[k] + x);
    }
  }
  return ParticleCloud(p, std::move(next), std::vector<double>(n, step), cloud.options());
}

}  // namespace phasebench
