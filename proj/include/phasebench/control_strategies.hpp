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

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "phasebench/angles.hpp"
#include "phasebench/errors.hpp"
#include "phasebench/particle_filter.hpp"
#include "phasebench/probe_models.hpp"
#include "phasebench/random.hpp"

namespace phasebench {

enum class StrategyKind { random, adaptive };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::random;
  /// Random candidates per probe (adaptive only).
  std::size_t candidate_count = 30;
  /// Also try theta = -estimate (adaptive only).
  bool include_estimate_heuristic = true;

  void validate() const {
    if (candidate_count < 1) throw ConfigError("K", "candidate count must be at least 1");
  }
};

/// Every component independently uniform on [0, 2pi).
inline ControlVector next_control_random(std::size_t p, RandomEngine& rng) {
  if (p < 1) throw ConfigError("p", "parameter count must be at least 1");
  ControlVector theta(p);
  for (std::size_t k = 0; k < p; ++k) theta.set(k, uniform_angle(rng));
  return theta;
}

/// Scores candidate controls against one fixed cloud. Per-particle trigonometry is computed once.
class ExpectedVarianceEvaluator {
 public:
  ExpectedVarianceEvaluator(const ParticleCloud& cloud, const ProbeModel& model,
                            Estimator estimator = Estimator::circular)
      : cloud_(cloud), model_(model), estimator_(estimator), n_(cloud.size()), p_(cloud.dimension()),
        outcomes_(model.outcome_count()) {
    if (model.parameter_count() != p_) throw DomainError("expected_posterior_variance: parameter count mismatch");
    const auto pos = cloud.positions();
    cos_.resize(pos.size());
    sin_.resize(pos.size());
    for (std::size_t j = 0; j < pos.size(); ++j) {
      cos_[j] = std::cos(pos[j]);
      sin_[j] = std::sin(pos[j]);
    }
    probs_.resize(n_ * outcomes_);
  }

  /// sum_m Pr(m | theta) * variance_trace(posterior after m). Outcomes with Pr(m) < 1e-12 contribute 0.
  double operator()(const ControlVector& theta) {
    if (theta.size() != p_) throw DomainError("expected_posterior_variance: control length mismatch");
    const auto pos = cloud_.positions();
    const auto w = cloud_.weights();

    std::vector<double> psi(p_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = 0; k < p_; ++k) psi[k] = pos[i * p_ + k] + theta[k];
      model_.outcome_probabilities(psi, std::span<double>(probs_.data() + i * outcomes_, outcomes_));
    }

    double expected = 0.0;
    std::vector<double> center(p_);
    for (std::size_t m = 0; m < outcomes_; ++m) {
      double marginal = 0.0;
      for (std::size_t i = 0; i < n_; ++i) marginal += w[i] * probs_[i * outcomes_ + m];
      if (marginal < kOutcomeFloor) continue;

      for (std::size_t k = 0; k < p_; ++k) {
        double c = 0.0, s = 0.0, lin = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
          const double v = w[i] * probs_[i * outcomes_ + m];
          if (estimator_ == Estimator::circular) {
            c += v * cos_[i * p_ + k];
            s += v * sin_[i * p_ + k];
          } else {
            lin += v * pos[i * p_ + k];
          }
        }
        if (estimator_ == Estimator::circular) {
          center[k] = std::hypot(c, s) / marginal < kResultantFloor ? 0.0 : wrap_angle(std::atan2(s, c));
        } else {
          center[k] = lin / marginal;
        }
      }

      double second_moment = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double v = w[i] * probs_[i * outcomes_ + m];
        if (v == 0.0) continue;
        double sq = 0.0;
        for (std::size_t k = 0; k < p_; ++k) {
          double d = pos[i * p_ + k] - center[k];
          if (estimator_ == Estimator::circular) {
            if (d > std::numbers::pi) d -= kTwoPi;
            else if (d <= -std::numbers::pi) d += kTwoPi;
          }
          sq += d * d;
        }
        second_moment += v * sq;
      }
      // Pr(m) * (second_moment / Pr(m))
      expected += second_moment;
    }
    return expected;
  }

  static constexpr double kOutcomeFloor = 1e-12;

 private:
  const ParticleCloud& cloud_;
  const ProbeModel& model_;
  Estimator estimator_;
  std::size_t n_, p_, outcomes_;
  std::vector<double> cos_, sin_, probs_;
};

/// Expected posterior variance trace after one probe at control theta. The cloud is not modified.
inline double expected_posterior_variance(const ParticleCloud& cloud, const ProbeModel& model,
                                          const ControlVector& theta, Estimator estimator = Estimator::circular) {
  ExpectedVarianceEvaluator eval(cloud, model, estimator);
  return eval(theta);
}

struct AdaptiveChoice {
  std::vector<ControlVector> candidates;  ///< in evaluation order
  std::vector<double> scores;
  std::size_t best = 0;

  const ControlVector& control() const { return candidates[best]; }
};

/// Evaluates K random candidates, then optionally theta = -estimate, and keeps the first minimum.
inline AdaptiveChoice evaluate_adaptive_candidates(const ParticleCloud& cloud, const ProbeModel& model,
                                                   const StrategyConfig& cfg, RandomEngine& rng,
                                                   Estimator estimator = Estimator::circular) {
  if (cfg.kind != StrategyKind::adaptive) throw ConfigError("strategy", "adaptive control requested for non-adaptive config");
  cfg.validate();
  const std::size_t p = cloud.dimension();

  AdaptiveChoice choice;
  choice.candidates.reserve(cfg.candidate_count + 1);
  for (std::size_t c = 0; c < cfg.candidate_count; ++c) choice.candidates.push_back(next_control_random(p, rng));
  if (cfg.include_estimate_heuristic) {
    const PosteriorSummary summary = summarize(cloud, estimator);
    ControlVector theta(p);
    for (std::size_t k = 0; k < p; ++k) theta.set(k, -summary.estimate[k]);
    choice.candidates.push_back(std::move(theta));
  }

  ExpectedVarianceEvaluator eval(cloud, model, estimator);
  double best_score = std::numeric_limits<double>::infinity();
  choice.scores.reserve(choice.candidates.size());
  for (std::size_t c = 0; c < choice.candidates.size(); ++c) {
    const double score = eval(choice.candidates[c]);
    choice.scores.push_back(score);
    if (score < best_score) {
      best_score = score;
      choice.best = c;
    }
  }
  return choice;
}

inline ControlVector next_control_adaptive(const ParticleCloud& cloud, const ProbeModel& model,
                                           const StrategyConfig& cfg, RandomEngine& rng,
                                           Estimator estimator = Estimator::circular) {
  return evaluate_adaptive_candidates(cloud, model, cfg, rng, estimator).control();
}

inline ControlVector next_control(const StrategyConfig& cfg, const ParticleCloud& cloud, const ProbeModel& model,
                                  RandomEngine& rng, Estimator estimator = Estimator::circular) {
  if (cfg.kind == StrategyKind::random) return next_control_random(cloud.dimension(), rng);
  return next_control_adaptive(cloud, model, cfg, rng, estimator);
}

}  // namespace phasebench
