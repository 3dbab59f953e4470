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
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Dense>

#include "phasebench/angles.hpp"
#include "phasebench/errors.hpp"
#include "phasebench/probe_models.hpp"

namespace phasebench {

/// Bounds used to rescale benchmark curves for one model.
struct BoundSpec {
  double crb_trace = 0.0;  ///< best single-probe trace(F^-1), rad^2
  double k_factor = 0.0;   ///< median(chi2_p) / p
  std::string model_id;
};

inline constexpr double kMaxFisherCondition = 1e12;

/// trace(F^-1), or +inf when F is singular or its condition number exceeds 1e12.
inline double inverse_fisher_trace(const FisherMatrix& fisher) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fisher, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxFisherCondition) return std::numeric_limits<double>::infinity();
  return ev.cwiseInverse().sum();
}

/// Minimum of trace(F(psi)^-1) over a uniform grid of effective phases, grid_density points per axis.
///
/// Only psi = phi + theta matters, so this is the per-probe bound at the best operating point.
inline double crb_trace(const ProbeModel& model, std::size_t grid_density) {
  if (grid_density < 8) throw DomainError("crb_trace: grid density must be at least 8");
  const std::size_t p = model.parameter_count();
  std::size_t total = 1;
  for (std::size_t k = 0; k < p; ++k) total *= grid_density;

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> psi(p);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t k = 0; k < p; ++k) {
      psi[k] = kTwoPi * static_cast<double>(rest % grid_density) / static_cast<double>(grid_density);
      rest /= grid_density;
    }
    best = std::min(best, inverse_fisher_trace(fisher_matrix_at(model, psi)));
  }
  if (!std::isfinite(best)) throw BoundUnavailableError("every grid point has a divergent Fisher matrix");
  return best;
}

/// median(chi^2_p) / p, by bisection on the chi-squared CDF.
///
/// This is the expected ratio between the median and the mean of the quadratic loss once the
/// posterior is Gaussian with covariance proportional to the identity.
inline double chi2_median_factor(std::size_t p) {
  if (p < 1) throw DomainError("chi2_median_factor: p must be at least 1");
  const double dof = static_cast<double>(p);
  const auto cdf = [&](double x) { return boost::math::gamma_p(0.5 * dof, 0.5 * x); };
  double lo = 0.0;
  double hi = dof + 10.0 * std::sqrt(2.0 * dof) + 10.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / dof;
}

/// (2pi / n)^p: resolution limit of n particles in p dimensions without resampling.
inline double discretization_floor(std::size_t n, std::size_t p) {
  if (n < 2) throw DomainError("discretization_floor: n must be at least 2");
  if (p < 1) throw DomainError("discretization_floor: p must be at least 1");
  return std::pow(kTwoPi / static_cast<double>(n), static_cast<double>(p));
}

inline constexpr std::size_t kDefaultCrbGrid = 64;

/// Thread-safe memo of BoundSpec per (model id, grid density).
class BoundCache {
 public:
  BoundSpec get(const ProbeModel& model, std::size_t grid_density = kDefaultCrbGrid) {
    const auto key = std::make_pair(std::string(model.id()), grid_density);
    {
      std::shared_lock lock(mutex_);
      if (auto it = table_.find(key); it != table_.end()) return it->second;
    }
    BoundSpec spec{crb_trace(model, grid_density), chi2_median_factor(model.parameter_count()), key.first};
    std::unique_lock lock(mutex_);
    return table_.emplace(key, std::move(spec)).first->second;
  }

  static BoundCache& global() {
    static BoundCache cache;
    return cache;
  }

 private:
  std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::size_t>, BoundSpec> table_;
};

inline BoundSpec bound_spec(const ProbeModel& model, std::size_t grid_density = kDefaultCrbGrid) {
  return BoundCache::global().get(model, grid_density);
}

}  // namespace phasebench
