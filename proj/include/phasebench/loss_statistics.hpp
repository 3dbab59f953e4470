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
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "phasebench/angles.hpp"
#include "phasebench/errors.hpp"
#include "phasebench/precision_bounds.hpp"
#include "phasebench/trajectory.hpp"

namespace phasebench {

/// Sum of squared wrapped component distances.
inline double quadratic_loss(const PhaseVector& estimate, const PhaseVector& truth) {
  if (estimate.size() != truth.size()) throw DomainError("quadratic_loss: length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < estimate.size(); ++k) {
    const double d = wrapped_distance(estimate[k], truth[k]);
    sum += d * d;
  }
  return sum;
}

inline double mean_of(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean of empty set");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// Median by full sort; even counts average the two middle values.
inline double median_of(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 == 1 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

/// Linear-interpolation quantile, q in [0, 1].
inline double quantile_of(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

enum class AggregateMode {
  mean_all,                    ///< mean over every run
  median_all,                  ///< median over every run
  mean_per_phase_then_mean,    ///< mean over repetitions, then mean over phases
  mean_per_phase_then_median,  ///< mean over repetitions, then median over phases
};

inline constexpr std::string_view to_string(AggregateMode mode) {
  switch (mode) {
    case AggregateMode::mean_all: return "mean_all";
    case AggregateMode::median_all: return "median_all";
    case AggregateMode::mean_per_phase_then_mean: return "mean_per_phase_then_mean";
    case AggregateMode::mean_per_phase_then_median: return "mean_per_phase_then_median";
  }
  return "unknown";
}

/// True when the last reduction of the mode is a median; its loss is then compared to k_p * CRB.
inline constexpr bool ends_with_median(AggregateMode mode) {
  return mode == AggregateMode::median_all || mode == AggregateMode::mean_per_phase_then_median;
}

struct AggregatePoint {
  std::size_t probe_index = 0;
  double loss = 0.0;
  double variance = 0.0;
  std::size_t runs = 0;
  /// N * loss / bound, with bound = k_p * crb for median modes and crb otherwise. NaN without a bound.
  double rescaled_loss = std::nan("");
  /// N * variance / crb. NaN without a bound.
  double rescaled_variance = std::nan("");
};

struct AggregateCurve {
  AggregateMode mode = AggregateMode::mean_all;
  std::vector<AggregatePoint> points;

  const AggregatePoint& at(std::size_t probe_index) const {
    for (const auto& pt : points) {
      if (pt.probe_index == probe_index) return pt;
    }
    throw DomainError("aggregate curve has no probe index " + std::to_string(probe_index));
  }
};

/// Reduces the loss and variance trajectories of all successful runs, per probe index.
inline AggregateCurve aggregate(std::span<const RunTrajectory> trajectories, AggregateMode mode,
                                std::optional<BoundSpec> bound = std::nullopt) {
  std::vector<const RunTrajectory*> runs;
  for (const auto& t : trajectories) {
    if (!t.failed) runs.push_back(&t);
  }
  if (runs.empty()) throw DomainError("aggregate: no successful trajectories");
  const std::size_t probes = runs.front()->records.size();
  for (const auto* t : runs) {
    if (t->records.size() != probes) throw DomainError("aggregate: trajectories differ in probe count");
  }

  // phase index -> runs, in input order
  std::map<std::size_t, std::vector<const RunTrajectory*>> by_phase;
  for (const auto* t : runs) by_phase[t->phase_index].push_back(t);

  const bool two_stage = mode == AggregateMode::mean_per_phase_then_mean || mode == AggregateMode::mean_per_phase_then_median;
  const auto reduce = [&](std::vector<double> values) {
    return ends_with_median(mode) ? median_of(std::move(values)) : mean_of(values);
  };

  AggregateCurve curve;
  curve.mode = mode;
  curve.points.reserve(probes);
  std::vector<double> losses, variances;
  for (std::size_t j = 0; j < probes; ++j) {
    losses.clear();
    variances.clear();
    if (two_stage) {
      std::vector<double> group_loss, group_var;
      for (const auto& [phase, group] : by_phase) {
        group_loss.clear();
        group_var.clear();
        for (const auto* t : group) {
          group_loss.push_back(t->records[j].quadratic_loss);
          group_var.push_back(t->records[j].variance_trace);
        }
        losses.push_back(mean_of(group_loss));
        variances.push_back(mean_of(group_var));
      }
    } else {
      for (const auto* t : runs) {
        losses.push_back(t->records[j].quadratic_loss);
        variances.push_back(t->records[j].variance_trace);
      }
    }

    AggregatePoint pt;
    pt.probe_index = runs.front()->records[j].probe_index;
    pt.loss = reduce(losses);
    pt.variance = reduce(variances);
    pt.runs = runs.size();
    if (bound) {
      const double n = static_cast<double>(pt.probe_index);
      const double k = ends_with_median(mode) ? bound->k_factor : 1.0;
      pt.rescaled_loss = n * pt.loss / (k * bound->crb_trace);
      pt.rescaled_variance = n * pt.variance / bound->crb_trace;
    }
    curve.points.push_back(pt);
  }
  return curve;
}

/// Smallest probe index from which |loss_a / loss_b - 1| stays below `threshold` for every later index.
inline std::optional<std::size_t> mean_median_crossing(const AggregateCurve& curve_a, const AggregateCurve& curve_b,
                                                       double threshold = 0.01) {
  if (!(threshold > 0.0)) throw DomainError("mean_median_crossing: threshold must be positive");
  if (curve_a.points.size() != curve_b.points.size()) throw DomainError("mean_median_crossing: curve length mismatch");
  std::optional<std::size_t> from;
  for (std::size_t j = curve_a.points.size(); j-- > 0;) {
    const double a = curve_a.points[j].loss;
    const double b = curve_b.points[j].loss;
    const bool close = (a == b) || (b != 0.0 && std::abs(a / b - 1.0) < threshold);
    if (!close) break;
    from = curve_a.points[j].probe_index;
  }
  return from;
}

struct KdeResult {
  double bandwidth = 0.0;
  /// Zero-variance input: `x` holds the single value and `density` a unit point mass.
  bool degenerate = false;
  std::vector<double> x;
  std::vector<double> density;
};

/// Silverman bandwidth 1.06 * s * n^(-1/5), s = min(sample std, IQR / 1.349).
/// Falls back to the sample std when the IQR vanishes.
inline double silverman_bandwidth(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("bandwidth needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> copy(values.begin(), values.end());
  const double iqr = quantile_of(copy, 0.75) - quantile_of(copy, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;
  return 1.06 * spread * std::pow(n, -0.2);
}

/// Gaussian KDE on a uniform grid spanning [min - 3 bw, max + 3 bw].
inline KdeResult kernel_density(std::span<const double> values, std::size_t grid_points) {
  if (values.size() < 2) throw DomainError("kernel_density: need at least two values");
  if (grid_points < 16) throw DomainError("kernel_density: need at least 16 grid points");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  KdeResult out;
  if (*lo_it == *hi_it) {
    out.degenerate = true;
    out.x = {*lo_it};
    out.density = {1.0};
    return out;
  }
  out.bandwidth = silverman_bandwidth(values);
  const double bw = out.bandwidth;
  const double lo = *lo_it - 3.0 * bw;
  const double hi = *hi_it + 3.0 * bw;
  const double norm = 1.0 / (static_cast<double>(values.size()) * bw * std::sqrt(kTwoPi));
  out.x.resize(grid_points);
  out.density.resize(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    double acc = 0.0;
    for (double v : values) {
      const double z = (x - v) / bw;
      acc += std::exp(-0.5 * z * z);
    }
    out.x[g] = x;
    out.density[g] = acc * norm;
  }
  return out;
}

}  // namespace phasebench
