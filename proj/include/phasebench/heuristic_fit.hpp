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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "phasebench/errors.hpp"
#include "phasebench/loss_statistics.hpp"
#include "phasebench/precision_bounds.hpp"
#include "phasebench/random.hpp"
#include "phasebench/trajectory.hpp"

namespace phasebench {

/// Coefficients of the particle/parameter scaling law
///   f(n, p) = A (1 + sqrt p)^2 p n^(-B + C p) + D sqrt p + E p^F / n^G.
struct HeuristicParams {
  double A = 160.0;
  double B = 5.4;
  double C = 0.8;
  double D = 0.002;
  double E = 0.11;
  double F = 3.5;
  double G = 1.3;

  /// Published reference values.
  static constexpr HeuristicParams reference() { return {}; }

  std::array<double, 7> to_array() const { return {A, B, C, D, E, F, G}; }
  static HeuristicParams from_array(const std::array<double, 7>& v) { return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]}; }
};

inline double eval_f(const HeuristicParams& q, double n, double p) {
  const double root = std::sqrt(p);
  return q.A * (1.0 + root) * (1.0 + root) * p * std::pow(n, -q.B + q.C * p) + q.D * root +
         q.E * std::pow(p, q.F) / std::pow(n, q.G);
}

struct FitPoint {
  double n = 0.0;
  double p = 0.0;
  double y = 0.0;  ///< rescaled median loss
  double weight = 1.0;
};

/// Benchmark output of one (n, p) cell, with the bound used for rescaling.
struct FitSweep {
  std::size_t n = 0;
  std::size_t p = 0;
  BoundSpec bound;
  std::span<const RunTrajectory> trajectories;
};

struct ProbeWindow {
  std::size_t lo = 400;
  std::size_t hi = 500;
};

/// One point per (n, p): median of N * loss / (k_p * crb) over every successful run and every N in the window.
inline std::vector<FitPoint> build_fit_dataset(std::span<const FitSweep> sweeps, ProbeWindow window = {}) {
  if (window.lo > window.hi) throw DatasetError("fit window is empty");
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cells;
  for (const auto& sweep : sweeps) {
    auto& values = cells[{sweep.n, sweep.p}];
    const double scale = sweep.bound.k_factor * sweep.bound.crb_trace;
    for (const auto& traj : sweep.trajectories) {
      if (traj.failed) continue;
      for (const auto& rec : traj.records) {
        if (rec.probe_index < window.lo || rec.probe_index > window.hi) continue;
        values.push_back(static_cast<double>(rec.probe_index) * rec.quadratic_loss / scale);
      }
    }
  }
  std::vector<FitPoint> points;
  for (auto& [key, values] : cells) {
    if (values.empty()) {
      throw DatasetError("no probe indices in window [" + std::to_string(window.lo) + ", " + std::to_string(window.hi) +
                         "] for n=" + std::to_string(key.first) + ", p=" + std::to_string(key.second));
    }
    points.push_back({static_cast<double>(key.first), static_cast<double>(key.second), median_of(std::move(values)), 1.0});
  }
  return points;
}

struct FitReport {
  HeuristicParams params;
  double objective = 0.0;  ///< sum w (log f - log y)^2
  double log_rms = 0.0;    ///< sqrt(objective / sum w)
  std::vector<double> residuals;  ///< log f - log y, per input point
  std::size_t best_start = 0;
  std::size_t starts = 0;
};

namespace detail {

using Vec7 = std::array<double, 7>;

// A, D, E, G are optimized in log space so they stay positive.
inline constexpr std::array<bool, 7> kLogCoordinate = {true, false, false, true, true, false, true};

inline Vec7 to_search(const HeuristicParams& q) {
  Vec7 v = q.to_array();
  for (std::size_t i = 0; i < 7; ++i) {
    if (kLogCoordinate[i]) v[i] = std::log(v[i]);
  }
  return v;
}

inline HeuristicParams from_search(Vec7 v) {
  for (std::size_t i = 0; i < 7; ++i) {
    if (kLogCoordinate[i]) v[i] = std::exp(v[i]);
  }
  return HeuristicParams::from_array(v);
}

inline double log_objective(const HeuristicParams& q, std::span<const FitPoint> points) {
  double sum = 0.0;
  for (const auto& pt : points) {
    const double f = eval_f(q, pt.n, pt.p);
    if (!(f > 0.0) || !std::isfinite(f)) return std::numeric_limits<double>::infinity();
    const double r = std::log(f) - std::log(pt.y);
    sum += pt.weight * r * r;
  }
  return std::isfinite(sum) ? sum : std::numeric_limits<double>::infinity();
}

/// Nelder-Mead downhill simplex. Returns the best vertex and its value.
inline std::pair<Vec7, double> nelder_mead(const std::function<double(const Vec7&)>& fn, const Vec7& start,
                                           const Vec7& step, std::size_t max_evals, double ftol) {
  constexpr std::size_t dim = 7;
  std::array<Vec7, dim + 1> simplex;
  std::array<double, dim + 1> value;
  simplex[0] = start;
  for (std::size_t i = 0; i < dim; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1][i] += step[i];
  }
  std::size_t evals = 0;
  for (std::size_t i = 0; i <= dim; ++i) {
    value[i] = fn(simplex[i]);
    ++evals;
  }

  std::array<std::size_t, dim + 1> order;
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order[0], worst = order[dim], second = order[dim - 1];
    if (std::isfinite(value[worst]) && value[worst] - value[best] <= ftol * (std::abs(value[best]) + 1e-30)) break;

    Vec7 centroid{};
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t c = 0; c < dim; ++c) centroid[c] += simplex[order[i]][c] / dim;
    }
    const auto along = [&](double t) {
      Vec7 x;
      for (std::size_t c = 0; c < dim; ++c) x[c] = centroid[c] + t * (simplex[worst][c] - centroid[c]);
      return x;
    };

    const Vec7 reflected = along(-1.0);
    const double f_reflected = fn(reflected);
    ++evals;
    if (f_reflected < value[best]) {
      const Vec7 expanded = along(-2.0);
      const double f_expanded = fn(expanded);
      ++evals;
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second]) {
      simplex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < value[worst];
    const Vec7 contracted = along(outside ? -0.5 : 0.5);
    const double f_contracted = fn(contracted);
    ++evals;
    if (f_contracted < (outside ? f_reflected : value[worst])) {
      simplex[worst] = contracted;
      value[worst] = f_contracted;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 1; i <= dim; ++i) {
      const std::size_t v = order[i];
      for (std::size_t c = 0; c < dim; ++c) simplex[v][c] = simplex[best][c] + 0.5 * (simplex[v][c] - simplex[best][c]);
      value[v] = fn(simplex[v]);
      ++evals;
    }
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(value.begin(), value.end()) - value.begin());
  return {simplex[best], value[best]};
}

}  // namespace detail

inline constexpr std::size_t kDefaultFitStarts = 32;

/// Multi-start simplex fit of the scaling law in log space.
///
/// Start i perturbs every reference coefficient by a factor 10^u, u uniform in [-1, 1]; the draws
/// for start i do not depend on the total number of starts. Each start is polished by restarting the
/// simplex at its optimum until the objective stops improving.
inline FitReport fit_heuristic(std::span<const FitPoint> points, std::size_t starts = kDefaultFitStarts,
                               std::uint64_t seed = 0x5eed) {
  if (points.size() < 10) throw DatasetError("fit needs at least 10 points, got " + std::to_string(points.size()));
  std::set<double> ps, ns;
  for (const auto& pt : points) {
    if (!(pt.y > 0.0) || !std::isfinite(pt.y)) throw DatasetError("fit points need finite y > 0");
    if (!(pt.weight > 0.0)) throw DatasetError("fit points need positive weights");
    ps.insert(pt.p);
    ns.insert(pt.n);
  }
  if (ps.size() < 2 || ns.size() < 3) throw DatasetError("fit needs at least 2 values of p and 3 values of n");
  if (starts < 1) throw DatasetError("fit needs at least one start");

  const auto objective = [&](const detail::Vec7& v) { return detail::log_objective(detail::from_search(v), points); };

  RandomEngine rng(seed);
  const auto reference = HeuristicParams::reference().to_array();
  FitReport report;
  report.objective = std::numeric_limits<double>::infinity();
  report.starts = starts;
  for (std::size_t s = 0; s < starts; ++s) {
    std::array<double, 7> init;
    for (std::size_t i = 0; i < 7; ++i) init[i] = reference[i] * std::pow(10.0, 2.0 * uniform01(rng) - 1.0);
    detail::Vec7 x = detail::to_search(HeuristicParams::from_array(init));
    double fx = objective(x);

    for (int round = 0; round < 50; ++round) {
      detail::Vec7 step;
      for (std::size_t i = 0; i < 7; ++i) step[i] = detail::kLogCoordinate[i] ? 0.5 : 0.1 * std::max(std::abs(x[i]), 0.1);
      if (round > 0) {
        for (double& st : step) st *= 0.1;
      }
      auto [nx, nf] = detail::nelder_mead(objective, x, step, 20000, 1e-14);
      const bool improved = nf < fx * (1.0 - 1e-9) || (!std::isfinite(fx) && std::isfinite(nf));
      if (nf <= fx) {
        x = nx;
        fx = nf;
      }
      if (!improved && round > 0) break;
    }

    if (fx < report.objective) {
      report.objective = fx;
      report.params = detail::from_search(x);
      report.best_start = s;
    }
  }
  if (!std::isfinite(report.objective)) throw FitFailureError("objective is non-finite at every start");

  double total_weight = 0.0;
  report.residuals.reserve(points.size());
  for (const auto& pt : points) {
    report.residuals.push_back(std::log(eval_f(report.params, pt.n, pt.p)) - std::log(pt.y));
    total_weight += pt.weight;
  }
  report.log_rms = std::sqrt(report.objective / total_weight);
  return report;
}

}  // namespace phasebench
