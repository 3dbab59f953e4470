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
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "phasebench/angles.hpp"
#include "phasebench/control_strategies.hpp"
#include "phasebench/errors.hpp"
#include "phasebench/loss_statistics.hpp"
#include "phasebench/particle_filter.hpp"
#include "phasebench/probe_models.hpp"
#include "phasebench/random.hpp"
#include "phasebench/trajectory.hpp"

namespace phasebench {

struct ExperimentConfig {
  std::string model_id = "single_qubit";
  StrategyConfig strategy;
  std::size_t particles = 1000;    ///< n
  std::size_t probes = 500;        ///< N, probes per run
  std::size_t phases = 100;        ///< M, true phase vectors
  std::size_t repetitions = 30;    ///< r, runs per phase vector
  std::uint64_t master_seed = 0;
  bool resampling_enabled = true;
  Estimator estimator = Estimator::circular;
  FilterOptions filter;
  std::size_t crb_grid = kDefaultCrbGrid;
  /// Fixed truth for single simulations; benchmarks always draw their own.
  std::optional<std::vector<double>> true_phases;

  void validate() const {
    if (particles < 2) throw ConfigError("n", "particle count must be at least 2");
    if (probes < 1) throw ConfigError("N", "must be at least 1");
    if (phases < 1) throw ConfigError("M", "must be at least 1");
    if (repetitions < 1) throw ConfigError("r", "must be at least 1");
    if (!(filter.liu_west_a > 0.0 && filter.liu_west_a < 1.0)) throw ConfigError("liu_west_a", "must lie in (0, 1)");
    if (!(filter.ess_threshold_fraction > 0.0 && filter.ess_threshold_fraction <= 1.0)) {
      throw ConfigError("ess_threshold", "must lie in (0, 1]");
    }
    if (crb_grid < 8) throw ConfigError("crb_grid", "must be at least 8");
    strategy.validate();
    const auto model = make_model(model_id);
    if (true_phases && true_phases->size() != model->parameter_count()) {
      throw ConfigError("true_phases", "expected " + std::to_string(model->parameter_count()) + " values");
    }
  }
};

inline constexpr std::size_t kMaxDegenerateRestarts = 10;

/// Seed of run (phase_index, repetition_index); independent of execution order.
inline std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t phase_index,
                                     std::uint64_t repetition_index) {
  std::uint64_t h = mix64(master_seed);
  h = mix64(h ^ mix64(phase_index + 0x243f6a8885a308d3ULL));
  h = mix64(h ^ mix64(repetition_index + 0x13198a2e03707344ULL));
  return h;
}

/// Seed of the stream that draws the true phase vectors.
inline std::uint64_t derive_phase_seed(std::uint64_t master_seed) {
  return mix64(mix64(master_seed) ^ 0xa4093822299f31d0ULL);
}

/// M true phase vectors, uniform on [0, 2pi)^p, from the dedicated phase stream.
inline std::vector<PhaseVector> draw_true_phases(std::uint64_t master_seed, std::size_t count, std::size_t p) {
  RandomEngine rng(derive_phase_seed(master_seed));
  std::vector<PhaseVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    PhaseVector phi(p);
    for (std::size_t k = 0; k < p; ++k) phi.set(k, uniform_angle(rng));
    out.push_back(std::move(phi));
  }
  return out;
}

/// One estimation run of N probes: control, measurement, Bayes update, optional resampling.
inline RunTrajectory run_estimation(const ExperimentConfig& cfg, const ProbeModel& model, const PhaseVector& truth,
                                    std::uint64_t run_seed) {
  const std::size_t p = model.parameter_count();
  if (truth.size() != p) throw DomainError("run_estimation: truth has wrong length");

  RandomEngine rng(run_seed);
  RunTrajectory traj;
  traj.true_phases = truth;
  traj.records.reserve(cfg.probes);

  ParticleCloud cloud = init_uniform_prior(cfg.particles, p, rng, cfg.filter);
  for (std::size_t t = 1; t <= cfg.probes; ++t) {
    ControlVector theta = next_control(cfg.strategy, cloud, model, rng, cfg.estimator);
    const OutcomeId m = sample_outcome(model, truth, theta, rng);
    try {
      cloud = bayes_update(cloud, model, m, theta);
    } catch (const DegenerateUpdateError&) {
      if (++traj.degenerate_restarts > kMaxDegenerateRestarts) {
        traj.failed = true;
        traj.failure_reason = "more than " + std::to_string(kMaxDegenerateRestarts) +
                              " degenerate updates at probe " + std::to_string(t);
        return traj;
      }
      cloud = init_uniform_prior(cfg.particles, p, rng, cfg.filter);
    }
    if (cfg.resampling_enabled && needs_resampling(cloud)) cloud = liu_west_resample(cloud, rng);

    PosteriorSummary summary = summarize(cloud, cfg.estimator);
    ProbeRecord rec;
    rec.probe_index = t;
    rec.control = std::move(theta);
    rec.outcome = m;
    rec.quadratic_loss = quadratic_loss(summary.estimate, truth);
    rec.estimate = std::move(summary.estimate);
    rec.variance_trace = summary.variance_trace;
    traj.records.push_back(std::move(rec));
  }
  return traj;
}

inline RunTrajectory run_estimation(const ExperimentConfig& cfg, const PhaseVector& truth, std::uint64_t run_seed) {
  const auto model = make_model(cfg.model_id);
  return run_estimation(cfg, *model, truth, run_seed);
}

struct BenchmarkResult {
  std::vector<PhaseVector> true_phases;   ///< one per phase index
  std::vector<RunTrajectory> trajectories;  ///< canonical (phase_index, repetition_index) order
};

/// Called after each finished run with (finished, total). May be invoked from worker threads.
using ProgressCallback = std::function<void(std::size_t, std::size_t)>;

/// Runs all M * r estimations over `threads` workers with an explicit model. Output depends only on
/// cfg and the model, never on the thread count.
inline BenchmarkResult run_benchmark(const ExperimentConfig& cfg, const ProbeModel& model, std::size_t threads = 1,
                                     const ProgressCallback& progress = {}) {
  if (cfg.particles < 2) throw ConfigError("n", "particle count must be at least 2");
  if (cfg.probes < 1 || cfg.phases < 1 || cfg.repetitions < 1) throw ConfigError("N", "empty benchmark");
  const std::size_t p = model.parameter_count();

  BenchmarkResult result;
  result.true_phases = draw_true_phases(cfg.master_seed, cfg.phases, p);
  const std::size_t total = cfg.phases * cfg.repetitions;
  result.trajectories.resize(total);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::exception_ptr error;
  std::atomic<bool> has_error{false};
  auto worker = [&] {
    for (std::size_t job = next++; job < total && !has_error; job = next++) {
      const std::size_t phase = job / cfg.repetitions;
      const std::size_t rep = job % cfg.repetitions;
      try {
        RunTrajectory traj = run_estimation(cfg, model, result.true_phases[phase],
                                            derive_run_seed(cfg.master_seed, phase, rep));
        traj.phase_index = phase;
        traj.repetition_index = rep;
        result.trajectories[job] = std::move(traj);
      } catch (...) {
        if (!has_error.exchange(true)) error = std::current_exception();
      }
      if (progress) progress(++done, total);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(total, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return result;
}

inline BenchmarkResult run_benchmark(const ExperimentConfig& cfg, std::size_t threads = 1,
                                     const ProgressCallback& progress = {}) {
  cfg.validate();
  const auto model = make_model(cfg.model_id);
  return run_benchmark(cfg, *model, threads, progress);
}

}  // namespace phasebench
