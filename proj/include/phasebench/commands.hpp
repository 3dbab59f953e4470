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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phasebench/errors.hpp"
#include "phasebench/experiment_runner.hpp"
#include "phasebench/heuristic_fit.hpp"
#include "phasebench/io.hpp"
#include "phasebench/loss_statistics.hpp"
#include "phasebench/precision_bounds.hpp"

namespace phasebench {

namespace fs = std::filesystem;

inline constexpr const char* kRunsFile = "runs.csv";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kTrajectoryFile = "trajectory.csv";
inline constexpr const char* kFitReportFile = "fit_report.json";
inline constexpr const char* kFitDatasetFile = "fit_dataset.csv";

/// Creates `dir`, refusing a non-empty existing directory unless `force` is set.
inline void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force) throw IoError(dir.string() + " is not empty; pass --force to overwrite");
  }
  fs::create_directories(dir);
}

struct SimulateOutput {
  RunTrajectory trajectory;
  fs::path path;
};

/// Single run at phase_index 0, repetition 0. Uses cfg.true_phases when set, otherwise the first
/// phase vector a benchmark with the same seed would draw.
inline SimulateOutput cmd_simulate(const ExperimentConfig& cfg, const fs::path& out_dir, bool force) {
  cfg.validate();
  const auto model = make_model(cfg.model_id);
  const PhaseVector truth = cfg.true_phases ? PhaseVector(*cfg.true_phases)
                                            : draw_true_phases(cfg.master_seed, 1, model->parameter_count()).front();
  prepare_output_dir(out_dir, force);
  SimulateOutput out;
  out.trajectory = run_estimation(cfg, *model, truth, derive_run_seed(cfg.master_seed, 0, 0));
  out.path = out_dir / kTrajectoryFile;
  const std::vector<RunTrajectory> one{out.trajectory};
  write_runs_file(one, model->parameter_count(), out.path);
  return out;
}

struct BenchmarkOutput {
  BenchmarkResult result;
  BoundSpec bound;
  std::string runs_hash;
  nlohmann::ordered_json manifest;
};

inline BenchmarkOutput cmd_benchmark(const ExperimentConfig& cfg, const fs::path& out_dir, bool force,
                                     std::size_t threads = 1, const ProgressCallback& progress = {}) {
  cfg.validate();
  prepare_output_dir(out_dir, force);
  const std::string started = utc_timestamp();
  const auto model = make_model(cfg.model_id);

  BenchmarkOutput out;
  out.bound = bound_spec(*model, cfg.crb_grid);
  out.result = run_benchmark(cfg, threads, progress);

  std::vector<RunTrajectory> ok;
  auto failures = nlohmann::ordered_json::array();
  auto restarts = nlohmann::ordered_json::array();
  for (const auto& t : out.result.trajectories) {
    if (t.degenerate_restarts > 0) {
      restarts.push_back({{"phase_index", t.phase_index}, {"repetition_index", t.repetition_index},
                          {"degenerate_restarts", t.degenerate_restarts}});
    }
    if (t.failed) {
      failures.push_back({{"phase_index", t.phase_index}, {"repetition_index", t.repetition_index},
                          {"reason", t.failure_reason}});
    } else {
      ok.push_back(t);
    }
  }
  out.runs_hash = write_runs_file(ok, model->parameter_count(), out_dir / kRunsFile);

  auto phases = nlohmann::ordered_json::array();
  for (const auto& phi : out.result.true_phases) phases.push_back(std::vector<double>(phi.begin(), phi.end()));

  auto& m = out.manifest;
  m["tool"] = kToolName;
  m["version"] = kToolVersion;
  m["config"] = config_to_json(cfg);
  m["master_seed"] = cfg.master_seed;
  m["started_at"] = started;
  m["finished_at"] = utc_timestamp();
  m["parameter_count"] = model->parameter_count();
  m["bounds"] = {{"crb_trace", out.bound.crb_trace},
                 {"k_factor", out.bound.k_factor},
                 {"crb_grid", cfg.crb_grid},
                 {"crb_definition", "min over control settings of trace(F^-1) per probe"},
                 {"discretization_floor", discretization_floor(cfg.particles, model->parameter_count())}};
  m["true_phases"] = std::move(phases);
  m["runs_file"] = kRunsFile;
  m["runs_hash"] = out.runs_hash;
  m["run_count"] = out.result.trajectories.size();
  m["failed_runs"] = std::move(failures);
  m["degenerate_restarts"] = std::move(restarts);
  write_file(out_dir / kManifestFile, m.dump(2) + "\n");
  return out;
}

/// Contents of a benchmark output directory.
struct LoadedResults {
  nlohmann::json manifest;
  std::vector<RunTrajectory> trajectories;
  BoundSpec bound;
  std::size_t particles = 0;
  std::size_t parameter_count = 0;
};

inline LoadedResults load_results(const fs::path& dir) {
  if (!fs::is_directory(dir) || !fs::exists(dir / kManifestFile) || !fs::exists(dir / kRunsFile)) {
    throw DatasetError("no benchmark data in " + dir.string() + " (expected " + kManifestFile + " and " + kRunsFile + ")");
  }
  LoadedResults out;
  try {
    out.manifest = nlohmann::json::parse(read_file(dir / kManifestFile));
    out.bound.crb_trace = out.manifest.at("bounds").at("crb_trace").get<double>();
    out.bound.k_factor = out.manifest.at("bounds").at("k_factor").get<double>();
    out.bound.model_id = out.manifest.at("config").at("model").get<std::string>();
    out.particles = out.manifest.at("config").at("n").get<std::size_t>();
    out.parameter_count = out.manifest.at("parameter_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError((dir / kManifestFile).string() + ": " + e.what());
  }
  const std::string content = read_file(dir / kRunsFile);
  if (content_hash(content) != out.manifest.value("runs_hash", std::string{})) {
    throw IoError((dir / kRunsFile).string() + " does not match the hash recorded in the manifest");
  }
  out.trajectories = parse_runs(content);
  for (auto& t : out.trajectories) {
    const auto& phases = out.manifest.at("true_phases");
    if (t.phase_index < phases.size()) t.true_phases = PhaseVector(phases[t.phase_index].get<std::vector<double>>());
  }
  return out;
}

struct FitInputs {
  std::optional<fs::path> dataset;      ///< ready-made n,p,y,weight table
  std::vector<fs::path> results_dirs;   ///< benchmark outputs to build the table from
  ProbeWindow window;
  std::size_t starts = kDefaultFitStarts;
  std::uint64_t seed = 0x5eed;
};

inline FitReport cmd_fit(const FitInputs& in, const fs::path& out_dir, bool force) {
  std::vector<FitPoint> points;
  std::optional<ProbeWindow> window;
  if (in.dataset) {
    if (!in.results_dirs.empty()) throw DatasetError("give either a dataset file or result directories, not both");
    points = parse_fit_dataset(read_file(*in.dataset));
  } else {
    if (in.results_dirs.empty()) throw DatasetError("fit needs a dataset file or at least one result directory");
    std::vector<LoadedResults> loaded;
    loaded.reserve(in.results_dirs.size());
    for (const auto& dir : in.results_dirs) loaded.push_back(load_results(dir));
    std::vector<FitSweep> sweeps;
    for (const auto& l : loaded) sweeps.push_back({l.particles, l.parameter_count, l.bound, l.trajectories});
    points = build_fit_dataset(sweeps, in.window);
    window = in.window;
  }
  const FitReport report = fit_heuristic(points, in.starts, in.seed);
  prepare_output_dir(out_dir, force);
  write_file(out_dir / kFitDatasetFile, format_fit_dataset(points));
  write_file(out_dir / kFitReportFile, fit_report_to_json(report, points, window).dump(2) + "\n");
  return report;
}

struct ReportOptions {
  /// Probe index for the per-phase distributions; defaults to the last probe.
  std::optional<std::size_t> kde_probe;
  std::size_t kde_grid = 128;
  double crossing_threshold = 0.01;
};

/// Aggregate curves for all four modes, convergence table, per-phase KDEs and the crossing summary.
inline nlohmann::ordered_json cmd_report(const fs::path& results_dir, const fs::path& out_dir, bool force,
                                         const ReportOptions& opts = {}) {
  const LoadedResults data = load_results(results_dir);
  if (data.trajectories.empty()) throw DatasetError("no successful runs in " + results_dir.string());
  prepare_output_dir(out_dir, force);

  const AggregateMode modes[] = {AggregateMode::mean_all, AggregateMode::median_all,
                                 AggregateMode::mean_per_phase_then_mean, AggregateMode::mean_per_phase_then_median};
  std::vector<AggregateCurve> curves;
  for (auto mode : modes) {
    curves.push_back(aggregate(data.trajectories, mode, data.bound));
    write_file(out_dir / ("curve_" + std::string(to_string(mode)) + ".csv"), format_curve(curves.back()));
  }
  write_file(out_dir / "convergence.csv", format_convergence(curves[0], curves[1], data.bound));

  const std::size_t last = data.trajectories.front().records.back().probe_index;
  const std::size_t kde_probe = opts.kde_probe.value_or(last);
  if (kde_probe < 1 || kde_probe > last) throw DomainError("kde probe index outside [1, " + std::to_string(last) + "]");

  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> per_phase;
  for (const auto& t : data.trajectories) {
    const auto& rec = t.records.at(kde_probe - 1);
    per_phase[t.phase_index].first.push_back(rec.quadratic_loss);
    per_phase[t.phase_index].second.push_back(rec.variance_trace);
  }
  const fs::path kde_dir = out_dir / "kde";
  fs::create_directories(kde_dir);
  auto kde_index = nlohmann::ordered_json::array();
  for (const auto& [phase, values] : per_phase) {
    if (values.first.size() < 2) continue;
    const KdeResult loss = kernel_density(values.first, opts.kde_grid);
    const KdeResult var = kernel_density(values.second, opts.kde_grid);
    char name[64];
    std::snprintf(name, sizeof name, "loss_phase_%04zu.csv", phase);
    write_file(kde_dir / name, format_kde(loss));
    std::snprintf(name, sizeof name, "variance_phase_%04zu.csv", phase);
    write_file(kde_dir / name, format_kde(var));
    kde_index.push_back({{"phase_index", phase},
                         {"loss_bandwidth", loss.bandwidth},
                         {"loss_degenerate", loss.degenerate},
                         {"variance_bandwidth", var.bandwidth},
                         {"variance_degenerate", var.degenerate}});
  }

  const auto crossing_json = [](std::optional<std::size_t> c) -> nlohmann::ordered_json {
    return c ? nlohmann::ordered_json(*c) : nlohmann::ordered_json(nullptr);
  };
  const auto& final_mean = curves[0].points.back();
  const auto& final_median = curves[1].points.back();

  nlohmann::ordered_json summary;
  summary["tool"] = kToolName;
  summary["version"] = kToolVersion;
  summary["runs_hash"] = data.manifest.value("runs_hash", std::string{});
  summary["successful_runs"] = data.trajectories.size();
  summary["failed_runs"] = data.manifest.value("failed_runs", nlohmann::json::array()).size();
  summary["bounds"] = {{"crb_trace", data.bound.crb_trace},
                       {"k_factor", data.bound.k_factor},
                       {"discretization_floor", discretization_floor(data.particles, data.parameter_count)}};
  summary["final"] = {{"N", final_mean.probe_index},
                      {"mean_loss", final_mean.loss},
                      {"median_loss", final_median.loss},
                      {"rescaled_mean_loss", final_mean.rescaled_loss},
                      {"rescaled_median_loss", final_median.rescaled_loss}};
  summary["crossing"] = {
      {"threshold", opts.crossing_threshold},
      {"per_phase_mean_vs_median", crossing_json(mean_median_crossing(curves[2], curves[3], opts.crossing_threshold))},
      {"all_runs_mean_vs_median", crossing_json(mean_median_crossing(curves[0], curves[1], opts.crossing_threshold))}};
  summary["kde_probe"] = kde_probe;
  summary["kde"] = std::move(kde_index);
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace phasebench
