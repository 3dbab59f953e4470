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


// phasebench command-line interface: simulate, benchmark, fit, report.

#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasebench/phasebench.hpp"

namespace {

using namespace phasebench;

ProbeWindow parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("window", "expected LO:HI, got '" + text + "'");
  ProbeWindow w;
  try {
    w.lo = parse_u64(trim(std::string_view(text).substr(0, colon)), "window");
    w.hi = parse_u64(trim(std::string_view(text).substr(colon + 1)), "window");
  } catch (const IoError&) {
    throw ConfigError("window", "expected LO:HI, got '" + text + "'");
  }
  if (w.lo < 1 || w.lo > w.hi) throw ConfigError("window", "need 1 <= LO <= HI, got '" + text + "'");
  return w;
}

ProgressCallback make_progress(const char* label) {
  const bool tty = isatty(fileno(stderr)) != 0;
  auto mu = std::make_shared<std::mutex>();
  return [=](std::size_t done, std::size_t total) {
    if (!tty && done != total) return;
    std::lock_guard lock(*mu);
    std::fprintf(stderr, "\r%s: %zu/%zu runs", label, done, total);
    if (done == total) std::fputc('\n', stderr);
    std::fflush(stderr);
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark harness for Bayesian particle-filter phase estimation"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool force = false;
  std::size_t threads = 1;

  auto* simulate = app.add_subcommand("simulate", "Run one estimation and write its trajectory");
  simulate->add_option("--config", config_path, "Experiment configuration file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_flag("--force", force, "Write into a non-empty output directory");

  auto* benchmark = app.add_subcommand("benchmark", "Run M x r estimations and write runs.csv and manifest.json");
  benchmark->add_option("--config", config_path, "Experiment configuration file")->required()->check(CLI::ExistingFile);
  benchmark->add_option("--out", out_dir, "Output directory")->required();
  benchmark->add_flag("--force", force, "Write into a non-empty output directory");
  benchmark->add_option("--threads", threads, "Worker threads; never changes the output")->check(CLI::PositiveNumber);

  std::vector<std::string> fit_dirs;
  std::string dataset;
  std::string window = "400:500";
  std::size_t starts = kDefaultFitStarts;
  std::uint64_t fit_seed = 0x5eed;
  auto* fit = app.add_subcommand("fit", "Fit the scaling law to benchmark outputs or a dataset table");
  fit->add_option("results", fit_dirs, "Benchmark output directories, one per (n, p) cell")->check(CLI::ExistingDirectory);
  fit->add_option("--dataset", dataset, "Ready-made n,p,y,weight table")->check(CLI::ExistingFile);
  fit->add_option("--window", window, "Probe window LO:HI for the rescaled median")->capture_default_str();
  fit->add_option("--starts", starts, "Random restarts")->capture_default_str()->check(CLI::PositiveNumber);
  fit->add_option("--seed", fit_seed, "Seed for the restart draws")->capture_default_str();
  fit->add_option("--out", out_dir, "Output directory (default: fit)");
  fit->add_flag("--force", force, "Write into a non-empty output directory");

  std::string results_dir;
  std::optional<std::size_t> kde_probe;
  std::size_t kde_grid = 128;
  double crossing_threshold = 0.01;
  auto* report = app.add_subcommand("report", "Aggregate curves, convergence tables, KDEs and crossing summary");
  report->add_option("results", results_dir, "Benchmark output directory")->required();
  report->add_option("--out", out_dir, "Output directory (default: RESULTS/report)");
  report->add_flag("--force", force, "Write into a non-empty output directory");
  report->add_option("--kde-probe", kde_probe, "Probe index for the per-phase distributions (default: last)");
  report->add_option("--kde-grid", kde_grid, "KDE grid points")->capture_default_str()->check(CLI::Range(16, 100000));
  report->add_option("--crossing-threshold", crossing_threshold, "Relative mean/median gap")->capture_default_str()
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      const auto cfg = parse_config(config_path);
      const auto out = cmd_simulate(cfg, out_dir, force);
      const auto& last = out.trajectory.records.back();
      std::printf("wrote %s (%zu probes, final loss %.6g)\n", out.path.c_str(), out.trajectory.records.size(),
                  last.quadratic_loss);
    } else if (*benchmark) {
      const auto cfg = parse_config(config_path);
      const auto out = cmd_benchmark(cfg, out_dir, force, threads, make_progress("benchmark"));
      const auto failed = out.manifest["failed_runs"].size();
      std::printf("wrote %s/%s (%zu runs, %zu failed, %s)\n", out_dir.c_str(), kRunsFile,
                  out.result.trajectories.size(), failed, out.runs_hash.c_str());
    } else if (*fit) {
      FitInputs in;
      if (!dataset.empty()) in.dataset = dataset;
      for (const auto& d : fit_dirs) in.results_dirs.emplace_back(d);
      in.window = parse_window(window);
      in.starts = starts;
      in.seed = fit_seed;
      if (out_dir.empty()) out_dir = "fit";
      const auto rep = cmd_fit(in, out_dir, force);
      const auto& q = rep.params;
      std::printf("A=%.6g B=%.6g C=%.6g D=%.6g E=%.6g F=%.6g G=%.6g log_rms=%.4g\n", q.A, q.B, q.C, q.D, q.E, q.F, q.G,
                  rep.log_rms);
    } else if (*report) {
      ReportOptions opts;
      opts.kde_probe = kde_probe;
      opts.kde_grid = kde_grid;
      opts.crossing_threshold = crossing_threshold;
      if (out_dir.empty()) out_dir = (fs::path(results_dir) / "report").string();
      const auto summary = cmd_report(results_dir, out_dir, force, opts);
      std::printf("wrote %s\n%s\n", out_dir.c_str(), summary["final"].dump().c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
