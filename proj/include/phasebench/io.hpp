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

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "phasebench/errors.hpp"
#include "phasebench/experiment_runner.hpp"
#include "phasebench/heuristic_fit.hpp"
#include "phasebench/loss_statistics.hpp"
#include "phasebench/trajectory.hpp"

namespace phasebench {

inline constexpr std::string_view kToolName = "phasebench";
inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest text that reads back to the same double: 17 significant digits.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(std::string_view text, std::string_view what) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError("cannot parse " + std::string(what) + " from '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
  }
  return v;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// 64-bit FNV-1a of the bytes, as "fnv1a64:<16 hex digits>".
inline std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Experiment configuration
//
// One `key = value` per line, '#' starts a comment. Required keys:
//   model     single_qubit | fourier2 | fourier3
//   n         particle count (>= 2)
//   N         probes per run
//   M         number of true phase vectors
//   r         repetitions per phase vector
//   seed      master seed (unsigned 64-bit)
//   strategy  random | adaptive
// Optional keys and defaults:
//   K = 30                      random candidates per probe (adaptive)
//   estimate_heuristic = true   also try theta = -estimate (adaptive)
//   resampling = true
//   liu_west_a = 0.98
//   ess_threshold = 0.5         resample when ESS < ess_threshold * n
//   estimator = circular        circular | linear
//   crb_grid = 64               grid points per axis for the CRB search
//   true_phases = a, b, ...     fixed truth for `simulate`

namespace detail {

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

inline std::uint64_t config_u64(std::string_view key, std::string_view v) {
  try {
    return parse_u64(v, key);
  } catch (const IoError&) {
    throw ConfigError(std::string(key), "expected a non-negative integer, got '" + std::string(v) + "'");
  }
}

inline double config_double(std::string_view key, std::string_view v) {
  try {
    return parse_double(v, key);
  } catch (const IoError&) {
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(v) + "'");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config_text(std::string_view text) {
  static const std::set<std::string, std::less<>> kRequired = {"model", "n", "N", "M", "r", "seed", "strategy"};
  static const std::set<std::string, std::less<>> kOptional = {
      "K", "estimate_heuristic", "resampling", "liu_west_a", "ess_threshold", "estimator", "crb_grid", "true_phases"};

  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(line), "line " + std::to_string(line_no) + " is not of the form key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!kRequired.contains(key) && !kOptional.contains(key)) throw ConfigError(key, "unknown key");
    if (!seen.insert(key).second) throw ConfigError(key, "given more than once");
    if (value.empty()) throw ConfigError(key, "empty value");

    if (key == "model") {
      cfg.model_id = value;
      try {
        make_model(cfg.model_id);
      } catch (const UnsupportedModelError& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "n") {
      cfg.particles = detail::config_u64(key, value);
    } else if (key == "N") {
      cfg.probes = detail::config_u64(key, value);
    } else if (key == "M") {
      cfg.phases = detail::config_u64(key, value);
    } else if (key == "r") {
      cfg.repetitions = detail::config_u64(key, value);
    } else if (key == "seed") {
      cfg.master_seed = detail::config_u64(key, value);
    } else if (key == "strategy") {
      if (value == "random") cfg.strategy.kind = StrategyKind::random;
      else if (value == "adaptive") cfg.strategy.kind = StrategyKind::adaptive;
      else throw ConfigError(key, "expected random or adaptive");
    } else if (key == "K") {
      cfg.strategy.candidate_count = detail::config_u64(key, value);
    } else if (key == "estimate_heuristic") {
      cfg.strategy.include_estimate_heuristic = detail::parse_bool(key, value);
    } else if (key == "resampling") {
      cfg.resampling_enabled = detail::parse_bool(key, value);
    } else if (key == "liu_west_a") {
      cfg.filter.liu_west_a = detail::config_double(key, value);
    } else if (key == "ess_threshold") {
      cfg.filter.ess_threshold_fraction = detail::config_double(key, value);
    } else if (key == "estimator") {
      if (value == "circular") cfg.estimator = Estimator::circular;
      else if (value == "linear") cfg.estimator = Estimator::linear;
      else throw ConfigError(key, "expected circular or linear");
    } else if (key == "crb_grid") {
      cfg.crb_grid = detail::config_u64(key, value);
    } else if (key == "true_phases") {
      std::vector<double> phases;
      for (auto part : split(value, ',')) phases.push_back(detail::config_double(key, trim(part)));
      cfg.true_phases = std::move(phases);
    }
  }
  for (const auto& key : kRequired) {
    if (!seen.contains(key)) throw ConfigError(key, "missing required key");
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(read_file(path));
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = cfg.model_id;
  j["n"] = cfg.particles;
  j["N"] = cfg.probes;
  j["M"] = cfg.phases;
  j["r"] = cfg.repetitions;
  j["seed"] = cfg.master_seed;
  j["strategy"] = cfg.strategy.kind == StrategyKind::random ? "random" : "adaptive";
  j["K"] = cfg.strategy.candidate_count;
  j["estimate_heuristic"] = cfg.strategy.include_estimate_heuristic;
  j["resampling"] = cfg.resampling_enabled;
  j["liu_west_a"] = cfg.filter.liu_west_a;
  j["ess_threshold"] = cfg.filter.ess_threshold_fraction;
  j["estimator"] = cfg.estimator == Estimator::circular ? "circular" : "linear";
  j["crb_grid"] = cfg.crb_grid;
  if (cfg.true_phases) j["true_phases"] = *cfg.true_phases;
  return j;
}

// ---------------------------------------------------------------------------
// Runs file: one row per (run, probe), LF line endings, 17 significant digits.

inline std::string runs_header(std::size_t p) {
  std::string h = "phase_index,repetition_index,probe_index,outcome";
  for (std::size_t k = 1; k <= p; ++k) h += ",control_" + std::to_string(k);
  for (std::size_t k = 1; k <= p; ++k) h += ",estimate_" + std::to_string(k);
  h += ",variance_trace,quadratic_loss\n";
  return h;
}

inline std::string format_runs(std::span<const RunTrajectory> trajectories, std::size_t p) {
  std::string out = runs_header(p);
  for (const auto& t : trajectories) {
    for (const auto& rec : t.records) {
      out += std::to_string(t.phase_index);
      out += ',';
      out += std::to_string(t.repetition_index);
      out += ',';
      out += std::to_string(rec.probe_index);
      out += ',';
      out += std::to_string(rec.outcome.index);
      for (double c : rec.control) (out += ',') += format_double(c);
      for (double e : rec.estimate) (out += ',') += format_double(e);
      (out += ',') += format_double(rec.variance_trace);
      (out += ',') += format_double(rec.quadratic_loss);
      out += '\n';
    }
  }
  return out;
}

/// Writes the runs table and returns its content hash.
inline std::string write_runs_file(std::span<const RunTrajectory> trajectories, std::size_t p,
                                   const std::filesystem::path& path) {
  const std::string content = format_runs(trajectories, p);
  write_file(path, content);
  return content_hash(content);
}

/// Parses a runs table back into trajectories. True phases are not part of the table.
inline std::vector<RunTrajectory> parse_runs(std::string_view content) {
  auto lines = split(content, '\n');
  if (lines.empty() || lines.front().empty()) throw IoError("runs file has no header");
  const auto header = split(lines.front(), ',');
  if (header.size() < 8 || (header.size() - 6) % 2 != 0) throw IoError("runs file header has unexpected width");
  const std::size_t p = (header.size() - 6) / 2;
  if (std::string(lines.front()) + "\n" != runs_header(p)) throw IoError("runs file header does not match schema");

  std::vector<RunTrajectory> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto cols = split(lines[li], ',');
    if (cols.size() != header.size()) throw IoError("runs file line " + std::to_string(li + 1) + " has wrong width");
    const std::size_t phase = parse_u64(cols[0], "phase_index");
    const std::size_t rep = parse_u64(cols[1], "repetition_index");
    if (out.empty() || out.back().phase_index != phase || out.back().repetition_index != rep) {
      RunTrajectory t;
      t.phase_index = phase;
      t.repetition_index = rep;
      out.push_back(std::move(t));
    }
    ProbeRecord rec;
    rec.probe_index = parse_u64(cols[2], "probe_index");
    rec.outcome = OutcomeId{parse_u64(cols[3], "outcome")};
    std::vector<double> control(p), estimate(p);
    for (std::size_t k = 0; k < p; ++k) {
      control[k] = parse_double(cols[4 + k], "control");
      estimate[k] = parse_double(cols[4 + p + k], "estimate");
    }
    rec.control = ControlVector(control);
    rec.estimate = PhaseVector(estimate);
    rec.variance_trace = parse_double(cols[4 + 2 * p], "variance_trace");
    rec.quadratic_loss = parse_double(cols[5 + 2 * p], "quadratic_loss");
    out.back().records.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<RunTrajectory> read_runs_file(const std::filesystem::path& path) {
  try {
    return parse_runs(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Tables

inline std::string format_curve(const AggregateCurve& curve) {
  const std::string stat = ends_with_median(curve.mode) ? "median" : "mean";
  std::string out = "N," + stat + "_loss," + stat + "_variance,runs,rescaled_" + stat + "_loss,rescaled_" + stat +
                    "_variance\n";
  for (const auto& pt : curve.points) {
    out += std::to_string(pt.probe_index) + ',' + format_double(pt.loss) + ',' + format_double(pt.variance) + ',' +
           std::to_string(pt.runs) + ',' + format_double(pt.rescaled_loss) + ',' + format_double(pt.rescaled_variance) +
           '\n';
  }
  return out;
}

/// Mean and median curves side by side with the CRB and k * CRB reference lines.
inline std::string format_convergence(const AggregateCurve& mean, const AggregateCurve& median, const BoundSpec& bound) {
  std::string out =
      "N,crb,k_crb,mean_loss,median_loss,mean_variance,median_variance,rescaled_mean_loss,rescaled_median_loss,"
      "rescaled_mean_variance,rescaled_median_variance\n";
  for (std::size_t j = 0; j < mean.points.size(); ++j) {
    const auto& a = mean.points[j];
    const auto& b = median.points[j];
    const double n = static_cast<double>(a.probe_index);
    out += std::to_string(a.probe_index) + ',' + format_double(bound.crb_trace / n) + ',' +
           format_double(bound.k_factor * bound.crb_trace / n) + ',' + format_double(a.loss) + ',' +
           format_double(b.loss) + ',' + format_double(a.variance) + ',' + format_double(b.variance) + ',' +
           format_double(a.rescaled_loss) + ',' + format_double(b.rescaled_loss) + ',' +
           format_double(a.rescaled_variance) + ',' + format_double(b.rescaled_variance) + '\n';
  }
  return out;
}

inline std::string format_kde(const KdeResult& kde) {
  std::string out = "x,density\n";
  for (std::size_t g = 0; g < kde.x.size(); ++g) out += format_double(kde.x[g]) + ',' + format_double(kde.density[g]) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Fit dataset and report

inline std::string format_fit_dataset(std::span<const FitPoint> points) {
  std::string out = "n,p,y,weight\n";
  for (const auto& pt : points) {
    out += format_double(pt.n) + ',' + format_double(pt.p) + ',' + format_double(pt.y) + ',' + format_double(pt.weight) + '\n';
  }
  return out;
}

inline std::vector<FitPoint> parse_fit_dataset(std::string_view content) {
  auto lines = split(content, '\n');
  if (lines.empty() || lines.front() != "n,p,y,weight") throw IoError("fit dataset header must be n,p,y,weight");
  std::vector<FitPoint> points;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cols = split(lines[li], ',');
    if (cols.size() != 4) throw IoError("fit dataset line " + std::to_string(li + 1) + " has wrong width");
    points.push_back({parse_double(trim(cols[0]), "n"), parse_double(trim(cols[1]), "p"), parse_double(trim(cols[2]), "y"),
                      parse_double(trim(cols[3]), "weight")});
  }
  return points;
}

inline nlohmann::ordered_json fit_report_to_json(const FitReport& report, std::span<const FitPoint> points,
                                                 std::optional<ProbeWindow> window) {
  nlohmann::ordered_json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  const auto& q = report.params;
  j["params"] = {{"A", q.A}, {"B", q.B}, {"C", q.C}, {"D", q.D}, {"E", q.E}, {"F", q.F}, {"G", q.G}};
  j["objective"] = report.objective;
  j["log_rms"] = report.log_rms;
  j["starts"] = report.starts;
  j["best_start"] = report.best_start;
  if (window) j["window"] = {window->lo, window->hi};
  double p_max = 0.0;
  for (const auto& pt : points) p_max = std::max(p_max, pt.p);
  j["first_term_decays"] = q.B > q.C * p_max;
  auto residuals = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    residuals.push_back({{"n", points[i].n}, {"p", points[i].p}, {"y", points[i].y},
                         {"fitted", eval_f(q, points[i].n, points[i].p)}, {"log_residual", report.residuals[i]}});
  }
  j["points"] = std::move(residuals);
  return j;
}

}  // namespace phasebench
