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


#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "phasebench/commands.hpp"

namespace phasebench {
namespace {

class CommandsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("phasebench_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  static ExperimentConfig small() {
    ExperimentConfig cfg;
    cfg.particles = 150;
    cfg.probes = 60;
    cfg.phases = 3;
    cfg.repetitions = 4;
    cfg.master_seed = 12;
    return cfg;
  }

  static std::string tree_digest(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += fs::relative(f, dir).string() + ":" + content_hash(read_file(f)) + "\n";
    return all;
  }

  fs::path root_;
};

TEST_F(CommandsTest, ReportOnEmptyDirectoryIsNoDataError) {
  fs::create_directories(root_ / "empty");
  try {
    cmd_report(root_ / "empty", root_ / "report", false);
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("no benchmark data"), std::string::npos);
  }
}

TEST_F(CommandsTest, BenchmarkWritesRunsAndManifest) {
  const auto out = cmd_benchmark(small(), root_ / "bench", false, 2);
  EXPECT_TRUE(fs::exists(root_ / "bench" / kRunsFile));
  const auto manifest = nlohmann::json::parse(read_file(root_ / "bench" / kManifestFile));
  EXPECT_EQ(manifest.at("runs_hash").get<std::string>(), content_hash(read_file(root_ / "bench" / kRunsFile)));
  EXPECT_EQ(manifest.at("run_count").get<std::size_t>(), 12u);
  EXPECT_EQ(manifest.at("master_seed").get<std::uint64_t>(), 12u);
  EXPECT_EQ(manifest.at("version").get<std::string>(), kToolVersion);
  EXPECT_NEAR(manifest.at("bounds").at("crb_trace").get<double>(), 1.0, 1e-3);
  EXPECT_NEAR(manifest.at("bounds").at("k_factor").get<double>(), chi2_median_factor(1), 1e-12);
  EXPECT_EQ(manifest.at("true_phases").size(), 3u);
  EXPECT_TRUE(manifest.at("failed_runs").empty());
  EXPECT_EQ(manifest.at("config").at("n").get<std::size_t>(), 150u);

  const auto loaded = load_results(root_ / "bench");
  EXPECT_EQ(loaded.trajectories.size(), 12u);
  for (std::size_t i = 0; i < loaded.trajectories.size(); ++i) {
    EXPECT_EQ(loaded.trajectories[i].records, out.result.trajectories[i].records);
    EXPECT_EQ(loaded.trajectories[i].true_phases, out.result.trajectories[i].true_phases);
  }
}

TEST_F(CommandsTest, RefusesToOverwriteWithoutForce) {
  cmd_benchmark(small(), root_ / "bench", false);
  EXPECT_THROW(cmd_benchmark(small(), root_ / "bench", false), IoError);
  EXPECT_NO_THROW(cmd_benchmark(small(), root_ / "bench", true));
  cmd_report(root_ / "bench", root_ / "report", false);
  EXPECT_THROW(cmd_report(root_ / "bench", root_ / "report", false), IoError);
}

TEST_F(CommandsTest, TamperedRunsFileDetected) {
  cmd_benchmark(small(), root_ / "bench", false);
  std::string runs = read_file(root_ / "bench" / kRunsFile);
  runs.back() = ' ';
  write_file(root_ / "bench" / kRunsFile, runs);
  EXPECT_THROW(load_results(root_ / "bench"), IoError);
}

TEST_F(CommandsTest, ThreadCountDoesNotChangeFiles) {
  const auto a = cmd_benchmark(small(), root_ / "a", false, 1);
  const auto b = cmd_benchmark(small(), root_ / "b", false, 4);
  EXPECT_EQ(a.runs_hash, b.runs_hash);
  EXPECT_EQ(read_file(root_ / "a" / kRunsFile), read_file(root_ / "b" / kRunsFile));
}

TEST_F(CommandsTest, ReportTwiceIsIdentical) {
  cmd_benchmark(small(), root_ / "bench", false, 2);
  const auto s1 = cmd_report(root_ / "bench", root_ / "r1", false);
  const auto s2 = cmd_report(root_ / "bench", root_ / "r2", false);
  EXPECT_EQ(s1.dump(), s2.dump());
  EXPECT_EQ(tree_digest(root_ / "r1"), tree_digest(root_ / "r2"));

  for (const char* mode : {"mean_all", "median_all", "mean_per_phase_then_mean", "mean_per_phase_then_median"}) {
    EXPECT_TRUE(fs::exists(root_ / "r1" / ("curve_" + std::string(mode) + ".csv"))) << mode;
  }
  EXPECT_TRUE(fs::exists(root_ / "r1" / "convergence.csv"));
  EXPECT_TRUE(fs::exists(root_ / "r1" / "summary.json"));
  for (int phase = 0; phase < 3; ++phase) {
    char name[64];
    std::snprintf(name, sizeof name, "loss_phase_%04d.csv", phase);
    EXPECT_TRUE(fs::exists(root_ / "r1" / "kde" / name)) << name;
    std::snprintf(name, sizeof name, "variance_phase_%04d.csv", phase);
    EXPECT_TRUE(fs::exists(root_ / "r1" / "kde" / name)) << name;
  }
}

TEST_F(CommandsTest, MedianCurveHasRescaledColumn) {
  cmd_benchmark(small(), root_ / "bench", false);
  cmd_report(root_ / "bench", root_ / "report", false);
  const std::string text = read_file(root_ / "report" / "curve_median_all.csv");
  const std::string first_line = text.substr(0, text.find('\n'));
  const auto header = split(first_line, ',');
  ASSERT_GE(header.size(), 5u);
  EXPECT_EQ(header[0], "N");
  EXPECT_EQ(header[1], "median_loss");
  EXPECT_EQ(header[4], "rescaled_median_loss");

  const auto lines = split(text, '\n');
  const auto row = split(lines[60], ',');
  const auto loaded = load_results(root_ / "bench");
  const double expected = 60.0 * parse_double(row[1], "loss") / (loaded.bound.k_factor * loaded.bound.crb_trace);
  EXPECT_NEAR(parse_double(row[4], "rescaled"), expected, 1e-12 * expected);
}

TEST_F(CommandsTest, SimulateWritesOneTrajectory) {
  auto cfg = small();
  cfg.true_phases = std::vector<double>{2.5};
  const auto sim = cmd_simulate(cfg, root_ / "sim", false);
  const auto parsed = read_runs_file(root_ / "sim" / kTrajectoryFile);
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].records, sim.trajectory.records);
  EXPECT_EQ(parsed[0].records.size(), cfg.probes);

  cfg.true_phases.reset();
  const auto first = cmd_simulate(cfg, root_ / "sim2", false);
  const auto bench = run_benchmark(cfg, 1);
  EXPECT_EQ(first.trajectory.records, bench.trajectories.front().records);
}

TEST_F(CommandsTest, FitFromResultDirectories) {
  const std::vector<std::pair<std::size_t, std::string>> cells{{50, "fourier2"}, {100, "fourier2"}, {200, "fourier2"},
                                                               {50, "single_qubit"}, {100, "single_qubit"},
                                                               {200, "single_qubit"}, {400, "single_qubit"},
                                                               {400, "fourier2"}, {800, "single_qubit"},
                                                               {800, "fourier2"}};
  FitInputs in;
  in.window = {20, 30};
  in.starts = 2;
  for (const auto& [n, model] : cells) {
    auto cfg = small();
    cfg.model_id = model;
    cfg.particles = n;
    cfg.probes = 30;
    cfg.phases = 2;
    cfg.repetitions = 2;
    cfg.crb_grid = 16;
    const auto dir = root_ / (model + "_" + std::to_string(n));
    cmd_benchmark(cfg, dir, false);
    in.results_dirs.push_back(dir);
  }
  const auto report = cmd_fit(in, root_ / "fit", false);
  EXPECT_EQ(report.residuals.size(), cells.size());
  const auto j = nlohmann::json::parse(read_file(root_ / "fit" / kFitReportFile));
  EXPECT_EQ(j.at("points").size(), cells.size());
  EXPECT_EQ(j.at("window").at(0).get<std::size_t>(), 20u);
  EXPECT_EQ(parse_fit_dataset(read_file(root_ / "fit" / kFitDatasetFile)).size(), cells.size());

  FitInputs from_file;
  from_file.dataset = root_ / "fit" / kFitDatasetFile;
  from_file.starts = 2;
  const auto again = cmd_fit(from_file, root_ / "fit2", false);
  EXPECT_EQ(again.params.to_array(), report.params.to_array());
}

TEST_F(CommandsTest, FitWithoutInputsIsDatasetError) {
  EXPECT_THROW(cmd_fit(FitInputs{}, root_ / "fit", false), DatasetError);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PHASEBENCH_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CommandsTest, CliEndToEnd) {
  const fs::path conf = root_ / "quick.conf";
  write_file(conf, "model = single_qubit\nn = 100\nN = 30\nM = 2\nr = 3\nseed = 4\nstrategy = random\n");
  const std::string bench = (root_ / "bench").string();
  EXPECT_EQ(run_cli("benchmark --config " + conf.string() + " --out " + bench + " --threads 2"), 0);
  EXPECT_TRUE(fs::exists(root_ / "bench" / kManifestFile));
  EXPECT_NE(run_cli("benchmark --config " + conf.string() + " --out " + bench), 0);
  EXPECT_EQ(run_cli("benchmark --config " + conf.string() + " --out " + bench + " --force"), 0);
  EXPECT_EQ(run_cli("report " + bench + " --out " + (root_ / "report").string()), 0);
  EXPECT_TRUE(fs::exists(root_ / "report" / "summary.json"));
  EXPECT_EQ(run_cli("simulate --config " + conf.string() + " --out " + (root_ / "sim").string()), 0);
  EXPECT_TRUE(fs::exists(root_ / "sim" / kTrajectoryFile));

  fs::create_directories(root_ / "nothing");
  EXPECT_NE(run_cli("report " + (root_ / "nothing").string()), 0);
  EXPECT_NE(run_cli("benchmark --config " + (root_ / "missing.conf").string() + " --out " + bench + "2"), 0);
  EXPECT_NE(run_cli("fit --window 500:400 " + bench), 0);
  EXPECT_NE(run_cli("frobnicate"), 0);
}

TEST_F(CommandsTest, CliMatchesLibraryOutput) {
  const fs::path conf = fs::path(PHASEBENCH_SOURCE_DIR) / "configs" / "quick.conf";
  EXPECT_EQ(run_cli("benchmark --config " + conf.string() + " --out " + (root_ / "cli").string() + " --threads 3"), 0);
  const auto lib = cmd_benchmark(parse_config(conf), root_ / "lib", false, 1);
  EXPECT_EQ(read_file(root_ / "cli" / kRunsFile), read_file(root_ / "lib" / kRunsFile));
  const auto manifest = nlohmann::json::parse(read_file(root_ / "cli" / kManifestFile));
  EXPECT_EQ(manifest.at("runs_hash").get<std::string>(), lib.runs_hash);
}

}  // namespace
}  // namespace phasebench
