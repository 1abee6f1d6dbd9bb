#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "modalenv/cli.hpp"
#include "modalenv/harness.hpp"
#include "modalenv/io.hpp"

using namespace modalenv;
using Catch::Approx;

namespace {

FitRegistry handmade_registry(const std::string& scenario, std::size_t mode) {
  FitRegistry reg;
  reg.set(scenario, mode, KernelForm::GaussianWindow, {0.30, 0, 0, 0});
  reg.set(scenario, mode, KernelForm::RectWindow, {1.2, 0, 0, 0});
  reg.set(scenario, mode, KernelForm::TriangleWindow, {1.6, 0, 0, 0});
  reg.set(scenario, mode, KernelForm::WelchWindow, {1.5, 0, 0, 0});
  reg.set(scenario, mode, KernelForm::BlackmanWindow, {2.0, 0, 0, 0});
  reg.set(scenario, mode, KernelForm::ShannonFilter, {2.0 * std::numbers::pi * 4.0, 0, 0, 0});
  reg.set(scenario, mode, KernelForm::TriangleFilter, {2.0 * std::numbers::pi * 8.0, 0, 0, 0});
  reg.set(scenario, mode, KernelForm::WelchFilter, {2.0 * std::numbers::pi * 8.0, 0, 0, 0});
  reg.set(scenario, mode, KernelForm::BlackmanFilter, {2.0 * std::numbers::pi * 10.0, 0, 0, 0});
  return reg;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str(const std::string& file = "") const { return (file.empty() ? path : path / file).string(); }
};

}  // namespace

TEST_CASE("summarize matches a hand-built fixture") {
  std::vector<ResultRow> rows;
  const double snr = 10.0;
  for (double z : {0.009, 0.010, 0.011, 0.013, 0.008}) {
    ResultRow row;
    row.scenario = "s";
    row.method = "m";
    row.snr_db = snr;
    row.trial = rows.size();
    row.zeta_hat = z;
    row.valid = true;
    rows.push_back(row);
  }
  rows.push_back({"s", "m", snr, 5, 0.0, false, 0.0});

  const auto cells = summarize(rows, 0.010);
  REQUIRE(cells.size() == 1);
  const SummaryCell& cell = cells.front();
  CHECK(cell.n_total == 6);
  CHECK(cell.n_valid == 5);
  CHECK(cell.valid_fraction == Approx(5.0 / 6.0));
  // Sorted: 0.008 0.009 0.010 0.011 0.013 -> median 0.010, quartiles by
  // linear interpolation at h = 0.25*(n-1) = 1 and h = 3.
  CHECK(cell.median == Approx(0.010));
  CHECK(cell.q1 == Approx(0.009));
  CHECK(cell.q3 == Approx(0.011));
  // RMSE oracle by direct arithmetic.
  double acc = 0.0;
  for (double z : {0.009, 0.010, 0.011, 0.013, 0.008}) acc += (z - 0.010) * (z - 0.010);
  CHECK(cell.rmse_percent == Approx(100.0 * std::sqrt(acc / 5.0)).epsilon(1e-12));
}

TEST_CASE("summarize special cases") {
  SECTION("exact rows give zero RMSE") {
    std::vector<ResultRow> rows(4, ResultRow{"s", "m", 0.0, 0, 0.01, true, 0.0});
    CHECK(summarize(rows, 0.01).front().rmse_percent == 0.0);
  }
  SECTION("symmetric deviations give 100*d") {
    const double d = 0.002;
    std::vector<ResultRow> rows{{"s", "m", 0.0, 0, 0.01 + d, true, 0.0},
                                {"s", "m", 0.0, 1, 0.01 - d, true, 0.0}};
    CHECK(summarize(rows, 0.01).front().rmse_percent == Approx(100.0 * d).epsilon(1e-12));
  }
  SECTION("all-invalid cells carry no stats") {
    std::vector<ResultRow> rows{{"s", "m", 0.0, 0, 0.0, false, 0.0}};
    const auto cells = summarize(rows, 0.01);
    CHECK_FALSE(cells.front().has_stats);
    CHECK(cells.front().valid_fraction == 0.0);
  }
}

TEST_CASE("scenario sweep rows and determinism") {
  ScenarioConfig cfg;
  cfg.name = "scenario1";
  cfg.system = scenario_system("scenario1");
  cfg.snr_grid_db = {30.0};
  cfg.n_trials = 2;
  cfg.n_recordings = 3;
  cfg.rng_seed = 9;
  const FitRegistry fits = handmade_registry("scenario1", 1);
  const std::vector<Method> methods =
      methods_from_ids({"gaussian_window", "triangle_window"});

  const auto rows_a = run_scenario_sweep(cfg, methods, fits);
  const auto rows_b = run_scenario_sweep(cfg, methods, fits);

  SECTION("row count is methods x snr x trials") {
    CHECK(rows_a.size() == 2 * 1 * 2);
  }

  SECTION("same seed gives identical tables") {
    REQUIRE(rows_a.size() == rows_b.size());
    for (std::size_t i = 0; i < rows_a.size(); ++i) {
      CHECK(rows_a[i].method == rows_b[i].method);
      CHECK(rows_a[i].zeta_hat == rows_b[i].zeta_hat);
      CHECK(rows_a[i].valid == rows_b[i].valid);
    }
  }

  SECTION("noiseless-grade estimates near the true value") {
    for (const auto& row : rows_a) {
      REQUIRE(row.valid);
      CHECK(row.zeta_hat == Approx(0.01).epsilon(0.10));
    }
  }

  SECTION("missing registry entry fails the sweep up front") {
    FitRegistry empty;
    CHECK_THROWS(run_scenario_sweep(cfg, methods, empty));
  }
}

TEST_CASE("csv export shape") {
  std::vector<ResultRow> rows{{"s1", "gaussian_window", -5.0, 0, 0.0123456, true, 0.0},
                              {"s1", "plscf", -5.0, 0, 0.0, false, 0.0}};
  std::ostringstream os;
  write_results_csv(os, rows);
  const std::string expect =
      "scenario,method,snr_db,trial,zeta_hat,valid,wall_ms\n"
      "s1,gaussian_window,-5,0,0.0123456,1,0\n"
      "s1,plscf,-5,0,,0,0\n";
  CHECK(os.str() == expect);
}

TEST_CASE("cli round trip: generate, estimate, sweep") {
  TempDir dir("modalenv_cli_test");

  SECTION("generate then estimate a noiseless single-mode fixture") {
    CHECK(cli::cli_entry({"modalenv", "generate", "--frequencies", "15.56", "--zeta-range", "0.01,0.01",
                          "--amplitude-range", "2.5,2.5", "--records", "5", "--noiseless", "--seed", "4",
                          "--out", dir.str(), "--prefix", "fixture"}) == 0);
    CHECK(std::filesystem::exists(dir.str("fixture.bin")));
    CHECK(std::filesystem::exists(dir.str("fixture_manifest.json")));

    const LabeledDataset ds = load_dataset(dir.str("fixture.bin"));
    CHECK(ds.records.size() == 5);
    CHECK(ds.spec.system_frequencies_hz.front() == 15.56);

    CHECK(cli::cli_entry({"modalenv", "estimate", "--dataset", dir.str("fixture.bin"), "--form",
                          "gaussian_window", "--theta", "0.3", "--mode", "0"}) == 0);
  }

  SECTION("sweep writes deterministic outputs") {
    handmade_registry("scenario1", 1).save(dir.str("fits.json"));
    auto run = [&](const std::string& out) {
      return cli::cli_entry({"modalenv", "sweep", "--scenario", "scenario1", "--fits", dir.str("fits.json"),
                             "--methods", "gaussian_window", "--snr", "30", "--trials", "1",
                             "--recordings", "2", "--seed", "7", "--out", dir.str(out)});
    };
    CHECK(run("a") == 0);
    CHECK(run("b") == 0);
    const std::string csv_a = slurp(dir.str("a") + "/results.csv");
    CHECK(csv_a == slurp(dir.str("b") + "/results.csv"));
    CHECK(csv_a.find("scenario,method,snr_db,trial,zeta_hat,valid,wall_ms") == 0);
  }

  SECTION("dry run prints the plan without outputs") {
    handmade_registry("scenario1", 1).save(dir.str("fits.json"));
    CHECK(cli::cli_entry({"modalenv", "sweep", "--scenario", "scenario1", "--fits", dir.str("fits.json"),
                          "--methods", "gaussian_window,pp", "--snr", "0,10", "--trials", "3",
                          "--recordings", "2", "--out", dir.str("dry"), "--dry-run"}) == 0);
    CHECK_FALSE(std::filesystem::exists(dir.str("dry") + "/results.csv"));
  }

  SECTION("unknown method id fails with a diagnostic exit code") {
    handmade_registry("scenario1", 1).save(dir.str("fits.json"));
    CHECK(cli::cli_entry({"modalenv", "sweep", "--scenario", "scenario1", "--fits", dir.str("fits.json"),
                          "--methods", "nonsense", "--out", dir.str()}) == 1);
  }
}

TEST_CASE("fit registry io") {
  TempDir dir("modalenv_registry_test");
  FitRegistry reg = handmade_registry("scenario1", 1);
  reg.save(dir.str("fits.json"));
  const FitRegistry loaded = FitRegistry::load(dir.str("fits.json"));
  CHECK(loaded.size() == reg.size());
  CHECK(loaded.get("scenario1", 1, KernelForm::GaussianWindow).theta == Approx(0.30));
  CHECK_THROWS(loaded.get("scenario1", 0, KernelForm::GaussianWindow));
}

TEST_CASE("dataset container io") {
  TempDir dir("modalenv_dataset_test");
  DatasetSpec spec;
  spec.system_frequencies_hz = {3.27, 15.56};
  spec.n_records = 4;
  spec.n_samples_per_record = 256;
  spec.rng_seed = 77;
  const LabeledDataset ds = generate_dataset(spec);
  save_dataset(ds, dir.str("ds.bin"));
  const LabeledDataset back = load_dataset(dir.str("ds.bin"));
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(back.records[i].record.samples == ds.records[i].record.samples);
    CHECK(back.records[i].zetas == ds.records[i].zetas);
    CHECK(back.records[i].true_envelopes[1].values == ds.records[i].true_envelopes[1].values);
  }
}
