#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "modalenv/optimize.hpp"

using namespace modalenv;
using Catch::Approx;

namespace {

LabeledDataset small_training_set(std::size_t n_records, std::uint64_t seed, bool noiseless = false) {
  DatasetSpec spec;
  spec.system_frequencies_hz = {3.27, 15.56, 26.50};
  spec.zeta_range = {0.005, 0.02};
  spec.amplitude_range = {1.0, 5.0};
  spec.snr_range_db = {10.0, 30.0};
  spec.n_records = n_records;
  spec.rng_seed = seed;
  spec.noiseless = noiseless;
  return generate_dataset(spec);
}

}  // namespace

TEST_CASE("descent on an injected convex loss finds the minimum") {
  auto loss = [](double theta) {
    const double d = std::log(theta) - std::numbers::ln2;
    return d * d;
  };
  for (double start : {0.15, 0.9, 2.2, 9.5}) {
    const auto trace = optim::descend_log_theta(loss, start, {0.1, 10.0}, 0.01, 1e-6, 500);
    CHECK(trace.theta_final == Approx(2.0).margin(1e-3));
  }
}

TEST_CASE("descent respects the bounds") {
  auto loss = [](double theta) { return -theta; };  // minimum at the upper bound
  const auto trace = optim::descend_log_theta(loss, 1.0, {0.5, 4.0}, 0.01, 1e-9, 300);
  CHECK(trace.theta_final <= 4.0 + 1e-12);
  CHECK(trace.theta_final == Approx(4.0).epsilon(1e-6));
}

TEST_CASE("dataset loss behaviour") {
  const LabeledDataset ds = small_training_set(24, 5, /*noiseless=*/true);

  SECTION("wide gaussian on a noiseless set scores well") {
    const double loss = mean_dataset_loss(KernelForm::GaussianWindow, 0.2, ds, 1);
    CHECK(loss >= 0.0);
    CHECK(loss < 1e-3);
  }

  SECTION("shannon filter degrades when narrower than the mode bandwidth") {
    const double good = mean_dataset_loss(KernelForm::ShannonFilter, 2.0 * std::numbers::pi * 3.0, ds, 1);
    // Half the half-power bandwidth of a 1% mode at 15.56 Hz.
    const double bad = mean_dataset_loss(KernelForm::ShannonFilter, 2.0 * std::numbers::pi * 0.25, ds, 1);
    CHECK(bad > good);
  }
}

TEST_CASE("optimize_theta selection and determinism") {
  const LabeledDataset train_set = small_training_set(40, 21);
  const LabeledDataset val_set = small_training_set(12, 22);
  TrainConfig cfg;
  cfg.n_restarts = 5;
  cfg.max_iters = 60;
  cfg.seed = 3;

  const FitResult a = optimize_theta(KernelForm::GaussianWindow, train_set, val_set, cfg, 1);
  const FitResult b = optimize_theta(KernelForm::GaussianWindow, train_set, val_set, cfg, 1);

  SECTION("theta stays inside the derived bounds") {
    const auto bounds = default_theta_bounds(KernelForm::GaussianWindow, 15.56, 4096.0 / 800.0, 10.94);
    CHECK(a.theta_opt >= bounds.first);
    CHECK(a.theta_opt <= bounds.second);
  }

  SECTION("same seed reproduces the fit exactly") {
    CHECK(a.theta_opt == b.theta_opt);
    CHECK(a.train_loss == b.train_loss);
    CHECK(a.val_loss == b.val_loss);
    REQUIRE(a.restart_traces.size() == b.restart_traces.size());
    for (std::size_t i = 0; i < a.restart_traces.size(); ++i) {
      CHECK(a.restart_traces[i].theta_init == b.restart_traces[i].theta_init);
      CHECK(a.restart_traces[i].theta_final == b.restart_traces[i].theta_final);
    }
  }

  SECTION("winner dominates every restart on validation loss") {
    const LossEvaluator val(val_set, 0, val_set.records.size(), 1, SegmentPolicy{});
    std::vector<double> val_losses;
    for (const auto& trace : a.restart_traces) {
      if (trace.failed) continue;
      val_losses.push_back(val(KernelForm::GaussianWindow, trace.theta_final));
      CHECK(a.val_loss <= val_losses.back() + 1e-15);
    }
    // Selection sanity: the winner is no worse than the median restart.
    std::sort(val_losses.begin(), val_losses.end());
    CHECK(a.val_loss <= val_losses[val_losses.size() / 2] + 1e-15);
  }
}
