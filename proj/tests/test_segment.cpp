#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "modalenv/kernels.hpp"
#include "modalenv/modal.hpp"
#include "modalenv/segment.hpp"

using namespace modalenv;
using Catch::Approx;

TEST_CASE("segment selection") {
  SECTION("ten cycles at 15.56 Hz and 800 Hz sampling span 514 samples") {
    const ModalMode mode{15.56, 0.01, 1.0};
    const Envelope env = true_envelope(mode, 4096, 800.0);
    const auto [n1, n2] = select_segment(env, 15.56, SegmentPolicy{});
    CHECK(n2 - n1 == 514);
  }

  SECTION("N2 is the last sample above the floor") {
    const ModalMode mode{15.56, 0.04, 1.0};  // fast decay, floor crossed inside the record
    const Envelope env = true_envelope(mode, 4096, 800.0);
    const auto [n1, n2] = select_segment(env, 15.56, SegmentPolicy{});
    const double floor = 0.05 * env.values[0];
    CHECK(env.values[n2] >= floor);
    CHECK(env.values[n2 + 1] < floor);
    CHECK(n1 == n2 - 514);
  }

  SECTION("constant envelope uses the tail") {
    Envelope env;
    env.sample_rate_hz = 800.0;
    env.values.assign(2048, 3.0);
    const auto [n1, n2] = select_segment(env, 15.56, SegmentPolicy{});
    CHECK(n2 == 2047);
    CHECK(n1 == 2047 - 514);
  }

  SECTION("clamps to the peak when the decay is fast, errors when degenerate") {
    // zeta = 10% at 15.56 Hz: the envelope drops below 5% within ~245
    // samples, well under the ten-cycle span; the segment shrinks.
    const ModalMode fast{15.56, 0.10, 1.0};
    const Envelope env = true_envelope(fast, 4096, 800.0);
    const auto [n1, n2] = select_segment(env, 15.56, SegmentPolicy{});
    CHECK(n1 == 0);
    CHECK(n2 < 514);
    CHECK(n2 >= 2);

    Envelope spike;
    spike.sample_rate_hz = 800.0;
    spike.values.assign(64, 0.0);
    spike.values.back() = 1.0;  // peak at the last sample: nothing usable after it
    CHECK_THROWS(select_segment(spike, 15.56, SegmentPolicy{}));
  }
}

TEST_CASE("envelope mse") {
  const double fs = 800.0;
  auto make_env = [&](std::vector<double> v, std::size_t n1, std::size_t n2) {
    Envelope e;
    e.sample_rate_hz = fs;
    e.values = std::move(v);
    e.segment = {{n1, n2}};
    return e;
  };

  SECTION("identical envelopes give zero") {
    const ModalMode mode{15.56, 0.02, 1.0};
    Envelope env = true_envelope(mode, 512, fs);
    env.segment = {{0, 511}};
    const Envelope norm = normalize_to_segment_start(env);
    CHECK(envelope_mse(norm, norm, {0, 511}) == 0.0);
  }

  SECTION("offset over the interior: direct-sum oracle") {
    // 101 samples; truth decays linearly, estimate adds a ramp 0 -> 0.1.
    std::vector<double> truth(101), est(101);
    for (std::size_t k = 0; k < 101; ++k) {
      truth[k] = 1.0 - 0.005 * static_cast<double>(k);
      const double ramp = 0.1 * static_cast<double>(k) / 100.0;
      est[k] = truth[k] * (1.0 + ramp);
    }
    double expect = 0.0;
    for (std::size_t k = 0; k < 101; ++k) {
      const double d = est[k] - truth[k];
      expect += d * d;
    }
    expect /= 101.0;
    const double got = envelope_mse(make_env(est, 0, 100), make_env(truth, 0, 100), {0, 100});
    CHECK(got == Approx(expect).epsilon(1e-14));
  }

  SECTION("constant interior offset") {
    const double d = 0.125;
    std::vector<double> truth(65, 1.0), est(65, 1.0 + d);
    est[0] = 1.0;  // both normalized at N1
    const double got = envelope_mse(make_env(est, 0, 64), make_env(truth, 0, 64), {0, 64});
    CHECK(got == Approx(d * d * 64.0 / 65.0).epsilon(1e-14));
  }

  SECTION("rejects unnormalized inputs") {
    std::vector<double> truth(65, 1.0), est(65, 1.1);
    CHECK_THROWS_AS(envelope_mse(make_env(est, 0, 64), make_env(truth, 0, 64), {0, 64}),
                    std::invalid_argument);
  }

  SECTION("rejects mismatched lengths") {
    std::vector<double> truth(65, 1.0), est(64, 1.0);
    CHECK_THROWS_AS(envelope_mse(make_env(est, 0, 63), make_env(truth, 0, 63), {0, 63}),
                    std::invalid_argument);
  }

  SECTION("invariant to common rescaling before normalization") {
    const ModalMode mode{15.56, 0.02, 1.0};
    Envelope env = true_envelope(mode, 512, fs);
    env.segment = {{10, 400}};
    Envelope scaled = env;
    for (auto& v : scaled.values) v *= 7.25;
    Envelope ref = true_envelope(ModalMode{15.56, 0.019, 1.0}, 512, fs);
    ref.segment = {{10, 400}};
    const Envelope ref_n = normalize_to_segment_start(ref);
    const double a = envelope_mse(normalize_to_segment_start(env), ref_n, {10, 400});
    const double b = envelope_mse(normalize_to_segment_start(scaled), ref_n, {10, 400});
    CHECK(a == Approx(b).epsilon(1e-12));
  }
}
