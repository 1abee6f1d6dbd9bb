#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "modalenv/damping.hpp"
#include "modalenv/kernels.hpp"
#include "modalenv/modal.hpp"
#include "modalenv/segment.hpp"

using namespace modalenv;
using Catch::Approx;

namespace {
constexpr double kFs = 800.0;
constexpr std::size_t kN = 4096;
const double kBinRad = 2.0 * std::numbers::pi * kFs / static_cast<double>(kN);
}  // namespace

TEST_CASE("shannon filter with a three-bin support") {
  // Center exactly on bin 80, L_w spanning one bin each side.
  const double fc = 80.0 * kFs / static_cast<double>(kN);
  const KernelSpec spec{KernelForm::ShannonFilter, 2.0 * kBinRad, fc};
  const auto response = build_freq_response(spec, kN, kFs);
  std::size_t nonzero = 0;
  for (std::size_t k = 0; k < kN; ++k) {
    if (std::abs(response[k]) > 0.0) {
      ++nonzero;
      CHECK(std::abs(response[k]) == Approx(1.0).margin(1e-12));
      CHECK(k >= 79);
      CHECK(k <= 81);
    }
  }
  CHECK(nonzero == 3);
}

TEST_CASE("triangle filter shape") {
  const double fc = 80.0 * kFs / static_cast<double>(kN);
  const KernelSpec spec{KernelForm::TriangleFilter, 8.0 * kBinRad, fc};
  const auto response = build_freq_response(spec, kN, kFs);
  CHECK(std::abs(response[80]) == Approx(1.0).margin(1e-12));
  for (int d = 1; d <= 4; ++d) {
    const double expect = 1.0 - static_cast<double>(d) / 4.0;
    CHECK(std::abs(response[80 + d]) == Approx(expect).margin(1e-9));
    CHECK(std::abs(response[80 - d]) == Approx(expect).margin(1e-9));
  }
}

TEST_CASE("blackman filter endpoint value") {
  const double fc = 200.0 * kFs / static_cast<double>(kN);
  const KernelSpec spec{KernelForm::BlackmanFilter, 40.0 * kBinRad, fc};
  const auto response = build_freq_response(spec, kN, kFs);
  CHECK(std::abs(response[200]) == Approx(1.0).margin(1e-12));
  const double edge = 128.0 / 18608.0;
  CHECK(std::abs(response[220]) == Approx(edge).margin(1e-9));
  CHECK(std::abs(response[180]) == Approx(edge).margin(1e-9));
  CHECK(std::abs(response[221]) == 0.0);
}

TEST_CASE("one-sidedness of built responses") {
  for (KernelForm form : kAllKernelForms) {
    const double theta = is_filter_form(form) ? 2.0 * std::numbers::pi * 4.0 : 0.5;
    const KernelSpec spec{form, theta, 15.56};
    const auto response = build_freq_response(spec, kN, kFs);
    for (std::size_t k = kN / 2 + 1; k < kN; ++k) CHECK(std::abs(response[k]) == 0.0);
  }
}

TEST_CASE("pure tone at the center gives a flat interior envelope") {
  TimeRecord rec;
  rec.sample_rate_hz = kFs;
  rec.samples.resize(kN);
  const double fc = 100.0 * kFs / static_cast<double>(kN);
  for (std::size_t k = 0; k < kN; ++k)
    rec.samples[k] = std::sin(2.0 * std::numbers::pi * fc * static_cast<double>(k) / kFs);
  const KernelSpec spec{KernelForm::ShannonFilter, 10.0 * kBinRad, fc};
  const Envelope env = extract_envelope(rec, spec);
  const std::size_t margin = kN / 10;
  double lo = 1e300, hi = 0.0;
  for (std::size_t k = margin; k < kN - margin; ++k) {
    lo = std::min(lo, env.values[k]);
    hi = std::max(hi, env.values[k]);
  }
  CHECK((hi - lo) / hi < 0.01);
}

TEST_CASE("zero record gives a zero envelope") {
  TimeRecord rec;
  rec.sample_rate_hz = kFs;
  rec.samples.assign(1024, 0.0);
  const Envelope env = extract_envelope(rec, {KernelForm::GaussianWindow, 0.2, 15.56});
  for (double v : env.values) CHECK(v == 0.0);
}

TEST_CASE("scale equivariance of envelope extraction") {
  const ModalSystem sys{{{15.56, 0.01, 2.5}}};
  TimeRecord rec = synthesize_response(sys, kN, kFs);
  const KernelSpec spec{KernelForm::TriangleWindow, 0.7, 15.56};
  const Envelope base = extract_envelope(rec, spec);
  for (auto& v : rec.samples) v *= 17.0;
  const Envelope scaled = extract_envelope(rec, spec);
  for (std::size_t k = 0; k < base.size(); ++k)
    CHECK(scaled.values[k] == Approx(17.0 * base.values[k]).margin(1e-9));
}

TEST_CASE("shift covariance of envelope extraction") {
  const ModalSystem sys{{{15.56, 0.01, 2.5}}};
  const TimeRecord rec = synthesize_response(sys, kN, kFs);
  const std::size_t shift = 600;
  TimeRecord rotated;
  rotated.sample_rate_hz = kFs;
  rotated.samples.resize(kN);
  for (std::size_t k = 0; k < kN; ++k) rotated.samples[(k + shift) % kN] = rec.samples[k];

  const KernelSpec spec{KernelForm::GaussianWindow, 0.25, 15.56};
  const Envelope base = extract_envelope(rec, spec);
  const Envelope moved = extract_envelope(rotated, spec);
  double err = 0.0;
  for (std::size_t k = 0; k < kN; ++k)
    err = std::max(err, std::abs(moved.values[(k + shift) % kN] - base.values[k]));
  CHECK(err < 1e-9);
}

TEST_CASE("noiseless single mode: interior log-envelope slope recovers zeta") {
  const ModalMode mode{15.56, 0.01, 2.5};
  const ModalSystem sys{{mode}};
  const TimeRecord rec = synthesize_response(sys, kN, kFs);
  const KernelSpec spec{KernelForm::GaussianWindow, 0.3, 15.56};
  Envelope env = extract_envelope(rec, spec);
  env.segment = select_segment(env, 15.56, SegmentPolicy{});
  const DampingEstimate est = fit_damping(env, 15.56, SegmentPolicy{});
  REQUIRE(est.valid);
  CHECK(est.zeta == Approx(0.01).epsilon(0.02));
}

TEST_CASE("mode rejection at 6 Hz separation") {
  const ModalMode target{15.56, 0.01, 1.0};
  const ModalSystem single{{target}};
  const ModalSystem pair{{{9.56, 0.04, 5.0}, target}};
  const TimeRecord solo = synthesize_response(single, kN, kFs);
  const TimeRecord mixed = synthesize_response(pair, kN, kFs);
  const KernelSpec spec{KernelForm::GaussianWindow, 0.35, 15.56};
  const Envelope env_solo = extract_envelope(solo, spec);
  const Envelope env_mixed = extract_envelope(mixed, spec);
  const auto segment = select_segment(env_solo, 15.56, SegmentPolicy{});
  for (std::size_t k = segment.first; k <= segment.second; ++k)
    CHECK(env_mixed.values[k] == Approx(env_solo.values[k]).epsilon(0.05));
}

TEST_CASE("normalize_to_segment_start") {
  Envelope env;
  env.sample_rate_hz = kFs;
  env.values = {4.0, 2.0, 1.0, 0.5, 0.25};
  env.segment = {{1, 3}};

  SECTION("anchors the segment start at one") {
    const Envelope out = normalize_to_segment_start(env);
    CHECK(out.values[1] == 1.0);
    CHECK(out.values[0] == Approx(2.0));
    CHECK(out.values[3] == Approx(0.25));
  }

  SECTION("idempotent and decay-ratio preserving") {
    const Envelope once = normalize_to_segment_start(env);
    const Envelope twice = normalize_to_segment_start(once);
    for (std::size_t k = 0; k < once.size(); ++k) CHECK(once.values[k] == twice.values[k]);
    CHECK(once.values[3] / once.values[1] == Approx(env.values[3] / env.values[1]).epsilon(1e-14));
  }

  SECTION("rejects a zero anchor") {
    env.values[1] = 0.0;
    CHECK_THROWS_AS(normalize_to_segment_start(env), std::invalid_argument);
  }

  SECTION("rejects a missing segment") {
    env.segment.reset();
    CHECK_THROWS_AS(normalize_to_segment_start(env), std::invalid_argument);
  }
}

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS((KernelSpec{KernelForm::ShannonFilter, 5.0 * 2.0 * std::numbers::pi * 15.56, 15.56}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((KernelSpec{KernelForm::GaussianWindow, 1e-4, 15.56}.validate()), std::invalid_argument);
  CHECK_NOTHROW((KernelSpec{KernelForm::GaussianWindow, 0.3, 15.56}.validate()));
  CHECK_THROWS_AS(build_freq_response({KernelForm::GaussianWindow, 0.3, 500.0}, kN, kFs),
                  std::invalid_argument);
}
