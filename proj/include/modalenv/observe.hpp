#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "modalenv/record.hpp"
#include "modalenv/rng.hpp"

namespace modalenv {

// Pass infinity for "no noise".
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// Ranges for the observation model Signal(t) = B*x(t - tau0) + eps(t):
// unknown gain B, unknown impact delay tau0, and the SNR interval.
struct ObservationConfig {
  std::pair<double, double> scale_range{1.0, 5.0};
  std::pair<double, double> shift_range_s{0.0, 2.0};
  std::pair<double, double> snr_range_db{-5.0, 30.0};

  void validate(double record_duration_s) const {
    if (scale_range.first <= 0.0 || scale_range.second < scale_range.first)
      throw std::invalid_argument("ObservationConfig: bad scale range");
    if (shift_range_s.first < 0.0 || shift_range_s.second < shift_range_s.first)
      throw std::invalid_argument("ObservationConfig: bad shift range");
    if (shift_range_s.second >= record_duration_s)
      throw std::invalid_argument("ObservationConfig: shift must stay below record duration");
    if (snr_range_db.second < snr_range_db.first)
      throw std::invalid_argument("ObservationConfig: bad snr range");
  }
};

// Applies gain, integer-sample delay (zero prefix, truncated tail), and
// AWGN calibrated so 10*log10(P_signal/P_noise) == snr_db. Signal power is
// the mean square of the shifted-and-scaled clean record over its full
// length, zero prefix included.
inline TimeRecord apply_observation(const TimeRecord& record, double scale, double shift_s,
                                    double snr_db, std::uint64_t seed) {
  record.validate();
  if (scale <= 0.0) throw std::invalid_argument("apply_observation: scale must be positive");
  if (shift_s < 0.0) throw std::invalid_argument("apply_observation: shift must be nonnegative");
  const double fs = record.sample_rate_hz;
  const std::size_t n = record.size();
  const auto shift = static_cast<std::size_t>(std::llround(shift_s * fs));
  if (shift >= n) throw std::invalid_argument("apply_observation: shift beyond record length");

  TimeRecord out;
  out.sample_rate_hz = fs;
  out.samples.assign(n, 0.0);
  double power = 0.0;
  for (std::size_t k = shift; k < n; ++k) {
    const double v = scale * record.samples[k - shift];
    out.samples[k] = v;
    power += v * v;
  }
  power /= static_cast<double>(n);

  if (std::isfinite(snr_db)) {
    const double noise_power = power * std::pow(10.0, -snr_db / 10.0);
    const double sigma = std::sqrt(noise_power);
    rng::Stream stream(seed);
    for (std::size_t k = 0; k < n; ++k) out.samples[k] += sigma * stream.normal();
  }
  return out;
}

}  // namespace modalenv
