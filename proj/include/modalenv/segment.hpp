#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

#include "modalenv/record.hpp"

namespace modalenv {

// Evaluation-segment policy: N2 sits at the last sample whose amplitude is
// still above floor_fraction of the peak, N1 a fixed number of oscillation
// cycles earlier.
struct SegmentPolicy {
  double floor_fraction = 0.05;
  double cycles = 10.0;

  void validate() const {
    if (!(floor_fraction > 0.0 && floor_fraction < 1.0))
      throw std::invalid_argument("SegmentPolicy: floor fraction must lie in (0,1)");
    if (cycles <= 0.0) throw std::invalid_argument("SegmentPolicy: cycles must be positive");
  }
};

// Selects [N1, N2] on an envelope for a mode at mode_freq_hz. N1 is clamped
// to the envelope peak so the rising edge is excluded; envelopes that decay
// so fast that fewer than three usable samples remain past the peak are
// rejected.
inline std::pair<std::size_t, std::size_t> select_segment(const Envelope& env, double mode_freq_hz,
                                                          const SegmentPolicy& policy) {
  env.validate();
  policy.validate();
  if (mode_freq_hz <= 0.0) throw std::invalid_argument("select_segment: bad mode frequency");

  // Keep both the peak search and N2 out of the wrap-contaminated tail.
  const std::size_t usable = env.size() > env.edge_guard ? env.size() - env.edge_guard : 0;
  if (usable < 3) throw std::runtime_error("select_segment: edge guard leaves no usable samples");
  const auto peak_it = std::max_element(env.values.begin(), env.values.begin() + static_cast<std::ptrdiff_t>(usable));
  const double peak = *peak_it;
  if (peak <= 0.0) throw std::invalid_argument("select_segment: envelope has no positive maximum");
  const auto peak_index = static_cast<std::size_t>(peak_it - env.values.begin());

  const double floor = policy.floor_fraction * peak;
  std::size_t n2 = usable - 1;
  while (n2 > peak_index && env.values[n2] < floor) --n2;

  const auto length = static_cast<std::size_t>(
      std::llround(policy.cycles * env.sample_rate_hz / mode_freq_hz));
  std::size_t n1 = n2 > length ? n2 - length : 0;
  n1 = std::max(n1, peak_index);
  if (n2 < n1 + 2)
    throw std::runtime_error("select_segment: envelope decays too fast to fit the requested cycles");
  return {n1, n2};
}

// Discrete MSE between two envelopes over [N1, N2], both normalized to
// unity at N1.
inline double envelope_mse(const Envelope& estimated, const Envelope& truth,
                           std::pair<std::size_t, std::size_t> segment) {
  if (estimated.size() != truth.size()) throw std::invalid_argument("envelope_mse: length mismatch");
  const auto [n1, n2] = segment;
  if (n1 >= n2 || n2 >= estimated.size()) throw std::invalid_argument("envelope_mse: segment out of range");
  if (std::abs(estimated.values[n1] - 1.0) > 1e-12 || std::abs(truth.values[n1] - 1.0) > 1e-12)
    throw std::invalid_argument("envelope_mse: inputs must be normalized to unity at N1");

  double acc = 0.0;
  for (std::size_t k = n1; k <= n2; ++k) {
    const double d = estimated.values[k] - truth.values[k];
    acc += d * d;
  }
  return acc / static_cast<double>(n2 - n1 + 1);
}

}  // namespace modalenv
