#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "modalenv/kernels.hpp"
#include "modalenv/record.hpp"
#include "modalenv/segment.hpp"

namespace modalenv {

struct EnsembleConfig {
  KernelSpec kernel;
  SegmentPolicy segment_policy;
};

// Log-envelope regression result. zeta is only meaningful when valid is
// set; a non-decaying fit (slope >= 0) is flagged, never clamped.
struct DampingEstimate {
  double zeta = 0.0;
  double slope = 0.0;      // 1/s
  double intercept = 0.0;  // ln amplitude at t = 0
  std::pair<std::size_t, std::size_t> segment{0, 0};
  double r_squared = 0.0;
  bool valid = false;
};

// Impact time estimate: index of the global maximum of the envelope
// extracted with the reference Gaussian-window kernel.
inline std::size_t estimate_impact_index(const TimeRecord& record, const KernelSpec& reference_kernel) {
  if (reference_kernel.form != KernelForm::GaussianWindow)
    throw std::invalid_argument("estimate_impact_index: reference kernel must be a Gaussian window");
  const Envelope env = extract_envelope(record, reference_kernel);
  const auto peak_it = std::max_element(env.values.begin(), env.values.end());
  if (*peak_it <= 0.0) throw std::invalid_argument("estimate_impact_index: all-zero record");
  return static_cast<std::size_t>(peak_it - env.values.begin());
}

// Aligns envelopes at their global maxima (shifted to the smallest argmax
// in the set) and averages pointwise over the region every shifted
// envelope covers without wrapping.
inline Envelope align_and_average(const std::vector<Envelope>& envelopes) {
  if (envelopes.empty()) throw std::invalid_argument("align_and_average: empty list");
  const std::size_t n = envelopes.front().size();
  const double fs = envelopes.front().sample_rate_hz;
  for (const auto& e : envelopes) {
    if (e.size() != n || e.sample_rate_hz != fs)
      throw std::invalid_argument("align_and_average: envelopes must share length and sample rate");
  }

  std::vector<std::size_t> argmax(envelopes.size());
  std::size_t common = n;
  for (std::size_t i = 0; i < envelopes.size(); ++i) {
    const auto it = std::max_element(envelopes[i].values.begin(), envelopes[i].values.end());
    argmax[i] = static_cast<std::size_t>(it - envelopes[i].values.begin());
    common = std::min(common, argmax[i]);
  }
  std::size_t max_shift = 0;
  for (std::size_t i = 0; i < envelopes.size(); ++i) max_shift = std::max(max_shift, argmax[i] - common);

  const std::size_t out_len = n - max_shift;
  Envelope out;
  out.sample_rate_hz = fs;
  // The wrap-contaminated tails of all inputs land in the last guard
  // samples of the truncated output.
  for (const auto& e : envelopes) out.edge_guard = std::max(out.edge_guard, e.edge_guard);
  out.values.assign(out_len, 0.0);
  const double inv = 1.0 / static_cast<double>(envelopes.size());
  for (std::size_t i = 0; i < envelopes.size(); ++i) {
    const std::size_t shift = argmax[i] - common;
    for (std::size_t k = 0; k < out_len; ++k) out.values[k] += envelopes[i].values[k + shift] * inv;
  }
  return out;
}

// Ordinary least squares of ln(env) on time over [N1, N2]; the slope
// s = -zeta*omega_n inverts exactly through r = -s/omega_d:
//   zeta = r / sqrt(1 + r^2).
inline DampingEstimate fit_damping(const Envelope& env, double mode_freq_hz, const SegmentPolicy& policy) {
  env.validate();
  if (mode_freq_hz <= 0.0) throw std::invalid_argument("fit_damping: bad mode frequency");
  const auto segment = env.segment ? *env.segment : select_segment(env, mode_freq_hz, policy);
  const auto [n1, n2] = segment;
  const std::size_t count = n2 - n1 + 1;
  if (count < 3) throw std::invalid_argument("fit_damping: segment too short");

  const double fs = env.sample_rate_hz;
  double mean_t = 0.0, mean_y = 0.0;
  for (std::size_t k = n1; k <= n2; ++k) {
    const double v = env.values[k];
    if (v <= 0.0) throw std::runtime_error("fit_damping: nonpositive envelope value in segment");
    mean_t += static_cast<double>(k) / fs;
    mean_y += std::log(v);
  }
  mean_t /= static_cast<double>(count);
  mean_y /= static_cast<double>(count);

  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = n1; k <= n2; ++k) {
    const double dt = static_cast<double>(k) / fs - mean_t;
    const double dy = std::log(env.values[k]) - mean_y;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }

  DampingEstimate est;
  est.segment = segment;
  est.slope = sty / stt;
  est.intercept = mean_y - est.slope * mean_t;
  est.r_squared = syy > 0.0 ? (sty * sty) / (stt * syy) : 1.0;
  if (est.slope < 0.0) {
    const double r = -est.slope / (2.0 * std::numbers::pi * mode_freq_hz);
    est.zeta = r / std::sqrt(1.0 + r * r);
    est.valid = true;
  }
  return est;
}

// Full ensemble pipeline: per-record envelope extraction, alignment and
// averaging, segment selection, normalization, log-envelope regression.
inline DampingEstimate estimate_from_ensemble(const std::vector<TimeRecord>& records,
                                              const EnsembleConfig& cfg, double mode_freq_hz) {
  if (records.empty()) throw std::invalid_argument("estimate_from_ensemble: no records");
  std::vector<Envelope> envelopes;
  envelopes.reserve(records.size());
  for (const auto& rec : records) envelopes.push_back(extract_envelope(rec, cfg.kernel));
  Envelope averaged = align_and_average(envelopes);
  const auto segment = select_segment(averaged, mode_freq_hz, cfg.segment_policy);
  averaged.segment = segment;
  averaged = normalize_to_segment_start(averaged);
  return fit_damping(averaged, mode_freq_hz, cfg.segment_policy);
}

}  // namespace modalenv
