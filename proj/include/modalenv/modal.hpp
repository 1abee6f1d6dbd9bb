#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "modalenv/record.hpp"

namespace modalenv {

// One underdamped vibrational mode: damped frequency f_d = omega_d/2pi,
// damping ratio zeta in (0,1), and the dimensionless modal amplitude.
struct ModalMode {
  double damped_freq_hz = 0.0;
  double damping_ratio = 0.0;
  double amplitude = 0.0;

  void validate() const {
    if (damped_freq_hz <= 0.0) throw std::invalid_argument("ModalMode: damped frequency must be positive");
    if (!(damping_ratio > 0.0 && damping_ratio < 1.0))
      throw std::invalid_argument("ModalMode: damping ratio must lie in (0,1)");
    if (amplitude <= 0.0) throw std::invalid_argument("ModalMode: amplitude must be positive");
  }
};

// Ordered list of modes, canonical order = strictly increasing frequency.
struct ModalSystem {
  std::vector<ModalMode> modes;

  void validate() const {
    if (modes.empty()) throw std::invalid_argument("ModalSystem: no modes");
    for (const auto& m : modes) m.validate();
    for (std::size_t i = 1; i < modes.size(); ++i)
      if (modes[i].damped_freq_hz <= modes[i - 1].damped_freq_hz)
        throw std::invalid_argument("ModalSystem: frequencies must be strictly increasing");
  }
};

// Undamped natural frequency omega_n = omega_d / sqrt(1 - zeta^2) in rad/s.
inline double natural_freq_rad(const ModalMode& mode) {
  mode.validate();
  const double wd = 2.0 * std::numbers::pi * mode.damped_freq_hz;
  return wd / std::sqrt(1.0 - mode.damping_ratio * mode.damping_ratio);
}

// Exponential decay rate zeta * omega_n in 1/s.
inline double decay_rate(const ModalMode& mode) {
  return mode.damping_ratio * natural_freq_rad(mode);
}

// Superposition of modal impulse responses:
//   x[k] = sum_i amp_i * exp(-zeta_i*omega_n_i*t) * sin(omega_d_i*t),  t = k/fs.
inline TimeRecord synthesize_response(const ModalSystem& system, std::size_t n, double fs) {
  system.validate();
  if (n < 2) throw std::invalid_argument("synthesize_response: need at least 2 samples");
  if (fs <= 0.0) throw std::invalid_argument("synthesize_response: sample rate must be positive");
  for (const auto& m : system.modes)
    if (m.damped_freq_hz >= 0.5 * fs)
      throw std::invalid_argument("synthesize_response: mode at or above Nyquist");

  TimeRecord out;
  out.sample_rate_hz = fs;
  out.samples.assign(n, 0.0);
  for (const auto& m : system.modes) {
    const double wd = 2.0 * std::numbers::pi * m.damped_freq_hz;
    const double gamma = decay_rate(m);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / fs;
      out.samples[k] += m.amplitude * std::exp(-gamma * t) * std::sin(wd * t);
    }
  }
  return out;
}

// Exact envelope of a single mode: amp * exp(-zeta*omega_n*t).
inline Envelope true_envelope(const ModalMode& mode, std::size_t n, double fs) {
  mode.validate();
  if (n < 2) throw std::invalid_argument("true_envelope: need at least 2 samples");
  if (fs <= 0.0) throw std::invalid_argument("true_envelope: sample rate must be positive");
  Envelope env;
  env.sample_rate_hz = fs;
  env.values.resize(n);
  const double gamma = decay_rate(mode);
  for (std::size_t k = 0; k < n; ++k)
    env.values[k] = mode.amplitude * std::exp(-gamma * static_cast<double>(k) / fs);
  return env;
}

}  // namespace modalenv
