#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "modalenv/modal.hpp"

namespace modalenv {

// The three benchmark systems. Scenario 1: well-separated, lightly damped,
// balanced amplitudes. Scenario 2: low-frequency, more closely spaced.
// Scenario 3: scenario-1 frequencies with strong damping.
inline ModalSystem scenario_system(const std::string& name) {
  if (name == "scenario1")
    return ModalSystem{{{3.27, 0.015, 1.5}, {15.56, 0.010, 2.5}, {26.50, 0.008, 1.0}}};
  if (name == "scenario2")
    return ModalSystem{{{1.15, 0.015, 2.8}, {6.33, 0.010, 1.5}, {10.95, 0.008, 4.7}}};
  if (name == "scenario3")
    return ModalSystem{{{3.27, 0.035, 1.5}, {15.56, 0.040, 2.5}, {26.50, 0.030, 1.0}}};
  throw std::invalid_argument("unknown scenario: " + name);
}

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"scenario1", "scenario2", "scenario3"};
  return names;
}

// Closely-spaced-mode study: a 1%-damped unit-amplitude target flanked by
// two strong interferers (4% damping, amplitude 5) at +/- delta_f.
inline ModalSystem interference_system(double target_freq_hz, double delta_f_hz,
                                       double target_zeta = 0.01, double target_amp = 1.0,
                                       double interferer_zeta = 0.04, double interferer_amp = 5.0) {
  if (delta_f_hz <= 0.0 || delta_f_hz >= target_freq_hz)
    throw std::invalid_argument("interference_system: delta_f must lie in (0, target frequency)");
  return ModalSystem{{{target_freq_hz - delta_f_hz, interferer_zeta, interferer_amp},
                      {target_freq_hz, target_zeta, target_amp},
                      {target_freq_hz + delta_f_hz, interferer_zeta, interferer_amp}}};
}

}  // namespace modalenv
