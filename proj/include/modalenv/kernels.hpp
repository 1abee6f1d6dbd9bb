#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "modalenv/fft.hpp"
#include "modalenv/record.hpp"
#include "modalenv/spectral.hpp"

namespace modalenv {

// The nine envelope estimator forms. "Window" forms are time-domain
// windows modulated to the carrier; "Filter" forms are real shapes placed
// directly on the positive-frequency bins.
enum class KernelForm {
  GaussianWindow,
  RectWindow,
  ShannonFilter,
  TriangleFilter,
  TriangleWindow,
  WelchFilter,
  WelchWindow,
  BlackmanFilter,
  BlackmanWindow,
};

inline constexpr std::array<KernelForm, 9> kAllKernelForms = {
    KernelForm::GaussianWindow, KernelForm::RectWindow,     KernelForm::ShannonFilter,
    KernelForm::TriangleFilter, KernelForm::TriangleWindow, KernelForm::WelchFilter,
    KernelForm::WelchWindow,    KernelForm::BlackmanFilter, KernelForm::BlackmanWindow,
};

inline const char* kernel_form_name(KernelForm form) {
  switch (form) {
    case KernelForm::GaussianWindow: return "gaussian_window";
    case KernelForm::RectWindow: return "rect_window";
    case KernelForm::ShannonFilter: return "shannon_filter";
    case KernelForm::TriangleFilter: return "triangle_filter";
    case KernelForm::TriangleWindow: return "triangle_window";
    case KernelForm::WelchFilter: return "welch_filter";
    case KernelForm::WelchWindow: return "welch_window";
    case KernelForm::BlackmanFilter: return "blackman_filter";
    case KernelForm::BlackmanWindow: return "blackman_window";
  }
  throw std::logic_error("kernel_form_name: unknown form");
}

inline KernelForm kernel_form_from_name(const std::string& name) {
  for (KernelForm f : kAllKernelForms)
    if (name == kernel_form_name(f)) return f;
  throw std::invalid_argument("unknown kernel form: " + name);
}

inline bool is_filter_form(KernelForm form) {
  return form == KernelForm::ShannonFilter || form == KernelForm::TriangleFilter ||
         form == KernelForm::WelchFilter || form == KernelForm::BlackmanFilter;
}

namespace detail {

inline constexpr double kBlackmanA0 = 7938.0 / 18608.0;
inline constexpr double kBlackmanA1 = 9240.0 / 18608.0;
inline constexpr double kBlackmanA2 = 1430.0 / 18608.0;

// Boundary-inclusive rect: the Table-1 footnote defines rect(x) = 1 for
// |x| <= 0.5, and the small slack keeps exact-boundary bins inside despite
// rounding of the grid frequencies.
inline bool inside_support(double x) { return std::abs(x) <= 1.0 + 1e-9; }

// Shape on normalized coordinate x in [-1, 1] (x = 2t/L_t or 2w/L_w).
// The Blackman phase 2*pi*(u + L/2)/L reduces to pi*(x + 1), whose cosine
// is -cos(pi*x); both cosine terms are folded accordingly.
inline double shape_value(KernelForm form, double x) {
  if (!inside_support(x)) return 0.0;
  switch (form) {
    case KernelForm::ShannonFilter:
    case KernelForm::RectWindow:
      return 1.0;
    case KernelForm::TriangleFilter:
    case KernelForm::TriangleWindow:
      return std::max(0.0, 1.0 - std::abs(x));
    case KernelForm::WelchFilter:
    case KernelForm::WelchWindow:
      return std::max(0.0, 1.0 - x * x);
    case KernelForm::BlackmanFilter:
    case KernelForm::BlackmanWindow:
      return kBlackmanA0 + kBlackmanA1 * std::cos(std::numbers::pi * x) +
             kBlackmanA2 * std::cos(2.0 * std::numbers::pi * x);
    case KernelForm::GaussianWindow:
      break;
  }
  throw std::logic_error("shape_value: not a shaped form");
}

// Half-power (-3 dB) half-width of each time window's transform, in rad/s,
// for unit theta. Computed once per form by bisection on the numerically
// integrated continuous transform; Gaussian has the closed form sqrt(ln 2).
inline double window_halfwidth_coeff(KernelForm form) {
  if (form == KernelForm::GaussianWindow) return std::sqrt(std::numbers::ln2);
  static const auto table = [] {
    std::array<double, 9> coeffs{};
    constexpr std::size_t kSamples = 8192;
    for (KernelForm f : {KernelForm::RectWindow, KernelForm::TriangleWindow, KernelForm::WelchWindow,
                         KernelForm::BlackmanWindow}) {
      auto magnitude = [&](double omega) {
        // |integral of w(t) e^{-i w t} dt| over t in [-1/2, 1/2], L = 1.
        double re = 0.0, im = 0.0;
        const double dt = 1.0 / static_cast<double>(kSamples);
        for (std::size_t j = 0; j < kSamples; ++j) {
          const double t = -0.5 + (static_cast<double>(j) + 0.5) * dt;
          const double w = shape_value(f, 2.0 * t);
          re += w * std::cos(omega * t) * dt;
          im -= w * std::sin(omega * t) * dt;
        }
        return std::hypot(re, im);
      };
      const double peak = magnitude(0.0);
      const double target = peak / std::numbers::sqrt2;
      double lo = 0.0, hi = 1.0;
      while (magnitude(hi) > target) hi *= 2.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (magnitude(mid) > target ? lo : hi) = mid;
      }
      coeffs[static_cast<std::size_t>(f)] = 0.5 * (lo + hi);
    }
    return coeffs;
  }();
  return table[static_cast<std::size_t>(form)];
}

}  // namespace detail

// A fully specified envelope estimator: form, width parameter theta
// (sigma or L_t in seconds for windows, L_w in rad/s for filters), and the
// carrier / center frequency.
struct KernelSpec {
  KernelForm form = KernelForm::GaussianWindow;
  double theta = 0.0;
  double center_freq_hz = 0.0;

  void validate() const {
    if (theta <= 0.0) throw std::invalid_argument("KernelSpec: theta must be positive");
    if (center_freq_hz <= 0.0) throw std::invalid_argument("KernelSpec: center frequency must be positive");
    const double wc = 2.0 * std::numbers::pi * center_freq_hz;
    if (is_filter_form(form)) {
      if (0.5 * theta >= wc)
        throw std::invalid_argument("KernelSpec: filter support reaches nonpositive frequencies");
    } else {
      // Near-analytic condition: the window's -3 dB bandwidth must stay
      // below the carrier.
      const double halfwidth_rad = detail::window_halfwidth_coeff(form) / theta;
      if (2.0 * halfwidth_rad >= wc)
        throw std::invalid_argument("KernelSpec: window bandwidth too wide for carrier");
    }
  }
};

// Builds the kernel's one-sided complex frequency response on an n-bin DFT
// grid at sample rate fs, scaled to unit peak magnitude.
//
// Filter forms place the Table-1 shape on the positive-frequency bins
// around the center. Window forms sample the modulated window zero-phase
// (t = 0 at buffer start, negative times wrapped), transform it, and zero
// the negative-frequency residue; zero phase keeps extracted envelopes
// aligned with the record so decaying segments stay contiguous.
inline std::vector<std::complex<double>> build_freq_response(const KernelSpec& spec, std::size_t n, double fs) {
  spec.validate();
  if (n < 4) throw std::invalid_argument("build_freq_response: grid too short");
  if (fs <= 0.0) throw std::invalid_argument("build_freq_response: bad sample rate");
  if (spec.center_freq_hz >= 0.5 * fs)
    throw std::invalid_argument("build_freq_response: center frequency at or above Nyquist");

  const std::size_t half = n / 2;
  std::vector<std::complex<double>> response(n, std::complex<double>{0.0, 0.0});

  if (is_filter_form(spec.form)) {
    const double half_width_hz = 0.5 * spec.theta / (2.0 * std::numbers::pi);
    for (std::size_t k = 0; k <= half; ++k) {
      const double f = fs * static_cast<double>(k) / static_cast<double>(n);
      const double x = (f - spec.center_freq_hz) / half_width_hz;
      if (detail::inside_support(x)) response[k] = detail::shape_value(spec.form, x);
    }
  } else {
    const double wc = 2.0 * std::numbers::pi * spec.center_freq_hz;
    for (std::size_t j = 0; j < n; ++j) {
      const double t = (j <= half ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n)) / fs;
      double w;
      if (spec.form == KernelForm::GaussianWindow) {
        w = std::exp(-t * t / (2.0 * spec.theta * spec.theta));
      } else {
        const double x = 2.0 * t / spec.theta;
        w = detail::inside_support(x) ? detail::shape_value(spec.form, x) : 0.0;
      }
      if (w != 0.0) response[j] = w * std::complex<double>{std::cos(wc * t), std::sin(wc * t)};
    }
    fft::transform(response, false);
    for (std::size_t k = half + 1; k < n; ++k) response[k] = 0.0;
  }

  double peak = 0.0;
  for (const auto& v : response) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) throw std::invalid_argument("build_freq_response: kernel support misses the grid");
  for (auto& v : response) v /= peak;
  return response;
}

// Number of trailing samples whose envelope values are contaminated by the
// wrap-around of the circular convolution: the kernel's effective time
// extent, capped at a quarter of the record.
inline std::size_t kernel_edge_guard(const KernelSpec& spec, std::size_t n, double fs) {
  double extent_s;
  if (is_filter_form(spec.form)) {
    // Impulse response of a band filter rings on the scale of its
    // main-lobe width 2*pi/L_w; four lobes cover the bulk of the energy.
    extent_s = 4.0 * 2.0 * std::numbers::pi / spec.theta;
  } else if (spec.form == KernelForm::GaussianWindow) {
    extent_s = 3.0 * spec.theta;
  } else {
    extent_s = 0.5 * spec.theta;
  }
  const auto guard = static_cast<std::size_t>(std::ceil(extent_s * fs));
  return std::min(guard, n / 4);
}

// Envelope from a precomputed record spectrum (hot path for repeated
// extraction with varying kernels).
inline Envelope envelope_from_spectrum(const ComplexSpectrum& spectrum,
                                       const std::vector<std::complex<double>>& freq_response,
                                       double sample_rate_hz, std::size_t edge_guard = 0) {
  auto y = fast_filter(spectrum.bins, freq_response);
  Envelope env;
  env.sample_rate_hz = sample_rate_hz;
  env.edge_guard = edge_guard;
  env.values.resize(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) env.values[k] = std::abs(y[k]);
  return env;
}

// |x * Psi(t; theta)| per the estimator definition.
inline Envelope extract_envelope(const TimeRecord& record, const KernelSpec& spec) {
  record.validate();
  const auto response = build_freq_response(spec, record.size(), record.sample_rate_hz);
  return envelope_from_spectrum(forward_transform(record), response, record.sample_rate_hz,
                                kernel_edge_guard(spec, record.size(), record.sample_rate_hz));
}

// Rescales so the value at the segment start N1 equals one.
inline Envelope normalize_to_segment_start(const Envelope& env) {
  env.validate();
  if (!env.segment) throw std::invalid_argument("normalize_to_segment_start: segment not set");
  const double anchor = env.values[env.segment->first];
  if (anchor <= 0.0) throw std::invalid_argument("normalize_to_segment_start: zero value at segment start");
  Envelope out = env;
  for (auto& v : out.values) v /= anchor;
  return out;
}

}  // namespace modalenv
