#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "modalenv/fft.hpp"
#include "modalenv/record.hpp"

namespace modalenv {

// Unnormalized forward DFT of a record; round-trips with inverse_transform.
inline ComplexSpectrum forward_transform(const TimeRecord& record) {
  record.validate();
  ComplexSpectrum spec;
  spec.bins = fft::forward(record.samples);
  spec.bin_spacing_hz = record.sample_rate_hz / static_cast<double>(record.size());
  return spec;
}

inline std::vector<std::complex<double>> inverse_transform(const ComplexSpectrum& spec) {
  return fft::inverse(spec.bins);
}

// Pointwise spectral multiplication, i.e. circular convolution of the
// record with the kernel whose DFT is freq_response. The output is the
// complex (analytic) filtered signal.
inline std::vector<std::complex<double>> fast_filter(const std::vector<std::complex<double>>& record_spectrum,
                                                     const std::vector<std::complex<double>>& freq_response) {
  if (record_spectrum.size() != freq_response.size())
    throw std::invalid_argument("fast_filter: length mismatch");
  std::vector<std::complex<double>> y(record_spectrum.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = record_spectrum[k] * freq_response[k];
  fft::transform(y, true);
  return y;
}

inline std::vector<std::complex<double>> fast_filter(const TimeRecord& record,
                                                     const std::vector<std::complex<double>>& freq_response) {
  if (record.size() != freq_response.size())
    throw std::invalid_argument("fast_filter: length mismatch");
  return fast_filter(forward_transform(record).bins, freq_response);
}

// FRF construction, method 1: drop everything before the impact sample and
// transform the remainder, zero-padded back to the original record length
// so all spectra share one frequency grid.
inline ComplexSpectrum frf_truncate(const TimeRecord& record, std::size_t impact_index) {
  record.validate();
  if (impact_index + 2 > record.size())
    throw std::invalid_argument("frf_truncate: impact index leaves fewer than 2 samples");
  std::vector<double> padded(record.size(), 0.0);
  std::copy(record.samples.begin() + static_cast<std::ptrdiff_t>(impact_index), record.samples.end(), padded.begin());
  ComplexSpectrum spec;
  spec.bins = fft::forward(padded);
  spec.bin_spacing_hz = record.sample_rate_hz / static_cast<double>(record.size());
  return spec;
}

// One-sided FRF (0..Nyquist) from a two-sided spectrum.
inline FrfData to_one_sided_frf(const ComplexSpectrum& spec) {
  const std::size_t n = spec.size();
  if (n < 2) throw std::invalid_argument("to_one_sided_frf: spectrum too short");
  const std::size_t half = n / 2;
  FrfData frf;
  frf.freqs_hz.resize(half + 1);
  frf.values.resize(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    frf.freqs_hz[k] = spec.bin_spacing_hz * static_cast<double>(k);
    frf.values[k] = spec.bins[k];
  }
  return frf;
}

// FRF construction, method 2: ratio of the output spectrum to the spectrum
// of a unit impulse at the impact sample. |F(delta)| = 1, so this is a pure
// linear-phase correction and the magnitude is shift-invariant.
inline FrfData frf_impulse_ratio(const TimeRecord& record, std::size_t impact_index) {
  record.validate();
  if (impact_index >= record.size())
    throw std::invalid_argument("frf_impulse_ratio: impact index out of range");
  ComplexSpectrum spec = forward_transform(record);
  const std::size_t n = spec.size();
  for (std::size_t k = 0; k < n; ++k) {
    // Divide by exp(-2*pi*i*k*m/n), i.e. multiply by the conjugate phase.
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(impact_index) /
                       static_cast<double>(n);
    spec.bins[k] *= std::complex<double>{std::cos(ang), std::sin(ang)};
  }
  return to_one_sided_frf(spec);
}

// Restrict an FRF to [lo_hz, hi_hz], inclusive.
inline FrfData crop_frf(const FrfData& frf, double lo_hz, double hi_hz) {
  frf.validate();
  FrfData out;
  for (std::size_t k = 0; k < frf.size(); ++k) {
    if (frf.freqs_hz[k] >= lo_hz && frf.freqs_hz[k] <= hi_hz) {
      out.freqs_hz.push_back(frf.freqs_hz[k]);
      out.values.push_back(frf.values[k]);
    }
  }
  if (out.size() < 3) throw std::invalid_argument("crop_frf: band keeps fewer than 3 bins");
  return out;
}

}  // namespace modalenv
