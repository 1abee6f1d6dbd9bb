#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace modalenv {

// Uniformly sampled real-valued signal; the universal carrier for
// synthesized and observed records.
struct TimeRecord {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }

  void validate() const {
    if (sample_rate_hz <= 0.0) throw std::invalid_argument("TimeRecord: sample rate must be positive");
    if (samples.size() < 2) throw std::invalid_argument("TimeRecord: need at least 2 samples");
  }
};

// Nonnegative amplitude-vs-time series, with an optional evaluation
// segment [first, second] (inclusive indices). edge_guard marks how many
// trailing samples are contaminated by circular-filtering wrap-around;
// segment selection refuses to place N2 inside that zone.
struct Envelope {
  std::vector<double> values;
  double sample_rate_hz = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> segment;
  std::size_t edge_guard = 0;

  std::size_t size() const { return values.size(); }

  void validate() const {
    if (sample_rate_hz <= 0.0) throw std::invalid_argument("Envelope: sample rate must be positive");
    if (segment) {
      if (segment->first >= segment->second || segment->second >= values.size())
        throw std::invalid_argument("Envelope: segment out of range");
    }
  }
};

// Two-sided DFT bins of a record; bin_spacing_hz = fs / N.
struct ComplexSpectrum {
  std::vector<std::complex<double>> bins;
  double bin_spacing_hz = 0.0;

  std::size_t size() const { return bins.size(); }
};

// Complex frequency-response samples on an increasing frequency grid.
struct FrfData {
  std::vector<double> freqs_hz;
  std::vector<std::complex<double>> values;

  std::size_t size() const { return values.size(); }

  void validate() const {
    if (freqs_hz.size() != values.size()) throw std::invalid_argument("FrfData: length mismatch");
    for (std::size_t k = 1; k < freqs_hz.size(); ++k)
      if (freqs_hz[k] <= freqs_hz[k - 1]) throw std::invalid_argument("FrfData: frequencies must be strictly increasing");
  }
};

}  // namespace modalenv
