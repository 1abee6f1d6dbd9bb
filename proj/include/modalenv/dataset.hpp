#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "modalenv/modal.hpp"
#include "modalenv/observe.hpp"
#include "modalenv/record.hpp"
#include "modalenv/rng.hpp"

namespace modalenv {

// Recipe for a labeled synthetic dataset: frequencies held fixed, damping
// ratios and amplitudes drawn uniformly per record, AWGN at a uniformly
// drawn SNR. Fully reproducible from rng_seed.
struct DatasetSpec {
  std::vector<double> system_frequencies_hz;
  std::pair<double, double> zeta_range{0.001, 0.10};
  std::pair<double, double> amplitude_range{1.0, 5.0};
  std::pair<double, double> snr_range_db{10.0, 30.0};
  std::size_t n_samples_per_record = 4096;
  double sample_rate_hz = 800.0;
  std::size_t n_records = 500;
  std::uint64_t rng_seed = 0;
  bool noiseless = false;

  void validate() const {
    if (system_frequencies_hz.empty()) throw std::invalid_argument("DatasetSpec: no frequencies");
    for (std::size_t i = 0; i < system_frequencies_hz.size(); ++i) {
      if (system_frequencies_hz[i] <= 0.0) throw std::invalid_argument("DatasetSpec: frequencies must be positive");
      if (i > 0 && system_frequencies_hz[i] <= system_frequencies_hz[i - 1])
        throw std::invalid_argument("DatasetSpec: frequencies must be strictly increasing");
    }
    if (!(zeta_range.first > 0.0 && zeta_range.second < 1.0 && zeta_range.first <= zeta_range.second))
      throw std::invalid_argument("DatasetSpec: zeta range must lie inside (0,1)");
    if (!(amplitude_range.first > 0.0 && amplitude_range.first <= amplitude_range.second))
      throw std::invalid_argument("DatasetSpec: bad amplitude range");
    if (snr_range_db.second < snr_range_db.first) throw std::invalid_argument("DatasetSpec: bad snr range");
    if (n_samples_per_record < 2) throw std::invalid_argument("DatasetSpec: records too short");
    if (sample_rate_hz <= 0.0) throw std::invalid_argument("DatasetSpec: bad sample rate");
    if (n_records == 0) throw std::invalid_argument("DatasetSpec: no records");
  }
};

// One synthesized record together with its ground truth.
struct LabeledRecord {
  TimeRecord record;
  std::vector<Envelope> true_envelopes;  // one per mode
  std::vector<double> zetas;             // one per mode
  std::vector<double> amplitudes;        // one per mode
  double snr_db = kNoNoise;
};

struct LabeledDataset {
  DatasetSpec spec;
  std::vector<LabeledRecord> records;
};

// Per-record parameter draws come from a stream keyed by (seed, index), so
// records are independent and generation order does not matter.
inline LabeledDataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  LabeledDataset out;
  out.spec = spec;
  out.records.resize(spec.n_records);

  const std::size_t n_modes = spec.system_frequencies_hz.size();
  for (std::size_t i = 0; i < spec.n_records; ++i) {
    rng::Stream stream(spec.rng_seed, i);
    LabeledRecord& rec = out.records[i];
    rec.zetas.resize(n_modes);
    rec.amplitudes.resize(n_modes);
    ModalSystem system;
    system.modes.resize(n_modes);
    for (std::size_t m = 0; m < n_modes; ++m)
      rec.zetas[m] = stream.uniform(spec.zeta_range.first, spec.zeta_range.second);
    for (std::size_t m = 0; m < n_modes; ++m)
      rec.amplitudes[m] = stream.uniform(spec.amplitude_range.first, spec.amplitude_range.second);
    rec.snr_db = spec.noiseless ? kNoNoise : stream.uniform(spec.snr_range_db.first, spec.snr_range_db.second);

    for (std::size_t m = 0; m < n_modes; ++m)
      system.modes[m] = ModalMode{spec.system_frequencies_hz[m], rec.zetas[m], rec.amplitudes[m]};

    const std::uint64_t noise_seed = stream.next_u64();
    rec.record = apply_observation(synthesize_response(system, spec.n_samples_per_record, spec.sample_rate_hz),
                                   1.0, 0.0, rec.snr_db, noise_seed);
    rec.true_envelopes.reserve(n_modes);
    for (std::size_t m = 0; m < n_modes; ++m)
      rec.true_envelopes.push_back(true_envelope(system.modes[m], spec.n_samples_per_record, spec.sample_rate_hz));
  }
  return out;
}

}  // namespace modalenv
