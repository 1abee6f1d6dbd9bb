#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "modalenv/dataset.hpp"
#include "modalenv/kernels.hpp"

namespace modalenv {

// Fixed-format floating point text: shortest round-trippable form keeps
// output files byte-stable across runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double parsed = 0.0;
  std::sscanf(buf, "%lf", &parsed);
  for (int prec = 1; prec <= 16; ++prec) {
    char tight[40];
    std::snprintf(tight, sizeof tight, "%.*g", prec, v);
    std::sscanf(tight, "%lf", &parsed);
    if (parsed == v) return tight;
  }
  return buf;
}

// ---------------------------------------------------------------------
// Dataset container: little-endian binary with a JSON manifest alongside.
// Layout after the 8-byte magic "MENVDS1\0" and a u32 version:
//   u64 n_records, u32 n_modes, u32 n_samples, f64 sample_rate
//   f64 frequencies[n_modes]
//   per record: f64 snr_db, f64 zetas[n_modes], f64 amps[n_modes],
//               f64 samples[n_samples]
// True envelopes are reconstructed from the stored modal parameters.
// ---------------------------------------------------------------------

namespace detail_io {

inline void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline double get_f64(std::istream& is) {
  double v = 0.0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

inline constexpr char kDatasetMagic[8] = {'M', 'E', 'N', 'V', 'D', 'S', '1', '\0'};

}  // namespace detail_io

inline void save_dataset(const LabeledDataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
  os.write(detail_io::kDatasetMagic, 8);
  detail_io::put_u32(os, 1);
  detail_io::put_u64(os, ds.records.size());
  detail_io::put_u32(os, static_cast<std::uint32_t>(ds.spec.system_frequencies_hz.size()));
  detail_io::put_u32(os, static_cast<std::uint32_t>(ds.spec.n_samples_per_record));
  detail_io::put_f64(os, ds.spec.sample_rate_hz);
  for (double f : ds.spec.system_frequencies_hz) detail_io::put_f64(os, f);
  for (const auto& rec : ds.records) {
    detail_io::put_f64(os, rec.snr_db);
    for (double z : rec.zetas) detail_io::put_f64(os, z);
    for (double a : rec.amplitudes) detail_io::put_f64(os, a);
    for (double s : rec.record.samples) detail_io::put_f64(os, s);
  }
  if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

inline void save_dataset_manifest(const LabeledDataset& ds, const std::string& path) {
  nlohmann::json j;
  j["config_version"] = 1;
  j["container"] = "modalenv dataset v1";
  j["n_records"] = ds.records.size();
  j["n_samples_per_record"] = ds.spec.n_samples_per_record;
  j["sample_rate_hz"] = ds.spec.sample_rate_hz;
  j["system_frequencies_hz"] = ds.spec.system_frequencies_hz;
  j["zeta_range"] = {ds.spec.zeta_range.first, ds.spec.zeta_range.second};
  j["amplitude_range"] = {ds.spec.amplitude_range.first, ds.spec.amplitude_range.second};
  j["snr_range_db"] = {ds.spec.snr_range_db.first, ds.spec.snr_range_db.second};
  j["noiseless"] = ds.spec.noiseless;
  j["rng_seed"] = ds.spec.rng_seed;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_dataset_manifest: cannot open " + path);
  os << j.dump(2) << "\n";
}

inline LabeledDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(detail_io::kDatasetMagic, 8))
    throw std::runtime_error("load_dataset: bad magic in " + path);
  const std::uint32_t version = detail_io::get_u32(is);
  if (version != 1) throw std::runtime_error("load_dataset: unsupported version");
  LabeledDataset ds;
  const std::uint64_t n_records = detail_io::get_u64(is);
  const std::uint32_t n_modes = detail_io::get_u32(is);
  const std::uint32_t n_samples = detail_io::get_u32(is);
  ds.spec.sample_rate_hz = detail_io::get_f64(is);
  ds.spec.n_samples_per_record = n_samples;
  ds.spec.n_records = n_records;
  ds.spec.system_frequencies_hz.resize(n_modes);
  for (auto& f : ds.spec.system_frequencies_hz) f = detail_io::get_f64(is);
  ds.records.resize(n_records);
  for (auto& rec : ds.records) {
    rec.snr_db = detail_io::get_f64(is);
    rec.zetas.resize(n_modes);
    for (auto& z : rec.zetas) z = detail_io::get_f64(is);
    rec.amplitudes.resize(n_modes);
    for (auto& a : rec.amplitudes) a = detail_io::get_f64(is);
    rec.record.sample_rate_hz = ds.spec.sample_rate_hz;
    rec.record.samples.resize(n_samples);
    for (auto& s : rec.record.samples) s = detail_io::get_f64(is);
    rec.true_envelopes.reserve(n_modes);
    for (std::uint32_t m = 0; m < n_modes; ++m) {
      ModalMode mode{ds.spec.system_frequencies_hz[m], rec.zetas[m], rec.amplitudes[m]};
      rec.true_envelopes.push_back(true_envelope(mode, n_samples, ds.spec.sample_rate_hz));
    }
  }
  if (!is) throw std::runtime_error("load_dataset: truncated file " + path);
  return ds;
}

// ---------------------------------------------------------------------
// Fit registry: (scenario, mode, form) -> optimized theta plus metadata.
// ---------------------------------------------------------------------

struct FitEntry {
  double theta = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::uint64_t seed = 0;
};

class FitRegistry {
 public:
  using Key = std::tuple<std::string, std::size_t, std::string>;

  void set(const std::string& scenario, std::size_t mode_index, KernelForm form, const FitEntry& entry) {
    entries_[{scenario, mode_index, kernel_form_name(form)}] = entry;
  }

  bool contains(const std::string& scenario, std::size_t mode_index, KernelForm form) const {
    return entries_.count({scenario, mode_index, kernel_form_name(form)}) > 0;
  }

  const FitEntry& get(const std::string& scenario, std::size_t mode_index, KernelForm form) const {
    auto it = entries_.find({scenario, mode_index, kernel_form_name(form)});
    if (it == entries_.end())
      throw std::runtime_error(std::string("fit registry: no entry for ") + scenario + " mode " +
                               std::to_string(mode_index) + " form " + kernel_form_name(form));
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::map<Key, FitEntry>& entries() const { return entries_; }

  void save(const std::string& path) const {
    nlohmann::json j;
    j["config_version"] = 1;
    auto& fits = j["fits"];
    fits = nlohmann::json::array();
    for (const auto& [key, entry] : entries_) {
      nlohmann::json e;
      e["scenario"] = std::get<0>(key);
      e["mode_index"] = std::get<1>(key);
      e["form"] = std::get<2>(key);
      e["theta"] = entry.theta;
      e["train_loss"] = entry.train_loss;
      e["val_loss"] = entry.val_loss;
      e["seed"] = entry.seed;
      fits.push_back(e);
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("fit registry: cannot open " + path);
    os << j.dump(2) << "\n";
  }

  static FitRegistry load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("fit registry: cannot open " + path);
    nlohmann::json j;
    is >> j;
    FitRegistry reg;
    for (const auto& e : j.at("fits")) {
      FitEntry entry;
      entry.theta = e.at("theta").get<double>();
      entry.train_loss = e.value("train_loss", 0.0);
      entry.val_loss = e.value("val_loss", 0.0);
      entry.seed = e.value("seed", 0ULL);
      reg.entries_[{e.at("scenario").get<std::string>(), e.at("mode_index").get<std::size_t>(),
                    e.at("form").get<std::string>()}] = entry;
    }
    return reg;
  }

 private:
  std::map<Key, FitEntry> entries_;
};

}  // namespace modalenv
