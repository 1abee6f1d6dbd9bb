#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "modalenv/baselines.hpp"
#include "modalenv/damping.hpp"
#include "modalenv/io.hpp"
#include "modalenv/kernels.hpp"
#include "modalenv/observe.hpp"
#include "modalenv/scenarios.hpp"
#include "modalenv/segment.hpp"
#include "modalenv/spectral.hpp"
#include "modalenv/util.hpp"

namespace modalenv {

// ---------------------------------------------------------------------
// Methods: the nine envelope estimators plus the frequency-domain
// baselines, addressed by a stable string id.
// ---------------------------------------------------------------------

enum class MethodKind { EnvelopeKernel, PeakPicking, SdofFit, Yoshida, Lsrf, Plscf };

struct Method {
  MethodKind kind = MethodKind::EnvelopeKernel;
  KernelForm form = KernelForm::GaussianWindow;  // meaningful for EnvelopeKernel only
  std::string id;
};

inline Method method_from_id(const std::string& id) {
  if (id == "pp") return {MethodKind::PeakPicking, KernelForm::GaussianWindow, id};
  if (id == "sdof_fit") return {MethodKind::SdofFit, KernelForm::GaussianWindow, id};
  if (id == "yoshida") return {MethodKind::Yoshida, KernelForm::GaussianWindow, id};
  if (id == "lsrf") return {MethodKind::Lsrf, KernelForm::GaussianWindow, id};
  if (id == "plscf") return {MethodKind::Plscf, KernelForm::GaussianWindow, id};
  return {MethodKind::EnvelopeKernel, kernel_form_from_name(id), id};
}

inline std::vector<Method> methods_from_ids(const std::vector<std::string>& ids) {
  std::vector<Method> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(method_from_id(id));
  return out;
}

inline std::vector<std::string> all_envelope_method_ids() {
  std::vector<std::string> ids;
  for (KernelForm f : kAllKernelForms) ids.emplace_back(kernel_form_name(f));
  return ids;
}

inline std::vector<std::string> all_baseline_method_ids() {
  return {"pp", "sdof_fit", "yoshida", "lsrf", "plscf"};
}

// ---------------------------------------------------------------------
// Sweep configuration and result rows.
// ---------------------------------------------------------------------

struct ScenarioConfig {
  std::string name = "scenario1";
  ModalSystem system;
  std::size_t target_mode_index = 1;
  std::vector<double> snr_grid_db{-5, 0, 5, 10, 15, 20, 25, 30};
  std::size_t n_recordings = 20;
  std::size_t n_trials = 50;
  std::uint64_t rng_seed = 0;
  ObservationConfig observation;
  SegmentPolicy segment_policy;
  std::size_t n_samples = 4096;
  double sample_rate_hz = 800.0;

  void validate() const {
    system.validate();
    if (target_mode_index >= system.modes.size())
      throw std::invalid_argument("ScenarioConfig: target mode index out of range");
    if (snr_grid_db.empty()) throw std::invalid_argument("ScenarioConfig: empty SNR grid");
    if (n_recordings == 0 || n_trials == 0)
      throw std::invalid_argument("ScenarioConfig: trials and recordings must be positive");
    observation.validate(static_cast<double>(n_samples) / sample_rate_hz);
  }

  double target_freq_hz() const { return system.modes[target_mode_index].damped_freq_hz; }
  double target_zeta() const { return system.modes[target_mode_index].damping_ratio; }
};

struct InterferenceConfig {
  double target_freq_hz = 15.56;
  double target_zeta = 0.01;
  double target_amp = 1.0;
  double interferer_zeta = 0.04;
  double interferer_amp = 5.0;
  std::vector<double> delta_f_grid_hz{10, 8, 6, 5, 4, 3, 2, 1};
  std::vector<double> snr_points_db{0, 10};
  std::size_t n_recordings = 20;
  std::size_t n_trials = 50;
  std::uint64_t rng_seed = 0;
  ObservationConfig observation;
  SegmentPolicy segment_policy;
  std::size_t n_samples = 4096;
  double sample_rate_hz = 800.0;
  // Registry entries are looked up under this scenario name (the study
  // reuses parameters optimized for the plain scenarios).
  std::string fit_scenario = "scenario1";
  std::size_t fit_mode_index = 1;
};

struct ResultRow {
  std::string scenario;
  std::string method;
  double snr_db = 0.0;
  std::size_t trial = 0;
  double zeta_hat = 0.0;  // meaningful iff valid
  bool valid = false;
  double wall_ms = 0.0;
};

struct SweepOptions {
  bool timing = false;  // real wall times break byte-reproducibility
  unsigned max_threads = 0;
};

// ---------------------------------------------------------------------
// Single-trial evaluation shared by the scenario and interference sweeps.
// ---------------------------------------------------------------------

namespace detail_harness {

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::runtime_error("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Peak bin of |H| within a +/-20% window around the target frequency.
inline std::size_t peak_index_near(const FrfData& frf, double target_hz) {
  std::size_t best = frf.size();
  double best_mag = -1.0;
  for (std::size_t k = 0; k < frf.size(); ++k) {
    if (std::abs(frf.freqs_hz[k] - target_hz) > 0.2 * target_hz) continue;
    const double mag = std::abs(frf.values[k]);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  if (best == frf.size()) throw std::runtime_error("no FRF bins near target frequency");
  return best;
}

struct TrialSetting {
  const ModalSystem* system;
  std::string scenario_label;
  double snr_db;
  std::size_t trial;
  std::uint64_t item_seed;
};

struct KernelTheta {
  KernelForm form;
  double theta;
};

// Everything a trial needs that is shared across methods.
struct TrialData {
  std::vector<TimeRecord> records;
  std::vector<ComplexSpectrum> spectra;
  std::vector<std::size_t> impact_indices;  // filled only when baselines run
};

inline TrialData make_trial_records(const ModalSystem& system, const TimeRecord& clean, double snr_db,
                                    std::uint64_t item_seed, std::size_t n_recordings,
                                    const ObservationConfig& obs, bool need_spectra) {
  (void)system;
  TrialData data;
  data.records.reserve(n_recordings);
  for (std::size_t r = 0; r < n_recordings; ++r) {
    rng::Stream stream(item_seed, r);
    const double scale = stream.uniform(obs.scale_range.first, obs.scale_range.second);
    const double shift = stream.uniform(obs.shift_range_s.first, obs.shift_range_s.second);
    const std::uint64_t noise_seed = stream.next_u64();
    data.records.push_back(apply_observation(clean, scale, shift, snr_db, noise_seed));
  }
  if (need_spectra) {
    data.spectra.resize(data.records.size());
    for (std::size_t r = 0; r < data.records.size(); ++r)
      data.spectra[r] = forward_transform(data.records[r]);
  }
  return data;
}

inline double run_envelope_method(const TrialData& data, const KernelSpec& kernel, double target_freq_hz,
                                  const SegmentPolicy& policy) {
  const double fs = data.records.front().sample_rate_hz;
  const std::size_t n = data.records.front().size();
  const auto response = build_freq_response(kernel, n, fs);
  const std::size_t guard = kernel_edge_guard(kernel, n, fs);
  std::vector<Envelope> envelopes;
  envelopes.reserve(data.records.size());
  for (const auto& spec : data.spectra)
    envelopes.push_back(envelope_from_spectrum(spec, response, fs, guard));
  Envelope averaged = align_and_average(envelopes);
  averaged.segment = select_segment(averaged, target_freq_hz, policy);
  averaged = normalize_to_segment_start(averaged);
  const DampingEstimate est = fit_damping(averaged, target_freq_hz, policy);
  if (!est.valid) throw std::runtime_error("non-decaying envelope fit");
  return est.zeta;
}

}  // namespace detail_harness

// Per-(method, snr) summary statistics for boxplot and RMSE export.
// RMSE is reported in percentage points of zeta over the valid rows;
// all-invalid cells carry has_stats = false (absent in exports).
struct SummaryCell {
  std::string scenario;
  std::string method;
  double snr_db = 0.0;
  std::size_t n_total = 0;
  std::size_t n_valid = 0;
  double valid_fraction = 0.0;
  bool has_stats = false;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double rmse_percent = 0.0;
};

inline std::vector<SummaryCell> summarize(const std::vector<ResultRow>& rows, double zeta_true) {
  if (rows.empty()) throw std::invalid_argument("summarize: no rows");
  auto quantile = [](const std::vector<double>& sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
  };

  using Key = std::tuple<std::string, std::string, double>;  // scenario, method, snr
  std::vector<Key> order;
  std::map<Key, std::vector<double>> valid_values;
  std::map<Key, std::size_t> totals;
  for (const auto& row : rows) {
    const Key key{row.scenario, row.method, row.snr_db};
    if (!totals.count(key)) order.push_back(key);
    ++totals[key];
    if (row.valid) valid_values[key].push_back(row.zeta_hat);
  }

  std::vector<SummaryCell> cells;
  cells.reserve(order.size());
  for (const auto& key : order) {
    SummaryCell cell;
    cell.scenario = std::get<0>(key);
    cell.method = std::get<1>(key);
    cell.snr_db = std::get<2>(key);
    cell.n_total = totals[key];
    auto& vals = valid_values[key];
    cell.n_valid = vals.size();
    cell.valid_fraction = static_cast<double>(cell.n_valid) / static_cast<double>(cell.n_total);
    if (!vals.empty()) {
      cell.has_stats = true;
      std::sort(vals.begin(), vals.end());
      cell.median = quantile(vals, 0.5);
      cell.q1 = quantile(vals, 0.25);
      cell.q3 = quantile(vals, 0.75);
      double acc = 0.0;
      for (double z : vals) acc += (z - zeta_true) * (z - zeta_true);
      cell.rmse_percent = 100.0 * std::sqrt(acc / static_cast<double>(vals.size()));
    }
    cells.push_back(cell);
  }
  return cells;
}

namespace detail_harness {

// Evaluates every method on one trial. Failures become invalid rows.
inline std::vector<ResultRow> eval_trial(const TrialSetting& setting, const std::vector<Method>& methods,
                                         const std::map<std::string, KernelTheta>& kernel_thetas,
                                         double target_freq_hz, const KernelSpec& impact_kernel,
                                         const SegmentPolicy& policy, const ObservationConfig& obs,
                                         const TimeRecord& clean, std::size_t n_recordings,
                                         std::size_t expected_modes, bool timing) {
  bool any_baseline = false;
  for (const auto& m : methods) any_baseline |= (m.kind != MethodKind::EnvelopeKernel);

  TrialData data = make_trial_records(*setting.system, clean, setting.snr_db, setting.item_seed,
                                      n_recordings, obs, /*need_spectra=*/true);

  // Baselines share one impact-time estimate per record, taken from the
  // reference Gaussian envelope peak.
  std::vector<FrfData> truncate_frfs;
  std::vector<FrfData> impulse_frfs;
  if (any_baseline) {
    const double fs = clean.sample_rate_hz;
    const auto ref_response = build_freq_response(impact_kernel, clean.size(), fs);
    data.impact_indices.resize(data.records.size());
    for (std::size_t r = 0; r < data.records.size(); ++r) {
      const Envelope env = envelope_from_spectrum(data.spectra[r], ref_response, fs);
      const auto it = std::max_element(env.values.begin(), env.values.end());
      data.impact_indices[r] = static_cast<std::size_t>(it - env.values.begin());
    }
    const double lo = std::max(clean.sample_rate_hz / static_cast<double>(clean.size()),
                               0.3 * setting.system->modes.front().damped_freq_hz);
    const double hi = std::min(0.5 * clean.sample_rate_hz * 0.98,
                               2.0 * setting.system->modes.back().damped_freq_hz);
    truncate_frfs.reserve(data.records.size());
    impulse_frfs.reserve(data.records.size());
    for (std::size_t r = 0; r < data.records.size(); ++r) {
      truncate_frfs.push_back(crop_frf(to_one_sided_frf(frf_truncate(data.records[r], data.impact_indices[r])), lo, hi));
      impulse_frfs.push_back(crop_frf(frf_impulse_ratio(data.records[r], data.impact_indices[r]), lo, hi));
    }
  }

  const int pole_order = 2 * static_cast<int>(expected_modes) + 4;

  std::vector<ResultRow> rows;
  rows.reserve(methods.size());
  for (const auto& method : methods) {
    ResultRow row;
    row.scenario = setting.scenario_label;
    row.method = method.id;
    row.snr_db = setting.snr_db;
    row.trial = setting.trial;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (method.kind) {
        case MethodKind::EnvelopeKernel: {
          const auto it = kernel_thetas.find(method.id);
          if (it == kernel_thetas.end())
            throw std::runtime_error("missing fit registry entry for " + method.id);
          const KernelSpec kernel{it->second.form, it->second.theta, target_freq_hz};
          row.zeta_hat = run_envelope_method(data, kernel, target_freq_hz, policy);
          row.valid = true;
          break;
        }
        case MethodKind::PeakPicking:
        case MethodKind::SdofFit:
        case MethodKind::Yoshida: {
          std::vector<double> estimates;
          const auto& frfs = (method.kind == MethodKind::PeakPicking || method.kind == MethodKind::SdofFit)
                                 ? truncate_frfs
                                 : impulse_frfs;
          for (const auto& frf : frfs) {
            try {
              const std::size_t peak = peak_index_near(frf, target_freq_hz);
              double zeta;
              if (method.kind == MethodKind::PeakPicking) {
                zeta = half_power_damping(frf, peak);
              } else if (method.kind == MethodKind::SdofFit) {
                zeta = sdof_local_fit(frf, peak, SdofFitWindowSpec{5}).second;
              } else {
                zeta = yoshida_three_point(frf, peak).second;
              }
              if (zeta > 0.0 && zeta < 1.0) estimates.push_back(zeta);
            } catch (const std::exception&) {
              // per-record failure; the trial survives on the remaining records
            }
          }
          if (estimates.empty()) throw std::runtime_error("no valid per-record estimate");
          row.zeta_hat = median(estimates);
          row.valid = true;
          break;
        }
        case MethodKind::Lsrf: {
          std::vector<double> estimates;
          for (const auto& frf : impulse_frfs) {
            try {
              const PoleSet poles = lsrf_fit(frf, pole_order, pole_order, 20);
              estimates.push_back(match_pole_to_mode(poles, target_freq_hz).second);
            } catch (const std::exception&) {
            }
          }
          if (estimates.empty()) throw std::runtime_error("no valid per-record estimate");
          row.zeta_hat = median(estimates);
          row.valid = true;
          break;
        }
        case MethodKind::Plscf: {
          const PoleSet poles = plscf_fit(impulse_frfs, pole_order);
          row.zeta_hat = match_pole_to_mode(poles, target_freq_hz).second;
          row.valid = true;
          break;
        }
      }
    } catch (const std::exception&) {
      row.valid = false;
      row.zeta_hat = 0.0;
    }
    if (timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::map<std::string, KernelTheta> kernel_thetas_for(const std::vector<Method>& methods,
                                                            const FitRegistry& fits,
                                                            const std::string& scenario,
                                                            std::size_t mode_index) {
  std::map<std::string, KernelTheta> out;
  for (const auto& m : methods) {
    if (m.kind != MethodKind::EnvelopeKernel) continue;
    const FitEntry& entry = fits.get(scenario, mode_index, m.form);  // throws when missing
    out[m.id] = KernelTheta{m.form, entry.theta};
  }
  return out;
}

inline KernelSpec impact_kernel_for(const FitRegistry& fits, const std::string& scenario,
                                    std::size_t mode_index, double target_freq_hz) {
  double sigma = 2.0 / target_freq_hz;
  if (fits.contains(scenario, mode_index, KernelForm::GaussianWindow))
    sigma = fits.get(scenario, mode_index, KernelForm::GaussianWindow).theta;
  return KernelSpec{KernelForm::GaussianWindow, sigma, target_freq_hz};
}

}  // namespace detail_harness

// Scenario study: for every (snr, trial) generate a fresh ensemble of
// observed records and run every method on it. Deterministic under the
// configured seed; trials are independent work items.
inline std::vector<ResultRow> run_scenario_sweep(const ScenarioConfig& cfg, const std::vector<Method>& methods,
                                                 const FitRegistry& fits, const SweepOptions& options = {}) {
  cfg.validate();
  if (methods.empty()) throw std::invalid_argument("run_scenario_sweep: no methods");
  const auto kernel_thetas =
      detail_harness::kernel_thetas_for(methods, fits, cfg.name, cfg.target_mode_index);
  const KernelSpec impact_kernel =
      detail_harness::impact_kernel_for(fits, cfg.name, cfg.target_mode_index, cfg.target_freq_hz());

  const TimeRecord clean = synthesize_response(cfg.system, cfg.n_samples, cfg.sample_rate_hz);

  const std::size_t n_items = cfg.snr_grid_db.size() * cfg.n_trials;
  std::vector<std::vector<ResultRow>> slots(n_items);
  util::parallel_for(
      n_items,
      [&](std::size_t item) {
        const std::size_t snr_idx = item / cfg.n_trials;
        const std::size_t trial = item % cfg.n_trials;
        detail_harness::TrialSetting setting{&cfg.system, cfg.name, cfg.snr_grid_db[snr_idx], trial,
                                             rng::derive(cfg.rng_seed, item)};
        slots[item] = detail_harness::eval_trial(setting, methods, kernel_thetas, cfg.target_freq_hz(),
                                                 impact_kernel, cfg.segment_policy, cfg.observation, clean,
                                                 cfg.n_recordings, cfg.system.modes.size(), options.timing);
      },
      options.max_threads);

  std::vector<ResultRow> rows;
  rows.reserve(n_items * methods.size());
  for (auto& slot : slots)
    for (auto& row : slot) rows.push_back(std::move(row));

  std::map<std::string, std::size_t> method_pos;
  for (std::size_t i = 0; i < methods.size(); ++i) method_pos[methods[i].id] = i;
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
    if (a.trial != b.trial) return a.trial < b.trial;
    return method_pos[a.method] < method_pos[b.method];
  });
  return rows;
}

// Closely-spaced-mode study: rebuilds the 3-mode system per delta_f and
// sweeps the configured SNR points. Kernel parameters come from the fit
// registry under cfg.fit_scenario.
inline std::vector<ResultRow> run_interference_study(const InterferenceConfig& cfg,
                                                     const std::vector<Method>& methods,
                                                     const FitRegistry& fits,
                                                     const SweepOptions& options = {}) {
  if (methods.empty()) throw std::invalid_argument("run_interference_study: no methods");
  if (cfg.delta_f_grid_hz.empty() || cfg.snr_points_db.empty())
    throw std::invalid_argument("run_interference_study: empty grids");
  std::vector<ResultRow> all_rows;
  for (std::size_t d = 0; d < cfg.delta_f_grid_hz.size(); ++d) {
    const double delta_f = cfg.delta_f_grid_hz[d];
    ScenarioConfig scen;
    scen.name = "interference_df" + format_double(delta_f);
    scen.system = interference_system(cfg.target_freq_hz, delta_f, cfg.target_zeta, cfg.target_amp,
                                      cfg.interferer_zeta, cfg.interferer_amp);
    scen.target_mode_index = 1;
    scen.snr_grid_db = cfg.snr_points_db;
    scen.n_recordings = cfg.n_recordings;
    scen.n_trials = cfg.n_trials;
    scen.rng_seed = rng::derive(cfg.rng_seed, d);
    scen.observation = cfg.observation;
    scen.segment_policy = cfg.segment_policy;
    scen.n_samples = cfg.n_samples;
    scen.sample_rate_hz = cfg.sample_rate_hz;

    // Reuse the registry entries fitted for the plain scenario.
    FitRegistry remapped;
    for (const auto& m : methods) {
      if (m.kind != MethodKind::EnvelopeKernel) continue;
      remapped.set(scen.name, scen.target_mode_index, m.form,
                   fits.get(cfg.fit_scenario, cfg.fit_mode_index, m.form));
    }
    if (fits.contains(cfg.fit_scenario, cfg.fit_mode_index, KernelForm::GaussianWindow))
      remapped.set(scen.name, scen.target_mode_index, KernelForm::GaussianWindow,
                   fits.get(cfg.fit_scenario, cfg.fit_mode_index, KernelForm::GaussianWindow));

    auto rows = run_scenario_sweep(scen, methods, remapped, options);
    all_rows.insert(all_rows.end(), std::make_move_iterator(rows.begin()),
                    std::make_move_iterator(rows.end()));
  }
  return all_rows;
}

// ---------------------------------------------------------------------
// Exports. results.csv is the canonical output; summaries are derived.
// ---------------------------------------------------------------------

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "scenario,method,snr_db,trial,zeta_hat,valid,wall_ms\n";
  for (const auto& row : rows) {
    os << row.scenario << ',' << row.method << ',' << format_double(row.snr_db) << ',' << row.trial << ',';
    if (row.valid) os << format_double(row.zeta_hat);
    os << ',' << (row.valid ? 1 : 0) << ',' << format_double(row.wall_ms) << '\n';
  }
}

inline void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_results_csv: cannot open " + path);
  write_results_csv(os, rows);
}

inline nlohmann::json summary_to_json(const std::vector<SummaryCell>& cells, double zeta_true) {
  nlohmann::json j;
  j["config_version"] = 1;
  j["zeta_true"] = zeta_true;
  auto& arr = j["cells"];
  arr = nlohmann::json::array();
  for (const auto& cell : cells) {
    nlohmann::json c;
    c["scenario"] = cell.scenario;
    c["method"] = cell.method;
    c["snr_db"] = cell.snr_db;
    c["n_total"] = cell.n_total;
    c["n_valid"] = cell.n_valid;
    c["valid_fraction"] = cell.valid_fraction;
    if (cell.has_stats) {
      c["median"] = cell.median;
      c["q1"] = cell.q1;
      c["q3"] = cell.q3;
      c["rmse_percent"] = cell.rmse_percent;
    }
    arr.push_back(c);
  }
  return j;
}

inline void write_summary_json(const std::string& path, const std::vector<SummaryCell>& cells,
                               double zeta_true) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_summary_json: cannot open " + path);
  os << summary_to_json(cells, zeta_true).dump(2) << "\n";
}

}  // namespace modalenv
