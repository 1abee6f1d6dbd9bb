#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modalenv/harness.hpp"
#include "modalenv/optimize.hpp"

namespace modalenv::cli {

namespace detail {

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("MODALENV_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::runtime_error("MODALENV_SEED is not a valid integer");
    }
  }
  return 0;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::runtime_error("expected a comma-separated number list, got: " + text);
  return out;
}

inline std::vector<std::string> parse_string_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<std::string> resolve_method_ids(const std::string& spec) {
  if (spec == "all" || spec.empty()) return all_envelope_method_ids();
  if (spec == "baselines") return all_baseline_method_ids();
  if (spec == "compare") {
    // Paper comparison set: leading envelope estimators plus all baselines.
    std::vector<std::string> ids{"gaussian_window", "triangle_window", "welch_window", "blackman_filter"};
    for (const auto& b : all_baseline_method_ids()) ids.push_back(b);
    return ids;
  }
  return parse_string_list(spec);
}

inline nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  is >> j;
  const int version = j.value("config_version", 1);
  if (version != 1) throw std::runtime_error("unsupported config_version");
  return j;
}

// Common knobs shared by the study subcommands; config file values are
// used where flags were not given.
struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool timing = false;
  bool paper_scale = false;
  unsigned threads = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--out", out_dir, "output directory");
    auto* seed_opt = cmd->add_option("--seed", seed, "RNG seed (overrides MODALENV_SEED)");
    cmd->add_flag("--timing", timing, "record real per-method wall times (breaks byte-reproducibility)");
    cmd->add_flag("--paper-scale", paper_scale, "paper-scale dataset/ensemble sizes");
    cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    seed_cb_ = seed_opt;
  }

  void finalize() {
    seed_given = seed_cb_ && seed_cb_->count() > 0;
    if (!seed_given) seed = default_seed();
    std::filesystem::create_directories(out_dir);
  }

 private:
  CLI::Option* seed_cb_ = nullptr;
};

inline ObservationConfig observation_from_config(const nlohmann::json& cfg) {
  ObservationConfig obs;
  if (cfg.contains("observation")) {
    const auto& o = cfg["observation"];
    if (o.contains("scale_range")) obs.scale_range = {o["scale_range"][0], o["scale_range"][1]};
    if (o.contains("shift_range_s")) obs.shift_range_s = {o["shift_range_s"][0], o["shift_range_s"][1]};
    if (o.contains("snr_range_db")) obs.snr_range_db = {o["snr_range_db"][0], o["snr_range_db"][1]};
  }
  return obs;
}

inline SegmentPolicy segment_from_config(const nlohmann::json& cfg) {
  SegmentPolicy policy;
  if (cfg.contains("segment")) {
    const auto& s = cfg["segment"];
    policy.floor_fraction = s.value("floor_fraction", policy.floor_fraction);
    policy.cycles = s.value("cycles", policy.cycles);
  }
  return policy;
}

inline DatasetSpec training_dataset_spec(const ModalSystem& system, const nlohmann::json& cfg,
                                         std::size_t n_records, std::uint64_t seed) {
  DatasetSpec spec;
  for (const auto& m : system.modes) spec.system_frequencies_hz.push_back(m.damped_freq_hz);
  spec.n_records = n_records;
  spec.rng_seed = seed;
  if (cfg.contains("train") && cfg["train"].contains("dataset")) {
    const auto& d = cfg["train"]["dataset"];
    if (d.contains("zeta_range")) spec.zeta_range = {d["zeta_range"][0], d["zeta_range"][1]};
    if (d.contains("amplitude_range")) spec.amplitude_range = {d["amplitude_range"][0], d["amplitude_range"][1]};
    if (d.contains("snr_range_db")) spec.snr_range_db = {d["snr_range_db"][0], d["snr_range_db"][1]};
    spec.n_samples_per_record = d.value("n_samples", spec.n_samples_per_record);
    spec.sample_rate_hz = d.value("sample_rate_hz", spec.sample_rate_hz);
  }
  return spec;
}

}  // namespace detail

// Full command-line entry point; argv[0] is the program name.
inline int cli_entry(std::vector<std::string> args) {
  CLI::App app{"modalenv: modal damping estimation via optimized envelope estimators"};
  app.require_subcommand(1);

  using detail::CommonOpts;

  // --- generate ---------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("generate", "synthesize a labeled dataset");
  CommonOpts gen_opts;
  gen_opts.attach(gen_cmd);
  std::string gen_scenario = "scenario1";
  std::string gen_frequencies;
  std::string gen_zeta_range, gen_amp_range, gen_snr_range;
  std::size_t gen_records = 500;
  std::size_t gen_samples = 4096;
  double gen_fs = 800.0;
  bool gen_noiseless = false;
  std::string gen_prefix = "dataset";
  gen_cmd->add_option("--scenario", gen_scenario, "scenario1|scenario2|scenario3");
  gen_cmd->add_option("--frequencies", gen_frequencies, "custom mode frequencies (Hz, comma separated)");
  gen_cmd->add_option("--zeta-range", gen_zeta_range, "min,max damping ratio");
  gen_cmd->add_option("--amplitude-range", gen_amp_range, "min,max modal amplitude");
  gen_cmd->add_option("--snr-range", gen_snr_range, "min,max SNR in dB");
  gen_cmd->add_option("--records", gen_records, "number of records");
  gen_cmd->add_option("--samples", gen_samples, "samples per record");
  gen_cmd->add_option("--sample-rate", gen_fs, "sample rate in Hz");
  gen_cmd->add_flag("--noiseless", gen_noiseless, "skip the AWGN stage");
  gen_cmd->add_option("--prefix", gen_prefix, "output file prefix");

  // --- optimize ---------------------------------------------------------
  auto* opt_cmd = app.add_subcommand("optimize", "fit kernel widths against synthetic ground truth");
  CommonOpts opt_opts;
  opt_opts.attach(opt_cmd);
  std::string opt_scenario = "scenario1";
  std::string opt_forms = "all";
  std::size_t opt_mode = 1;
  std::size_t opt_records = 500;
  int opt_restarts = 15;
  int opt_max_iters = 500;
  double opt_step = 0.01;
  double opt_tol = 1e-6;
  std::string opt_registry = "fits.json";
  bool opt_append = false;
  opt_cmd->add_option("--scenario", opt_scenario, "scenario1|scenario2|scenario3");
  opt_cmd->add_option("--forms", opt_forms, "all or comma-separated kernel form names");
  opt_cmd->add_option("--mode", opt_mode, "target mode index (0-based)");
  opt_cmd->add_option("--records", opt_records, "training+validation record count");
  opt_cmd->add_option("--restarts", opt_restarts, "optimizer restarts");
  opt_cmd->add_option("--max-iters", opt_max_iters, "descent iteration cap");
  opt_cmd->add_option("--step", opt_step, "relative step in log-theta");
  opt_cmd->add_option("--tol", opt_tol, "relative loss-change tolerance");
  opt_cmd->add_option("--registry", opt_registry, "fit registry output file name");
  opt_cmd->add_flag("--append", opt_append, "merge into an existing registry");

  // --- estimate ---------------------------------------------------------
  auto* est_cmd = app.add_subcommand("estimate", "estimate damping from a dataset ensemble");
  CommonOpts est_opts;
  est_opts.attach(est_cmd);
  std::string est_dataset;
  std::string est_form = "gaussian_window";
  double est_theta = 0.0;
  std::string est_fits;
  std::string est_fit_scenario = "scenario1";
  std::size_t est_mode = 1;
  est_cmd->add_option("--dataset", est_dataset, "dataset container file")->required();
  est_cmd->add_option("--form", est_form, "kernel form");
  est_cmd->add_option("--theta", est_theta, "kernel width (overrides registry)");
  est_cmd->add_option("--fits", est_fits, "fit registry to take theta from");
  est_cmd->add_option("--fit-scenario", est_fit_scenario, "registry scenario name");
  est_cmd->add_option("--mode", est_mode, "target mode index (0-based)");

  // --- sweep / compare ---------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "scenario SNR sweep");
  auto* compare_cmd = app.add_subcommand("compare", "envelope estimators vs frequency-domain baselines");
  CommonOpts sweep_opts, compare_opts;
  struct SweepArgs {
    std::string scenario = "scenario1";
    std::string fits;
    std::string methods;
    std::string snr_grid;
    std::size_t trials = 50;
    std::size_t recordings = 20;
    std::size_t mode = 1;
    bool dry_run = false;
  };
  SweepArgs sweep_args, compare_args;
  compare_args.methods = "compare";
  auto attach_sweep = [](CLI::App* cmd, SweepArgs& a, CommonOpts& opts) {
    opts.attach(cmd);
    cmd->add_option("--scenario", a.scenario, "scenario1|scenario2|scenario3");
    cmd->add_option("--fits", a.fits, "fit registry file")->required();
    cmd->add_option("--methods", a.methods, "method ids, or all|baselines|compare");
    cmd->add_option("--snr", a.snr_grid, "SNR grid in dB (comma separated)");
    cmd->add_option("--trials", a.trials, "Monte-Carlo trials per SNR");
    cmd->add_option("--recordings", a.recordings, "records per ensemble");
    cmd->add_option("--mode", a.mode, "target mode index (0-based)");
    cmd->add_flag("--dry-run", a.dry_run, "validate config and print the planned grid");
  };
  attach_sweep(sweep_cmd, sweep_args, sweep_opts);
  attach_sweep(compare_cmd, compare_args, compare_opts);

  // --- interfere ---------------------------------------------------------
  auto* intf_cmd = app.add_subcommand("interfere", "closely spaced mode study");
  CommonOpts intf_opts;
  intf_opts.attach(intf_cmd);
  std::string intf_fits;
  std::string intf_methods = "all";
  std::string intf_delta_f = "10,8,6,5,4,3,2,1";
  std::string intf_snr = "0,10";
  std::size_t intf_trials = 50;
  std::size_t intf_recordings = 20;
  std::string intf_fit_scenario = "scenario1";
  intf_cmd->add_option("--fits", intf_fits, "fit registry file")->required();
  intf_cmd->add_option("--methods", intf_methods, "method ids or all");
  intf_cmd->add_option("--delta-f", intf_delta_f, "frequency separations in Hz");
  intf_cmd->add_option("--snr", intf_snr, "SNR points in dB");
  intf_cmd->add_option("--trials", intf_trials, "Monte-Carlo trials per point");
  intf_cmd->add_option("--recordings", intf_recordings, "records per ensemble");
  intf_cmd->add_option("--fit-scenario", intf_fit_scenario, "registry scenario the thetas come from");

  try {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? 0 : 2;
    }

    if (gen_cmd->parsed()) {
      gen_opts.finalize();
      const nlohmann::json cfg = detail::load_config(gen_opts.config_path);
      DatasetSpec spec;
      if (!gen_frequencies.empty()) {
        spec.system_frequencies_hz = detail::parse_double_list(gen_frequencies);
      } else {
        for (const auto& m : scenario_system(gen_scenario).modes)
          spec.system_frequencies_hz.push_back(m.damped_freq_hz);
      }
      if (!gen_zeta_range.empty()) {
        const auto r = detail::parse_double_list(gen_zeta_range);
        spec.zeta_range = {r.front(), r.back()};
      }
      if (!gen_amp_range.empty()) {
        const auto r = detail::parse_double_list(gen_amp_range);
        spec.amplitude_range = {r.front(), r.back()};
      }
      if (!gen_snr_range.empty()) {
        const auto r = detail::parse_double_list(gen_snr_range);
        spec.snr_range_db = {r.front(), r.back()};
      }
      spec.n_records = gen_opts.paper_scale ? 8500 : gen_records;
      spec.n_samples_per_record = gen_samples;
      spec.sample_rate_hz = gen_fs;
      spec.noiseless = gen_noiseless;
      spec.rng_seed = gen_opts.seed;
      (void)cfg;
      const LabeledDataset ds = generate_dataset(spec);
      const auto base = std::filesystem::path(gen_opts.out_dir) / gen_prefix;
      save_dataset(ds, base.string() + ".bin");
      save_dataset_manifest(ds, base.string() + "_manifest.json");
      std::cout << "wrote " << ds.records.size() << " records to " << base.string() << ".bin\n";
      return 0;
    }

    if (opt_cmd->parsed()) {
      opt_opts.finalize();
      const nlohmann::json cfg = detail::load_config(opt_opts.config_path);
      const ModalSystem system = scenario_system(opt_scenario);
      if (opt_mode >= system.modes.size()) throw std::runtime_error("optimize: mode index out of range");
      const std::size_t n_records = opt_opts.paper_scale ? 8500 : opt_records;
      DatasetSpec spec = detail::training_dataset_spec(system, cfg, n_records, opt_opts.seed);
      const LabeledDataset ds = generate_dataset(spec);
      const std::size_t n_train = opt_opts.paper_scale ? 7000 : (n_records * 4) / 5;
      const std::size_t n_val = ds.records.size() - n_train;
      const SegmentPolicy policy = detail::segment_from_config(cfg);

      const LossEvaluator train(ds, 0, n_train, opt_mode, policy);
      const LossEvaluator val(ds, n_train, n_val, opt_mode, policy);
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < spec.system_frequencies_hz.size(); ++m)
        if (m != opt_mode)
          gap = std::min(gap, std::abs(spec.system_frequencies_hz[m] - spec.system_frequencies_hz[opt_mode]));
      if (!std::isfinite(gap)) gap = spec.system_frequencies_hz[opt_mode];

      TrainConfig tc;
      tc.n_restarts = opt_restarts;
      tc.max_iters = opt_max_iters;
      tc.step_size = opt_step;
      tc.tol = opt_tol;
      tc.seed = opt_opts.seed;

      std::vector<KernelForm> forms;
      if (opt_forms == "all") {
        forms.assign(kAllKernelForms.begin(), kAllKernelForms.end());
      } else {
        for (const auto& name : detail::parse_string_list(opt_forms))
          forms.push_back(kernel_form_from_name(name));
      }

      const auto registry_path = (std::filesystem::path(opt_opts.out_dir) / opt_registry).string();
      FitRegistry registry;
      if (opt_append && std::filesystem::exists(registry_path)) registry = FitRegistry::load(registry_path);
      for (KernelForm form : forms) {
        const FitResult fit = optimize_theta(form, train, val, tc, gap);
        registry.set(opt_scenario, opt_mode, form, FitEntry{fit.theta_opt, fit.train_loss, fit.val_loss, tc.seed});
        std::cout << kernel_form_name(form) << ": theta=" << format_double(fit.theta_opt)
                  << " train_loss=" << format_double(fit.train_loss)
                  << " val_loss=" << format_double(fit.val_loss) << "\n";
      }
      registry.save(registry_path);
      std::cout << "wrote " << registry.size() << " entries to " << registry_path << "\n";
      return 0;
    }

    if (est_cmd->parsed()) {
      est_opts.finalize();
      const LabeledDataset ds = load_dataset(est_dataset);
      if (est_mode >= ds.spec.system_frequencies_hz.size())
        throw std::runtime_error("estimate: mode index out of range");
      const double freq = ds.spec.system_frequencies_hz[est_mode];
      double theta = est_theta;
      const KernelForm form = kernel_form_from_name(est_form);
      if (theta <= 0.0) {
        if (est_fits.empty()) throw std::runtime_error("estimate: need --theta or --fits");
        theta = FitRegistry::load(est_fits).get(est_fit_scenario, est_mode, form).theta;
      }
      std::vector<TimeRecord> records;
      records.reserve(ds.records.size());
      for (const auto& rec : ds.records) records.push_back(rec.record);
      EnsembleConfig ec;
      ec.kernel = KernelSpec{form, theta, freq};
      const DampingEstimate est = estimate_from_ensemble(records, ec, freq);
      if (!est.valid) throw std::runtime_error("estimate: non-decaying fit");
      std::cout << "zeta_hat = " << format_double(est.zeta) << "\n";
      std::cout << "zeta_hat_percent = " << format_double(100.0 * est.zeta) << "\n";
      std::cout << "r_squared = " << format_double(est.r_squared) << "\n";
      std::cout << "segment = [" << est.segment.first << ", " << est.segment.second << "]\n";
      return 0;
    }

    if (sweep_cmd->parsed() || compare_cmd->parsed()) {
      const bool is_compare = compare_cmd->parsed();
      SweepArgs& a = is_compare ? compare_args : sweep_args;
      CommonOpts& opts = is_compare ? compare_opts : sweep_opts;
      opts.finalize();
      const nlohmann::json cfg = detail::load_config(opts.config_path);

      ScenarioConfig scen;
      scen.name = a.scenario;
      scen.system = scenario_system(a.scenario);
      scen.target_mode_index = a.mode;
      scen.n_trials = a.trials;
      scen.n_recordings = opts.paper_scale ? 100 : a.recordings;
      scen.rng_seed = opts.seed;
      scen.observation = detail::observation_from_config(cfg);
      scen.segment_policy = detail::segment_from_config(cfg);
      if (!a.snr_grid.empty()) scen.snr_grid_db = detail::parse_double_list(a.snr_grid);
      else if (cfg.contains("sweep") && cfg["sweep"].contains("snr_grid_db"))
        scen.snr_grid_db = cfg["sweep"]["snr_grid_db"].get<std::vector<double>>();

      std::string method_spec = a.methods.empty() ? std::string("all") : a.methods;
      if (cfg.contains("methods") && a.methods.empty())
        method_spec = cfg["methods"].is_string() ? cfg["methods"].get<std::string>() : a.methods;
      const auto methods = methods_from_ids(detail::resolve_method_ids(method_spec));

      if (a.dry_run) {
        scen.validate();
        std::cout << "scenario " << scen.name << ": " << methods.size() << " methods x "
                  << scen.snr_grid_db.size() << " SNR points x " << scen.n_trials << " trials ("
                  << scen.n_recordings << " recordings each)\n";
        for (const auto& m : methods) std::cout << "  method " << m.id << "\n";
        std::cout << "  snr_db:";
        for (double s : scen.snr_grid_db) std::cout << " " << format_double(s);
        std::cout << "\n";
        return 0;
      }

      const FitRegistry fits = FitRegistry::load(a.fits);
      SweepOptions so;
      so.timing = opts.timing;
      so.max_threads = opts.threads;
      const auto rows = run_scenario_sweep(scen, methods, fits, so);
      const auto cells = summarize(rows, scen.target_zeta());
      const auto csv_path = (std::filesystem::path(opts.out_dir) / "results.csv").string();
      const auto json_path = (std::filesystem::path(opts.out_dir) / "summary.json").string();
      write_results_csv(csv_path, rows);
      write_summary_json(json_path, cells, scen.target_zeta());
      std::cout << "wrote " << rows.size() << " rows to " << csv_path << "\n";
      return 0;
    }

    if (intf_cmd->parsed()) {
      intf_opts.finalize();
      const nlohmann::json cfg = detail::load_config(intf_opts.config_path);
      InterferenceConfig ic;
      ic.delta_f_grid_hz = detail::parse_double_list(intf_delta_f);
      ic.snr_points_db = detail::parse_double_list(intf_snr);
      ic.n_trials = intf_trials;
      ic.n_recordings = intf_opts.paper_scale ? 100 : intf_recordings;
      ic.rng_seed = intf_opts.seed;
      ic.observation = detail::observation_from_config(cfg);
      ic.segment_policy = detail::segment_from_config(cfg);
      ic.fit_scenario = intf_fit_scenario;
      const FitRegistry fits = FitRegistry::load(intf_fits);
      const auto methods = methods_from_ids(detail::resolve_method_ids(intf_methods));
      SweepOptions so;
      so.timing = intf_opts.timing;
      so.max_threads = intf_opts.threads;
      const auto rows = run_interference_study(ic, methods, fits, so);
      const auto cells = summarize(rows, ic.target_zeta);
      const auto csv_path = (std::filesystem::path(intf_opts.out_dir) / "results.csv").string();
      const auto json_path = (std::filesystem::path(intf_opts.out_dir) / "summary.json").string();
      write_results_csv(csv_path, rows);
      write_summary_json(json_path, cells, ic.target_zeta);
      std::cout << "wrote " << rows.size() << " rows to " << csv_path << "\n";
      return 0;
    }

    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cli_entry(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_entry(std::move(args));
}

}  // namespace modalenv::cli
