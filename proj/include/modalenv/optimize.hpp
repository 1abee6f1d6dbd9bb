#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "modalenv/dataset.hpp"
#include "modalenv/kernels.hpp"
#include "modalenv/segment.hpp"
#include "modalenv/util.hpp"

namespace modalenv {

struct TrainConfig {
  int n_restarts = 15;
  double step_size = 0.01;  // relative step in log-theta space
  int max_iters = 500;
  double tol = 1e-6;  // relative loss-change stopping threshold
  std::pair<double, double> theta_bounds{0.0, 0.0};  // {0,0} = derive defaults
  std::pair<std::size_t, std::size_t> split{0, 0};   // {0,0} = use sets as given
  std::uint64_t seed = 0;

  void validate() const {
    if (n_restarts < 1) throw std::invalid_argument("TrainConfig: need at least one restart");
    if (step_size <= 0.0) throw std::invalid_argument("TrainConfig: bad step size");
    if (max_iters < 1) throw std::invalid_argument("TrainConfig: bad max_iters");
    if (tol <= 0.0) throw std::invalid_argument("TrainConfig: bad tol");
  }
};

struct RestartTrace {
  double theta_init = 0.0;
  double theta_final = 0.0;
  double final_loss = std::numeric_limits<double>::infinity();
  bool failed = false;
};

struct FitResult {
  KernelForm form = KernelForm::GaussianWindow;
  double theta_opt = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::vector<RestartTrace> restart_traces;
};

// Default search bounds: a time window must span at least two carrier
// cycles yet stay within half the record; a frequency filter must stay
// analytic and narrower than twice the gap to the nearest mode.
inline std::pair<double, double> default_theta_bounds(KernelForm form, double f_target_hz,
                                                      double duration_s, double gap_hz) {
  if (is_filter_form(form)) {
    const double lo = 2.0 * std::numbers::pi * 0.05 * f_target_hz;
    const double hi = 2.0 * std::numbers::pi * std::min(f_target_hz, 2.0 * gap_hz);
    return {lo, std::max(hi, lo * 1.5)};
  }
  const double lo = 2.0 / f_target_hz;
  const double hi = 0.5 * duration_s;
  return {lo, std::max(hi, lo * 1.5)};
}

namespace optim {

// One descent run in log-theta space with an adaptive step: the gradient is
// a central finite difference with step `step`, the first move has length
// `step`, and the learning rate grows on success and shrinks on rejection
// (cf. classic scalar minimum search). Stops on relative loss change below
// tol, a stalled step, or max_iters.
//
// This is the seam the optimizer tests inject synthetic losses through.
template <typename Loss>
RestartTrace descend_log_theta(Loss&& loss, double theta_init, std::pair<double, double> bounds,
                               double step, double tol, int max_iters) {
  const double lo = std::log(bounds.first);
  const double hi = std::log(bounds.second);
  if (!(lo < hi)) throw std::invalid_argument("descend_log_theta: bad bounds");
  auto clamp = [&](double x) { return std::min(hi, std::max(lo, x)); };

  RestartTrace trace;
  trace.theta_init = theta_init;
  double x = clamp(std::log(theta_init));
  double fx = loss(std::exp(x));
  double lr = 0.0;

  for (int iter = 0; iter < max_iters; ++iter) {
    const double xp = clamp(x + step);
    const double xm = clamp(x - step);
    if (xp <= xm) break;
    const double g = (loss(std::exp(xp)) - loss(std::exp(xm))) / (xp - xm);
    if (g == 0.0) break;
    if (lr == 0.0) lr = step / std::abs(g);

    // Trust-region cap of half a decade per move in log space.
    const double move = std::clamp(-lr * g, -0.5, 0.5);
    const double xt = clamp(x + move);
    const double ft = loss(std::exp(xt));
    if (ft < fx) {
      const double gain = fx - ft;
      x = xt;
      fx = ft;
      lr *= 1.5;
      if (gain <= tol * std::max(std::abs(fx), 1e-12)) break;
    } else {
      lr *= 0.5;
      if (std::abs(move) < 1e-12) break;
    }
  }
  trace.theta_final = std::exp(x);
  trace.final_loss = fx;
  return trace;
}

}  // namespace optim

// Dataset prepared for repeated loss evaluation at varying theta: record
// spectra, per-record segments computed from the true envelope of the
// target mode (so segments never depend on the estimator under test), and
// the normalized true envelope over each segment.
class LossEvaluator {
 public:
  LossEvaluator(const LabeledDataset& dataset, std::size_t first, std::size_t count,
                std::size_t target_mode_index, SegmentPolicy policy = {})
      : policy_(policy) {
    if (first + count > dataset.records.size() || count == 0)
      throw std::invalid_argument("LossEvaluator: bad record range");
    if (target_mode_index >= dataset.spec.system_frequencies_hz.size())
      throw std::invalid_argument("LossEvaluator: bad target mode index");
    policy_.validate();
    fs_ = dataset.spec.sample_rate_hz;
    n_ = dataset.spec.n_samples_per_record;
    center_freq_hz_ = dataset.spec.system_frequencies_hz[target_mode_index];

    items_.reserve(count);
    std::size_t skipped = 0;
    for (std::size_t i = first; i < first + count; ++i) {
      const LabeledRecord& rec = dataset.records[i];
      Item item;
      try {
        // Segments come from the true envelope, shared across all kernels
        // under test. The last eighth of the record is excluded: circular
        // filtering contaminates the tail for every kernel.
        Envelope truth_env = rec.true_envelopes[target_mode_index];
        truth_env.edge_guard = n_ / 8;
        auto segment = select_segment(truth_env, center_freq_hz_, policy_);
        item.n1 = segment.first;
        item.n2 = segment.second;
      } catch (const std::exception&) {
        ++skipped;
        continue;
      }
      const auto& truth = rec.true_envelopes[target_mode_index].values;
      item.truth_norm.resize(item.n2 - item.n1 + 1);
      const double anchor = truth[item.n1];
      for (std::size_t k = 0; k <= item.n2 - item.n1; ++k) item.truth_norm[k] = truth[item.n1 + k] / anchor;
      item.spectrum = fft::forward(rec.record.samples);
      items_.push_back(std::move(item));
    }
    if (skipped * 10 > count)
      throw std::runtime_error("LossEvaluator: more than 10% of records rejected by segment selection");
  }

  double sample_rate_hz() const { return fs_; }
  double record_duration_s() const { return static_cast<double>(n_) / fs_; }
  double center_freq_hz() const { return center_freq_hz_; }
  std::size_t size() const { return items_.size(); }

  // Mean envelope MSE over the prepared records for one kernel setting.
  double operator()(KernelForm form, double theta) const {
    const KernelSpec spec{form, theta, center_freq_hz_};
    const auto response = build_freq_response(spec, n_, fs_);
    std::vector<double> losses(items_.size(), 0.0);
    std::vector<unsigned char> ok(items_.size(), 0);

    util::parallel_for(items_.size(), [&](std::size_t i) {
      const Item& item = items_[i];
      thread_local std::vector<std::complex<double>> y;
      y.resize(n_);
      for (std::size_t k = 0; k < n_; ++k) y[k] = item.spectrum[k] * response[k];
      fft::transform(y.data(), n_, true);
      const double anchor = std::abs(y[item.n1]);
      if (anchor <= 0.0) return;
      double acc = 0.0;
      for (std::size_t k = 0; k <= item.n2 - item.n1; ++k) {
        const double d = std::abs(y[item.n1 + k]) / anchor - item.truth_norm[k];
        acc += d * d;
      }
      losses[i] = acc / static_cast<double>(item.n2 - item.n1 + 1);
      ok[i] = 1;
    });

    std::size_t used = 0;
    std::vector<double> kept;
    kept.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (ok[i]) {
        kept.push_back(losses[i]);
        ++used;
      }
    }
    if (used * 10 < items_.size() * 9)
      throw std::runtime_error("mean_dataset_loss: more than 10% of records failed");
    return util::pairwise_sum(kept) / static_cast<double>(used);
  }

 private:
  struct Item {
    std::vector<std::complex<double>> spectrum;
    std::size_t n1 = 0, n2 = 0;
    std::vector<double> truth_norm;
  };
  std::vector<Item> items_;
  SegmentPolicy policy_;
  double fs_ = 0.0;
  double center_freq_hz_ = 0.0;
  std::size_t n_ = 0;
};

// Convenience one-shot form of the objective in the discrete loss.
inline double mean_dataset_loss(KernelForm form, double theta, const LabeledDataset& dataset,
                                std::size_t target_mode_index, SegmentPolicy policy = {}) {
  LossEvaluator eval(dataset, 0, dataset.records.size(), target_mode_index, policy);
  return eval(form, theta);
}

// Multi-start fit of theta for one form: a coarse 8-point log-grid seeds
// the first restarts, the rest start log-uniform at random; every restart
// descends on the training loss and the winner is chosen on validation
// loss.
inline FitResult optimize_theta(KernelForm form, const LossEvaluator& train, const LossEvaluator& val,
                                const TrainConfig& cfg, double gap_to_nearest_mode_hz) {
  cfg.validate();
  std::pair<double, double> bounds = cfg.theta_bounds;
  if (bounds.first <= 0.0 || bounds.second <= bounds.first)
    bounds = default_theta_bounds(form, train.center_freq_hz(), train.record_duration_s(),
                                  gap_to_nearest_mode_hz);

  const int n_grid = std::min(8, cfg.n_restarts);
  const double llo = std::log(bounds.first);
  const double lhi = std::log(bounds.second);

  FitResult result;
  result.form = form;
  result.restart_traces.resize(static_cast<std::size_t>(cfg.n_restarts));

  for (int r = 0; r < cfg.n_restarts; ++r) {
    double theta0;
    if (r < n_grid) {
      const double frac = n_grid == 1 ? 0.5 : static_cast<double>(r) / static_cast<double>(n_grid - 1);
      theta0 = std::exp(llo + frac * (lhi - llo));
    } else {
      rng::Stream stream(cfg.seed, static_cast<std::uint64_t>(r));
      theta0 = std::exp(stream.uniform(llo, lhi));
    }
    RestartTrace& trace = result.restart_traces[static_cast<std::size_t>(r)];
    try {
      trace = optim::descend_log_theta([&](double th) { return train(form, th); }, theta0, bounds,
                                       cfg.step_size, cfg.tol, cfg.max_iters);
    } catch (const std::exception&) {
      trace.theta_init = theta0;
      trace.failed = true;
    }
  }

  double best_val = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& trace : result.restart_traces) {
    if (trace.failed) continue;
    double v;
    try {
      v = val(form, trace.theta_final);
    } catch (const std::exception&) {
      continue;
    }
    any = true;
    if (v < best_val) {
      best_val = v;
      result.theta_opt = trace.theta_final;
      result.train_loss = trace.final_loss;
      result.val_loss = v;
    }
  }
  if (!any) throw std::runtime_error("optimize_theta: all restarts failed");
  return result;
}

inline FitResult optimize_theta(KernelForm form, const LabeledDataset& train_set,
                                const LabeledDataset& val_set, const TrainConfig& cfg,
                                std::size_t target_mode_index, SegmentPolicy policy = {}) {
  const LossEvaluator train(train_set, 0, train_set.records.size(), target_mode_index, policy);
  const LossEvaluator val(val_set, 0, val_set.records.size(), target_mode_index, policy);
  double gap = std::numeric_limits<double>::infinity();
  const auto& freqs = train_set.spec.system_frequencies_hz;
  for (std::size_t m = 0; m < freqs.size(); ++m)
    if (m != target_mode_index) gap = std::min(gap, std::abs(freqs[m] - freqs[target_mode_index]));
  if (!std::isfinite(gap)) gap = train.center_freq_hz();
  return optimize_theta(form, train, val, cfg, gap);
}

}  // namespace modalenv
