#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "modalenv/record.hpp"

namespace modalenv {

// Continuous-time poles (rad/s); stable poles have negative real part and
// complex poles occur in conjugate pairs.
struct PoleSet {
  std::vector<std::complex<double>> poles;
  int model_order = 0;
};

inline double pole_damping(std::complex<double> p) { return -p.real() / std::abs(p); }
inline double pole_freq_hz(std::complex<double> p) { return p.imag() / (2.0 * std::numbers::pi); }

// Maps a discrete pole z = exp(p*dt) back to the continuous plane.
inline std::complex<double> continuous_pole_from_discrete(std::complex<double> z, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("continuous_pole_from_discrete: bad dt");
  return std::log(z) / dt;
}

// Local FRF section size around a peak; >= 2 bins a side for least-squares
// fits, exactly 1 a side for the three-point closed form.
struct SdofFitWindowSpec {
  std::size_t half_width_bins = 5;
};

namespace detail {

// Linear interpolation of the frequency where |H| crosses `level` between
// adjacent bins a and b.
inline double crossing_freq(const FrfData& frf, std::size_t a, std::size_t b, double level) {
  const double ma = std::abs(frf.values[a]);
  const double mb = std::abs(frf.values[b]);
  const double t = (level - ma) / (mb - ma);
  return frf.freqs_hz[a] + t * (frf.freqs_hz[b] - frf.freqs_hz[a]);
}

// Quartic magnitude model common to the SDOF fits: for a single mode,
//   1/|H(w)|^2 = a*w^4 + b*w^2 + c
// with a,c > 0, from which w_n^2 = sqrt(c/a) and zeta^2 = (b/(a*w_n^2)+2)/4.
// Frequencies are scaled by the peak frequency before solving.
inline std::pair<double, double> extract_sdof_params(double a, double b, double c, double omega_scale) {
  // With frequencies scaled to the peak, a genuine resonance has a ~ c;
  // a vanishing quartic coefficient means no resonance in the window.
  if (!(a > 1e-9 * std::abs(c)) || !(c > 0.0))
    throw std::runtime_error("sdof fit: degenerate peak (nonpositive quartic)");
  const double wn2_scaled = std::sqrt(c / a);
  const double radicand = 0.25 * (b / (a * wn2_scaled) + 2.0);
  if (!(radicand >= 0.0 && radicand < 1.0))
    throw std::runtime_error("sdof fit: damping ratio out of range");
  const double wn = omega_scale * std::sqrt(wn2_scaled);
  return {wn / (2.0 * std::numbers::pi), std::sqrt(radicand)};
}

inline std::pair<double, double> sdof_quartic_fit(const FrfData& frf, std::size_t first, std::size_t last,
                                                  std::size_t peak_index) {
  const std::size_t count = last - first + 1;
  const double omega_scale = 2.0 * std::numbers::pi * frf.freqs_hz[peak_index];
  const double mag_peak = std::abs(frf.values[peak_index]);
  if (mag_peak <= 0.0) throw std::runtime_error("sdof fit: zero magnitude at peak");
  Eigen::MatrixXd A(count, 3);
  Eigen::VectorXd y(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double mag = std::abs(frf.values[first + i]);
    if (mag <= 0.0) throw std::runtime_error("sdof fit: zero magnitude in window");
    const double u = std::pow(2.0 * std::numbers::pi * frf.freqs_hz[first + i] / omega_scale, 2);
    A(static_cast<Eigen::Index>(i), 0) = u * u;
    A(static_cast<Eigen::Index>(i), 1) = u;
    A(static_cast<Eigen::Index>(i), 2) = 1.0;
    y(static_cast<Eigen::Index>(i)) = (mag_peak * mag_peak) / (mag * mag);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 3) throw std::runtime_error("sdof fit: singular system");
  const Eigen::Vector3d coef = qr.solve(y);
  return extract_sdof_params(coef(0), coef(1), coef(2), omega_scale);
}

}  // namespace detail

// Half-power bandwidth estimate: zeta = (f_hi - f_lo) / (2 f_r), with the
// 1/sqrt(2) crossings located by linear interpolation on each side of the
// peak. A competing local maximum between the crossings (prominence above
// a tenth of the peak-to-level drop) marks the peak as non-isolated.
inline double half_power_damping(const FrfData& frf, std::size_t peak_index) {
  frf.validate();
  if (peak_index >= frf.size()) throw std::invalid_argument("half_power_damping: peak index out of range");
  const double peak = std::abs(frf.values[peak_index]);
  if (peak <= 0.0) throw std::runtime_error("half_power_damping: zero peak magnitude");
  if ((peak_index > 0 && std::abs(frf.values[peak_index - 1]) > peak) ||
      (peak_index + 1 < frf.size() && std::abs(frf.values[peak_index + 1]) > peak))
    throw std::invalid_argument("half_power_damping: index is not a local maximum");
  const double level = peak / std::numbers::sqrt2;

  auto scan = [&](bool up) -> std::size_t {
    double saddle = peak;
    std::size_t k = peak_index;
    while (true) {
      if (up ? (k + 1 >= frf.size()) : (k == 0))
        throw std::runtime_error("half_power_damping: half-power crossing not found in range");
      const std::size_t next = up ? k + 1 : k - 1;
      const double mag = std::abs(frf.values[next]);
      if (mag < level) return next;
      if (mag < saddle) saddle = mag;
      if (mag - saddle > 0.1 * (peak - level))
        throw std::runtime_error("half_power_damping: non-isolated peak");
      k = next;
    }
  };
  const std::size_t hi_idx = scan(true);
  const std::size_t lo_idx = scan(false);
  const double f_hi = detail::crossing_freq(frf, hi_idx - 1, hi_idx, level);
  const double f_lo = detail::crossing_freq(frf, lo_idx + 1, lo_idx, level);
  const double f_r = frf.freqs_hz[peak_index];
  return (f_hi - f_lo) / (2.0 * f_r);
}

// Least-squares SDOF fit of 1/|H|^2 over a window around the peak;
// returns (resonance frequency in Hz, damping ratio).
inline std::pair<double, double> sdof_local_fit(const FrfData& frf, std::size_t peak_index,
                                                const SdofFitWindowSpec& window) {
  frf.validate();
  if (window.half_width_bins < 2)
    throw std::invalid_argument("sdof_local_fit: need at least 2 bins per side");
  if (peak_index < window.half_width_bins || peak_index + window.half_width_bins >= frf.size())
    throw std::invalid_argument("sdof_local_fit: window does not fit inside FRF");
  return detail::sdof_quartic_fit(frf, peak_index - window.half_width_bins,
                                  peak_index + window.half_width_bins, peak_index);
}

// Three-point closed form: the same quartic system solved exactly from the
// peak bin and its two neighbours.
inline std::pair<double, double> yoshida_three_point(const FrfData& frf, std::size_t peak_index) {
  frf.validate();
  if (peak_index == 0 || peak_index + 1 >= frf.size())
    throw std::invalid_argument("yoshida_three_point: peak neighbours out of range");
  return detail::sdof_quartic_fit(frf, peak_index - 1, peak_index + 1, peak_index);
}

// Rational-function fit N(s)/D(s) to a complex FRF by iteratively
// reweighted linear least squares (Sanathanan-Koerner weighting, D monic).
// Poles are the roots of D; only stable poles are retained.
inline PoleSet lsrf_fit(const FrfData& frf, int num_order, int den_order, int n_iters = 20) {
  frf.validate();
  if (den_order < 2) throw std::invalid_argument("lsrf_fit: denominator order too small");
  if (num_order < 0) throw std::invalid_argument("lsrf_fit: bad numerator order");
  if (n_iters < 1) throw std::invalid_argument("lsrf_fit: need at least one iteration");
  if (frf.freqs_hz.front() <= 0.0)
    throw std::invalid_argument("lsrf_fit: frequency grid must exclude DC");
  const std::size_t count = frf.size();
  const std::size_t dim = static_cast<std::size_t>(num_order) + 1 + static_cast<std::size_t>(den_order);
  if (2 * count < dim) throw std::invalid_argument("lsrf_fit: not enough frequency points");

  const double omega_scale = 2.0 * std::numbers::pi * frf.freqs_hz.back();
  double mag_scale = 0.0;
  for (const auto& v : frf.values) mag_scale = std::max(mag_scale, std::abs(v));
  if (mag_scale <= 0.0) throw std::runtime_error("lsrf_fit: all-zero FRF");

  // Powers of (i*w_scaled) per frequency.
  const int max_order = std::max(num_order, den_order);
  std::vector<std::vector<std::complex<double>>> powers(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::complex<double> s{0.0, 2.0 * std::numbers::pi * frf.freqs_hz[k] / omega_scale};
    powers[k].resize(static_cast<std::size_t>(max_order) + 1);
    powers[k][0] = 1.0;
    for (int j = 1; j <= max_order; ++j) powers[k][j] = powers[k][static_cast<std::size_t>(j - 1)] * s;
  }

  std::vector<double> weight(count, 1.0);
  Eigen::VectorXd solution;
  for (int iter = 0; iter < n_iters; ++iter) {
    Eigen::MatrixXd A(2 * count, dim);
    Eigen::VectorXd b(2 * count);
    for (std::size_t k = 0; k < count; ++k) {
      const std::complex<double> h = frf.values[k] / mag_scale;
      const double w = weight[k];
      for (int j = 0; j <= num_order; ++j) {
        const std::complex<double> v = w * powers[k][static_cast<std::size_t>(j)];
        A(static_cast<Eigen::Index>(2 * k), j) = v.real();
        A(static_cast<Eigen::Index>(2 * k + 1), j) = v.imag();
      }
      for (int j = 0; j < den_order; ++j) {
        const std::complex<double> v = -w * h * powers[k][static_cast<std::size_t>(j)];
        const Eigen::Index col = static_cast<Eigen::Index>(num_order + 1 + j);
        A(static_cast<Eigen::Index>(2 * k), col) = v.real();
        A(static_cast<Eigen::Index>(2 * k + 1), col) = v.imag();
      }
      const std::complex<double> rhs = w * h * powers[k][static_cast<std::size_t>(den_order)];
      b(static_cast<Eigen::Index>(2 * k)) = rhs.real();
      b(static_cast<Eigen::Index>(2 * k + 1)) = rhs.imag();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < static_cast<Eigen::Index>(dim))
      throw std::runtime_error("lsrf_fit: ill-conditioned normal equations");
    solution = qr.solve(b);

    // SK reweighting by the current denominator magnitude.
    for (std::size_t k = 0; k < count; ++k) {
      std::complex<double> den = powers[k][static_cast<std::size_t>(den_order)];
      for (int j = 0; j < den_order; ++j)
        den += solution(static_cast<Eigen::Index>(num_order + 1 + j)) * powers[k][static_cast<std::size_t>(j)];
      weight[k] = 1.0 / std::max(std::abs(den), 1e-12);
    }
  }

  // Companion matrix of the monic scaled denominator.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(den_order, den_order);
  for (int j = 0; j < den_order; ++j) {
    companion(j, den_order - 1) = -solution(static_cast<Eigen::Index>(num_order + 1 + j));
    if (j > 0) companion(j, j - 1) = 1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, /*computeEigenvectors=*/false);

  PoleSet out;
  out.model_order = den_order;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const std::complex<double> p = eig.eigenvalues()(i) * omega_scale;
    if (p.real() < 0.0) out.poles.push_back(p);
  }
  return out;
}

// Common-denominator fit of one or more FRFs in the discrete basis
// z = exp(i*w*dt): reduced normal equations over all FRFs, highest
// denominator coefficient constrained to one, companion eigenvalues mapped
// back through p = ln(z)/dt. Stable poles only.
inline PoleSet plscf_fit(const std::vector<FrfData>& frfs, int model_order, double dt = 0.0) {
  if (frfs.empty()) throw std::invalid_argument("plscf_fit: no FRFs");
  if (model_order < 2) throw std::invalid_argument("plscf_fit: model order too small");
  const FrfData& ref = frfs.front();
  ref.validate();
  for (const auto& frf : frfs) {
    if (frf.freqs_hz.size() != ref.freqs_hz.size())
      throw std::invalid_argument("plscf_fit: FRFs must share one frequency grid");
    for (std::size_t k = 0; k < ref.freqs_hz.size(); ++k)
      if (std::abs(frf.freqs_hz[k] - ref.freqs_hz[k]) > 1e-9 * std::max(1.0, ref.freqs_hz[k]))
        throw std::invalid_argument("plscf_fit: FRFs must share one frequency grid");
  }
  const std::size_t count = ref.size();
  const std::size_t dim = static_cast<std::size_t>(model_order) + 1;
  if (count < dim) throw std::invalid_argument("plscf_fit: not enough frequency points");
  if (dt <= 0.0) dt = 1.0 / (2.0 * ref.freqs_hz.back());

  Eigen::MatrixXcd X(count, dim);
  for (std::size_t k = 0; k < count; ++k) {
    const double ang = 2.0 * std::numbers::pi * ref.freqs_hz[k] * dt;
    const std::complex<double> z{std::cos(ang), std::sin(ang)};
    X(static_cast<Eigen::Index>(k), 0) = 1.0;
    for (std::size_t j = 1; j < dim; ++j)
      X(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          X(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j - 1)) * z;
  }
  const Eigen::MatrixXd R = (X.adjoint() * X).real();
  Eigen::LDLT<Eigen::MatrixXd> r_solver(R);
  if (r_solver.info() != Eigen::Success)
    throw std::runtime_error("plscf_fit: rank-deficient normal equations");

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& frf : frfs) {
    Eigen::MatrixXcd Y(count, dim);
    double scale = 0.0;
    for (const auto& v : frf.values) scale = std::max(scale, std::abs(v));
    if (scale <= 0.0) throw std::runtime_error("plscf_fit: all-zero FRF");
    for (std::size_t k = 0; k < count; ++k)
      for (std::size_t j = 0; j < dim; ++j)
        Y(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
            -(frf.values[k] / scale) * X(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    const Eigen::MatrixXd S = (X.adjoint() * Y).real();
    const Eigen::MatrixXd T = (Y.adjoint() * Y).real();
    M += T - S.transpose() * r_solver.solve(S);
  }

  // alpha_m = 1; solve the reduced system for the lower coefficients.
  const Eigen::MatrixXd head = M.topLeftCorner(model_order, model_order);
  const Eigen::VectorXd tail = M.topRightCorner(model_order, 1);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(head);
  if (qr.rank() < model_order) throw std::runtime_error("plscf_fit: rank deficiency");
  const Eigen::VectorXd alpha = qr.solve(-tail);

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(model_order, model_order);
  for (int j = 0; j < model_order; ++j) {
    companion(j, model_order - 1) = -alpha(j);
    if (j > 0) companion(j, j - 1) = 1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, /*computeEigenvectors=*/false);

  PoleSet out;
  out.model_order = model_order;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const std::complex<double> z = eig.eigenvalues()(i);
    if (std::abs(z) >= 1.0 || std::abs(z) <= 0.0) continue;  // unstable or degenerate
    out.poles.push_back(continuous_pole_from_discrete(z, dt));
  }
  if (out.poles.empty()) throw std::runtime_error("plscf_fit: no stable poles");
  return out;
}

// Picks the stable positive-frequency pole nearest the target (within a
// 20% relative window; ties resolved toward the lower frequency).
inline std::pair<std::complex<double>, double> match_pole_to_mode(const PoleSet& poles,
                                                                  double target_freq_hz) {
  if (poles.poles.empty()) throw std::invalid_argument("match_pole_to_mode: empty pole set");
  if (target_freq_hz <= 0.0) throw std::invalid_argument("match_pole_to_mode: bad target frequency");
  bool found = false;
  std::complex<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& p : poles.poles) {
    if (p.real() >= 0.0 || p.imag() <= 0.0) continue;
    const double f = pole_freq_hz(p);
    const double dist = std::abs(f - target_freq_hz);
    if (dist > 0.2 * target_freq_hz) continue;
    if (dist < best_dist || (dist == best_dist && f < pole_freq_hz(best))) {
      best = p;
      best_dist = dist;
      found = true;
    }
  }
  if (!found) throw std::runtime_error("match_pole_to_mode: no stable pole near target frequency");
  return {best, pole_damping(best)};
}

}  // namespace modalenv
