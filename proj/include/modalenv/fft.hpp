#pragma once

#include <bit>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace modalenv::fft {

using cdouble = std::complex<double>;

namespace detail {

// Precomputed tables for a power-of-two transform. Immutable once built,
// shared between threads through the plan cache below.
struct Pow2Plan {
  std::size_t n;
  std::vector<std::size_t> bitrev;
  std::vector<cdouble> twiddle;  // exp(-2*pi*i*k/n), k < n/2

  explicit Pow2Plan(std::size_t size) : n(size), bitrev(size) {
    const int logn = std::countr_zero(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < logn; ++b) r |= ((i >> b) & 1u) << (logn - 1 - b);
      bitrev[i] = r;
    }
    twiddle.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle[k] = {std::cos(ang), std::sin(ang)};
    }
  }
};

inline const Pow2Plan& pow2_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<Pow2Plan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<Pow2Plan>(n)).first;
  return *it->second;
}

// In-place forward DFT, n a power of two, unnormalized.
inline void fft_pow2(cdouble* x, std::size_t n) {
  if (n < 2) return;
  const Pow2Plan& plan = pow2_plan(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = plan.bitrev[i];
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t step = n / len;
    for (std::size_t base = 0; base < n; base += len) {
      const cdouble* w = plan.twiddle.data();
      for (std::size_t k = 0; k < half; ++k) {
        const cdouble t = x[base + k + half] * w[k * step];
        const cdouble u = x[base + k];
        x[base + k] = u + t;
        x[base + k + half] = u - t;
      }
    }
  }
}

// Bluestein chirp tables for arbitrary-length transforms.
struct BluesteinPlan {
  std::size_t n;
  std::size_t m;                   // padded power-of-two length >= 2n-1
  std::vector<cdouble> chirp;      // exp(-i*pi*k^2/n)
  std::vector<cdouble> kernel_ft;  // FFT of the conjugate chirp, length m

  explicit BluesteinPlan(std::size_t size) : n(size) {
    m = std::bit_ceil(2 * n - 1);
    chirp.resize(n);
    std::vector<cdouble> kernel(m, cdouble{0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) {
      // k^2 mod 2n keeps the phase argument small for large k.
      const std::size_t k2 = (k * k) % (2 * n);
      const double ang = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
      chirp[k] = {std::cos(ang), std::sin(ang)};
    }
    kernel[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
      kernel[k] = std::conj(chirp[k]);
      kernel[m - k] = std::conj(chirp[k]);
    }
    fft_pow2(kernel.data(), m);
    kernel_ft = std::move(kernel);
  }
};

inline const BluesteinPlan& bluestein_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<BluesteinPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<BluesteinPlan>(n)).first;
  return *it->second;
}

inline void fft_bluestein(cdouble* x, std::size_t n) {
  const BluesteinPlan& plan = bluestein_plan(n);
  const std::size_t m = plan.m;
  std::vector<cdouble> a(m, cdouble{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * plan.chirp[k];
  fft_pow2(a.data(), m);
  for (std::size_t k = 0; k < m; ++k) a[k] *= plan.kernel_ft[k];
  // Inverse transform of the product via conjugation.
  for (auto& v : a) v = std::conj(v);
  fft_pow2(a.data(), m);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) x[k] = std::conj(a[k]) * scale * plan.chirp[k];
}

}  // namespace detail

// In-place DFT of arbitrary length. Forward is unnormalized; the inverse
// carries the 1/N factor, so inverse(forward(x)) == x.
inline void transform(cdouble* x, std::size_t n, bool inverse) {
  if (n == 0) throw std::invalid_argument("fft: empty input");
  if (inverse) {
    for (std::size_t k = 0; k < n; ++k) x[k] = std::conj(x[k]);
  }
  if (std::has_single_bit(n)) {
    detail::fft_pow2(x, n);
  } else {
    detail::fft_bluestein(x, n);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = std::conj(x[k]) * scale;
  }
}

inline void transform(std::vector<cdouble>& x, bool inverse) {
  transform(x.data(), x.size(), inverse);
}

inline std::vector<cdouble> forward(const std::vector<double>& x) {
  std::vector<cdouble> out(x.begin(), x.end());
  transform(out, false);
  return out;
}

inline std::vector<cdouble> forward(std::vector<cdouble> x) {
  transform(x, false);
  return x;
}

inline std::vector<cdouble> inverse(std::vector<cdouble> x) {
  transform(x, true);
  return x;
}

}  // namespace modalenv::fft
