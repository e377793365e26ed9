#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace fgen {

using Complex = std::complex<double>;

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

// exp(sign * 2*pi*i * num / den) with the angle reduced mod den first, so
// large index products keep full precision.
inline Complex unit_root(std::size_t num, std::size_t den, double sign) {
  const double angle = sign * 2.0 * std::numbers::pi *
                       static_cast<double>(num % den) / static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

// In-place iterative radix-2 FFT over a power-of-two length with a
// precomputed twiddle table w[k] = exp(-2*pi*i*k/n), k < n/2.
inline void radix2(std::span<Complex> a, std::span<const Complex> twiddles, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        Complex w = twiddles[k * step];
        if (inverse) w = std::conj(w);
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

}  // namespace detail

// Unnormalized DFT of a fixed length n, X[k] = sum_j x[j] exp(-2 pi i jk/n).
// Power-of-two lengths use radix-2 directly; all other lengths go through
// Bluestein's chirp-z transform on a power-of-two convolution of size >= 2n-1.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("FFT length must be positive");
    if (detail::is_pow2(n)) {
      twiddles_ = make_twiddles(n);
      return;
    }
    m_ = detail::next_pow2(2 * n - 1);
    twiddles_ = make_twiddles(m_);
    chirp_.resize(n);
    // chirp[j] = exp(-pi i j^2 / n) = exp(-2 pi i (j^2 mod 2n) / (2n))
    for (std::size_t j = 0; j < n; ++j)
      chirp_[j] = detail::unit_root((j * j) % (2 * n), 2 * n, -1.0);
    kernel_.assign(m_, Complex{});
    kernel_[0] = std::conj(chirp_[0]);
    for (std::size_t j = 1; j < n; ++j) kernel_[j] = kernel_[m_ - j] = std::conj(chirp_[j]);
    detail::radix2(kernel_, twiddles_, false);
  }

  std::size_t size() const { return n_; }

  std::vector<Complex> forward(std::span<const Complex> x) const { return run(x, false); }

  // Unnormalized inverse; callers divide by n.
  std::vector<Complex> backward(std::span<const Complex> x) const { return run(x, true); }

 private:
  static std::vector<Complex> make_twiddles(std::size_t m) {
    std::vector<Complex> w(std::max<std::size_t>(m / 2, 1));
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = detail::unit_root(k, m, -1.0);
    return w;
  }

  std::vector<Complex> run(std::span<const Complex> x, bool inverse) const {
    if (x.size() != n_) throw std::invalid_argument("FFT input length does not match plan");
    if (m_ == 0) {
      std::vector<Complex> a(x.begin(), x.end());
      detail::radix2(a, twiddles_, inverse);
      return a;
    }
    // The inverse transform is the conjugate of the forward transform of the
    // conjugated input.
    std::vector<Complex> a(m_, Complex{});
    for (std::size_t j = 0; j < n_; ++j)
      a[j] = (inverse ? std::conj(x[j]) : x[j]) * chirp_[j];
    detail::radix2(a, twiddles_, false);
    for (std::size_t k = 0; k < m_; ++k) a[k] *= kernel_[k];
    detail::radix2(a, twiddles_, true);
    const double scale = 1.0 / static_cast<double>(m_);
    std::vector<Complex> out(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const Complex v = a[k] * scale * chirp_[k];
      out[k] = inverse ? std::conj(v) : v;
    }
    return out;
  }

  std::size_t n_;
  std::size_t m_ = 0;
  std::vector<Complex> twiddles_;
  std::vector<Complex> chirp_;
  std::vector<Complex> kernel_;
};

}  // namespace fgen
