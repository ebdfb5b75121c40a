#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "lab/errors.hpp"

namespace lab {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT. Forward transform uses e^{-i 2pi jk/N};
// the inverse includes the 1/N factor.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw grid_error("fft length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double base = inverse ? 6.283185307179586476925287 : -6.283185307179586476925287;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = base / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& z : a) z *= inv;
  }
}

// Power spectrum |DFT(x zero-padded to pad_len)|^2. pad_len must be a power
// of two and at least x.size().
inline std::vector<double> padded_power_spectrum(const std::vector<double>& x,
                                                 std::size_t pad_len) {
  if (pad_len < x.size()) throw grid_error("pad length shorter than signal");
  std::vector<std::complex<double>> a(pad_len, {0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  fft_radix2(a, false);
  std::vector<double> p(pad_len);
  for (std::size_t i = 0; i < pad_len; ++i) p[i] = std::norm(a[i]);
  return p;
}

}  // namespace lab
