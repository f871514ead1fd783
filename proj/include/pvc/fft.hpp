// Copyright 2026 The PVC Authors
// Iterative radix-2 FFT, enough for STFT analysis and resynthesis.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "pvc/errors.hpp"

namespace pvc {

inline size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place radix-2 Cooley-Tukey. Size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ContractViolation("fft size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double pi = 3.14159265358979323846;
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

/// Forward real FFT; returns the nfft/2+1 non-redundant bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x,
                                              size_t nfft) {
  std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
  for (size_t i = 0; i < x.size() && i < nfft; ++i) buf[i] = x[i];
  fft_inplace(buf, false);
  buf.resize(nfft / 2 + 1);
  return buf;
}

/// Inverse of rfft: reconstructs the length-nfft real signal.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& spec,
                                 size_t nfft) {
  if (spec.size() != nfft / 2 + 1)
    throw ContractViolation("irfft expects nfft/2+1 bins");
  std::vector<std::complex<double>> buf(nfft);
  for (size_t i = 0; i <= nfft / 2; ++i) buf[i] = spec[i];
  for (size_t i = nfft / 2 + 1; i < nfft; ++i)
    buf[i] = std::conj(spec[nfft - i]);
  fft_inplace(buf, true);
  std::vector<double> out(nfft);
  for (size_t i = 0; i < nfft; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace pvc
