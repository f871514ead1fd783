// Copyright 2026 The PVC Authors
// Waveform synthesis from log-mel: pseudo-inverse filterbank lift followed
// by momentum Griffin-Lim phase reconstruction. Fully deterministic.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/fft.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/mel.hpp"
#include "pvc/wav.hpp"

namespace pvc {

namespace gl_detail {

using SpecGrid = std::vector<std::vector<std::complex<double>>>;

/// Overlap-add resynthesis matching the analysis framing (frame t centered
/// at t*hop), normalized by the summed squared window.
inline std::vector<double> istft(const SpecGrid& spec, const MelConfig& cfg,
                                 size_t n_samples) {
  const int win = cfg.win_samples();
  const int hop = cfg.hop_samples();
  const size_t nfft = cfg.nfft();
  const std::vector<double> window = hann_window(win);
  std::vector<double> acc(n_samples, 0.0);
  std::vector<double> norm(n_samples, 0.0);
  for (size_t t = 0; t < spec.size(); ++t) {
    std::vector<double> frame = irfft(spec[t], nfft);
    const long start = static_cast<long>(t) * hop - win / 2;
    for (int i = 0; i < win; ++i) {
      long s = start + i;
      if (s < 0 || s >= static_cast<long>(n_samples)) continue;
      acc[s] += frame[i] * window[i];
      norm[s] += window[i] * window[i];
    }
  }
  for (size_t s = 0; s < n_samples; ++s)
    if (norm[s] > 1e-10) acc[s] /= norm[s];
  return acc;
}

inline SpecGrid stft_complex(const std::vector<double>& x,
                             const MelConfig& cfg, Eigen::Index T) {
  const int win = cfg.win_samples();
  const int hop = cfg.hop_samples();
  const size_t nfft = cfg.nfft();
  const std::vector<double> window = hann_window(win);
  SpecGrid out(static_cast<size_t>(T));
  std::vector<double> frame(win);
  for (Eigen::Index t = 0; t < T; ++t) {
    const long start = static_cast<long>(t) * hop - win / 2;
    for (int i = 0; i < win; ++i) {
      long s = start + i;
      frame[i] = (s >= 0 && s < static_cast<long>(x.size()))
                     ? x[s] * window[i]
                     : 0.0;
    }
    out[static_cast<size_t>(t)] = rfft(frame, nfft);
  }
  return out;
}

}  // namespace gl_detail

/// Lifts log-mel back to a linear magnitude spectrogram via the filterbank
/// pseudo-inverse, clamped at zero.
inline Eigen::MatrixXd mel_to_linear_magnitude(const FrameMatrix& mel,
                                               const MelConfig& cfg) {
  if (mel.kind != FeatureKind::kMel)
    throw ContractViolation("expected a mel matrix");
  if (mel.dim() != cfg.n_mels)
    throw ContractViolation("mel dimension does not match config");
  Eigen::MatrixXd fb = mel_filterbank(cfg);  // n_mels x bins
  Eigen::MatrixXd pinv =
      fb.completeOrthogonalDecomposition().pseudoInverse();  // bins x n_mels
  Eigen::MatrixXd mel_mag = mel.data.cast<double>().array().exp().matrix();
  return (mel_mag * pinv.transpose()).cwiseMax(0.0);  // T x bins
}

/// Iterative phase reconstruction from a magnitude spectrogram.
/// Zero-phase initialization, momentum on the spectral estimate.
inline std::vector<double> griffin_lim(const Eigen::MatrixXd& magnitude,
                                       const MelConfig& cfg, int iterations,
                                       double momentum = 0.9) {
  const Eigen::Index T = magnitude.rows();
  if (T < 1) throw EmptyInputError("no frames to synthesize");
  if (magnitude.cols() != static_cast<Eigen::Index>(cfg.nfft() / 2 + 1))
    throw ContractViolation("magnitude width does not match fft size");
  const size_t n_samples =
      static_cast<size_t>(T) * static_cast<size_t>(cfg.hop_samples());

  const size_t bins = static_cast<size_t>(magnitude.cols());
  gl_detail::SpecGrid spec(static_cast<size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    spec[static_cast<size_t>(t)].resize(bins);
    for (size_t k = 0; k < bins; ++k)
      spec[static_cast<size_t>(t)][k] = {
          magnitude(t, static_cast<Eigen::Index>(k)), 0.0};
  }

  gl_detail::SpecGrid prev(static_cast<size_t>(T),
                           std::vector<std::complex<double>>(bins, 0.0));
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> x = gl_detail::istft(spec, cfg, n_samples);
    gl_detail::SpecGrid est = gl_detail::stft_complex(x, cfg, T);
    for (size_t t = 0; t < est.size(); ++t)
      for (size_t k = 0; k < bins; ++k) {
        std::complex<double> e =
            est[t][k] - (momentum / (1.0 + momentum)) * prev[t][k];
        double mag = std::abs(e);
        std::complex<double> phase =
            mag > 1e-12 ? e / mag : std::complex<double>(1.0, 0.0);
        prev[t][k] = est[t][k];
        spec[t][k] =
            magnitude(static_cast<Eigen::Index>(t),
                      static_cast<Eigen::Index>(k)) *
            phase;
      }
  }
  return gl_detail::istft(spec, cfg, n_samples);
}

/// Log-mel -> waveform, peak-normalized to 0.95 when it would clip.
inline Waveform mel_to_audio(const FrameMatrix& mel, const MelConfig& cfg,
                             int iterations = 60) {
  Eigen::MatrixXd mag = mel_to_linear_magnitude(mel, cfg);
  std::vector<double> x = griffin_lim(mag, cfg, iterations);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  double scale = peak > 0.95 ? 0.95 / peak : 1.0;
  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    w.samples[i] = static_cast<float>(x[i] * scale);
  return w;
}

}  // namespace pvc
