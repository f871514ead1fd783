// Copyright 2026 The PVC Authors
// Log-mel magnitude spectrograms: centered STFT + triangular filterbank.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/fft.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/wav.hpp"

namespace pvc {

struct MelConfig {
  int sample_rate = 24000;
  double win_seconds = 0.050;
  double hop_seconds = 0.010;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 12000.0;
  double log_floor = 1e-5;

  int win_samples() const {
    return static_cast<int>(std::llround(win_seconds * sample_rate));
  }
  int hop_samples() const {
    return static_cast<int>(std::llround(hop_seconds * sample_rate));
  }
  size_t nfft() const { return next_pow2(static_cast<size_t>(win_samples())); }
};

/// T = ceil(num_samples / hop): frame t is centered at t*hop.
inline Eigen::Index mel_frame_count(size_t num_samples, const MelConfig& cfg) {
  size_t hop = static_cast<size_t>(cfg.hop_samples());
  return static_cast<Eigen::Index>((num_samples + hop - 1) / hop);
}

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

/// n_mels x (nfft/2+1) triangular filterbank, peak height 1.
inline Eigen::MatrixXd mel_filterbank(const MelConfig& cfg) {
  const size_t bins = cfg.nfft() / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, bins);
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));
  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.nfft();
  for (int m = 0; m < cfg.n_mels; ++m) {
    double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (size_t k = 0; k < bins; ++k) {
      double f = k * bin_hz;
      if (f > lo && f < mid)
        fb(m, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(m, k) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * i / n);
  return w;
}

namespace mel_detail {

// Frame t covers samples [t*hop - win/2, t*hop + win/2), zeros outside.
inline void fill_frame(const std::vector<float>& x, int t,
                       const MelConfig& cfg, std::vector<double>& frame) {
  const int win = cfg.win_samples();
  const int hop = cfg.hop_samples();
  const long start = static_cast<long>(t) * hop - win / 2;
  for (int i = 0; i < win; ++i) {
    long s = start + i;
    frame[i] = (s >= 0 && s < static_cast<long>(x.size()))
                   ? static_cast<double>(x[s])
                   : 0.0;
  }
}

}  // namespace mel_detail

/// Linear magnitude STFT, T x (nfft/2+1).
inline Eigen::MatrixXd stft_magnitude(const Waveform& w, const MelConfig& cfg) {
  const int win = cfg.win_samples();
  if (static_cast<int>(w.samples.size()) < win)
    throw EmptyInputError("waveform shorter than one frame (" +
                          std::to_string(win) + " samples)");
  const size_t nfft = cfg.nfft();
  const Eigen::Index T = mel_frame_count(w.samples.size(), cfg);
  const std::vector<double> window = hann_window(win);
  Eigen::MatrixXd mag(T, nfft / 2 + 1);
  std::vector<double> frame(win);
  for (Eigen::Index t = 0; t < T; ++t) {
    mel_detail::fill_frame(w.samples, static_cast<int>(t), cfg, frame);
    for (int i = 0; i < win; ++i) frame[i] *= window[i];
    auto spec = rfft(frame, nfft);
    for (size_t k = 0; k < spec.size(); ++k)
      mag(t, static_cast<Eigen::Index>(k)) = std::abs(spec[k]);
  }
  return mag;
}

/// T x n_mels log-compressed mel magnitudes; log(max(mel, floor)).
inline FrameMatrix mel_spectrogram(const Waveform& w, const MelConfig& cfg) {
  Eigen::MatrixXd mag = stft_magnitude(w, cfg);
  Eigen::MatrixXd fb = mel_filterbank(cfg);
  Eigen::MatrixXd mel = mag * fb.transpose();  // T x n_mels
  FrameMatrix out;
  out.kind = FeatureKind::kMel;
  out.hop_seconds = static_cast<double>(cfg.hop_samples()) / cfg.sample_rate;
  out.data = mel.unaryExpr([&](double v) {
                  return std::log(std::max(v, cfg.log_floor));
                })
                 .cast<float>();
  return out;
}

}  // namespace pvc
