// Copyright 2026 The PVC Authors
// Normalized-autocorrelation F0 tracking on the mel frame grid.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pvc/frame_matrix.hpp"
#include "pvc/mel.hpp"
#include "pvc/wav.hpp"

namespace pvc {

struct F0Config {
  double f0_min = 60.0;
  double f0_max = 500.0;
  double voicing_threshold = 0.30;  // peak normalized correlation
  double energy_floor = 1e-5;       // frame RMS below this is unvoiced
};

/// Per-frame F0 in Hz, 0 for unvoiced. Frame grid matches mel_spectrogram,
/// so the track length equals the mel frame count for the same waveform.
inline F0Track extract_f0(const Waveform& w, const MelConfig& mel_cfg,
                          const F0Config& cfg = {}) {
  const int win = mel_cfg.win_samples();
  if (static_cast<int>(w.samples.size()) < win)
    throw EmptyInputError("waveform shorter than one frame");
  const int sr = mel_cfg.sample_rate;
  int lag_min = std::max(2, static_cast<int>(sr / cfg.f0_max));
  int lag_max = static_cast<int>(std::ceil(sr / cfg.f0_min));
  lag_max = std::min(lag_max, win - 64);  // keep a usable correlation span
  const int span = win - lag_max;

  const Eigen::Index T = mel_frame_count(w.samples.size(), mel_cfg);
  F0Track track;
  track.hop_seconds =
      static_cast<double>(mel_cfg.hop_samples()) / mel_cfg.sample_rate;
  track.values.assign(static_cast<size_t>(T), 0.0f);

  std::vector<double> frame(win);
  std::vector<double> nccf(lag_max + 1, 0.0);
  for (Eigen::Index t = 0; t < T; ++t) {
    mel_detail::fill_frame(w.samples, static_cast<int>(t), mel_cfg, frame);
    double energy = 0.0;
    for (int i = 0; i < span; ++i) energy += frame[i] * frame[i];
    if (std::sqrt(energy / span) < cfg.energy_floor) continue;

    std::vector<double> sq_prefix(win + 1, 0.0);
    for (int i = 0; i < win; ++i)
      sq_prefix[i + 1] = sq_prefix[i] + frame[i] * frame[i];
    const double e0 = sq_prefix[span];

    int best_lag = 0;
    double best_val = 0.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      double num = 0.0;
      for (int n = 0; n < span; ++n) num += frame[n] * frame[n + lag];
      double e1 = sq_prefix[lag + span] - sq_prefix[lag];
      nccf[lag] = num / (std::sqrt(e0 * e1) + 1e-12);
      if (nccf[lag] > best_val) {
        best_val = nccf[lag];
        best_lag = lag;
      }
    }
    if (best_lag == 0 || best_val < cfg.voicing_threshold) continue;

    double refined = best_lag;
    if (best_lag > lag_min && best_lag < lag_max) {
      double l = nccf[best_lag - 1], c = nccf[best_lag], r = nccf[best_lag + 1];
      double denom = l - 2.0 * c + r;
      if (std::abs(denom) > 1e-12) {
        double delta = 0.5 * (l - r) / denom;
        if (std::abs(delta) <= 1.0) refined += delta;
      }
    }
    track.values[static_cast<size_t>(t)] =
        static_cast<float>(static_cast<double>(sr) / refined);
  }

  // 5-point median pass to suppress isolated voicing/octave blips.
  if (track.values.size() >= 5) {
    std::vector<float> smoothed = track.values;
    std::vector<float> window(5);
    for (size_t i = 2; i + 2 < track.values.size(); ++i) {
      for (int k = 0; k < 5; ++k) window[k] = track.values[i - 2 + k];
      std::nth_element(window.begin(), window.begin() + 2, window.end());
      smoothed[i] = window[2];
    }
    track.values = std::move(smoothed);
  }
  return track;
}

}  // namespace pvc
