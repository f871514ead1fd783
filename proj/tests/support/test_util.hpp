// Copyright 2026 The PVC Authors
// Shared test helpers: deterministic random data, finite differences,
// synthetic signals, scratch directories.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pvc/frame_matrix.hpp"
#include "pvc/nn/param.hpp"
#include "pvc/rng.hpp"
#include "pvc/wav.hpp"

namespace pvc_test {

inline Eigen::MatrixXd random_mat(pvc::Rng& rng, Eigen::Index rows,
                                  Eigen::Index cols, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = rng.uniform(-scale, scale);
  return m;
}

inline pvc::FrameMatrix random_features(pvc::Rng& rng, Eigen::Index rows,
                                        Eigen::Index cols,
                                        pvc::FeatureKind kind,
                                        double hop = 0.01) {
  pvc::FrameMatrix fm;
  fm.kind = kind;
  fm.hop_seconds = hop;
  fm.data = random_mat(rng, rows, cols).cast<float>();
  return fm;
}

/// Central finite differences against accumulated analytic gradients.
/// `loss` must be a pure function of the current parameter values.
/// Returns the worst relative error across all checked entries.
inline double finite_difference_check(const pvc::nn::ParamRefs& params,
                                      const std::function<double()>& loss,
                                      double h = 1e-5) {
  double worst = 0.0;
  for (pvc::nn::Tensor* p : params) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double saved = p->value(r, c);
        p->value(r, c) = saved + h;
        const double lp = loss();
        p->value(r, c) = saved - h;
        const double lm = loss();
        p->value(r, c) = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = p->grad(r, c);
        const double err =
            std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-4});
        worst = std::max(worst, err);
      }
  }
  return worst;
}

/// Finite differences w.r.t. an input matrix against an analytic gradient.
inline double input_gradient_check(Eigen::MatrixXd& input,
                                   const Eigen::MatrixXd& analytic,
                                   const std::function<double()>& loss,
                                   double h = 1e-5) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < input.rows(); ++r)
    for (Eigen::Index c = 0; c < input.cols(); ++c) {
      const double saved = input(r, c);
      input(r, c) = saved + h;
      const double lp = loss();
      input(r, c) = saved - h;
      const double lm = loss();
      input(r, c) = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double err = std::abs(fd - analytic(r, c)) /
                         std::max({std::abs(fd), std::abs(analytic(r, c)),
                                   1e-4});
      worst = std::max(worst, err);
    }
  return worst;
}

inline pvc::Waveform sine_wave(double freq_hz, double seconds,
                               int sample_rate = 24000,
                               double amplitude = 0.5) {
  pvc::Waveform w;
  w.sample_rate = sample_rate;
  size_t n = static_cast<size_t>(std::llround(seconds * sample_rate));
  w.samples.resize(n);
  const double pi = 3.14159265358979323846;
  for (size_t i = 0; i < n; ++i)
    w.samples[i] = static_cast<float>(
        amplitude * std::sin(2.0 * pi * freq_hz * i / sample_rate));
  return w;
}

inline pvc::Waveform silence(double seconds, int sample_rate = 24000) {
  pvc::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(static_cast<size_t>(std::llround(seconds * sample_rate)),
                   0.0f);
  return w;
}

/// Fresh scratch directory under the build tree temp area.
inline std::string scratch_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("pvc_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

inline std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::vector<char>((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
}

}  // namespace pvc_test
