// Copyright 2026 The PVC Authors
// Objective evaluation: speaker-similarity FAR against enrolled speakers
// and an F0-correlation proxy for prosody consistency.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/nn/adam.hpp"
#include "pvc/nn/layers.hpp"
#include "pvc/nn/param.hpp"
#include "pvc/rng.hpp"

namespace pvc {

/// Deterministic map from a mel matrix to a unit-norm embedding.
class SpeakerEmbedder {
 public:
  virtual ~SpeakerEmbedder() = default;
  virtual Eigen::VectorXd embed(const FrameMatrix& mel) const = 0;
};

namespace eval_detail {

inline Eigen::VectorXd pooled_stats(const FrameMatrix& mel) {
  Eigen::MatrixXd x = mel.data.cast<double>();
  Eigen::VectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  Eigen::VectorXd var =
      centered.array().square().colwise().mean().transpose();
  Eigen::VectorXd out(2 * x.cols());
  out.head(x.cols()) = mean;
  out.tail(x.cols()) = var.array().sqrt();
  return out;
}

inline Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  double n = v.norm();
  if (n < 1e-12) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(v.size());
    e(0) = 1.0;
    return e;
  }
  return v / n;
}

}  // namespace eval_detail

/// Mean+deviation statistics vector, L2-normalized. No training required.
class StatsEmbedder : public SpeakerEmbedder {
 public:
  Eigen::VectorXd embed(const FrameMatrix& mel) const override {
    return eval_detail::unit(eval_detail::pooled_stats(mel));
  }
};

/// Small frame-pooling speaker classifier; the penultimate (tanh) layer,
/// L2-normalized, is the embedding.
class TrainedEmbedder : public SpeakerEmbedder {
 public:
  /// Trains on (mel, speaker label) pairs with cross-entropy.
  void fit(const std::vector<const FrameMatrix*>& mels,
           const std::vector<int>& labels, int n_speakers, uint64_t seed,
           int epochs = 200, double lr = 0.01) {
    if (mels.empty() || mels.size() != labels.size())
      throw ContractViolation("bad training set for speaker embedder");
    const Eigen::Index in_dim = 2 * mels.front()->dim();
    Rng rng(seed);
    hidden_.init("spk_emb.hidden", in_dim, 32, rng);
    head_.init("spk_emb.head", 32, n_speakers, rng);
    nn::ParamRefs params;
    hidden_.collect(params);
    head_.collect(params);
    nn::Adam adam;
    adam.attach(params);

    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(mels.size()), in_dim);
    for (size_t i = 0; i < mels.size(); ++i)
      inputs.row(static_cast<Eigen::Index>(i)) =
          eval_detail::pooled_stats(*mels[i]).transpose();

    const double n = static_cast<double>(mels.size());
    for (int e = 0; e < epochs; ++e) {
      nn::zero_grads(params);
      nn::Linear::Cache c1, c2;
      nn::Mat h = nn::tanh_forward(hidden_.forward(inputs, c1));
      nn::Mat logits = head_.forward(h, c2);
      nn::Mat probs = logits;
      for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        Eigen::RowVectorXd row = logits.row(r);
        double m = row.maxCoeff();
        Eigen::ArrayXd ex = (row.array() - m).exp();
        probs.row(r) = (ex / ex.sum()).matrix().transpose();
      }
      nn::Mat dlogits = probs;
      for (size_t i = 0; i < labels.size(); ++i)
        dlogits(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
      dlogits /= n;
      nn::Mat dh = head_.backward(c2, dlogits);
      hidden_.backward(c1, nn::tanh_backward(h, dh));
      adam.step(lr);
    }
    fitted_ = true;
  }

  Eigen::VectorXd embed(const FrameMatrix& mel) const override {
    if (!fitted_) throw ContractViolation("embedder not fitted");
    Eigen::RowVectorXd x = eval_detail::pooled_stats(mel).transpose();
    Eigen::RowVectorXd h =
        ((x * hidden_.w.value) + hidden_.b.value.row(0)).array().tanh();
    return eval_detail::unit(h.transpose());
  }

 private:
  nn::Linear hidden_, head_;
  bool fitted_ = false;
};

struct Enrollment {
  std::string label;
  Eigen::VectorXd embedding;  // unit norm
};

/// Mean of the utterance embeddings, re-normalized.
inline Enrollment enroll(const std::vector<const FrameMatrix*>& mels,
                         const SpeakerEmbedder& embedder,
                         const std::string& label = "") {
  if (mels.empty()) throw EmptyInputError("no enrollment utterances");
  Eigen::VectorXd sum;
  for (const FrameMatrix* m : mels) {
    Eigen::VectorXd e = embedder.embed(*m);
    if (sum.size() == 0)
      sum = e;
    else
      sum += e;
  }
  Enrollment out;
  out.label = label;
  out.embedding = eval_detail::unit(sum / static_cast<double>(mels.size()));
  return out;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double d = a.norm() * b.norm();
  if (d < 1e-12) return 0.0;
  return a.dot(b) / d;
}

struct FarReport {
  double far = 0.0;
  double threshold = 0.0;
  int accepted = 0;
  int total = 0;
};

/// Fraction of utterances whose cosine to the enrollment reaches threshold.
inline FarReport far(const std::vector<const FrameMatrix*>& converted,
                     const Enrollment& target, const SpeakerEmbedder& embedder,
                     double threshold) {
  if (converted.empty()) throw EmptyInputError("no utterances to score");
  if (threshold < -1.0 || threshold > 1.0)
    throw ContractViolation("threshold must lie in [-1, 1]");
  FarReport report;
  report.threshold = threshold;
  report.total = static_cast<int>(converted.size());
  for (const FrameMatrix* m : converted)
    if (cosine(embedder.embed(*m), target.embedding) >= threshold)
      ++report.accepted;
  report.far = static_cast<double>(report.accepted) / report.total;
  return report;
}

/// Equal-error-rate threshold over genuine/impostor cosine scores.
inline double eer_threshold(std::vector<double> genuine,
                            std::vector<double> impostor) {
  if (genuine.empty() || impostor.empty())
    throw EmptyInputError("need both genuine and impostor scores");
  std::vector<double> candidates = genuine;
  candidates.insert(candidates.end(), impostor.begin(), impostor.end());
  std::sort(candidates.begin(), candidates.end());
  double best_thr = candidates.front();
  double best_gap = 2.0;
  for (double thr : candidates) {
    double fa = 0.0, fr = 0.0;
    for (double s : impostor)
      if (s >= thr) fa += 1.0;
    for (double s : genuine)
      if (s < thr) fr += 1.0;
    fa /= static_cast<double>(impostor.size());
    fr /= static_cast<double>(genuine.size());
    double gap = std::abs(fa - fr);
    if (gap < best_gap) {
      best_gap = gap;
      best_thr = thr;
    }
  }
  return best_thr;
}

/// Pearson correlation of co-voiced F0 after linear time alignment of the
/// converted track onto the source grid. Returns 0 with fewer than 8
/// co-voiced frames or degenerate variance.
inline double prosody_consistency(const F0Track& source,
                                  const F0Track& converted) {
  if (source.values.empty() || converted.values.empty())
    throw EmptyInputError("empty F0 track");
  const size_t Ts = source.values.size();
  const size_t Tc = converted.values.size();
  std::vector<double> a, b;
  a.reserve(Ts);
  b.reserve(Ts);
  for (size_t i = 0; i < Ts; ++i) {
    double p = Ts == 1 ? 0.0
                       : static_cast<double>(i) * (Tc - 1) /
                             static_cast<double>(Ts - 1);
    size_t i0 = static_cast<size_t>(p);
    size_t i1 = std::min(i0 + 1, Tc - 1);
    double frac = p - static_cast<double>(i0);
    float c0 = converted.values[i0];
    float c1 = converted.values[i1];
    if (source.values[i] <= 0.0f || c0 <= 0.0f || c1 <= 0.0f) continue;
    a.push_back(source.values[i]);
    b.push_back((1.0 - frac) * c0 + frac * c1);
  }
  if (a.size() < 8) return 0.0;
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa < 1e-12 || sbb < 1e-12) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace pvc
