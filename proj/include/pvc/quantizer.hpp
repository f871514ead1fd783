// Copyright 2026 The PVC Authors
// Product vector quantizer: two half-vector codebooks trained with
// seeded k-means, emitting per-frame discrete index pairs.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/io_util.hpp"
#include "pvc/rng.hpp"

namespace pvc {

/// Two sub-codebooks over the contiguous halves of the feature vector.
struct ProductCodebook {
  Eigen::MatrixXd groups[2];  // each V x (D/2)

  int codebook_size() const { return static_cast<int>(groups[0].rows()); }
  int feature_dim() const {
    return static_cast<int>(groups[0].cols() + groups[1].cols());
  }
};

/// T x 2 index pairs into a ProductCodebook.
struct IndexSequence {
  Eigen::Matrix<int, Eigen::Dynamic, 2> indices;
  int codebook_size = 0;

  Eigen::Index frames() const { return indices.rows(); }
};

/// Per-iteration snapshots for external distortion audits.
struct KmeansTrace {
  std::vector<Eigen::MatrixXd> centroids;   // after each iteration
  std::vector<double> mean_distortion;      // tracked by the trainer
};

namespace quant_detail {

inline int nearest_centroid(const Eigen::MatrixXd& centroids,
                            const Eigen::RowVectorXd& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int v = 0; v < centroids.rows(); ++v) {
    double d = (centroids.row(v) - x).squaredNorm();
    if (d < best_d) {  // strict: ties keep the smallest index
      best_d = d;
      best = v;
    }
  }
  return best;
}

inline double assignment_distortion(const Eigen::MatrixXd& data,
                                    const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < centroids.rows(); ++v)
      best = std::min(best, (centroids.row(v) - data.row(i)).squaredNorm());
    total += best;
  }
  return total / static_cast<double>(data.rows());
}

// k-means++ seeding: first center uniform, the rest weighted by squared
// distance to the nearest already-chosen center.
inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& data, int k,
                                     Rng& rng) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centers(k, data.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  Eigen::Index first = static_cast<Eigen::Index>(rng.integer(n));
  centers.row(0) = data.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double d = (data.row(i) - centers.row(c - 1)).squaredNorm();
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.integer(n));
    } else {
      // Fallback to the farthest point in case rounding exhausts the scan.
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (d2[i] > far_d) {
          far_d = d2[i];
          pick = i;
        }
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {  // strict: never lands on zero-mass points
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = data.row(pick);
  }
  return centers;
}

inline Eigen::MatrixXd kmeans(const Eigen::MatrixXd& data, int k,
                              int iterations, Rng& rng,
                              KmeansTrace* trace = nullptr) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centers = kmeanspp_init(data, k, rng);
  std::vector<int> assign(n, -1);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int a = nearest_centroid(centers, data.row(i));
      if (a != assign[i]) changed = true;
      assign[i] = a;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += data.row(i);
      counts[assign[i]]++;
    }
    for (int v = 0; v < k; ++v)
      if (counts[v] > 0) centers.row(v) = sums.row(v) / counts[v];
    // Empty clusters grab the point farthest from its own centroid; under a
    // fresh nearest assignment this never increases distortion.
    for (int v = 0; v < k; ++v) {
      if (counts[v] > 0) continue;
      Eigen::Index far_i = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double d = (data.row(i) - centers.row(assign[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      centers.row(v) = data.row(far_i);
    }
    if (trace != nullptr) {
      trace->centroids.push_back(centers);
      trace->mean_distortion.push_back(assignment_distortion(data, centers));
    }
    if (!changed && it > 0) break;
  }
  return centers;
}

}  // namespace quant_detail

/// Splits each frame vector into contiguous halves and clusters each half
/// independently. Deterministic in (features, V, iterations, seed).
inline ProductCodebook train_codebook(const FrameMatrix& features, int V,
                                      int iterations, uint64_t seed,
                                      KmeansTrace* trace0 = nullptr,
                                      KmeansTrace* trace1 = nullptr) {
  if (V < 2) throw ContractViolation("codebook size must be >= 2");
  if (features.dim() % 2 != 0)
    throw ContractViolation("feature dimension must be even");
  if (features.frames() < V)
    throw InsufficientDataError("need at least V frames to train " +
                                std::to_string(V) + " centroids");
  const Eigen::Index half = features.dim() / 2;
  Eigen::MatrixXd data = features.data.cast<double>();
  Rng rng(seed);
  ProductCodebook cb;
  Rng r0 = rng.fork(0);
  Rng r1 = rng.fork(1);
  cb.groups[0] =
      quant_detail::kmeans(data.leftCols(half), V, iterations, r0, trace0);
  cb.groups[1] =
      quant_detail::kmeans(data.rightCols(half), V, iterations, r1, trace1);
  return cb;
}

/// Nearest centroid per frame per group, squared Euclidean metric,
/// ties broken toward the smallest index.
inline IndexSequence quantize(const FrameMatrix& features,
                              const ProductCodebook& cb) {
  if (features.dim() != cb.feature_dim())
    throw ContractViolation("feature dim does not match codebook");
  const Eigen::Index half = features.dim() / 2;
  IndexSequence seq;
  seq.codebook_size = cb.codebook_size();
  seq.indices.resize(features.frames(), 2);
  for (Eigen::Index t = 0; t < features.frames(); ++t) {
    Eigen::RowVectorXd row = features.data.row(t).cast<double>();
    seq.indices(t, 0) =
        quant_detail::nearest_centroid(cb.groups[0], row.leftCols(half));
    seq.indices(t, 1) =
        quant_detail::nearest_centroid(cb.groups[1], row.rightCols(half));
  }
  return seq;
}

/// Concatenated centroid pairs for the given indices.
inline FrameMatrix reconstruct(const IndexSequence& seq,
                               const ProductCodebook& cb,
                               double hop_seconds = 0.01) {
  FrameMatrix out;
  out.kind = FeatureKind::kContent;
  out.hop_seconds = hop_seconds;
  const Eigen::Index half = cb.groups[0].cols();
  out.data.resize(seq.frames(), cb.feature_dim());
  for (Eigen::Index t = 0; t < seq.frames(); ++t) {
    out.data.block(t, 0, 1, half) =
        cb.groups[0].row(seq.indices(t, 0)).cast<float>();
    out.data.block(t, half, 1, half) =
        cb.groups[1].row(seq.indices(t, 1)).cast<float>();
  }
  return out;
}

// PVCB container: magic, version u32, V u32, D u32, then both centroid
// matrices row-major little-endian f32.
inline void save_codebook(const std::string& path, const ProductCodebook& cb) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for write: " + path);
  io::write_magic(os, "PVCB");
  io::write_u32(os, 1);
  io::write_u32(os, static_cast<uint32_t>(cb.codebook_size()));
  io::write_u32(os, static_cast<uint32_t>(cb.feature_dim()));
  for (const auto& g : cb.groups)
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index c = 0; c < g.cols(); ++c)
        io::write_f32(os, static_cast<float>(g(r, c)));
  if (!os) throw IoError("write failed: " + path);
}

inline ProductCodebook load_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  io::expect_magic(is, "PVCB", "codebook");
  if (io::read_u32(is) != 1)
    throw IoError("unsupported codebook version: " + path);
  uint32_t V = io::read_u32(is);
  uint32_t D = io::read_u32(is);
  if (D % 2 != 0) throw IoError("corrupt codebook dims: " + path);
  ProductCodebook cb;
  for (auto& g : cb.groups) {
    g.resize(V, D / 2);
    for (uint32_t r = 0; r < V; ++r)
      for (uint32_t c = 0; c < D / 2; ++c) g(r, c) = io::read_f32(is);
  }
  return cb;
}

}  // namespace pvc
