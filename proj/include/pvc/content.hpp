// Copyright 2026 The PVC Authors
// Stand-in content features: a decorrelating linear projection fitted on
// context-stacked mel frames, applied as a fixed transform afterwards.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/io_util.hpp"

namespace pvc {

/// Truncated PCA of mel frames stacked with +-context neighbors
/// (edge-replicated), so the output dimension may exceed the mel dimension.
/// With cepstral_order > 0 each frame is first lifted to its low-order
/// DCT coefficients (spectral envelope), which keeps the harmonic fine
/// structure out of the content features; the whole map stays linear.
class ContentProjection {
 public:
  ContentProjection() = default;

  int context() const { return context_; }
  int cepstral_order() const { return cepstral_order_; }
  Eigen::Index input_dim() const { return mean_.size(); }
  Eigen::Index output_dim() const { return basis_.cols(); }

  /// Rows of `stacked` are observations. Keeps the k leading eigenvectors of
  /// the covariance, eigenvector signs fixed for determinism.
  static ContentProjection fit_rows(const Eigen::MatrixXd& stacked, int k,
                                    int context) {
    if (stacked.rows() < 2)
      throw InsufficientDataError("projection fit needs at least 2 frames");
    if (k < 1 || k > stacked.cols())
      throw ContractViolation("projection rank out of range");
    ContentProjection p;
    p.context_ = context;
    p.mean_ = stacked.colwise().mean();
    Eigen::MatrixXd centered = stacked.rowwise() - p.mean_.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) /
                          static_cast<double>(stacked.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
      throw Error("eigendecomposition failed");
    // Eigenvalues come back ascending; take the trailing k columns.
    Eigen::MatrixXd vecs = solver.eigenvectors();
    p.basis_.resize(stacked.cols(), k);
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd v = vecs.col(vecs.cols() - 1 - j);
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v(imax) < 0.0) v = -v;
      p.basis_.col(j) = v;
    }
    return p;
  }

  static ContentProjection fit(const std::vector<FrameMatrix>& mels, int k,
                               int context, int cepstral_order = 0) {
    if (mels.empty()) throw EmptyInputError("no mel matrices to fit on");
    Eigen::Index total = 0;
    for (const auto& m : mels) total += m.frames();
    const Eigen::Index d = mels.front().dim();
    Eigen::MatrixXd lifter =
        cepstral_lifter(d, cepstral_order);  // identity when order == 0
    Eigen::Index width = lifter.cols();
    Eigen::MatrixXd stacked(total, width * (2 * context + 1));
    Eigen::Index row = 0;
    for (const auto& m : mels) {
      if (m.kind != FeatureKind::kMel)
        throw ContractViolation("content projection is fitted on mel");
      Eigen::MatrixXd ctx =
          stack_context(m.data.cast<double>() * lifter, context);
      stacked.middleRows(row, m.frames()) = ctx;
      row += m.frames();
    }
    ContentProjection p = fit_rows(stacked, k, context);
    p.cepstral_order_ = cepstral_order;
    return p;
  }

  /// mel (T x D) -> content (T x k); same frame count, deterministic.
  FrameMatrix apply(const FrameMatrix& mel) const {
    if (mel.kind != FeatureKind::kMel)
      throw ContractViolation("content features are derived from mel input");
    if (basis_.size() == 0) throw ContractViolation("projection not fitted");
    Eigen::MatrixXd lifter = cepstral_lifter(mel.dim(), cepstral_order_);
    Eigen::MatrixXd ctx =
        stack_context(mel.data.cast<double>() * lifter, context_);
    if (ctx.cols() != input_dim())
      throw ContractViolation("mel dimension does not match projection");
    Eigen::MatrixXd projected =
        (ctx.rowwise() - mean_.transpose()) * basis_;
    FrameMatrix out;
    out.kind = FeatureKind::kContent;
    out.hop_seconds = mel.hop_seconds;
    out.data = projected.cast<float>();
    return out;
  }

  /// Projects rows onto the basis and back; used by the optimality checks.
  Eigen::MatrixXd reconstruct_rows(const Eigen::MatrixXd& stacked) const {
    Eigen::MatrixXd centered = stacked.rowwise() - mean_.transpose();
    return ((centered * basis_) * basis_.transpose()).rowwise() +
           mean_.transpose();
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for write: " + path);
    io::write_magic(os, "PVCP");
    io::write_u32(os, 1);
    io::write_u32(os, static_cast<uint32_t>(context_));
    io::write_u32(os, static_cast<uint32_t>(cepstral_order_));
    io::write_u32(os, static_cast<uint32_t>(mean_.size()));
    io::write_u32(os, static_cast<uint32_t>(basis_.cols()));
    for (Eigen::Index i = 0; i < mean_.size(); ++i)
      io::write_f64(os, mean_(i));
    for (Eigen::Index r = 0; r < basis_.rows(); ++r)
      for (Eigen::Index c = 0; c < basis_.cols(); ++c)
        io::write_f64(os, basis_(r, c));
    if (!os) throw IoError("write failed: " + path);
  }

  static ContentProjection load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    io::expect_magic(is, "PVCP", "content projection");
    if (io::read_u32(is) != 1)
      throw IoError("unsupported projection version: " + path);
    ContentProjection p;
    p.context_ = static_cast<int>(io::read_u32(is));
    p.cepstral_order_ = static_cast<int>(io::read_u32(is));
    uint32_t s = io::read_u32(is);
    uint32_t k = io::read_u32(is);
    p.mean_.resize(s);
    for (uint32_t i = 0; i < s; ++i) p.mean_(i) = io::read_f64(is);
    p.basis_.resize(s, k);
    for (uint32_t r = 0; r < s; ++r)
      for (uint32_t c = 0; c < k; ++c) p.basis_(r, c) = io::read_f64(is);
    return p;
  }

  /// D x Q DCT-II basis (orthonormal), or the identity when order == 0.
  static Eigen::MatrixXd cepstral_lifter(Eigen::Index d, int order) {
    if (order <= 0) return Eigen::MatrixXd::Identity(d, d);
    if (order > d) throw ContractViolation("cepstral order exceeds mel dim");
    Eigen::MatrixXd dct(d, order);
    const double pi = 3.14159265358979323846;
    for (Eigen::Index n = 0; n < d; ++n)
      for (int q = 0; q < order; ++q)
        dct(n, q) = std::cos(pi / static_cast<double>(d) * (n + 0.5) * q) *
                    (q == 0 ? std::sqrt(1.0 / d) : std::sqrt(2.0 / d));
    return dct;
  }

  static Eigen::MatrixXd stack_context(const Eigen::MatrixXd& x, int context) {
    if (context == 0) return x;
    const Eigen::Index T = x.rows(), d = x.cols();
    Eigen::MatrixXd out(T, d * (2 * context + 1));
    for (Eigen::Index t = 0; t < T; ++t) {
      for (int c = -context; c <= context; ++c) {
        Eigen::Index src = std::min(std::max<Eigen::Index>(t + c, 0), T - 1);
        out.block(t, (c + context) * d, 1, d) = x.row(src);
      }
    }
    return out;
  }

 private:
  int context_ = 1;
  int cepstral_order_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;  // input_dim x k, orthonormal columns
};

}  // namespace pvc
