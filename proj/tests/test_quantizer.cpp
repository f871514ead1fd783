// Copyright 2026 The PVC Authors
//
// Licensed under the Apache License, Version 2.0

#include <catch2/catch_amalgamated.hpp>
#include <limits>

#include "pvc/quantizer.hpp"
#include "support/test_util.hpp"

using namespace pvc;

namespace {

// Brute-force oracle: nearest centroid pair by exhaustive scan.
std::pair<int, int> brute_nearest(const ProductCodebook& cb,
                                  const Eigen::RowVectorXf& frame) {
  const int half = cb.feature_dim() / 2;
  Eigen::RowVectorXd row = frame.cast<double>();
  int best[2] = {0, 0};
  for (int g = 0; g < 2; ++g) {
    double best_d = std::numeric_limits<double>::infinity();
    Eigen::RowVectorXd part =
        g == 0 ? row.leftCols(half).eval() : row.rightCols(half).eval();
    for (int v = 0; v < cb.codebook_size(); ++v) {
      double d = (cb.groups[g].row(v) - part).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best[g] = v;
      }
    }
  }
  return {best[0], best[1]};
}

double dataset_distortion(const Eigen::MatrixXd& data,
                          const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index v = 0; v < centroids.rows(); ++v)
      best = std::min(best, (data.row(i) - centroids.row(v)).squaredNorm());
    total += best;
  }
  return total / static_cast<double>(data.rows());
}

}  // namespace

TEST_CASE("V distinct frames become their own centroids with zero distortion",
          "[quantizer]") {
  Rng rng(21);
  const int V = 6;
  FrameMatrix feats = pvc_test::random_features(rng, V, 4, FeatureKind::kMel);
  ProductCodebook cb = train_codebook(feats, V, 5, 99);
  IndexSequence idx = quantize(feats, cb);
  FrameMatrix recon = reconstruct(idx, cb);
  REQUIRE((recon.data - feats.data).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("codebook training is deterministic per seed", "[quantizer]") {
  Rng rng(22);
  FrameMatrix feats = pvc_test::random_features(rng, 200, 8,
                                                FeatureKind::kMel);
  ProductCodebook a = train_codebook(feats, 16, 20, 1234);
  ProductCodebook b = train_codebook(feats, 16, 20, 1234);
  REQUIRE(a.groups[0] == b.groups[0]);
  REQUIRE(a.groups[1] == b.groups[1]);
  ProductCodebook c = train_codebook(feats, 16, 20, 4321);
  REQUIRE((a.groups[0] != c.groups[0] || a.groups[1] != c.groups[1]));
}

TEST_CASE("distortion is monotone non-increasing across iterations",
          "[quantizer]") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Index n = 60 + rng.integer(100);
    FrameMatrix feats =
        pvc_test::random_features(rng, n, 6, FeatureKind::kMel);
    KmeansTrace t0, t1;
    train_codebook(feats, 8, 15, 1000 + trial, &t0, &t1);
    for (const KmeansTrace* trace : {&t0, &t1}) {
      REQUIRE(trace->centroids.size() >= 1);
      // Oracle: recompute distortion from scratch at every snapshot.
      const Eigen::MatrixXd data =
          feats.data.cast<double>().leftCols(3);  // matches group 0 only
      for (size_t it = 0; it + 1 < trace->mean_distortion.size(); ++it)
        REQUIRE(trace->mean_distortion[it + 1] <=
                trace->mean_distortion[it] + 1e-12);
    }
    // Cross-check the tracked numbers against the oracle for group 0.
    const Eigen::MatrixXd g0 = feats.data.cast<double>().leftCols(3);
    for (size_t it = 0; it < t0.centroids.size(); ++it)
      REQUIRE(t0.mean_distortion[it] ==
              Catch::Approx(dataset_distortion(g0, t0.centroids[it]))
                  .epsilon(1e-12));
  }
}

TEST_CASE("quantize matches the exhaustive nearest-neighbor scan",
          "[quantizer]") {
  Rng rng(24);
  FrameMatrix feats = pvc_test::random_features(rng, 64, 4,
                                                FeatureKind::kMel);
  ProductCodebook cb = train_codebook(feats, 4, 10, 7);
  IndexSequence idx = quantize(feats, cb);
  for (Eigen::Index t = 0; t < feats.frames(); ++t) {
    auto [b0, b1] = brute_nearest(cb, feats.data.row(t));
    REQUIRE(idx.indices(t, 0) == b0);
    REQUIRE(idx.indices(t, 1) == b1);
  }
}

TEST_CASE("exact centroid and tie-break rules", "[quantizer]") {
  ProductCodebook cb;
  cb.groups[0].setZero(8, 2);
  cb.groups[1].setZero(8, 2);
  // Group 0: centroids 2 and 5 sit near the probe, the rest far away.
  Eigen::VectorXd pos0(8);
  pos0 << 100, 110, 2, 130, 140, 5, 160, 170;
  for (int v = 0; v < 8; ++v) {
    cb.groups[0].row(v) << pos0(v), 0.0;
    cb.groups[1].row(v) << 0.0, v;
  }
  FrameMatrix f;
  f.kind = FeatureKind::kMel;
  f.data.resize(2, 4);
  // Exactly centroid 2 of group 0 and centroid 3 of group 1.
  f.data.row(0) << 2.0f, 0.0f, 0.0f, 3.0f;
  // Equidistant between group-0 centroids 2 and 5 -> smallest index wins.
  f.data.row(1) << 3.5f, 0.0f, 0.0f, 0.0f;
  IndexSequence idx = quantize(f, cb);
  REQUIRE(idx.indices(0, 0) == 2);
  REQUIRE(idx.indices(0, 1) == 3);
  REQUIRE(idx.indices(1, 0) == 2);
}

TEST_CASE("re-quantizing reconstructions is idempotent", "[quantizer]") {
  Rng rng(25);
  FrameMatrix feats = pvc_test::random_features(rng, 120, 6,
                                                FeatureKind::kMel);
  ProductCodebook cb = train_codebook(feats, 10, 15, 55);
  IndexSequence idx = quantize(feats, cb);
  FrameMatrix recon = reconstruct(idx, cb);
  IndexSequence again = quantize(recon, cb);
  REQUIRE(idx.indices == again.indices);
}

TEST_CASE("nearest assignment beats any other assignment", "[quantizer]") {
  Rng rng(26);
  FrameMatrix feats = pvc_test::random_features(rng, 40, 4,
                                                FeatureKind::kMel);
  ProductCodebook cb = train_codebook(feats, 5, 10, 3);
  IndexSequence idx = quantize(feats, cb);
  FrameMatrix recon = reconstruct(idx, cb);
  double chosen = (recon.data - feats.data).cast<double>().squaredNorm();
  Rng alt_rng(27);
  for (int trial = 0; trial < 20; ++trial) {
    IndexSequence other = idx;
    // Perturb a few assignments at random.
    for (int k = 0; k < 5; ++k) {
      Eigen::Index t = alt_rng.integer(feats.frames());
      other.indices(t, alt_rng.integer(2)) =
          static_cast<int>(alt_rng.integer(5));
    }
    FrameMatrix alt = reconstruct(other, cb);
    double d = (alt.data - feats.data).cast<double>().squaredNorm();
    REQUIRE(chosen <= d + 1e-9);
  }
}

TEST_CASE("quantizer contract errors", "[quantizer]") {
  Rng rng(28);
  FrameMatrix odd = pvc_test::random_features(rng, 30, 5, FeatureKind::kMel);
  REQUIRE_THROWS_AS(train_codebook(odd, 4, 5, 1), ContractViolation);
  FrameMatrix few = pvc_test::random_features(rng, 3, 4, FeatureKind::kMel);
  REQUIRE_THROWS_AS(train_codebook(few, 8, 5, 1), InsufficientDataError);
  FrameMatrix ok = pvc_test::random_features(rng, 30, 4, FeatureKind::kMel);
  ProductCodebook cb = train_codebook(ok, 4, 5, 1);
  FrameMatrix wrong = pvc_test::random_features(rng, 10, 6,
                                                FeatureKind::kMel);
  REQUIRE_THROWS_AS(quantize(wrong, cb), ContractViolation);
}

TEST_CASE("codebook file round trips byte-identically", "[quantizer]") {
  auto dir = pvc_test::scratch_dir("codebook_io");
  Rng rng(29);
  FrameMatrix feats = pvc_test::random_features(rng, 50, 4,
                                                FeatureKind::kMel);
  ProductCodebook cb = train_codebook(feats, 8, 10, 77);
  save_codebook(dir + "/a.pvcb", cb);
  ProductCodebook loaded = load_codebook(dir + "/a.pvcb");
  save_codebook(dir + "/b.pvcb", loaded);
  REQUIRE(pvc_test::read_file_bytes(dir + "/a.pvcb") ==
          pvc_test::read_file_bytes(dir + "/b.pvcb"));
  REQUIRE(loaded.codebook_size() == 8);
  REQUIRE(loaded.feature_dim() == 4);
}
