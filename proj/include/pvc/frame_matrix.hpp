// Copyright 2026 The PVC Authors
// Time-major per-frame feature matrices and the PVCF cache container.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/io_util.hpp"

namespace pvc {

enum class FeatureKind : uint32_t {
  kMel = 0,
  kContent = 1,
  kProsody = 2,
  kFilteredProsody = 3,
  kF0 = 4,
};

inline const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::kMel: return "mel";
    case FeatureKind::kContent: return "content";
    case FeatureKind::kProsody: return "prosody";
    case FeatureKind::kFilteredProsody: return "filtered_prosody";
    case FeatureKind::kF0: return "f0";
  }
  return "unknown";
}

/// T x D matrix of per-frame features, rows are frames.
struct FrameMatrix {
  Eigen::MatrixXf data;
  double hop_seconds = 0.01;
  FeatureKind kind = FeatureKind::kMel;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }

  void validate() const {
    if (data.rows() < 1) throw ContractViolation("FrameMatrix needs T >= 1");
    if (!data.allFinite())
      throw ContractViolation("FrameMatrix has non-finite entries");
    if (hop_seconds <= 0.0) throw ContractViolation("hop must be positive");
  }
};

/// Per-frame fundamental frequency in Hz; 0 marks unvoiced frames.
struct F0Track {
  std::vector<float> values;
  double hop_seconds = 0.01;

  size_t frames() const { return values.size(); }
};

// ---------------------------------------------------------------------------
// PVCF container: magic "PVCF", version u32, kind u32, T u32, D u32,
// hop in microseconds u32, then T*D little-endian f32 row-major.
// ---------------------------------------------------------------------------

inline constexpr uint32_t kFeatureCacheVersion = 1;

inline void save_feature(const std::string& path, const FrameMatrix& fm) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for write: " + path);
  io::write_magic(os, "PVCF");
  io::write_u32(os, kFeatureCacheVersion);
  io::write_u32(os, static_cast<uint32_t>(fm.kind));
  io::write_u32(os, static_cast<uint32_t>(fm.data.rows()));
  io::write_u32(os, static_cast<uint32_t>(fm.data.cols()));
  io::write_u32(os, static_cast<uint32_t>(std::llround(fm.hop_seconds * 1e6)));
  for (Eigen::Index t = 0; t < fm.data.rows(); ++t)
    for (Eigen::Index d = 0; d < fm.data.cols(); ++d)
      io::write_f32(os, fm.data(t, d));
  if (!os) throw IoError("write failed: " + path);
}

inline FrameMatrix load_feature(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  io::expect_magic(is, "PVCF", "feature cache");
  uint32_t version = io::read_u32(is);
  if (version != kFeatureCacheVersion)
    throw IoError("unsupported feature cache version in " + path);
  FrameMatrix fm;
  fm.kind = static_cast<FeatureKind>(io::read_u32(is));
  uint32_t T = io::read_u32(is);
  uint32_t D = io::read_u32(is);
  fm.hop_seconds = static_cast<double>(io::read_u32(is)) * 1e-6;
  fm.data.resize(T, D);
  for (uint32_t t = 0; t < T; ++t)
    for (uint32_t d = 0; d < D; ++d) fm.data(t, d) = io::read_f32(is);
  return fm;
}

inline void save_f0(const std::string& path, const F0Track& f0) {
  FrameMatrix fm;
  fm.kind = FeatureKind::kF0;
  fm.hop_seconds = f0.hop_seconds;
  fm.data.resize(static_cast<Eigen::Index>(f0.values.size()), 1);
  for (size_t i = 0; i < f0.values.size(); ++i)
    fm.data(static_cast<Eigen::Index>(i), 0) = f0.values[i];
  save_feature(path, fm);
}

inline F0Track load_f0(const std::string& path) {
  FrameMatrix fm = load_feature(path);
  if (fm.kind != FeatureKind::kF0 || fm.data.cols() != 1)
    throw IoError("not an f0 cache: " + path);
  F0Track f0;
  f0.hop_seconds = fm.hop_seconds;
  f0.values.resize(static_cast<size_t>(fm.data.rows()));
  for (Eigen::Index t = 0; t < fm.data.rows(); ++t)
    f0.values[static_cast<size_t>(t)] = fm.data(t, 0);
  return f0;
}

}  // namespace pvc
