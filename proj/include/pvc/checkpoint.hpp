// Copyright 2026 The PVC Authors
// PVCK checkpoint container: named parameter blocks, optimizer moments,
// epoch counter, config fingerprint and a config snapshot.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/io_util.hpp"
#include "pvc/nn/adam.hpp"
#include "pvc/nn/param.hpp"

namespace pvc {

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  uint32_t version = kCheckpointVersion;
  uint64_t fingerprint = 0;
  uint32_t epoch = 0;
  uint64_t optimizer_step = 0;
  std::string config_json;
};

struct NamedBlock {
  std::string name;
  nn::Mat value;
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::vector<NamedBlock> params;
  std::vector<NamedBlock> moments;
};

namespace ckpt_detail {

inline void write_block(std::ostream& os, const std::string& name,
                        const nn::Mat& m) {
  io::write_string(os, name);
  io::write_u32(os, static_cast<uint32_t>(m.rows()));
  io::write_u32(os, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      io::write_f32(os, static_cast<float>(m(r, c)));
}

inline NamedBlock read_block(std::istream& is) {
  NamedBlock b;
  b.name = io::read_string(is);
  uint32_t rows = io::read_u32(is);
  uint32_t cols = io::read_u32(is);
  b.value.resize(rows, cols);
  for (uint32_t r = 0; r < rows; ++r)
    for (uint32_t c = 0; c < cols; ++c) b.value(r, c) = io::read_f32(is);
  return b;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string& path,
                            const CheckpointMeta& meta,
                            const nn::ParamRefs& params,
                            const nn::Adam* optimizer = nullptr) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for write: " + path);
  io::write_magic(os, "PVCK");
  io::write_u32(os, kCheckpointVersion);
  io::write_u64(os, meta.fingerprint);
  io::write_u32(os, meta.epoch);
  io::write_u64(os, meta.optimizer_step);
  io::write_string(os, meta.config_json);
  io::write_u32(os, static_cast<uint32_t>(params.size()));
  for (const nn::Tensor* p : params)
    ckpt_detail::write_block(os, p->name, p->value);
  if (optimizer != nullptr) {
    io::write_u32(os, static_cast<uint32_t>(2 * optimizer->size()));
    for (size_t i = 0; i < optimizer->size(); ++i) {
      ckpt_detail::write_block(os, "adam.m." + optimizer->params()[i]->name,
                               optimizer->first_moment(i));
      ckpt_detail::write_block(os, "adam.v." + optimizer->params()[i]->name,
                               optimizer->second_moment(i));
    }
  } else {
    io::write_u32(os, 0);
  }
  if (!os) throw IoError("write failed: " + path);
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  io::expect_magic(is, "PVCK", "checkpoint");
  LoadedCheckpoint out;
  out.meta.version = io::read_u32(is);
  if (out.meta.version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version in " + path);
  out.meta.fingerprint = io::read_u64(is);
  out.meta.epoch = io::read_u32(is);
  out.meta.optimizer_step = io::read_u64(is);
  out.meta.config_json = io::read_string(is);
  uint32_t n_params = io::read_u32(is);
  out.params.reserve(n_params);
  for (uint32_t i = 0; i < n_params; ++i)
    out.params.push_back(ckpt_detail::read_block(is));
  uint32_t n_moments = io::read_u32(is);
  out.moments.reserve(n_moments);
  for (uint32_t i = 0; i < n_moments; ++i)
    out.moments.push_back(ckpt_detail::read_block(is));
  return out;
}

/// Copies loaded blocks into live tensors, matching by name.
inline void restore_params(const LoadedCheckpoint& ckpt,
                           const nn::ParamRefs& params) {
  std::map<std::string, const nn::Mat*> by_name;
  for (const auto& b : ckpt.params) by_name[b.name] = &b.value;
  for (nn::Tensor* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end())
      throw ValidationError("checkpoint is missing parameter " + p->name);
    if (it->second->rows() != p->value.rows() ||
        it->second->cols() != p->value.cols())
      throw ValidationError("checkpoint shape mismatch for " + p->name);
    p->value = *it->second;
  }
}

/// Restores Adam moments for an optimizer already attached to the params.
inline void restore_optimizer(const LoadedCheckpoint& ckpt,
                              nn::Adam& optimizer) {
  std::map<std::string, const nn::Mat*> by_name;
  for (const auto& b : ckpt.moments) by_name[b.name] = &b.value;
  for (size_t i = 0; i < optimizer.size(); ++i) {
    const std::string& pname = optimizer.params()[i]->name;
    auto m = by_name.find("adam.m." + pname);
    auto v = by_name.find("adam.v." + pname);
    if (m == by_name.end() || v == by_name.end())
      throw ValidationError("checkpoint is missing moments for " + pname);
    optimizer.first_moment(i) = *m->second;
    optimizer.second_moment(i) = *v->second;
  }
  optimizer.set_step_count(ckpt.meta.optimizer_step);
}

}  // namespace pvc
