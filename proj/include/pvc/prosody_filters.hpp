// Copyright 2026 The PVC Authors
// Prosody filters: downsample-then-upsample passes that strip residual
// content/speaker detail from frame-level prosody vectors.
//
//   rdpf: fixed-rate blocks of tau frames, one vector kept per block
//   adpf: causal recurrence, the hidden state at each phone-final frame
//         kept and repeated across its phone
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "pvc/alignment.hpp"
#include "pvc/errors.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/nn/gru.hpp"
#include "pvc/nn/param.hpp"
#include "pvc/rng.hpp"

namespace pvc {

enum class FilterProvenance { kNone, kRdpf, kAdpf };

/// Output of a prosody filter: same T as the input, piecewise constant
/// over the blocks/segments it was built from.
struct Filtered {
  nn::Mat data;                    // T x D
  std::vector<int> selected;       // one source frame per block/segment
  std::vector<std::pair<int, int>> blocks;  // [start, end) per block/segment
  FilterProvenance provenance = FilterProvenance::kNone;

  FrameMatrix to_frame_matrix(double hop_seconds) const {
    FrameMatrix fm;
    fm.kind = FeatureKind::kFilteredProsody;
    fm.hop_seconds = hop_seconds;
    fm.data = data.cast<float>();
    return fm;
  }
};

enum class RdpfMode { kDeterministic, kRandom };

namespace filter_detail {

inline std::vector<std::pair<int, int>> fixed_blocks(int T, int tau) {
  std::vector<std::pair<int, int>> blocks;
  for (int s = 0; s < T; s += tau)
    blocks.emplace_back(s, std::min(s + tau, T));
  return blocks;
}

inline std::vector<std::pair<int, int>> phone_blocks(const FramePhoneMap& map) {
  std::vector<std::pair<int, int>> blocks;
  const int T = static_cast<int>(map.frames());
  for (int f = 0; f < T; ++f) {
    if (blocks.empty() || map.phone_of_frame[f] != map.phone_of_frame[blocks.back().first])
      blocks.emplace_back(f, f + 1);
    else
      blocks.back().second = f + 1;
  }
  return blocks;
}

inline Filtered select_and_repeat(const nn::Mat& source,
                                  std::vector<std::pair<int, int>> blocks,
                                  RdpfMode mode, Rng* rng,
                                  FilterProvenance tag) {
  Filtered out;
  out.provenance = tag;
  out.blocks = std::move(blocks);
  out.data.resize(source.rows(), source.cols());
  out.selected.reserve(out.blocks.size());
  for (const auto& [start, end] : out.blocks) {
    int pick;
    if (mode == RdpfMode::kRandom) {
      pick = start + static_cast<int>(rng->integer(end - start));
    } else {
      pick = end - 1;  // timestamps tau-1, 2*tau-1, ... and a short tail's end
    }
    out.selected.push_back(pick);
    for (int f = start; f < end; ++f) out.data.row(f) = source.row(pick);
  }
  return out;
}

}  // namespace filter_detail

/// Fixed-rate downsample-upsample. Deterministic mode keeps the last frame of
/// every block (global timestamps tau-1, 2tau-1, ...; a short final block
/// keeps its own last frame); random mode picks uniformly inside each block.
inline Filtered rdpf(const nn::Mat& prosody, int tau, RdpfMode mode,
                     uint64_t seed = 0) {
  if (tau < 1) throw ContractViolation("tau must be >= 1");
  if (prosody.rows() < 1) throw EmptyInputError("no prosody frames");
  Rng rng(seed);
  return filter_detail::select_and_repeat(
      prosody, filter_detail::fixed_blocks(static_cast<int>(prosody.rows()), tau),
      mode, &rng, FilterProvenance::kRdpf);
}

/// Variant that groups by phone segments instead of fixed-rate blocks.
inline Filtered rdpf_by_phone(const nn::Mat& prosody, const FramePhoneMap& map,
                              RdpfMode mode, uint64_t seed = 0) {
  if (static_cast<Eigen::Index>(map.frames()) != prosody.rows())
    throw ContractViolation("phone map length does not match prosody");
  if (prosody.rows() < 1) throw EmptyInputError("no prosody frames");
  Rng rng(seed);
  return filter_detail::select_and_repeat(prosody,
                                          filter_detail::phone_blocks(map),
                                          mode, &rng,
                                          FilterProvenance::kRdpf);
}

/// Recurrent parameters for the aligned filter; hidden width defaults to the
/// prosody dimension so every mode conditions the decoder identically.
struct AdpfParams {
  nn::Gru gru;

  void init(int prosody_dim, int hidden_dim, Rng& rng) {
    gru.init("adpf.gru", prosody_dim, hidden_dim, rng);
  }

  void collect(nn::ParamRefs& out) { gru.collect(out); }
};

struct AdpfCache {
  nn::Gru::Cache gru;
  std::vector<std::pair<int, int>> blocks;
  Eigen::Index T = 0;
};

/// Aligned downsample-upsample: run the causal recurrence over all frames,
/// keep the hidden state at each phone-final frame, repeat it across the
/// phone. Hidden state is continuous across phone boundaries.
inline Filtered adpf(const nn::Mat& prosody, const FramePhoneMap& map,
                     const AdpfParams& params, AdpfCache* cache = nullptr) {
  if (static_cast<Eigen::Index>(map.frames()) != prosody.rows())
    throw ContractViolation("phone map length does not match prosody");
  if (prosody.rows() < 1) throw EmptyInputError("no prosody frames");
  AdpfCache local;
  AdpfCache& c = cache != nullptr ? *cache : local;
  c.T = prosody.rows();
  c.blocks = filter_detail::phone_blocks(map);
  nn::Mat hidden = params.gru.forward(prosody, c.gru);
  Filtered out;
  out.provenance = FilterProvenance::kAdpf;
  out.blocks = c.blocks;
  out.data.resize(prosody.rows(), hidden.cols());
  for (const auto& [start, end] : c.blocks) {
    out.selected.push_back(end - 1);
    for (int f = start; f < end; ++f) out.data.row(f) = hidden.row(end - 1);
  }
  return out;
}

/// Gradient of select-and-repeat: each block's upstream rows sum into the
/// frame that was selected for it.
inline nn::Mat rdpf_backward(const Filtered& filtered,
                             const nn::Mat& upstream) {
  if (upstream.rows() != filtered.data.rows())
    throw ContractViolation("upstream gradient length mismatch");
  nn::Mat dsource = nn::Mat::Zero(upstream.rows(), upstream.cols());
  for (size_t b = 0; b < filtered.blocks.size(); ++b) {
    const auto& [start, end] = filtered.blocks[b];
    for (int f = start; f < end; ++f)
      dsource.row(filtered.selected[b]) += upstream.row(f);
  }
  return dsource;
}

/// Exact gradients through the repeat-selection and the recurrence.
/// Returns the gradient w.r.t. the prosody input; parameter gradients
/// accumulate into params.
inline nn::Mat adpf_backward(AdpfParams& params, const AdpfCache& cache,
                             const nn::Mat& upstream) {
  if (upstream.rows() != cache.T)
    throw ContractViolation("upstream gradient length mismatch");
  nn::Mat dh = nn::Mat::Zero(cache.T, params.gru.hidden_dim);
  for (const auto& [start, end] : cache.blocks)
    for (int f = start; f < end; ++f) dh.row(end - 1) += upstream.row(f);
  return params.gru.backward(cache.gru, dh);
}

}  // namespace pvc
