// Copyright 2026 The PVC Authors
// Prosody encoder over discrete index pairs: two embedding tables, time
// max-pooling, a six-layer 2-D convolution stack, a bidirectional GRU and a
// linear head, upsampled back to the input frame rate.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/nn/conv.hpp"
#include "pvc/nn/gru.hpp"
#include "pvc/nn/layers.hpp"
#include "pvc/nn/param.hpp"
#include "pvc/quantizer.hpp"
#include "pvc/rng.hpp"

namespace pvc {

struct ProsodyEncoderConfig {
  int codebook_size = 320;
  int embed_dim = 128;  // per table; frame vector is 2x this
  std::vector<int> conv_maps = {32, 32, 64, 64, 64, 64};
  int gru_dim = 32;  // per direction
  int out_dim = 4;

  int frame_dim() const { return 2 * embed_dim; }

  /// Shrunken dimensions for gradient oracles.
  static ProsodyEncoderConfig tiny(int codebook_size = 5) {
    ProsodyEncoderConfig c;
    c.codebook_size = codebook_size;
    c.embed_dim = 3;
    c.conv_maps = {2, 2, 3, 3, 3, 3};
    c.gru_dim = 3;
    c.out_dim = 4;
    return c;
  }
};

class ProsodyEncoder {
 public:
  ProsodyEncoder() = default;

  void init(const ProsodyEncoderConfig& cfg, Rng& rng) {
    cfg_ = cfg;
    table_a_.init("prosody_enc.table_a", cfg.codebook_size, cfg.embed_dim,
                  rng);
    table_b_.init("prosody_enc.table_b", cfg.codebook_size, cfg.embed_dim,
                  rng);
    convs_.resize(cfg.conv_maps.size());
    int maps_in = 1;
    for (size_t i = 0; i < cfg.conv_maps.size(); ++i) {
      convs_[i].init("prosody_enc.conv" + std::to_string(i), maps_in,
                     cfg.conv_maps[i], rng);
      maps_in = cfg.conv_maps[i];
    }
    birnn_.init("prosody_enc.birnn", maps_in * cfg.frame_dim(), cfg.gru_dim,
                rng);
    out_proj_.init("prosody_enc.out_proj", birnn_.output_dim(), cfg.out_dim,
                   rng);
  }

  const ProsodyEncoderConfig& config() const { return cfg_; }

  void collect(nn::ParamRefs& out) {
    table_a_.collect(out);
    table_b_.collect(out);
    for (auto& c : convs_) c.collect(out);
    birnn_.collect(out);
    out_proj_.collect(out);
  }

  struct Cache {
    nn::Embedding::Cache emb_a, emb_b;
    nn::MaxPoolTime2::Cache pool;
    std::vector<nn::Conv2dMaps::Cache> convs;
    std::vector<nn::Mat> conv_tanh;  // activated outputs per layer
    nn::BiGru::Cache birnn;
    nn::Linear::Cache proj;
    nn::UpsampleTime2::Cache upsample;
    Eigen::Index T = 0, pooled = 0;
  };

  /// Index pairs -> T x (2*embed_dim) frame vectors.
  nn::Mat embed(const IndexSequence& idx, Cache& cache) const {
    if (idx.frames() < 1) throw EmptyInputError("no frames to embed");
    nn::Mat a = table_a_.forward(idx.indices.col(0), cache.emb_a);
    nn::Mat b = table_b_.forward(idx.indices.col(1), cache.emb_b);
    nn::Mat out(idx.frames(), cfg_.frame_dim());
    out.leftCols(cfg_.embed_dim) = a;
    out.rightCols(cfg_.embed_dim) = b;
    return out;
  }

  /// Embedded frames -> T x out_dim prosody vectors (same T).
  nn::Mat encode(const nn::Mat& embedded, Cache& cache) const {
    const Eigen::Index T = embedded.rows();
    if (T < 2) throw EmptyInputError("prosody encoder needs T >= 2");
    cache.T = T;
    nn::Mat pooled = nn::MaxPoolTime2::forward(embedded, cache.pool);
    const Eigen::Index Tp = pooled.rows();
    const Eigen::Index W = cfg_.frame_dim();
    cache.pooled = Tp;

    // (Tp x W) grid with one input map; rows become grid positions.
    nn::Mat maps(Tp * W, 1);
    for (Eigen::Index t = 0; t < Tp; ++t)
      for (Eigen::Index x = 0; x < W; ++x) maps(t * W + x, 0) = pooled(t, x);

    cache.convs.resize(convs_.size());
    cache.conv_tanh.resize(convs_.size());
    for (size_t i = 0; i < convs_.size(); ++i) {
      nn::Mat pre = convs_[i].forward(maps, Tp, W, cache.convs[i]);
      cache.conv_tanh[i] = nn::tanh_forward(pre);
      maps = cache.conv_tanh[i];
    }

    // Flatten maps x width per time step for the recurrence.
    const int m_out = convs_.back().mout;
    nn::Mat seq(Tp, static_cast<Eigen::Index>(m_out) * W);
    for (Eigen::Index t = 0; t < Tp; ++t)
      for (Eigen::Index x = 0; x < W; ++x)
        for (int m = 0; m < m_out; ++m)
          seq(t, static_cast<Eigen::Index>(m) * W + x) = maps(t * W + x, m);

    nn::Mat hidden = birnn_.forward(seq, cache.birnn);
    nn::Mat low = out_proj_.forward(hidden, cache.proj);
    return nn::UpsampleTime2::forward(low, T, cache.upsample);
  }

  nn::Mat forward(const IndexSequence& idx, Cache& cache) const {
    validate_indices(idx);
    return encode(embed(idx, cache), cache);
  }

  /// Gradient w.r.t. the embedded input; embedding-table gradients are
  /// accumulated when the cache came from forward()/embed().
  nn::Mat backward(Cache& cache, const nn::Mat& dout) {
    nn::Mat dlow = nn::UpsampleTime2::backward(cache.upsample, dout);
    nn::Mat dhidden = out_proj_.backward(cache.proj, dlow);
    nn::Mat dseq = birnn_.backward(cache.birnn, dhidden);

    const Eigen::Index Tp = cache.pooled;
    const Eigen::Index W = cfg_.frame_dim();
    const int m_out = convs_.back().mout;
    nn::Mat dmaps = nn::Mat::Zero(Tp * W, m_out);
    for (Eigen::Index t = 0; t < Tp; ++t)
      for (Eigen::Index x = 0; x < W; ++x)
        for (int m = 0; m < m_out; ++m)
          dmaps(t * W + x, m) = dseq(t, static_cast<Eigen::Index>(m) * W + x);

    for (size_t i = convs_.size(); i-- > 0;) {
      dmaps = nn::tanh_backward(cache.conv_tanh[i], dmaps);
      dmaps = convs_[i].backward(cache.convs[i], dmaps);
    }

    nn::Mat dpooled(Tp, W);
    for (Eigen::Index t = 0; t < Tp; ++t)
      for (Eigen::Index x = 0; x < W; ++x) dpooled(t, x) = dmaps(t * W + x, 0);

    nn::Mat dembedded = nn::MaxPoolTime2::backward(cache.pool, dpooled);
    if (cache.emb_a.ids.size() > 0) {
      table_a_.backward(cache.emb_a, dembedded.leftCols(cfg_.embed_dim));
      table_b_.backward(cache.emb_b, dembedded.rightCols(cfg_.embed_dim));
    }
    return dembedded;
  }

  void validate_indices(const IndexSequence& idx) const {
    for (Eigen::Index t = 0; t < idx.frames(); ++t)
      for (int g = 0; g < 2; ++g)
        if (idx.indices(t, g) < 0 || idx.indices(t, g) >= cfg_.codebook_size)
          throw ContractViolation("index out of range at frame " +
                                  std::to_string(t));
  }

 private:
  ProsodyEncoderConfig cfg_;
  nn::Embedding table_a_, table_b_;
  std::vector<nn::Conv2dMaps> convs_;
  nn::BiGru birnn_;
  nn::Linear out_proj_;
};

/// Paper-default architecture sized for a codebook of V entries,
/// fan-in-scaled uniform init, deterministic per seed.
inline ProsodyEncoder init_prosody_encoder(int codebook_size, uint64_t seed) {
  if (codebook_size < 2) throw ContractViolation("codebook size must be >= 2");
  ProsodyEncoderConfig cfg;
  cfg.codebook_size = codebook_size;
  ProsodyEncoder enc;
  Rng rng(seed);
  enc.init(cfg, rng);
  return enc;
}

}  // namespace pvc
