// Copyright 2026 The PVC Authors
// The conversion model: content encoder, speaker table and autoregressive
// mel decoder, conditioned on content + prosody + speaker streams.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pvc/alignment.hpp"
#include "pvc/errors.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/nn/conv.hpp"
#include "pvc/nn/gru.hpp"
#include "pvc/nn/layers.hpp"
#include "pvc/nn/param.hpp"
#include "pvc/prosody_encoder.hpp"
#include "pvc/prosody_filters.hpp"
#include "pvc/quantizer.hpp"
#include "pvc/rng.hpp"

namespace pvc {

enum class ProsodyMode { kNone, kBase, kRdpf, kAdpf };

inline const char* prosody_mode_name(ProsodyMode m) {
  switch (m) {
    case ProsodyMode::kNone: return "none";
    case ProsodyMode::kBase: return "base";
    case ProsodyMode::kRdpf: return "rdpf";
    case ProsodyMode::kAdpf: return "adpf";
  }
  return "unknown";
}

inline ProsodyMode prosody_mode_from_name(const std::string& s) {
  if (s == "none") return ProsodyMode::kNone;
  if (s == "base") return ProsodyMode::kBase;
  if (s == "rdpf") return ProsodyMode::kRdpf;
  if (s == "adpf") return ProsodyMode::kAdpf;
  throw ContractViolation("unknown prosody mode: " + s);
}

struct ModelConfig {
  int mel_dim = 80;
  int content_feature_dim = 128;
  int content_channels = 512;  // Tacotron2-encoder shape
  int content_kernel = 5;
  int content_rnn = 256;  // per direction
  int speaker_count = 2;
  int speaker_dim = 64;
  int prosody_dim = 4;
  int adpf_hidden = 4;  // equals prosody_dim so every mode conditions alike
  int prenet_dim = 64;
  int decoder_hidden = 256;
  ProsodyEncoderConfig prosody;

  int content_out_dim() const { return 2 * content_rnn; }
  int cond_dim() const {
    return content_out_dim() + prosody_dim + speaker_dim;
  }

  /// Shrunken dimensions for gradient oracles and fast tests:
  /// mel 8, content features 16, conv channels 8.
  static ModelConfig test_config(int speakers = 2, int codebook = 5) {
    ModelConfig c;
    c.mel_dim = 8;
    c.content_feature_dim = 16;
    c.content_channels = 8;
    c.content_rnn = 8;
    c.speaker_count = speakers;
    c.speaker_dim = 8;
    c.prenet_dim = 8;
    c.decoder_hidden = 12;
    c.prosody = ProsodyEncoderConfig::tiny(codebook);
    return c;
  }
};

// ---------------------------------------------------------------------------
// Content encoder: 3 same-padded convolutions (tanh) + bidirectional GRU.
// ---------------------------------------------------------------------------

struct ContentEncoder {
  std::vector<nn::Conv1dTime> convs;
  nn::BiGru rnn;

  void init(const ModelConfig& cfg, Rng& rng) {
    convs.resize(3);
    int cin = cfg.content_feature_dim;
    for (int i = 0; i < 3; ++i) {
      convs[i].init("content_enc.conv" + std::to_string(i), cin,
                    cfg.content_channels, cfg.content_kernel, rng);
      cin = cfg.content_channels;
    }
    rnn.init("content_enc.rnn", cin, cfg.content_rnn, rng);
  }

  void collect(nn::ParamRefs& out) {
    for (auto& c : convs) c.collect(out);
    rnn.collect(out);
  }

  struct Cache {
    std::vector<nn::Conv1dTime::Cache> convs;
    std::vector<nn::Mat> conv_tanh;
    nn::BiGru::Cache rnn;
  };

  nn::Mat forward(const nn::Mat& x, Cache& cache) const {
    cache.convs.resize(convs.size());
    cache.conv_tanh.resize(convs.size());
    nn::Mat h = x;
    for (size_t i = 0; i < convs.size(); ++i) {
      nn::Mat pre = convs[i].forward(h, cache.convs[i]);
      cache.conv_tanh[i] = nn::tanh_forward(pre);
      h = cache.conv_tanh[i];
    }
    return rnn.forward(h, cache.rnn);
  }

  nn::Mat backward(Cache& cache, const nn::Mat& dout) {
    nn::Mat d = rnn.backward(cache.rnn, dout);
    for (size_t i = convs.size(); i-- > 0;) {
      d = nn::tanh_backward(cache.conv_tanh[i], d);
      d = convs[i].backward(cache.convs[i], d);
    }
    return d;
  }
};

// ---------------------------------------------------------------------------
// Decoder: two-layer tanh prenet on the previous mel frame, a unidirectional
// recurrence over [conditioning, prenet] and a linear mel head.
// ---------------------------------------------------------------------------

struct Decoder {
  nn::Linear prenet1, prenet2;
  nn::Gru core;
  nn::Linear proj;

  void init(const ModelConfig& cfg, Rng& rng) {
    prenet1.init("decoder.prenet1", cfg.mel_dim, cfg.prenet_dim, rng);
    prenet2.init("decoder.prenet2", cfg.prenet_dim, cfg.prenet_dim, rng);
    core.init("decoder.core", cfg.cond_dim() + cfg.prenet_dim,
              cfg.decoder_hidden, rng);
    proj.init("decoder.proj", cfg.decoder_hidden, cfg.mel_dim, rng);
  }

  void collect(nn::ParamRefs& out) {
    prenet1.collect(out);
    prenet2.collect(out);
    core.collect(out);
    proj.collect(out);
  }

  struct Cache {
    nn::Linear::Cache pre1, pre2, proj;
    nn::Mat pre1_tanh, pre2_tanh;
    nn::Gru::Cache core;
    Eigen::Index cond_dim = 0;
  };

  /// Teacher-forced pass: previous-frame inputs are the shifted teacher mel
  /// (zero "go" frame first). `prev_noise`, when given, is added to those
  /// inputs; the teacher frames carry no gradient either way.
  nn::Mat teacher_forward(const nn::Mat& cond, const nn::Mat& teacher,
                          Cache& cache,
                          const nn::Mat* prev_noise = nullptr) const {
    const Eigen::Index T = cond.rows();
    if (teacher.rows() != T)
      throw ContractViolation("teacher length mismatch");
    nn::Mat prev = nn::Mat::Zero(T, teacher.cols());
    if (T > 1) prev.bottomRows(T - 1) = teacher.topRows(T - 1);
    if (prev_noise != nullptr) prev += *prev_noise;
    cache.cond_dim = cond.cols();
    cache.pre1_tanh = nn::tanh_forward(prenet1.forward(prev, cache.pre1));
    cache.pre2_tanh =
        nn::tanh_forward(prenet2.forward(cache.pre1_tanh, cache.pre2));
    nn::Mat gru_in(T, cond.cols() + cache.pre2_tanh.cols());
    gru_in.leftCols(cond.cols()) = cond;
    gru_in.rightCols(cache.pre2_tanh.cols()) = cache.pre2_tanh;
    nn::Mat hidden = core.forward(gru_in, cache.core);
    return proj.forward(hidden, cache.proj);
  }

  /// Gradient w.r.t. the conditioning streams.
  nn::Mat backward(Cache& cache, const nn::Mat& dmel) {
    nn::Mat dhidden = proj.backward(cache.proj, dmel);
    nn::Mat dgru_in = core.backward(cache.core, dhidden);
    nn::Mat dcond = dgru_in.leftCols(cache.cond_dim);
    nn::Mat dpre2 = dgru_in.rightCols(dgru_in.cols() - cache.cond_dim);
    nn::Mat dpre1 =
        prenet2.backward(cache.pre2, nn::tanh_backward(cache.pre2_tanh, dpre2));
    prenet1.backward(cache.pre1, nn::tanh_backward(cache.pre1_tanh, dpre1));
    return dcond;
  }

  /// Self-fed autoregressive decoding.
  nn::Mat free_run(const nn::Mat& cond, int mel_dim) const {
    const Eigen::Index T = cond.rows();
    nn::Mat mel(T, mel_dim);
    nn::Row prev = nn::Row::Zero(mel_dim);
    nn::Row h = nn::Row::Zero(core.hidden_dim);
    for (Eigen::Index t = 0; t < T; ++t) {
      nn::Row p1 = ((prev * prenet1.w.value) + prenet1.b.value.row(0))
                       .array()
                       .tanh()
                       .matrix();
      nn::Row p2 = ((p1 * prenet2.w.value) + prenet2.b.value.row(0))
                       .array()
                       .tanh()
                       .matrix();
      nn::Row gin(cond.cols() + p2.cols());
      gin.leftCols(cond.cols()) = cond.row(t);
      gin.rightCols(p2.cols()) = p2;
      h = core.step(gin, h);
      mel.row(t) = (h * proj.w.value) + proj.b.value.row(0);
      prev = mel.row(t);
    }
    return mel;
  }
};

// ---------------------------------------------------------------------------
// Full model.
// ---------------------------------------------------------------------------

class ConversionModel {
 public:
  void init(const ModelConfig& cfg, uint64_t seed) {
    cfg_ = cfg;
    if (cfg.adpf_hidden != cfg.prosody_dim)
      throw ContractViolation(
          "aligned-filter hidden width must equal the prosody dimension");
    if (cfg.prosody.out_dim != cfg.prosody_dim)
      throw ContractViolation(
          "prosody encoder output dim must equal the prosody dimension");
    Rng rng(seed);
    Rng r_content = rng.fork(1);
    Rng r_speaker = rng.fork(2);
    Rng r_prosody = rng.fork(3);
    Rng r_adpf = rng.fork(4);
    Rng r_decoder = rng.fork(5);
    content_enc_.init(cfg, r_content);
    speaker_table_.init("speaker.table", cfg.speaker_count, cfg.speaker_dim,
                        r_speaker);
    prosody_enc_.init(cfg.prosody, r_prosody);
    adpf_params_.init(cfg.prosody_dim, cfg.adpf_hidden, r_adpf);
    decoder_.init(cfg, r_decoder);
  }

  const ModelConfig& config() const { return cfg_; }

  nn::ParamRefs params() {
    nn::ParamRefs out;
    content_enc_.collect(out);
    speaker_table_.collect(out);
    decoder_.collect(out);
    prosody_enc_.collect(out);
    adpf_params_.collect(out);
    nn::check_unique_names(out);
    return out;
  }

  /// Parameter census by owning component.
  std::vector<std::pair<std::string, nn::ParamRefs>> param_groups() {
    std::vector<std::pair<std::string, nn::ParamRefs>> groups;
    groups.emplace_back("content_encoder", nn::ParamRefs{});
    content_enc_.collect(groups.back().second);
    groups.emplace_back("speaker_table", nn::ParamRefs{});
    speaker_table_.collect(groups.back().second);
    groups.emplace_back("decoder", nn::ParamRefs{});
    decoder_.collect(groups.back().second);
    groups.emplace_back("prosody_encoder", nn::ParamRefs{});
    prosody_enc_.collect(groups.back().second);
    groups.emplace_back("adpf", nn::ParamRefs{});
    adpf_params_.collect(groups.back().second);
    return groups;
  }

  ContentEncoder& content_encoder() { return content_enc_; }
  ProsodyEncoder& prosody_encoder() { return prosody_enc_; }
  AdpfParams& adpf_params() { return adpf_params_; }
  Decoder& decoder() { return decoder_; }
  nn::Embedding& speaker_table() { return speaker_table_; }

  /// Content features -> T x content_out_dim conditioning stream.
  nn::Mat encode_content(const FrameMatrix& content,
                         ContentEncoder::Cache& cache) const {
    if (content.kind != FeatureKind::kContent)
      throw ContractViolation("expected content features");
    if (content.dim() != cfg_.content_feature_dim)
      throw ContractViolation("content feature dimension mismatch");
    return content_enc_.forward(content.data.cast<double>(), cache);
  }

  nn::Row speaker_embed(int speaker_id) const {
    if (speaker_id < 0 || speaker_id >= cfg_.speaker_count)
      throw ContractViolation("speaker id out of range: " +
                              std::to_string(speaker_id));
    return speaker_table_.table.value.row(speaker_id);
  }

  /// Concatenates the three conditioning streams; empty prosody means the
  /// zero stream (mode none).
  nn::Mat build_conditioning(const nn::Mat& content_stream,
                             const nn::Mat& prosody_stream,
                             const nn::Row& speaker_vec) const {
    const Eigen::Index T = content_stream.rows();
    nn::Mat prosody = prosody_stream;
    if (prosody.size() == 0) prosody = nn::Mat::Zero(T, cfg_.prosody_dim);
    if (prosody.rows() != T)
      throw ContractViolation("prosody stream length mismatch");
    if (prosody.cols() != cfg_.prosody_dim)
      throw ContractViolation("prosody stream width mismatch");
    nn::Mat cond(T, cfg_.cond_dim());
    cond.leftCols(content_stream.cols()) = content_stream;
    cond.middleCols(content_stream.cols(), cfg_.prosody_dim) = prosody;
    cond.rightCols(cfg_.speaker_dim) = speaker_vec.replicate(T, 1);
    return cond;
  }

 private:
  ModelConfig cfg_;
  ContentEncoder content_enc_;
  nn::Embedding speaker_table_;
  ProsodyEncoder prosody_enc_;
  AdpfParams adpf_params_;
  Decoder decoder_;
};

/// Mean absolute error and its gradient w.r.t. the prediction.
inline double mae_loss(const nn::Mat& pred, const nn::Mat& target,
                       nn::Mat* grad = nullptr) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ContractViolation("loss shape mismatch");
  const double n = static_cast<double>(pred.size());
  nn::Mat diff = pred - target;
  if (grad != nullptr)
    *grad = diff.unaryExpr([n](double v) {
      return v > 0.0 ? 1.0 / n : (v < 0.0 ? -1.0 / n : 0.0);
    });
  return diff.array().abs().sum() / n;
}

}  // namespace pvc
