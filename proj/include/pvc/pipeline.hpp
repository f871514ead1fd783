// Copyright 2026 The PVC Authors
// End-to-end conversion: features -> discrete indices -> prosody ->
// filter -> decode -> waveform, with per-stream instrumentation.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <optional>
#include <string>

#include "pvc/alignment.hpp"
#include "pvc/content.hpp"
#include "pvc/errors.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/griffin_lim.hpp"
#include "pvc/mel.hpp"
#include "pvc/model.hpp"
#include "pvc/pitch.hpp"
#include "pvc/quantizer.hpp"
#include "pvc/wav.hpp"

namespace pvc {

/// Captures the conditioning streams for isolation audits.
struct ConversionTrace {
  nn::Mat content_stream;
  nn::Mat prosody_stream;  // zero matrix in mode none
  nn::Row speaker_vec;
};

struct ConversionResult {
  FrameMatrix mel;  // decoded log-mel
  Waveform audio;
};

/// Converts source features to the target speaker. At conversion time the
/// fixed-rate filter always uses its deterministic timestamp rule.
inline ConversionResult convert_utterance(
    ConversionModel& model, const FrameMatrix& source_mel,
    const FrameMatrix& source_content, int target_speaker, ProsodyMode mode,
    int tau, const ProductCodebook* codebook,
    const std::optional<FramePhoneMap>& phone_map, const MelConfig& mel_cfg,
    int griffin_lim_iterations = 60, ConversionTrace* trace = nullptr,
    bool synthesize_audio = true) {
  const Eigen::Index T = source_mel.frames();
  ContentEncoder::Cache content_cache;
  nn::Mat content_stream = model.encode_content(source_content, content_cache);
  nn::Row speaker_vec = model.speaker_embed(target_speaker);

  nn::Mat prosody_stream;
  if (mode != ProsodyMode::kNone) {
    if (codebook == nullptr)
      throw MissingInputError("codebook required for prosody mode " +
                              std::string(prosody_mode_name(mode)));
    IndexSequence idx = quantize(source_mel, *codebook);
    ProsodyEncoder::Cache pcache;
    nn::Mat vectors = model.prosody_encoder().forward(idx, pcache);
    switch (mode) {
      case ProsodyMode::kBase:
        prosody_stream = vectors;
        break;
      case ProsodyMode::kRdpf:
        prosody_stream = rdpf(vectors, tau, RdpfMode::kDeterministic).data;
        break;
      case ProsodyMode::kAdpf: {
        if (!phone_map.has_value())
          throw MissingInputError("alignment required in adpf mode");
        if (static_cast<Eigen::Index>(phone_map->frames()) != T)
          throw ContractViolation("alignment frame count mismatch");
        prosody_stream =
            adpf(vectors, *phone_map, model.adpf_params()).data;
        break;
      }
      default:
        break;
    }
  }

  nn::Mat cond =
      model.build_conditioning(content_stream, prosody_stream, speaker_vec);
  nn::Mat mel_hat = model.decoder().free_run(cond, model.config().mel_dim);

  if (trace != nullptr) {
    trace->content_stream = content_stream;
    trace->prosody_stream = prosody_stream.size() == 0
                                ? nn::Mat::Zero(T, model.config().prosody_dim)
                                : prosody_stream;
    trace->speaker_vec = speaker_vec;
  }

  ConversionResult result;
  result.mel.kind = FeatureKind::kMel;
  result.mel.hop_seconds = source_mel.hop_seconds;
  result.mel.data = mel_hat.cast<float>();
  if (synthesize_audio)
    result.audio = mel_to_audio(result.mel, mel_cfg, griffin_lim_iterations);
  return result;
}

}  // namespace pvc
