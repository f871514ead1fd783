// Copyright 2026 The PVC Authors
// Training: teacher-forced reconstruction with Adam and stepped lr decay.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/log.hpp"
#include "pvc/model.hpp"
#include "pvc/nn/adam.hpp"
#include "pvc/prosody_filters.hpp"
#include "pvc/rng.hpp"

namespace pvc {

struct TrainingConfig {
  double lr0 = 0.001;
  double decay = 0.7;
  int decay_every = 10;
  int epochs = 140;
  int batch_size = 32;
  uint64_t seed = 1234;
  ProsodyMode mode = ProsodyMode::kAdpf;
  int tau = 32;
  // Seeded Gaussian noise on the teacher-forced previous frame. Without it
  // the decoder can satisfy the loss by copying spectral detail from the
  // previous frame instead of reading its conditioning streams.
  double teacher_noise = 0.0;

  void validate() const {
    if (lr0 <= 0 || decay <= 0 || decay_every <= 0 || epochs <= 0 ||
        batch_size <= 0 || tau <= 0)
      throw ContractViolation("training config fields must be positive");
    if (teacher_noise < 0)
      throw ContractViolation("teacher noise must be non-negative");
  }
};

/// lr0 * decay^floor(epoch / decay_every)
inline double learning_rate_at(const TrainingConfig& cfg, int epoch) {
  return cfg.lr0 * std::pow(cfg.decay, epoch / cfg.decay_every);
}

struct TrainItem {
  std::string id;
  int speaker_id = 0;
  FrameMatrix mel;
  FrameMatrix content;
  IndexSequence indices;
  std::optional<FramePhoneMap> phone_map;
};

namespace train_detail {

/// Teacher-forced forward/backward for one utterance. Gradients are scaled
/// by grad_scale and accumulated into the model; returns the unscaled loss.
/// step_seed drives both the fixed-rate filter's random selection and the
/// teacher-input noise, so the step is pure in (params, item, seed).
inline double utterance_step(ConversionModel& model, const TrainItem& item,
                             ProsodyMode mode, int tau, uint64_t step_seed,
                             double grad_scale, double teacher_noise = 0.0) {
  const Eigen::Index T = item.mel.frames();
  if (item.content.frames() != T)
    throw ContractViolation("content/mel length mismatch for " + item.id);

  ContentEncoder::Cache content_cache;
  nn::Mat content_stream = model.encode_content(item.content, content_cache);
  nn::Row speaker_vec = model.speaker_embed(item.speaker_id);

  ProsodyEncoder::Cache prosody_cache;
  AdpfCache adpf_cache;
  Filtered filtered;
  nn::Mat prosody_vectors;
  nn::Mat prosody_stream;  // empty means the zero stream
  if (mode != ProsodyMode::kNone) {
    if (item.indices.frames() != T)
      throw ContractViolation("index/mel length mismatch for " + item.id);
    prosody_vectors = model.prosody_encoder().forward(item.indices,
                                                      prosody_cache);
    switch (mode) {
      case ProsodyMode::kBase:
        prosody_stream = prosody_vectors;
        break;
      case ProsodyMode::kRdpf:
        filtered = rdpf(prosody_vectors, tau, RdpfMode::kRandom, step_seed);
        prosody_stream = filtered.data;
        break;
      case ProsodyMode::kAdpf: {
        if (!item.phone_map.has_value())
          throw MissingInputError("alignment (phone map) for " + item.id +
                                  " in adpf mode");
        filtered = adpf(prosody_vectors, *item.phone_map,
                        model.adpf_params(), &adpf_cache);
        prosody_stream = filtered.data;
        break;
      }
      default:
        break;
    }
  }

  nn::Mat cond =
      model.build_conditioning(content_stream, prosody_stream, speaker_vec);
  nn::Mat target = item.mel.data.cast<double>();
  Decoder::Cache dec_cache;
  nn::Mat pred;
  if (teacher_noise > 0.0) {
    Rng noise_rng = Rng(step_seed).fork(0x11u);
    nn::Mat noise(T, target.cols());
    for (Eigen::Index t = 0; t < T; ++t)
      for (Eigen::Index d = 0; d < target.cols(); ++d)
        noise(t, d) = teacher_noise * noise_rng.normal();
    pred = model.decoder().teacher_forward(cond, target, dec_cache, &noise);
  } else {
    pred = model.decoder().teacher_forward(cond, target, dec_cache);
  }
  nn::Mat dmel;
  double loss = mae_loss(pred, target, &dmel);
  dmel *= grad_scale;

  nn::Mat dcond = model.decoder().backward(dec_cache, dmel);
  const Eigen::Index c_dim = content_stream.cols();
  const Eigen::Index p_dim = model.config().prosody_dim;
  nn::Mat dcontent = dcond.leftCols(c_dim);
  nn::Mat dprosody = dcond.middleCols(c_dim, p_dim);
  nn::Mat dspeaker = dcond.rightCols(model.config().speaker_dim);
  model.speaker_table().table.grad.row(item.speaker_id) +=
      dspeaker.colwise().sum();
  model.content_encoder().backward(content_cache, dcontent);

  if (mode != ProsodyMode::kNone) {
    nn::Mat dvectors;
    switch (mode) {
      case ProsodyMode::kBase:
        dvectors = dprosody;
        break;
      case ProsodyMode::kRdpf:
        dvectors = rdpf_backward(filtered, dprosody);
        break;
      case ProsodyMode::kAdpf:
        dvectors = adpf_backward(model.adpf_params(), adpf_cache, dprosody);
        break;
      default:
        break;
    }
    model.prosody_encoder().backward(prosody_cache, dvectors);
  }
  return loss;
}

}  // namespace train_detail

struct TrainResult {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_lr;
};

/// Runs the full schedule. Batches are drawn by seeded shuffle but processed
/// in ascending dataset order, so a whole-dataset batch is shuffle-invariant.
/// Writes one "epoch<TAB>lr<TAB>loss" line per epoch when log is given.
inline TrainResult train(ConversionModel& model, nn::Adam& optimizer,
                         const std::vector<TrainItem>& dataset,
                         const TrainingConfig& cfg,
                         std::ostream* log = nullptr) {
  cfg.validate();
  if (dataset.empty()) throw EmptyInputError("training dataset is empty");
  const size_t n = dataset.size();

  TrainResult result;
  Rng shuffle_rng = Rng(cfg.seed).fork(0x5u);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate_at(cfg, epoch);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng epoch_rng = shuffle_rng.fork(static_cast<uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double loss_sum = 0.0;
    for (size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const size_t end = std::min(begin + cfg.batch_size, n);
      std::vector<size_t> batch(order.begin() + begin, order.begin() + end);
      std::sort(batch.begin(), batch.end());
      nn::zero_grads(optimizer.params());
      const double scale = 1.0 / static_cast<double>(batch.size());
      double batch_loss = 0.0;
      for (size_t idx : batch) {
        uint64_t step_seed = Rng(cfg.seed)
                                 .fork(0x7du)
                                 .fork(static_cast<uint64_t>(epoch) * n + idx)
                                 .next_u64();
        batch_loss += train_detail::utterance_step(
            model, dataset[idx], cfg.mode, cfg.tau, step_seed, scale,
            cfg.teacher_noise);
      }
      if (!std::isfinite(batch_loss)) {
        std::string ids;
        for (size_t idx : batch) ids += " " + dataset[idx].id;
        throw Error("non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch starting at " + std::to_string(begin) +
                    ", utterances:" + ids);
      }
      optimizer.step(lr);
      loss_sum += batch_loss;
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    result.epoch_loss.push_back(epoch_loss);
    result.epoch_lr.push_back(lr);
    if (log != nullptr) {
      (*log) << epoch << '\t' << lr << '\t' << epoch_loss << '\n';
      log->flush();
    }
  }
  return result;
}

}  // namespace pvc
