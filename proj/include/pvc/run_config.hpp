// Copyright 2026 The PVC Authors
// RunConfig: one JSON document drives every command. Unknown keys are
// rejected; a canonical fingerprint covers the semantic keys.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvc/errors.hpp"
#include "pvc/mel.hpp"
#include "pvc/model.hpp"
#include "pvc/pitch.hpp"
#include "pvc/train.hpp"

namespace pvc {

using Json = nlohmann::json;

struct RunPaths {
  std::string data_dir;
  std::string alignments_dir;
  std::string features_dir;
  std::string out_dir = "out";
  std::string codebook;
  std::string checkpoint;
  std::string projection;
  std::string eval_enroll_dir;
  std::string eval_converted_dir;
  std::string eval_sources_dir;
};

struct EvalConfig {
  std::string system = "default";
  std::string embedder = "stats";  // stats | trained | onehot-probe
  double threshold = -2.0;         // <= -2 means: calibrate at the EER point
  int enroll_count = 10;
};

struct RunConfig {
  uint64_t seed = 1234;
  MelConfig mel;
  F0Config f0;
  int content_dim = 128;
  int content_context = 1;
  int content_cepstral = 0;  // 0: plain mel frames; >0: low-order DCT lift
  int codebook_size = 320;
  int quantizer_iterations = 50;
  ModelConfig model;  // speaker_count filled from the manifest at train time
  TrainingConfig training;
  int griffin_lim_iterations = 60;
  RunPaths paths;
  EvalConfig eval;

  Json semantic_json() const;
  uint64_t fingerprint() const;
};

namespace config_detail {

inline Json defaults() {
  return Json{
      {"seed", 1234},
      {"features",
       {{"sample_rate", 24000},
        {"n_mels", 80},
        {"win_ms", 50.0},
        {"hop_ms", 10.0},
        {"fmin", 0.0},
        {"fmax", 12000.0},
        {"log_floor", 1e-5},
        {"f0_min", 60.0},
        {"f0_max", 500.0},
        {"content_dim", 128},
        {"content_context", 1},
        {"content_cepstral", 0}}},
      {"quantizer", {{"codebook_size", 320}, {"iterations", 50}}},
      {"model",
       {{"content_channels", 512},
        {"content_rnn", 256},
        {"speaker_dim", 64},
        {"prenet_dim", 64},
        {"decoder_hidden", 256},
        {"adpf_hidden", 4},
        {"prosody",
         {{"embed_dim", 128},
          {"conv_maps", Json::array({32, 32, 64, 64, 64, 64})},
          {"gru_dim", 32},
          {"out_dim", 4}}}}},
      {"training",
       {{"lr0", 0.001},
        {"decay", 0.7},
        {"decay_every", 10},
        {"epochs", 140},
        {"batch_size", 32},
        {"prosody_mode", "adpf"},
        {"tau", 32},
        {"teacher_noise", 0.0}}},
      {"vocoder", {{"griffin_lim_iterations", 60}}},
      {"paths",
       {{"data_dir", ""},
        {"alignments_dir", ""},
        {"features_dir", ""},
        {"out_dir", "out"},
        {"codebook", ""},
        {"checkpoint", ""},
        {"projection", ""},
        {"eval_enroll_dir", ""},
        {"eval_converted_dir", ""},
        {"eval_sources_dir", ""}}},
      {"evaluation",
       {{"system", "default"},
        {"embedder", "stats"},
        {"threshold", "eer"},
        {"enroll_count", 10}}}};
}

inline void reject_unknown_keys(const Json& user, const Json& schema,
                                const std::string& prefix) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (!schema.is_object() || !schema.contains(it.key()))
      throw ValidationError("unknown config key: " + prefix + it.key());
    if (it.value().is_object())
      reject_unknown_keys(it.value(), schema[it.key()],
                          prefix + it.key() + ".");
  }
}

/// Recursively overlays user values on the defaults.
inline Json merge(const Json& base, const Json& user) {
  Json out = base;
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) &&
        base[it.key()].is_object())
      out[it.key()] = merge(base[it.key()], it.value());
    else
      out[it.key()] = it.value();
  }
  return out;
}

}  // namespace config_detail

inline RunConfig parse_run_config(const Json& user) {
  Json schema = config_detail::defaults();
  config_detail::reject_unknown_keys(user, schema, "");
  Json j = config_detail::merge(schema, user);

  RunConfig cfg;
  cfg.seed = j["seed"].get<uint64_t>();
  const Json& f = j["features"];
  cfg.mel.sample_rate = f["sample_rate"].get<int>();
  cfg.mel.n_mels = f["n_mels"].get<int>();
  cfg.mel.win_seconds = f["win_ms"].get<double>() / 1000.0;
  cfg.mel.hop_seconds = f["hop_ms"].get<double>() / 1000.0;
  cfg.mel.fmin = f["fmin"].get<double>();
  cfg.mel.fmax = f["fmax"].get<double>();
  cfg.mel.log_floor = f["log_floor"].get<double>();
  cfg.f0.f0_min = f["f0_min"].get<double>();
  cfg.f0.f0_max = f["f0_max"].get<double>();
  cfg.content_dim = f["content_dim"].get<int>();
  cfg.content_context = f["content_context"].get<int>();
  cfg.content_cepstral = f["content_cepstral"].get<int>();

  cfg.codebook_size = j["quantizer"]["codebook_size"].get<int>();
  cfg.quantizer_iterations = j["quantizer"]["iterations"].get<int>();

  const Json& m = j["model"];
  cfg.model.mel_dim = cfg.mel.n_mels;
  cfg.model.content_feature_dim = cfg.content_dim;
  cfg.model.content_channels = m["content_channels"].get<int>();
  cfg.model.content_rnn = m["content_rnn"].get<int>();
  cfg.model.speaker_dim = m["speaker_dim"].get<int>();
  cfg.model.prenet_dim = m["prenet_dim"].get<int>();
  cfg.model.decoder_hidden = m["decoder_hidden"].get<int>();
  cfg.model.adpf_hidden = m["adpf_hidden"].get<int>();
  const Json& p = m["prosody"];
  cfg.model.prosody.codebook_size = cfg.codebook_size;
  cfg.model.prosody.embed_dim = p["embed_dim"].get<int>();
  cfg.model.prosody.conv_maps = p["conv_maps"].get<std::vector<int>>();
  cfg.model.prosody.gru_dim = p["gru_dim"].get<int>();
  cfg.model.prosody.out_dim = p["out_dim"].get<int>();
  cfg.model.prosody_dim = cfg.model.prosody.out_dim;

  const Json& t = j["training"];
  cfg.training.lr0 = t["lr0"].get<double>();
  cfg.training.decay = t["decay"].get<double>();
  cfg.training.decay_every = t["decay_every"].get<int>();
  cfg.training.epochs = t["epochs"].get<int>();
  cfg.training.batch_size = t["batch_size"].get<int>();
  cfg.training.mode = prosody_mode_from_name(t["prosody_mode"].get<std::string>());
  cfg.training.tau = t["tau"].get<int>();
  cfg.training.teacher_noise = t["teacher_noise"].get<double>();
  cfg.training.seed = cfg.seed;

  cfg.griffin_lim_iterations = j["vocoder"]["griffin_lim_iterations"].get<int>();

  const Json& pa = j["paths"];
  cfg.paths.data_dir = pa["data_dir"].get<std::string>();
  cfg.paths.alignments_dir = pa["alignments_dir"].get<std::string>();
  cfg.paths.features_dir = pa["features_dir"].get<std::string>();
  cfg.paths.out_dir = pa["out_dir"].get<std::string>();
  cfg.paths.codebook = pa["codebook"].get<std::string>();
  cfg.paths.checkpoint = pa["checkpoint"].get<std::string>();
  cfg.paths.projection = pa["projection"].get<std::string>();
  cfg.paths.eval_enroll_dir = pa["eval_enroll_dir"].get<std::string>();
  cfg.paths.eval_converted_dir = pa["eval_converted_dir"].get<std::string>();
  cfg.paths.eval_sources_dir = pa["eval_sources_dir"].get<std::string>();

  const Json& e = j["evaluation"];
  cfg.eval.system = e["system"].get<std::string>();
  cfg.eval.embedder = e["embedder"].get<std::string>();
  if (e["threshold"].is_string()) {
    if (e["threshold"].get<std::string>() != "eer")
      throw ValidationError("evaluation.threshold must be a number or \"eer\"");
    cfg.eval.threshold = -2.0;
  } else {
    cfg.eval.threshold = e["threshold"].get<double>();
  }
  cfg.eval.enroll_count = e["enroll_count"].get<int>();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  Json j;
  try {
    is >> j;
  } catch (const std::exception& ex) {
    throw ParseError(std::string("config is not valid JSON: ") + ex.what());
  }
  return parse_run_config(j);
}

inline Json RunConfig::semantic_json() const {
  Json j{
      {"seed", seed},
      {"features",
       {{"sample_rate", mel.sample_rate},
        {"n_mels", mel.n_mels},
        {"win_ms", mel.win_seconds * 1000.0},
        {"hop_ms", mel.hop_seconds * 1000.0},
        {"fmin", mel.fmin},
        {"fmax", mel.fmax},
        {"log_floor", mel.log_floor},
        {"f0_min", f0.f0_min},
        {"f0_max", f0.f0_max},
        {"content_dim", content_dim},
        {"content_context", content_context},
        {"content_cepstral", content_cepstral}}},
      {"quantizer",
       {{"codebook_size", codebook_size},
        {"iterations", quantizer_iterations}}},
      {"model",
       {{"content_channels", model.content_channels},
        {"content_rnn", model.content_rnn},
        {"speaker_dim", model.speaker_dim},
        {"prenet_dim", model.prenet_dim},
        {"decoder_hidden", model.decoder_hidden},
        {"adpf_hidden", model.adpf_hidden},
        {"prosody",
         {{"embed_dim", model.prosody.embed_dim},
          {"conv_maps", model.prosody.conv_maps},
          {"gru_dim", model.prosody.gru_dim},
          {"out_dim", model.prosody.out_dim}}}}},
      {"training",
       {{"lr0", training.lr0},
        {"decay", training.decay},
        {"decay_every", training.decay_every},
        {"epochs", training.epochs},
        {"batch_size", training.batch_size},
        {"prosody_mode", prosody_mode_name(training.mode)},
        {"tau", training.tau},
        {"teacher_noise", training.teacher_noise}}},
      {"vocoder", {{"griffin_lim_iterations", griffin_lim_iterations}}},
      {"evaluation",
       {{"system", eval.system},
        {"embedder", eval.embedder},
        {"threshold", eval.threshold},
        {"enroll_count", eval.enroll_count}}}};
  return j;
}

/// FNV-1a 64 over the canonical (sorted-key) dump; paths excluded so the
/// same experiment relocated on disk keeps its fingerprint.
inline uint64_t RunConfig::fingerprint() const {
  std::string dump = semantic_json().dump();
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace pvc
