// Copyright 2026 The PVC Authors
// Command implementations behind the pvc binary: extract, train-codebook,
// train, convert, evaluate, inspect-filter.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pvc/alignment.hpp"
#include "pvc/checkpoint.hpp"
#include "pvc/content.hpp"
#include "pvc/evaluate.hpp"
#include "pvc/log.hpp"
#include "pvc/mel.hpp"
#include "pvc/model.hpp"
#include "pvc/pipeline.hpp"
#include "pvc/pitch.hpp"
#include "pvc/quantizer.hpp"
#include "pvc/run_config.hpp"
#include "pvc/train.hpp"
#include "pvc/version.hpp"
#include "pvc/wav.hpp"

namespace pvc {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Manifest: one row per utterance, "utt<TAB>speaker<TAB>index<TAB>frames".
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string utt_id;
  std::string speaker_label;
  int speaker_index = 0;
  int frames = 0;
};

inline std::string speaker_label_of(const std::string& utt_id) {
  size_t pos = utt_id.find('_');
  return pos == std::string::npos ? utt_id : utt_id.substr(0, pos);
}

inline void write_manifest(const std::string& path,
                           const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open for write: " + path);
  for (const auto& e : entries)
    os << e.utt_id << '\t' << e.speaker_label << '\t' << e.speaker_index
       << '\t' << e.frames << '\n';
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (align_detail::trim(line).empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string idx, frames;
    if (!std::getline(ls, e.utt_id, '\t') ||
        !std::getline(ls, e.speaker_label, '\t') ||
        !std::getline(ls, idx, '\t') || !std::getline(ls, frames, '\t'))
      throw ParseError("bad manifest row", line_no);
    e.speaker_index = std::stoi(idx);
    e.frames = std::stoi(frames);
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw EmptyInputError("manifest has no rows: " + path);
  return entries;
}

inline std::vector<std::string> speaker_labels(
    const std::vector<ManifestEntry>& entries) {
  std::vector<std::string> labels;
  for (const auto& e : entries) labels.push_back(e.speaker_label);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

// ---------------------------------------------------------------------------
// Small helpers shared by the commands.
// ---------------------------------------------------------------------------

namespace cli_detail {

inline std::vector<fs::path> list_files(const std::string& dir,
                                        const std::string& extension) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == extension)
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string feature_path(const std::string& dir,
                                const std::string& utt_id,
                                const std::string& kind) {
  return (fs::path(dir) / (utt_id + "." + kind + ".pvcf")).string();
}

inline std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

inline void write_run_meta(const RunConfig& cfg, const std::string& command,
                           const std::vector<std::string>& outputs) {
  Json meta{{"command", command},
            {"config_fingerprint", hex64(cfg.fingerprint())},
            {"seed", cfg.seed},
            {"version", kVersion}};
  // Filenames only: reruns into a different directory stay byte-identical.
  std::vector<std::string> sorted;
  for (const auto& p : outputs) sorted.push_back(fs::path(p).filename());
  std::sort(sorted.begin(), sorted.end());
  meta["outputs"] = sorted;
  fs::create_directories(cfg.paths.out_dir);
  std::string path =
      (fs::path(cfg.paths.out_dir) / ("run_" + command + ".json")).string();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open for write: " + path);
  os << meta.dump(2) << '\n';
}

inline std::string features_dir_of(const RunConfig& cfg) {
  return cfg.paths.features_dir.empty() ? cfg.paths.out_dir
                                        : cfg.paths.features_dir;
}

/// Finds <utt>.tsv or <utt>.TextGrid under the alignments dir.
inline std::optional<std::string> find_alignment(const RunConfig& cfg,
                                                 const std::string& utt_id) {
  if (cfg.paths.alignments_dir.empty()) return std::nullopt;
  for (const char* ext : {".tsv", ".TextGrid"}) {
    fs::path p = fs::path(cfg.paths.alignments_dir) / (utt_id + ext);
    if (fs::is_regular_file(p)) return p.string();
  }
  return std::nullopt;
}

inline FramePhoneMap phone_map_for(const std::string& alignment_path, int T,
                                   double hop_seconds) {
  auto raw = parse_alignment(alignment_path);
  return to_frames(raw, T, hop_seconds).second;
}

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// extract: wav dir -> per-utterance mel/f0/content caches + manifest.
// ---------------------------------------------------------------------------

inline int cmd_extract(const RunConfig& cfg) {
  const std::string out_dir = cfg.paths.out_dir;
  fs::create_directories(out_dir);
  std::vector<fs::path> wavs = cli_detail::list_files(cfg.paths.data_dir,
                                                      ".wav");
  if (wavs.empty()) {
    log_error("no input files in " + cfg.paths.data_dir);
    return 1;
  }

  struct Extracted {
    std::string utt_id;
    FrameMatrix mel;
    F0Track f0;
  };
  std::vector<Extracted> done;
  std::vector<std::string> failures;
  for (const auto& path : wavs) {
    const std::string utt_id = path.stem().string();
    try {
      Waveform w = load_waveform(path.string(), cfg.mel.sample_rate);
      Extracted e;
      e.utt_id = utt_id;
      e.mel = mel_spectrogram(w, cfg.mel);
      e.f0 = extract_f0(w, cfg.mel, cfg.f0);
      done.push_back(std::move(e));
    } catch (const Error& ex) {
      log_error(utt_id + ": " + ex.what());
      failures.push_back(utt_id);
    }
  }
  if (done.empty()) {
    log_error("all inputs failed");
    return 1;
  }

  std::vector<FrameMatrix> mels;
  mels.reserve(done.size());
  for (const auto& e : done) mels.push_back(e.mel);
  ContentProjection projection = ContentProjection::fit(
      mels, cfg.content_dim, cfg.content_context, cfg.content_cepstral);
  const std::string projection_path =
      cfg.paths.projection.empty()
          ? (fs::path(out_dir) / "content_projection.pvcp").string()
          : cfg.paths.projection;
  projection.save(projection_path);

  std::vector<std::string> outputs{projection_path};
  std::vector<ManifestEntry> entries;
  for (const auto& e : done) {
    FrameMatrix content = projection.apply(e.mel);
    const std::string mel_path =
        cli_detail::feature_path(out_dir, e.utt_id, "mel");
    const std::string f0_path =
        cli_detail::feature_path(out_dir, e.utt_id, "f0");
    const std::string content_path =
        cli_detail::feature_path(out_dir, e.utt_id, "content");
    save_feature(mel_path, e.mel);
    save_f0(f0_path, e.f0);
    save_feature(content_path, content);
    // Validate: the cache must read back with the written shape.
    if (load_feature(mel_path).frames() != e.mel.frames() ||
        load_feature(content_path).frames() != e.mel.frames())
      throw IoError("cache verification failed for " + e.utt_id);
    outputs.insert(outputs.end(), {mel_path, f0_path, content_path});
    ManifestEntry m;
    m.utt_id = e.utt_id;
    m.speaker_label = speaker_label_of(e.utt_id);
    m.frames = static_cast<int>(e.mel.frames());
    entries.push_back(std::move(m));
  }
  std::vector<std::string> labels = speaker_labels(entries);
  for (auto& e : entries)
    e.speaker_index = static_cast<int>(
        std::find(labels.begin(), labels.end(), e.speaker_label) -
        labels.begin());
  const std::string manifest_path =
      (fs::path(out_dir) / "manifest.tsv").string();
  write_manifest(manifest_path, entries);
  outputs.push_back(manifest_path);
  cli_detail::write_run_meta(cfg, "extract", outputs);

  log_info("extracted " + std::to_string(done.size()) + " utterances, " +
           std::to_string(failures.size()) + " failures");
  if (!failures.empty()) {
    std::string list;
    for (const auto& f : failures) list += " " + f;
    log_error("failed utterances:" + list);
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train-codebook: mel caches -> PVCB product codebook.
// ---------------------------------------------------------------------------

inline int cmd_train_codebook(const RunConfig& cfg) {
  const std::string features_dir = cli_detail::features_dir_of(cfg);
  auto entries =
      read_manifest((fs::path(features_dir) / "manifest.tsv").string());
  Eigen::Index total = 0;
  std::vector<FrameMatrix> mels;
  for (const auto& e : entries) {
    mels.push_back(load_feature(
        cli_detail::feature_path(features_dir, e.utt_id, "mel")));
    total += mels.back().frames();
  }
  FrameMatrix all;
  all.kind = FeatureKind::kMel;
  all.hop_seconds = mels.front().hop_seconds;
  all.data.resize(total, mels.front().dim());
  Eigen::Index row = 0;
  for (const auto& m : mels) {
    all.data.middleRows(row, m.frames()) = m.data;
    row += m.frames();
  }
  ProductCodebook cb = train_codebook(all, cfg.codebook_size,
                                      cfg.quantizer_iterations, cfg.seed);
  fs::create_directories(cfg.paths.out_dir);
  const std::string cb_path =
      cfg.paths.codebook.empty()
          ? (fs::path(cfg.paths.out_dir) / "codebook.pvcb").string()
          : cfg.paths.codebook;
  save_codebook(cb_path, cb);
  cli_detail::write_run_meta(cfg, "train-codebook", {cb_path});
  log_info("codebook trained on " + std::to_string(total) + " frames -> " +
           cb_path);
  return 0;
}

// ---------------------------------------------------------------------------
// train: caches + codebook (+ alignments in adpf mode) -> checkpoint.
// ---------------------------------------------------------------------------

inline Json model_config_to_json(const ModelConfig& m) {
  return Json{{"mel_dim", m.mel_dim},
              {"content_feature_dim", m.content_feature_dim},
              {"content_channels", m.content_channels},
              {"content_kernel", m.content_kernel},
              {"content_rnn", m.content_rnn},
              {"speaker_count", m.speaker_count},
              {"speaker_dim", m.speaker_dim},
              {"prosody_dim", m.prosody_dim},
              {"adpf_hidden", m.adpf_hidden},
              {"prenet_dim", m.prenet_dim},
              {"decoder_hidden", m.decoder_hidden},
              {"prosody",
               {{"codebook_size", m.prosody.codebook_size},
                {"embed_dim", m.prosody.embed_dim},
                {"conv_maps", m.prosody.conv_maps},
                {"gru_dim", m.prosody.gru_dim},
                {"out_dim", m.prosody.out_dim}}}};
}

inline ModelConfig model_config_from_json(const Json& j) {
  ModelConfig m;
  m.mel_dim = j["mel_dim"].get<int>();
  m.content_feature_dim = j["content_feature_dim"].get<int>();
  m.content_channels = j["content_channels"].get<int>();
  m.content_kernel = j["content_kernel"].get<int>();
  m.content_rnn = j["content_rnn"].get<int>();
  m.speaker_count = j["speaker_count"].get<int>();
  m.speaker_dim = j["speaker_dim"].get<int>();
  m.prosody_dim = j["prosody_dim"].get<int>();
  m.adpf_hidden = j["adpf_hidden"].get<int>();
  m.prenet_dim = j["prenet_dim"].get<int>();
  m.decoder_hidden = j["decoder_hidden"].get<int>();
  m.prosody.codebook_size = j["prosody"]["codebook_size"].get<int>();
  m.prosody.embed_dim = j["prosody"]["embed_dim"].get<int>();
  m.prosody.conv_maps = j["prosody"]["conv_maps"].get<std::vector<int>>();
  m.prosody.gru_dim = j["prosody"]["gru_dim"].get<int>();
  m.prosody.out_dim = j["prosody"]["out_dim"].get<int>();
  return m;
}

/// Everything convert/evaluate need to rebuild the model from the file.
inline Json checkpoint_snapshot(const RunConfig& cfg, const ModelConfig& model,
                                const std::vector<std::string>& speakers) {
  return Json{{"model", model_config_to_json(model)},
              {"features",
               {{"sample_rate", cfg.mel.sample_rate},
                {"n_mels", cfg.mel.n_mels},
                {"win_ms", cfg.mel.win_seconds * 1000.0},
                {"hop_ms", cfg.mel.hop_seconds * 1000.0},
                {"fmin", cfg.mel.fmin},
                {"fmax", cfg.mel.fmax},
                {"log_floor", cfg.mel.log_floor},
                {"content_dim", cfg.content_dim},
                {"content_context", cfg.content_context}}},
              {"training",
               {{"prosody_mode", prosody_mode_name(cfg.training.mode)},
                {"tau", cfg.training.tau}}},
              {"speakers", speakers}};
}

inline MelConfig mel_config_from_snapshot(const Json& j) {
  MelConfig m;
  const Json& f = j["features"];
  m.sample_rate = f["sample_rate"].get<int>();
  m.n_mels = f["n_mels"].get<int>();
  m.win_seconds = f["win_ms"].get<double>() / 1000.0;
  m.hop_seconds = f["hop_ms"].get<double>() / 1000.0;
  m.fmin = f["fmin"].get<double>();
  m.fmax = f["fmax"].get<double>();
  m.log_floor = f["log_floor"].get<double>();
  return m;
}

inline int cmd_train(const RunConfig& cfg) {
  const std::string features_dir = cli_detail::features_dir_of(cfg);
  auto entries =
      read_manifest((fs::path(features_dir) / "manifest.tsv").string());
  const std::string cb_path =
      cfg.paths.codebook.empty()
          ? (fs::path(features_dir) / "codebook.pvcb").string()
          : cfg.paths.codebook;
  if (!fs::is_regular_file(cb_path))
    throw MissingInputError("codebook artifact: " + cb_path);
  ProductCodebook codebook = load_codebook(cb_path);

  std::vector<TrainItem> dataset;
  for (const auto& e : entries) {
    TrainItem item;
    item.id = e.utt_id;
    item.speaker_id = e.speaker_index;
    item.mel = load_feature(
        cli_detail::feature_path(features_dir, e.utt_id, "mel"));
    item.content = load_feature(
        cli_detail::feature_path(features_dir, e.utt_id, "content"));
    item.indices = quantize(item.mel, codebook);
    if (cfg.training.mode == ProsodyMode::kAdpf) {
      auto alignment = cli_detail::find_alignment(cfg, e.utt_id);
      if (!alignment.has_value())
        throw MissingInputError("alignment for utterance " + e.utt_id +
                                " (adpf mode)");
      item.phone_map = cli_detail::phone_map_for(
          *alignment, static_cast<int>(item.mel.frames()),
          item.mel.hop_seconds);
    }
    dataset.push_back(std::move(item));
  }

  ModelConfig model_cfg = cfg.model;
  model_cfg.speaker_count =
      static_cast<int>(speaker_labels(entries).size());
  model_cfg.prosody.codebook_size = codebook.codebook_size();
  ConversionModel model;
  model.init(model_cfg, cfg.seed);
  nn::Adam adam;
  adam.attach(model.params());

  fs::create_directories(cfg.paths.out_dir);
  const std::string log_path =
      (fs::path(cfg.paths.out_dir) / "train_log.tsv").string();
  std::ofstream log_file(log_path, std::ios::trunc);
  if (!log_file) throw IoError("cannot open for write: " + log_path);
  TrainResult result = train(model, adam, dataset, cfg.training, &log_file);

  CheckpointMeta meta;
  meta.fingerprint = cfg.fingerprint();
  meta.epoch = static_cast<uint32_t>(cfg.training.epochs);
  meta.optimizer_step = adam.step_count();
  meta.config_json =
      checkpoint_snapshot(cfg, model_cfg, speaker_labels(entries)).dump();
  const std::string ckpt_path =
      cfg.paths.checkpoint.empty()
          ? (fs::path(cfg.paths.out_dir) / "model.pvck").string()
          : cfg.paths.checkpoint;
  save_checkpoint(ckpt_path, meta, model.params(), &adam);
  cli_detail::write_run_meta(cfg, "train", {ckpt_path, log_path});
  log_info("trained " + std::to_string(cfg.training.epochs) + " epochs, " +
           "final loss " + std::to_string(result.epoch_loss.back()) + " -> " +
           ckpt_path);
  return 0;
}

// ---------------------------------------------------------------------------
// convert: wav + checkpoint (+ codebook/projection/alignment) -> mel + wav.
// ---------------------------------------------------------------------------

struct ConvertArgs {
  std::string input_wav;
  std::string target_speaker;       // label or numeric index
  std::string alignment_path;       // required in adpf mode
  std::string mode_override;        // empty: use the checkpoint's mode
};

inline int cmd_convert(const RunConfig& cfg, const ConvertArgs& args) {
  if (!fs::is_regular_file(cfg.paths.checkpoint))
    throw MissingInputError("checkpoint artifact: " + cfg.paths.checkpoint);
  LoadedCheckpoint ckpt = load_checkpoint(cfg.paths.checkpoint);
  Json snapshot = Json::parse(ckpt.meta.config_json);
  ModelConfig model_cfg = model_config_from_json(snapshot["model"]);
  MelConfig mel_cfg = mel_config_from_snapshot(snapshot);
  ProsodyMode mode =
      prosody_mode_from_name(snapshot["training"]["prosody_mode"]);
  int tau = snapshot["training"]["tau"].get<int>();
  if (!args.mode_override.empty()) {
    ProsodyMode requested = prosody_mode_from_name(args.mode_override);
    if (requested != mode)
      throw ContractViolation(
          "checkpoint was trained in mode " +
          std::string(prosody_mode_name(mode)) + ", requested " +
          args.mode_override);
  }

  ConversionModel model;
  model.init(model_cfg, cfg.seed);
  restore_params(ckpt, model.params());

  std::vector<std::string> speakers =
      snapshot["speakers"].get<std::vector<std::string>>();
  int target_id = -1;
  auto it = std::find(speakers.begin(), speakers.end(), args.target_speaker);
  if (it != speakers.end()) {
    target_id = static_cast<int>(it - speakers.begin());
  } else {
    try {
      target_id = std::stoi(args.target_speaker);
    } catch (...) {
      throw ContractViolation("unknown target speaker: " +
                              args.target_speaker);
    }
  }

  if (!fs::is_regular_file(cfg.paths.projection))
    throw MissingInputError("content projection artifact: " +
                            cfg.paths.projection);
  ContentProjection projection = ContentProjection::load(cfg.paths.projection);

  ProductCodebook codebook;
  bool have_codebook = false;
  if (mode != ProsodyMode::kNone) {
    if (!fs::is_regular_file(cfg.paths.codebook))
      throw MissingInputError("codebook artifact: " + cfg.paths.codebook);
    codebook = load_codebook(cfg.paths.codebook);
    have_codebook = true;
  }

  Waveform source = load_waveform(args.input_wav, mel_cfg.sample_rate);
  FrameMatrix source_mel = mel_spectrogram(source, mel_cfg);
  FrameMatrix source_content = projection.apply(source_mel);

  std::optional<FramePhoneMap> phone_map;
  if (mode == ProsodyMode::kAdpf) {
    if (args.alignment_path.empty())
      throw MissingInputError("alignment file (adpf mode)");
    phone_map = cli_detail::phone_map_for(
        args.alignment_path, static_cast<int>(source_mel.frames()),
        source_mel.hop_seconds);
  }

  ConversionResult result = convert_utterance(
      model, source_mel, source_content, target_id, mode, tau,
      have_codebook ? &codebook : nullptr, phone_map, mel_cfg,
      cfg.griffin_lim_iterations);

  fs::create_directories(cfg.paths.out_dir);
  const std::string stem = fs::path(args.input_wav).stem().string();
  const std::string tag = stem + ".to_" + args.target_speaker;
  const std::string mel_path =
      (fs::path(cfg.paths.out_dir) / (tag + ".mel.pvcf")).string();
  const std::string wav_path =
      (fs::path(cfg.paths.out_dir) / (tag + ".wav")).string();
  save_feature(mel_path, result.mel);
  save_waveform(wav_path, result.audio);
  cli_detail::write_run_meta(cfg, "convert", {mel_path, wav_path});
  log_info("converted " + stem + " -> " + wav_path);
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate: enrollment + converted utterances -> TSV metric report.
// ---------------------------------------------------------------------------

/// Test-fixture embedder: reads a speaker index planted in the first mel
/// bin of the first frame and returns that one-hot direction.
class OneHotProbeEmbedder : public SpeakerEmbedder {
 public:
  explicit OneHotProbeEmbedder(int dim = 16) : dim_(dim) {}
  Eigen::VectorXd embed(const FrameMatrix& mel) const override {
    int k = static_cast<int>(std::lround(mel.data(0, 0)));
    k = std::clamp(k, 0, dim_ - 1);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim_);
    e(k) = 1.0;
    return e;
  }

 private:
  int dim_;
};

namespace cli_detail {

/// Loads an evaluation input: a mel cache or a wav (features on the fly).
inline FrameMatrix eval_mel(const fs::path& path, const MelConfig& mel_cfg) {
  if (path.extension() == ".pvcf") return load_feature(path.string());
  Waveform w = load_waveform(path.string(), mel_cfg.sample_rate);
  return mel_spectrogram(w, mel_cfg);
}

inline std::vector<fs::path> eval_inputs(const std::string& dir) {
  std::vector<fs::path> files = list_files(dir, ".wav");
  std::vector<fs::path> caches = list_files(dir, ".pvcf");
  files.insert(files.end(), caches.begin(), caches.end());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace cli_detail

inline int cmd_evaluate(const RunConfig& cfg) {
  if (cfg.paths.eval_enroll_dir.empty())
    throw MissingInputError("paths.eval_enroll_dir");
  if (cfg.paths.eval_converted_dir.empty())
    throw MissingInputError("paths.eval_converted_dir");

  // Enrollment utterances grouped by speaker label.
  std::map<std::string, std::vector<FrameMatrix>> enroll_mels;
  for (const auto& path :
       cli_detail::eval_inputs(cfg.paths.eval_enroll_dir)) {
    std::string utt = path.stem().string();
    if (path.extension() == ".pvcf") utt = fs::path(utt).stem().string();
    enroll_mels[speaker_label_of(utt)].push_back(
        cli_detail::eval_mel(path, cfg.mel));
  }
  if (enroll_mels.empty()) throw EmptyInputError("no enrollment utterances");

  // Embedder selection.
  StatsEmbedder stats;
  TrainedEmbedder trained;
  OneHotProbeEmbedder probe;
  const SpeakerEmbedder* embedder = &stats;
  if (cfg.eval.embedder == "trained") {
    std::vector<const FrameMatrix*> mels;
    std::vector<int> labels;
    std::vector<std::string> names;
    for (const auto& [label, _] : enroll_mels) names.push_back(label);
    for (const auto& [label, ms] : enroll_mels)
      for (const auto& m : ms) {
        mels.push_back(&m);
        labels.push_back(static_cast<int>(
            std::find(names.begin(), names.end(), label) - names.begin()));
      }
    trained.fit(mels, labels, static_cast<int>(names.size()), cfg.seed);
    embedder = &trained;
  } else if (cfg.eval.embedder == "onehot-probe") {
    embedder = &probe;
  } else if (cfg.eval.embedder != "stats") {
    throw ContractViolation("unknown embedder: " + cfg.eval.embedder);
  }

  std::map<std::string, Enrollment> enrollments;
  for (const auto& [label, ms] : enroll_mels) {
    if (static_cast<int>(ms.size()) < cfg.eval.enroll_count)
      throw InsufficientDataError(
          "speaker " + label + " has " + std::to_string(ms.size()) +
          " utterances, needs " + std::to_string(cfg.eval.enroll_count));
    std::vector<const FrameMatrix*> take;
    for (int i = 0; i < cfg.eval.enroll_count; ++i) take.push_back(&ms[i]);
    enrollments[label] = enroll(take, *embedder, label);
  }

  // Threshold: fixed, or calibrated where false accepts equal false rejects.
  double threshold = cfg.eval.threshold;
  if (threshold <= -1.5) {
    std::vector<double> genuine, impostor;
    for (const auto& [label, ms] : enroll_mels)
      for (const auto& m : ms) {
        Eigen::VectorXd e = embedder->embed(m);
        for (const auto& [other, enr] : enrollments) {
          double s = cosine(e, enr.embedding);
          (other == label ? genuine : impostor).push_back(s);
        }
      }
    if (impostor.empty())  // single-speaker pool: accept everything
      threshold = -1.0;
    else
      threshold = eer_threshold(genuine, impostor);
  }

  // Converted utterances live in one subdirectory per target speaker.
  int accepted = 0, total = 0;
  std::vector<double> consistencies;
  for (const auto& entry :
       fs::directory_iterator(cfg.paths.eval_converted_dir)) {
    if (!entry.is_directory()) continue;
    const std::string target = entry.path().filename().string();
    auto enr = enrollments.find(target);
    if (enr == enrollments.end())
      throw ValidationError("no enrollment for target speaker " + target);
    for (const auto& path : cli_detail::eval_inputs(entry.path().string())) {
      FrameMatrix mel = cli_detail::eval_mel(path, cfg.mel);
      double score = cosine(embedder->embed(mel), enr->second.embedding);
      if (score >= threshold) ++accepted;
      ++total;
      // F0 consistency needs waveforms on both sides.
      if (path.extension() == ".wav" && !cfg.paths.eval_sources_dir.empty()) {
        std::string stem = path.stem().string();
        size_t tag = stem.rfind(".to_");
        if (tag != std::string::npos) stem = stem.substr(0, tag);
        fs::path src = fs::path(cfg.paths.eval_sources_dir) / (stem + ".wav");
        if (fs::is_regular_file(src)) {
          F0Track f_src = extract_f0(
              load_waveform(src.string(), cfg.mel.sample_rate), cfg.mel,
              cfg.f0);
          F0Track f_conv = extract_f0(
              load_waveform(path.string(), cfg.mel.sample_rate), cfg.mel,
              cfg.f0);
          consistencies.push_back(prosody_consistency(f_src, f_conv));
        }
      }
    }
  }
  if (total == 0) throw EmptyInputError("no converted utterances found");

  fs::create_directories(cfg.paths.out_dir);
  const std::string report_path =
      (fs::path(cfg.paths.out_dir) / "evaluation.tsv").string();
  std::ofstream os(report_path, std::ios::trunc);
  if (!os) throw IoError("cannot open for write: " + report_path);
  os.precision(10);
  os << cfg.eval.system << "\tfar\t"
     << static_cast<double>(accepted) / total << '\n';
  os << cfg.eval.system << "\tfar_threshold\t" << threshold << '\n';
  os << cfg.eval.system << "\taccepted\t" << accepted << '\n';
  os << cfg.eval.system << "\ttotal\t" << total << '\n';
  if (!consistencies.empty()) {
    double mean = 0.0;
    for (double c : consistencies) mean += c;
    mean /= static_cast<double>(consistencies.size());
    os << cfg.eval.system << "\tprosody_consistency\t" << mean << '\n';
    os << cfg.eval.system << "\tprosody_consistency_count\t"
       << consistencies.size() << '\n';
  }
  os.close();
  cli_detail::write_run_meta(cfg, "evaluate", {report_path});
  log_info("evaluation report -> " + report_path);
  return 0;
}

// ---------------------------------------------------------------------------
// inspect-filter: audit blocks/segments, selection, piecewise constancy.
// ---------------------------------------------------------------------------

struct InspectArgs {
  std::string input_cache;
  std::string alignment_path;
  std::string mode = "rdpf";  // rdpf | adpf
  int tau = 32;
};

inline int cmd_inspect_filter(const RunConfig& cfg, const InspectArgs& args,
                              std::ostream& os) {
  FrameMatrix fm = load_feature(args.input_cache);
  nn::Mat data = fm.data.cast<double>();
  const int T = static_cast<int>(data.rows());

  Filtered filtered;
  if (args.mode == "rdpf") {
    if (args.tau < 1) throw ContractViolation("tau must be >= 1");
    filtered = rdpf(data, args.tau, RdpfMode::kDeterministic);
    os << "filter\trdpf\n";
    os << "tau\t" << args.tau << '\n';
    if (args.tau == 1) os << "note\tidentity filter (tau = 1)\n";
  } else if (args.mode == "adpf") {
    if (args.alignment_path.empty())
      throw MissingInputError("alignment file (adpf inspection)");
    FramePhoneMap map = cli_detail::phone_map_for(args.alignment_path, T,
                                                  fm.hop_seconds);
    AdpfParams params;
    Rng rng(cfg.seed);
    params.init(static_cast<int>(data.cols()),
                static_cast<int>(data.cols()), rng);
    filtered = adpf(data, map, params);
    os << "filter\tadpf\n";
  } else {
    throw ContractViolation("inspect-filter supports modes rdpf and adpf");
  }

  os << "frames\t" << T << '\n';
  os << "blocks\t" << filtered.blocks.size() << '\n';
  for (size_t b = 0; b < filtered.blocks.size(); ++b)
    os << "block\t" << b << '\t' << filtered.blocks[b].first << '\t'
       << filtered.blocks[b].second << "\tselected\t" << filtered.selected[b]
       << '\n';
  os << "selected_frames\t";
  for (size_t b = 0; b < filtered.selected.size(); ++b)
    os << (b == 0 ? "" : " ") << filtered.selected[b];
  os << '\n';

  bool constant = true;
  for (size_t b = 0; b < filtered.blocks.size() && constant; ++b) {
    const auto& [start, end] = filtered.blocks[b];
    for (int f = start; f < end; ++f)
      if (filtered.data.row(f) != filtered.data.row(start)) {
        constant = false;
        break;
      }
  }
  os << "piecewise_constant\t" << (constant ? "PASS" : "FAIL") << '\n';
  return constant ? 0 : 1;
}

}  // namespace pvc
