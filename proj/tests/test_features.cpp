// Copyright 2026 The PVC Authors
//
// Licensed under the Apache License, Version 2.0

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>

#include "pvc/content.hpp"
#include "pvc/frame_matrix.hpp"
#include "pvc/mel.hpp"
#include "pvc/pitch.hpp"
#include "pvc/wav.hpp"
#include "support/test_util.hpp"

using namespace pvc;
using pvc_test::scratch_dir;
using pvc_test::silence;
using pvc_test::sine_wave;

namespace {

// Writes a PCM16 wav with the given channel count by duplicating samples.
void write_pcm16(const std::string& path, const std::vector<float>& mono,
                 int rate, int channels) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  uint32_t n = static_cast<uint32_t>(mono.size());
  uint32_t data_bytes = n * 2 * channels;
  auto u32 = [&](uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { os.write(reinterpret_cast<char*>(&v), 2); };
  os.write("RIFF", 4);
  u32(36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  u32(16);
  u16(1);
  u16(static_cast<uint16_t>(channels));
  u32(static_cast<uint32_t>(rate));
  u32(static_cast<uint32_t>(rate) * 2 * channels);
  u16(static_cast<uint16_t>(2 * channels));
  u16(16);
  os.write("data", 4);
  u32(data_bytes);
  for (float v : mono) {
    int16_t iv = static_cast<int16_t>(std::lround(v * 32767.0));
    for (int c = 0; c < channels; ++c)
      os.write(reinterpret_cast<char*>(&iv), 2);
  }
}

}  // namespace

TEST_CASE("48kHz stereo loads as mono 24kHz with halved sample count",
          "[wav]") {
  auto dir = scratch_dir("wav_stereo");
  auto w48 = sine_wave(440.0, 1.0, 48000, 0.4);
  write_pcm16(dir + "/in.wav", w48.samples, 48000, 2);
  Waveform w = load_waveform(dir + "/in.wav", 24000);
  REQUIRE(w.sample_rate == 24000);
  REQUIRE(w.samples.size() == 24000);
}

TEST_CASE("same-rate mono wav round trips bitwise up to PCM scaling",
          "[wav]") {
  auto dir = scratch_dir("wav_identity");
  std::vector<float> payload = {0.0f, 0.25f, -0.5f, 0.75f, -1.0f, 0.1f};
  write_pcm16(dir + "/in.wav", payload, 24000, 1);
  Waveform w = load_waveform(dir + "/in.wav", 24000);
  REQUIRE(w.samples.size() == payload.size());
  for (size_t i = 0; i < payload.size(); ++i) {
    int16_t iv = static_cast<int16_t>(std::lround(payload[i] * 32767.0));
    REQUIRE(w.samples[i] == Catch::Approx(iv / 32768.0).margin(0.0));
  }
}

TEST_CASE("one second of silence loads as 24000 zeros", "[wav]") {
  auto dir = scratch_dir("wav_silence");
  write_pcm16(dir + "/in.wav", std::vector<float>(24000, 0.0f), 24000, 1);
  Waveform w = load_waveform(dir + "/in.wav", 24000);
  REQUIRE(w.samples.size() == 24000);
  for (float v : w.samples) REQUIRE(v == 0.0f);
}

TEST_CASE("wav error paths", "[wav]") {
  auto dir = scratch_dir("wav_errors");
  REQUIRE_THROWS_AS(load_waveform(dir + "/missing.wav", 24000), IoError);
  write_pcm16(dir + "/empty.wav", {}, 24000, 1);
  REQUIRE_THROWS_AS(load_waveform(dir + "/empty.wav", 24000),
                    EmptyInputError);
}

TEST_CASE("mel frame count equals ceil(samples/hop)", "[mel]") {
  MelConfig cfg;
  // Independent oracle: integer ceiling division.
  auto oracle = [&](size_t n) {
    return static_cast<Eigen::Index>((n + 239) / 240);
  };
  REQUIRE(mel_frame_count(24000, cfg) == 100);
  REQUIRE(mel_frame_count(24000, cfg) == oracle(24000));
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    size_t n = 1200 + rng.integer(48000);
    REQUIRE(mel_frame_count(n, cfg) == oracle(n));
    Waveform w = sine_wave(150.0, 0.0, 24000);
    w.samples.assign(n, 0.01f);
    FrameMatrix m = mel_spectrogram(w, cfg);
    REQUIRE(m.frames() == oracle(n));
    REQUIRE(m.dim() == 80);
  }
}

TEST_CASE("one second at 24kHz gives a 100x80 mel", "[mel]") {
  FrameMatrix m = mel_spectrogram(sine_wave(220.0, 1.0), MelConfig{});
  REQUIRE(m.frames() == 100);
  REQUIRE(m.dim() == 80);
  REQUIRE(m.data.allFinite());
}

TEST_CASE("all-zero waveform hits the log floor everywhere", "[mel]") {
  MelConfig cfg;
  FrameMatrix m = mel_spectrogram(silence(0.5), cfg);
  const float floor_value = static_cast<float>(std::log(cfg.log_floor));
  REQUIRE((m.data.array() == floor_value).all());
}

TEST_CASE("doubling the waveform shifts log-mel by log(2) above the floor",
          "[mel]") {
  MelConfig cfg;
  Rng rng(11);
  Waveform w;
  w.sample_rate = 24000;
  w.samples.resize(12000);
  for (auto& s : w.samples)
    s = static_cast<float>(rng.uniform(-0.3, 0.3));
  Waveform w2 = w;
  for (auto& s : w2.samples) s *= 2.0f;
  FrameMatrix m1 = mel_spectrogram(w, cfg);
  FrameMatrix m2 = mel_spectrogram(w2, cfg);
  const float floor_value = static_cast<float>(std::log(cfg.log_floor));
  const double ln2 = std::log(2.0);
  int checked = 0;
  for (Eigen::Index t = 0; t < m1.frames(); ++t)
    for (Eigen::Index d = 0; d < m1.dim(); ++d)
      if (m1.data(t, d) > floor_value + 1e-4f) {
        REQUIRE(static_cast<double>(m2.data(t, d)) - m1.data(t, d) ==
                Catch::Approx(ln2).margin(2e-5));
        ++checked;
      }
  REQUIRE(checked > 1000);
}

TEST_CASE("too-short waveform is rejected", "[mel]") {
  Waveform w;
  w.sample_rate = 24000;
  w.samples.assign(1199, 0.1f);
  REQUIRE_THROWS_AS(mel_spectrogram(w, MelConfig{}), EmptyInputError);
}

TEST_CASE("mel extraction is deterministic", "[mel]") {
  Waveform w = sine_wave(333.0, 0.7);
  FrameMatrix a = mel_spectrogram(w, MelConfig{});
  FrameMatrix b = mel_spectrogram(w, MelConfig{});
  REQUIRE(a.data == b.data);
}

TEST_CASE("pure 200 Hz sine tracks at 200 +- 5 Hz", "[f0]") {
  MelConfig cfg;
  Waveform w = sine_wave(200.0, 1.0);
  F0Track f0 = extract_f0(w, cfg);
  REQUIRE(f0.values.size() == static_cast<size_t>(mel_frame_count(
                                  w.samples.size(), cfg)));
  int voiced = 0;
  for (float v : f0.values)
    if (v > 0.0f) {
      REQUIRE(v == Catch::Approx(200.0).margin(5.0));
      ++voiced;
    }
  REQUIRE(voiced > static_cast<int>(f0.values.size() * 3 / 4));
}

TEST_CASE("silence is fully unvoiced", "[f0]") {
  F0Track f0 = extract_f0(silence(0.5), MelConfig{});
  for (float v : f0.values) REQUIRE(v == 0.0f);
}

TEST_CASE("piecewise sinusoid yields two plateaus", "[f0]") {
  MelConfig cfg;
  Waveform w = sine_wave(200.0, 0.5);
  Waveform tail = sine_wave(300.0, 0.5);
  w.samples.insert(w.samples.end(), tail.samples.begin(), tail.samples.end());
  F0Track f0 = extract_f0(w, cfg);
  const size_t T = f0.values.size();
  // Interior frames away from the boundary and the edges.
  for (size_t t = 5; t < T / 2 - 5; ++t)
    if (f0.values[t] > 0.0f)
      REQUIRE(f0.values[t] == Catch::Approx(200.0).margin(5.0));
  for (size_t t = T / 2 + 5; t < T - 5; ++t)
    if (f0.values[t] > 0.0f)
      REQUIRE(f0.values[t] == Catch::Approx(300.0).margin(5.0));
}

TEST_CASE("mel and f0 share the frame grid", "[features]") {
  MelConfig cfg;
  Waveform w = sine_wave(180.0, 0.733);
  REQUIRE(static_cast<size_t>(mel_spectrogram(w, cfg).frames()) ==
          extract_f0(w, cfg).values.size());
}

TEST_CASE("content projection preserves frame count and is deterministic",
          "[content]") {
  Rng rng(3);
  FrameMatrix mel = pvc_test::random_features(rng, 100, 80,
                                              FeatureKind::kMel);
  ContentProjection proj = ContentProjection::fit({mel}, 128, 1);
  FrameMatrix c1 = proj.apply(mel);
  REQUIRE(c1.frames() == 100);
  REQUIRE(c1.dim() == 128);
  REQUIRE(c1.kind == FeatureKind::kContent);
  FrameMatrix c2 = proj.apply(mel);
  REQUIRE(c1.data == c2.data);
}

TEST_CASE("fitted projection beats lower-rank projections on its own data",
          "[content]") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd data = pvc_test::random_mat(rng, 40, 10);
    // Give the data real structure so rank matters.
    data += pvc_test::random_mat(rng, 40, 3) * pvc_test::random_mat(rng, 3, 10);
    const int k = 4;
    ContentProjection pca = ContentProjection::fit_rows(data, k, 0);
    double err_k = (pca.reconstruct_rows(data) - data).squaredNorm();

    ContentProjection pca_lower = ContentProjection::fit_rows(data, k - 1, 0);
    double err_lower = (pca_lower.reconstruct_rows(data) - data).squaredNorm();
    REQUIRE(err_k <= err_lower + 1e-9);

    // Random orthonormal rank-(k-1) projections can never beat it either.
    Eigen::VectorXd mean = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
    for (int r = 0; r < 5; ++r) {
      Eigen::MatrixXd q =
          Eigen::HouseholderQR<Eigen::MatrixXd>(
              pvc_test::random_mat(rng, 10, k - 1))
              .householderQ() *
          Eigen::MatrixXd::Identity(10, k - 1);
      double err_rand =
          (centered - centered * q * q.transpose()).squaredNorm();
      REQUIRE(err_k <= err_rand + 1e-9);
    }
  }
}

TEST_CASE("content projection rejects non-mel input", "[content]") {
  Rng rng(6);
  FrameMatrix mel = pvc_test::random_features(rng, 50, 8, FeatureKind::kMel);
  ContentProjection proj = ContentProjection::fit({mel}, 4, 0);
  FrameMatrix wrong = mel;
  wrong.kind = FeatureKind::kContent;
  REQUIRE_THROWS_AS(proj.apply(wrong), ContractViolation);
}

TEST_CASE("projection file round trips", "[content]") {
  auto dir = scratch_dir("proj_io");
  Rng rng(8);
  FrameMatrix mel = pvc_test::random_features(rng, 60, 12, FeatureKind::kMel);
  ContentProjection proj = ContentProjection::fit({mel}, 6, 1);
  proj.save(dir + "/p.pvcp");
  ContentProjection loaded = ContentProjection::load(dir + "/p.pvcp");
  REQUIRE(proj.apply(mel).data == loaded.apply(mel).data);
}

TEST_CASE("feature cache round trips byte-identically", "[cache]") {
  auto dir = scratch_dir("cache_io");
  Rng rng(9);
  FrameMatrix fm = pvc_test::random_features(rng, 37, 13, FeatureKind::kMel);
  const std::string p1 = dir + "/a.pvcf", p2 = dir + "/b.pvcf";
  save_feature(p1, fm);
  FrameMatrix loaded = load_feature(p1);
  REQUIRE(loaded.kind == fm.kind);
  REQUIRE(loaded.hop_seconds == fm.hop_seconds);
  REQUIRE(loaded.data == fm.data);
  save_feature(p2, loaded);
  REQUIRE(pvc_test::read_file_bytes(p1) == pvc_test::read_file_bytes(p2));
}
