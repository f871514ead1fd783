// Copyright 2026 The PVC Authors
// Linear-PCM RIFF/WAVE reading and writing, mono mixdown, resampling.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/io_util.hpp"

namespace pvc {

struct Waveform {
  std::vector<float> samples;  // mono, in [-1, 1]
  int sample_rate = 24000;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

namespace wav_detail {

inline int32_t sign_extend_24(uint32_t v) {
  return (v & 0x800000) ? static_cast<int32_t>(v | 0xff000000u)
                        : static_cast<int32_t>(v);
}

// Linear-interpolation resampler. Output length preserves duration:
// round(n * target / source).
inline std::vector<float> resample_linear(const std::vector<float>& x,
                                          int source_rate, int target_rate) {
  if (source_rate == target_rate) return x;
  size_t out_len = static_cast<size_t>(std::llround(
      static_cast<double>(x.size()) * target_rate / source_rate));
  std::vector<float> y(out_len);
  double step = static_cast<double>(source_rate) / target_rate;
  for (size_t i = 0; i < out_len; ++i) {
    double p = i * step;
    size_t i0 = static_cast<size_t>(p);
    if (i0 >= x.size() - 1) {
      y[i] = x.back();
      continue;
    }
    double frac = p - static_cast<double>(i0);
    y[i] = static_cast<float>((1.0 - frac) * x[i0] + frac * x[i0 + 1]);
  }
  return y;
}

}  // namespace wav_detail

/// Reads a linear-PCM (or IEEE float) wave file, averages channels to mono,
/// scales into [-1, 1] and resamples to target_rate.
inline Waveform load_waveform(const std::string& path, int target_rate) {
  if (target_rate <= 0) throw ContractViolation("target rate must be > 0");
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);

  char riff[4];
  is.read(riff, 4);
  if (!is || std::memcmp(riff, "RIFF", 4) != 0)
    throw IoError("not a RIFF file: " + path);
  io::read_u32(is);  // chunk size
  char wave[4];
  is.read(wave, 4);
  if (!is || std::memcmp(wave, "WAVE", 4) != 0)
    throw IoError("not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;
  while (is) {
    char id[4];
    is.read(id, 4);
    if (!is) break;
    uint32_t size = io::read_u32(is);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      std::vector<char> fmt(size);
      is.read(fmt.data(), size);
      if (!is || size < 16) throw IoError("bad fmt chunk: " + path);
      auto u16 = [&](size_t off) {
        return static_cast<uint16_t>(static_cast<unsigned char>(fmt[off]) |
                                     (static_cast<unsigned char>(fmt[off + 1])
                                      << 8));
      };
      format = u16(0);
      channels = u16(2);
      rate = static_cast<uint32_t>(u16(4)) | (static_cast<uint32_t>(u16(6))
                                              << 16);
      bits = u16(14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data.resize(size);
      is.read(data.data(), size);
      if (!is) throw IoError("truncated data chunk: " + path);
      have_data = true;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
      continue;
    }
    if (size & 1) is.seekg(1, std::ios::cur);
  }
  if (!have_fmt || !have_data) throw IoError("missing fmt/data chunk: " + path);
  // WAVE_FORMAT_EXTENSIBLE carries the real format in a sub-chunk we do not
  // parse; PCM payloads still decode by bit width.
  if (format != 1 && format != 3 && format != 0xFFFE)
    throw IoError("unsupported wave format tag: " + path);
  if (channels == 0 || rate == 0) throw IoError("bad wave header: " + path);

  size_t bytes_per_sample = bits / 8;
  if (bytes_per_sample == 0) throw IoError("unsupported bit depth: " + path);
  size_t num_frames = data.size() / (bytes_per_sample * channels);
  if (num_frames == 0) throw EmptyInputError("zero-length audio: " + path);

  std::vector<float> mono(num_frames, 0.0f);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data());
  for (size_t f = 0; f < num_frames; ++f) {
    double acc = 0.0;
    for (size_t c = 0; c < channels; ++c) {
      const unsigned char* s = p + (f * channels + c) * bytes_per_sample;
      double v = 0.0;
      if (format == 3 && bits == 32) {
        float fv;
        std::memcpy(&fv, s, 4);
        v = fv;
      } else if (format == 3 && bits == 64) {
        double dv;
        std::memcpy(&dv, s, 8);
        v = dv;
      } else if (bits == 8) {
        v = (static_cast<int>(s[0]) - 128) / 128.0;
      } else if (bits == 16) {
        int16_t iv = static_cast<int16_t>(s[0] | (s[1] << 8));
        v = iv / 32768.0;
      } else if (bits == 24) {
        uint32_t raw = s[0] | (s[1] << 8) | (s[2] << 16);
        v = wav_detail::sign_extend_24(raw) / 8388608.0;
      } else if (bits == 32) {
        int32_t iv;
        std::memcpy(&iv, s, 4);
        v = iv / 2147483648.0;
      } else {
        throw IoError("unsupported bit depth: " + path);
      }
      acc += v;
    }
    mono[f] = static_cast<float>(acc / channels);
  }

  // Integer formats are already bounded; float payloads may exceed [-1, 1].
  float peak = 0.0f;
  for (float v : mono) peak = std::max(peak, std::abs(v));
  if (peak > 1.0f)
    for (float& v : mono) v /= peak;

  Waveform w;
  w.sample_rate = target_rate;
  w.samples = wav_detail::resample_linear(mono, static_cast<int>(rate),
                                          target_rate);
  if (w.samples.empty()) throw EmptyInputError("zero-length audio: " + path);
  return w;
}

/// Writes mono 16-bit PCM.
inline void save_waveform(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for write: " + path);
  uint32_t n = static_cast<uint32_t>(w.samples.size());
  uint32_t data_bytes = n * 2;
  io::write_magic(os, "RIFF");
  io::write_u32(os, 36 + data_bytes);
  io::write_magic(os, "WAVE");
  io::write_magic(os, "fmt ");
  io::write_u32(os, 16);
  io::write_u32(os, 1u | (1u << 16));  // PCM, 1 channel
  io::write_u32(os, static_cast<uint32_t>(w.sample_rate));
  io::write_u32(os, static_cast<uint32_t>(w.sample_rate) * 2);  // byte rate
  io::write_u32(os, 2u | (16u << 16));  // block align, bits
  io::write_magic(os, "data");
  io::write_u32(os, data_bytes);
  for (float v : w.samples) {
    float c = std::clamp(v, -1.0f, 1.0f);
    int16_t iv = static_cast<int16_t>(std::lround(c * 32767.0));
    unsigned char b[2] = {static_cast<unsigned char>(iv & 0xff),
                          static_cast<unsigned char>((iv >> 8) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
  }
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace pvc
