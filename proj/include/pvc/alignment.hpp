// Copyright 2026 The PVC Authors
// Forced-alignment files: TSV and TextGrid parsing, phone-to-frame mapping.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pvc/errors.hpp"

namespace pvc {

inline constexpr const char* kSilenceLabel = "sil";

struct RawSegment {
  std::string label;
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Ordered phone segments in frame units; end is exclusive.
struct PhoneAlignment {
  struct Segment {
    std::string label;
    int start_frame = 0;
    int end_frame = 0;
  };
  std::vector<Segment> segments;
};

/// phone_of_frame[f] is the ordinal of the segment owning frame f.
struct FramePhoneMap {
  std::vector<int> phone_of_frame;

  size_t frames() const { return phone_of_frame.size(); }
};

namespace align_detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline bool parse_double(const std::string& s, double* out) {
  try {
    size_t used = 0;
    *out = std::stod(s, &used);
    return used == s.size();
  } catch (...) {
    return false;
  }
}

inline void validate_segments(std::vector<RawSegment>& segs) {
  std::stable_sort(segs.begin(), segs.end(),
                   [](const RawSegment& a, const RawSegment& b) {
                     return a.start_s < b.start_s;
                   });
  for (size_t i = 0; i + 1 < segs.size(); ++i) {
    if (segs[i + 1].start_s < segs[i].end_s - 1e-9)
      throw ValidationError("overlapping intervals: '" + segs[i].label +
                            "' and '" + segs[i + 1].label + "'");
  }
}

inline std::vector<RawSegment> parse_tsv(std::istream& is) {
  std::vector<RawSegment> segs;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ls(t);
    std::string label, start, end, extra;
    if (!std::getline(ls, label, '\t') || !std::getline(ls, start, '\t') ||
        !std::getline(ls, end, '\t'))
      throw ParseError("expected 'label<TAB>start<TAB>end'", line_no);
    if (std::getline(ls, extra, '\t') && !trim(extra).empty())
      throw ParseError("trailing fields after end time", line_no);
    RawSegment seg;
    seg.label = trim(label);
    if (seg.label.empty()) throw ParseError("empty phone label", line_no);
    if (!parse_double(trim(start), &seg.start_s) ||
        !parse_double(trim(end), &seg.end_s))
      throw ParseError("bad time value", line_no);
    if (seg.end_s <= seg.start_s)
      throw ValidationError("segment '" + seg.label +
                            "' has start >= end at line " +
                            std::to_string(line_no));
    segs.push_back(std::move(seg));
  }
  return segs;
}

// Minimal TextGrid reader: a single interval tier named "phones".
inline std::vector<RawSegment> parse_textgrid(std::istream& is) {
  std::vector<RawSegment> segs;
  std::string line;
  bool in_phones_tier = false;
  int line_no = 0;
  RawSegment cur;
  int have = 0;  // bitmask: 1 xmin, 2 xmax, 4 text
  auto extract_quoted = [](const std::string& s) {
    size_t a = s.find('"');
    size_t b = s.rfind('"');
    if (a == std::string::npos || b <= a) return std::string();
    return s.substr(a + 1, b - a - 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.find("name") == 0 && t.find('=') != std::string::npos) {
      std::string nm = extract_quoted(t);
      in_phones_tier = (nm == "phones");
      continue;
    }
    if (!in_phones_tier) continue;
    if (t.find("intervals [") == 0) {
      cur = RawSegment{};
      have = 0;
      continue;
    }
    auto value_after_eq = [&](const std::string& s) {
      return trim(s.substr(s.find('=') + 1));
    };
    if (t.find("xmin") == 0 && t.find('=') != std::string::npos) {
      if (!parse_double(value_after_eq(t), &cur.start_s))
        throw ParseError("bad xmin", line_no);
      have |= 1;
    } else if (t.find("xmax") == 0 && t.find('=') != std::string::npos) {
      if (!parse_double(value_after_eq(t), &cur.end_s))
        throw ParseError("bad xmax", line_no);
      have |= 2;
    } else if (t.find("text") == 0 && t.find('=') != std::string::npos) {
      cur.label = extract_quoted(t);
      have |= 4;
    }
    if (have == 7) {
      // Tier-level xmin/xmax also match; a tier never has start == end.
      if (cur.end_s > cur.start_s) {
        if (cur.label.empty()) cur.label = kSilenceLabel;
        segs.push_back(cur);
      }
      have = 0;
    }
  }
  return segs;
}

}  // namespace align_detail

/// Parses a 3-column TSV ("label<TAB>start_s<TAB>end_s") or the interval
/// tier named "phones" of a TextGrid. Returns segments sorted by start.
inline std::vector<RawSegment> parse_alignment(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  std::string first;
  std::getline(is, first);
  is.clear();
  is.seekg(0);
  std::vector<RawSegment> segs;
  if (first.find("ooTextFile") != std::string::npos ||
      path.size() > 9 && path.substr(path.size() - 9) == ".TextGrid") {
    segs = align_detail::parse_textgrid(is);
  } else {
    segs = align_detail::parse_tsv(is);
  }
  if (segs.empty()) throw EmptyInputError("no segments in " + path);
  align_detail::validate_segments(segs);
  return segs;
}

inline std::string serialize_alignment(const std::vector<RawSegment>& segs) {
  std::ostringstream os;
  os.precision(9);
  for (const auto& s : segs)
    os << s.label << '\t' << s.start_s << '\t' << s.end_s << '\n';
  return os.str();
}

/// Maps raw segments onto T frames. Frame f belongs to the segment whose
/// span contains the frame center (f + 0.5) * hop; gaps (including a leading
/// gap) become explicit "sil" segments, frames past the last segment join it.
/// Segments that end up owning no frames are dropped.
inline std::pair<PhoneAlignment, FramePhoneMap> to_frames(
    const std::vector<RawSegment>& raw, int T, double hop_seconds) {
  if (T < 1) throw ContractViolation("frame count must be >= 1");
  if (hop_seconds <= 0.0) throw ContractViolation("hop must be positive");
  if (raw.empty()) throw EmptyInputError("no segments");
  std::vector<RawSegment> segs(raw);
  align_detail::validate_segments(segs);
  const double audio_end = T * hop_seconds;
  if (segs.front().start_s >= audio_end)
    throw ValidationError("all segments lie beyond the audio end");

  // Fill gaps so coverage is contiguous from 0.
  std::vector<RawSegment> filled;
  if (segs.front().start_s > 1e-9)
    filled.push_back({kSilenceLabel, 0.0, segs.front().start_s});
  for (size_t i = 0; i < segs.size(); ++i) {
    filled.push_back(segs[i]);
    if (i + 1 < segs.size() && segs[i + 1].start_s - segs[i].end_s > 1e-9)
      filled.push_back({kSilenceLabel, segs[i].end_s, segs[i + 1].start_s});
  }

  std::vector<int> owner(T);
  size_t cursor = 0;
  for (int f = 0; f < T; ++f) {
    double center = (f + 0.5) * hop_seconds;
    while (cursor + 1 < filled.size() && center >= filled[cursor].end_s)
      ++cursor;
    owner[f] = static_cast<int>(cursor);
  }

  PhoneAlignment alignment;
  FramePhoneMap map;
  map.phone_of_frame.resize(T);
  int prev_owner = -1;
  for (int f = 0; f < T; ++f) {
    if (owner[f] != prev_owner) {
      alignment.segments.push_back(
          {filled[owner[f]].label, f, f + 1});
      prev_owner = owner[f];
    } else {
      alignment.segments.back().end_frame = f + 1;
    }
    map.phone_of_frame[f] = static_cast<int>(alignment.segments.size()) - 1;
  }
  return {std::move(alignment), std::move(map)};
}

}  // namespace pvc
