// Copyright 2026 The projtag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Hybrid BMES x POS tag space. Joint segmentation and POS tagging is cast as
// one labeling problem over 4 * |POS| tags; a tag sequence and a list of
// POS-labeled word spans are two views of the same annotation.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "projtag/errors.hpp"

namespace projtag {

inline constexpr std::string_view kUnknownPos = "_";

enum class Boundary : std::uint8_t { B = 0, M = 1, E = 2, S = 3 };

inline constexpr int kNumBoundaries = 4;

inline char boundary_char(Boundary b) { return "BMES"[static_cast<int>(b)]; }

inline std::optional<Boundary> parse_boundary(char c) {
  switch (c) {
    case 'B': return Boundary::B;
    case 'M': return Boundary::M;
    case 'E': return Boundary::E;
    case 'S': return Boundary::S;
    default: return std::nullopt;
  }
}

// A boundary that may begin / end a word.
inline bool opens_word(Boundary b) { return b == Boundary::B || b == Boundary::S; }
inline bool closes_word(Boundary b) { return b == Boundary::E || b == Boundary::S; }

/// Ordered, immutable inventory of POS categories.
class PosTagSet {
 public:
  PosTagSet() = default;

  explicit PosTagSet(std::vector<std::string> tags) : tags_(std::move(tags)) {
    for (std::size_t i = 0; i < tags_.size(); ++i) {
      const std::string& t = tags_[i];
      if (t.empty()) throw TagSetError("empty POS tag");
      if (t == kUnknownPos) throw TagSetError("POS tag may not be '_'");
      if (!index_.emplace(t, static_cast<int>(i)).second) {
        throw TagSetError("duplicate POS tag '" + t + "'");
      }
    }
    if (tags_.empty()) throw TagSetError("POS tag set is empty");
  }

  /// 18 ancient categories that appear as mapping targets, followed by four
  /// placeholder slots which a tag file can rename.
  static PosTagSet default_set() {
    return PosTagSet({"a", "c", "d", "y", "m", "n", "f", "nr", "ns", "t", "s",
                      "p", "q", "r", "u", "v", "w", "x", "ext1", "ext2",
                      "ext3", "ext4"});
  }

  int size() const { return static_cast<int>(tags_.size()); }
  const std::string& tag(int i) const { return tags_.at(i); }
  const std::vector<std::string>& tags() const { return tags_; }

  std::optional<int> index_of(std::string_view pos) const {
    auto it = index_.find(std::string(pos));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view pos) const { return index_of(pos).has_value(); }

  bool operator==(const PosTagSet& o) const { return tags_ == o.tags_; }

 private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> index_;
};

/// Reads a tag set file: one tag per line, order significant, text after
/// '#' ignored, blank lines skipped.
inline PosTagSet read_pos_tagset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, 0, -1, "cannot open POS tag set file");
  std::vector<std::string> tags;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string tag = line.substr(first, last - first + 1);
    if (tag.find_first_of(" \t") != std::string::npos) {
      throw FormatError(path, lineno, -1, "POS tag contains whitespace");
    }
    tags.push_back(std::move(tag));
  }
  try {
    return PosTagSet(std::move(tags));
  } catch (const TagSetError& e) {
    throw FormatError(path, lineno, -1, e.what());
  }
}

/// One per-character label: a boundary plus a POS (or kUnknownPos in weak
/// labels).
struct HybridTag {
  Boundary boundary = Boundary::S;
  std::string pos;

  bool known() const { return pos != kUnknownPos; }
  std::string str() const { return std::string(1, boundary_char(boundary)) + "-" + pos; }
  bool operator==(const HybridTag&) const = default;
};

/// Parses "B-nr" style tags. Grammar: (B|M|E|S)-(<pos>|_).
inline std::optional<HybridTag> parse_hybrid_tag(std::string_view s) {
  if (s.size() < 3 || s[1] != '-') return std::nullopt;
  auto b = parse_boundary(s[0]);
  if (!b) return std::nullopt;
  std::string_view pos = s.substr(2);
  if (pos.find_first_of(" \t\r\n") != std::string_view::npos) return std::nullopt;
  return HybridTag{*b, std::string(pos)};
}

/// Integer codec over boundary x POS: index = pos_index * 4 + boundary.
class HybridTagSet {
 public:
  HybridTagSet() = default;
  explicit HybridTagSet(PosTagSet pos) : pos_(std::move(pos)) {}

  const PosTagSet& pos_set() const { return pos_; }
  int size() const { return kNumBoundaries * pos_.size(); }

  int index(Boundary b, int pos_index) const {
    return pos_index * kNumBoundaries + static_cast<int>(b);
  }

  int index(const HybridTag& tag) const {
    if (!tag.known()) throw TagSetError("tag '" + tag.str() + "' has unknown POS");
    auto p = pos_.index_of(tag.pos);
    if (!p) throw TagSetError("POS '" + tag.pos + "' is not in the tag set");
    return index(tag.boundary, *p);
  }

  HybridTag tag(int i) const {
    if (i < 0 || i >= size()) throw TagSetError("tag index out of range");
    return HybridTag{boundary_of(i), pos_.tag(pos_of(i))};
  }

  static Boundary boundary_of(int i) { return static_cast<Boundary>(i % kNumBoundaries); }
  static int pos_of(int i) { return i / kNumBoundaries; }

 private:
  PosTagSet pos_;
};

/// BMES legality of the adjacency a -> b.
inline bool is_valid_transition(Boundary a, int a_pos, Boundary b, int b_pos) {
  if (closes_word(a)) return opens_word(b);
  return (b == Boundary::M || b == Boundary::E) && a_pos == b_pos;
}

inline bool is_valid_transition(const HybridTag& a, const HybridTag& b) {
  if (closes_word(a.boundary)) return opens_word(b.boundary);
  return (b.boundary == Boundary::M || b.boundary == Boundary::E) && a.pos == b.pos;
}

inline bool is_valid_transition(const HybridTagSet& ts, int a, int b) {
  return is_valid_transition(ts.boundary_of(a), ts.pos_of(a), ts.boundary_of(b),
                             ts.pos_of(b));
}

/// A word: characters [start, end) with a POS or kUnknownPos.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string pos;
  bool operator==(const Span&) const = default;
};

using Segmentation = std::vector<Span>;

/// Throws SegmentationError unless spans tile [0, n) in order.
inline void validate_segmentation(const Segmentation& seg) {
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < seg.size(); ++k) {
    const Span& s = seg[k];
    if (s.start != cursor) {
      throw SegmentationError("span " + std::to_string(k) + " starts at " +
                              std::to_string(s.start) + ", expected " +
                              std::to_string(cursor));
    }
    if (s.end <= s.start) {
      throw SegmentationError("span " + std::to_string(k) + " is empty");
    }
    if (s.pos.empty()) throw SegmentationError("span " + std::to_string(k) + " has no POS");
    cursor = s.end;
  }
}

inline std::vector<HybridTag> encode_segmentation(const Segmentation& seg) {
  validate_segmentation(seg);
  std::vector<HybridTag> tags;
  tags.reserve(seg.empty() ? 0 : seg.back().end);
  for (const Span& s : seg) {
    const std::size_t len = s.end - s.start;
    if (len == 1) {
      tags.push_back({Boundary::S, s.pos});
      continue;
    }
    tags.push_back({Boundary::B, s.pos});
    for (std::size_t k = 2; k < len; ++k) tags.push_back({Boundary::M, s.pos});
    tags.push_back({Boundary::E, s.pos});
  }
  return tags;
}

/// Word view of a tag sequence. Total: an M/E with no open word starts one,
/// a B/S closes whatever is open, a word still open at the end is closed
/// there. A word takes the POS of its first character.
inline Segmentation decode_tags(std::span<const HybridTag> tags) {
  Segmentation seg;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const HybridTag& t = tags[i];
    if (opens_word(t.boundary) || !open) {
      if (open) seg.back().end = i;
      seg.push_back(Span{i, i + 1, t.pos});
      open = true;
    }
    seg.back().end = i + 1;
    if (closes_word(t.boundary)) open = false;
  }
  return seg;
}

}  // namespace projtag
