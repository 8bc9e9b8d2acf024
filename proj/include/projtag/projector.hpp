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

// Annotation projection: word boundaries and POS tags of a tagged modern
// sentence are carried over to the ancient characters aligned to it.

#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "projtag/aligner.hpp"
#include "projtag/corpus_io.hpp"
#include "projtag/errors.hpp"
#include "projtag/tagset.hpp"

namespace projtag {

/// Modern (863 tag set) POS -> ancient POS; a null value means the modern
/// category has no ancient counterpart.
class PosMappingDict {
 public:
  using Entry = std::pair<std::string, std::optional<std::string>>;

  PosMappingDict() = default;
  explicit PosMappingDict(std::vector<Entry> entries) : entries_(std::move(entries)) {
    for (const auto& [k, v] : entries_) {
      if (!index_.emplace(k, v).second) throw DataError("duplicate dictionary key '" + k + "'");
    }
  }

  /// The 29-entry modern-to-ancient mapping table.
  static PosMappingDict default_dict() {
    return PosMappingDict({
        {"a", "a"},   {"b", "a"},    {"c", "c"},    {"d", "d"},   {"e", "y"},
        {"h", {}},    {"i", {}},     {"j", {}},     {"k", {}},    {"m", "m"},
        {"n", "n"},   {"nd", "f"},   {"nh", "nr"},  {"ni", "ns"}, {"nl", "n"},
        {"ns", "ns"}, {"nt", "t"},   {"nz", "n"},   {"o", "s"},   {"p", "p"},
        {"q", "q"},   {"r", "r"},    {"u", "u"},    {"v", "v"},   {"wp", "w"},
        {"ws", "x"},  {"x", {}},     {"g", {}},     {"z", "a"},
    });
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& key) const { return index_.count(key) > 0; }

  /// nullopt: key missing. Some(nullopt): key maps to null.
  std::optional<std::optional<std::string>> lookup(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::optional<std::string>> index_;
};

/// Lines "modern_pos<TAB>ancient_pos"; the literal `null` marks a null value.
inline PosMappingDict read_pos_dict(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, 0, -1, "cannot open file");
  std::vector<PosMappingDict::Entry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw FormatError(path, lineno, -1, "expected modern_pos<TAB>ancient_pos");
    }
    std::string value = line.substr(tab + 1);
    entries.emplace_back(line.substr(0, tab),
                         value == "null" ? std::nullopt : std::optional<std::string>(value));
  }
  try {
    return PosMappingDict(std::move(entries));
  } catch (const DataError& e) {
    throw FormatError(path, lineno, -1, e.what());
  }
}

inline void write_pos_dict(const PosMappingDict& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& [k, v] : d.entries()) out << k << '\t' << v.value_or("null") << '\n';
}

struct ProjectionReport {
  std::size_t sentences = 0;
  std::size_t chars = 0;
  std::size_t unaligned = 0;          // characters with no link
  std::size_t unknown_pos_words = 0;  // output words with POS "_"
  std::size_t null_mapped_words = 0;  // aligned words whose modern POS maps to null
  std::size_t dictionary_misses = 0;  // aligned words whose modern POS is not a key
  std::set<std::string> missing_keys;

  nlohmann::json to_json() const {
    return {{"sentences", sentences},
            {"chars", chars},
            {"unaligned", unaligned},
            {"unknown_pos_words", unknown_pos_words},
            {"null_mapped_words", null_mapped_words},
            {"dictionary_misses", dictionary_misses},
            {"missing_keys", missing_keys}};
  }
};

/// Ancient POS for a modern POS; null-valued and missing keys give "_".
/// A missing key is logged the first time `report` sees it.
inline std::string map_pos(const std::string& modern_pos, const PosMappingDict& dict,
                           ProjectionReport* report = nullptr) {
  auto hit = dict.lookup(modern_pos);
  if (!hit) {
    if (report) {
      ++report->dictionary_misses;
      if (report->missing_keys.insert(modern_pos).second) {
        std::clog << "projector: modern POS '" << modern_pos << "' is not in the dictionary\n";
      }
    }
    return std::string(kUnknownPos);
  }
  if (!*hit) {
    if (report) ++report->null_mapped_words;
    return std::string(kUnknownPos);
  }
  return **hit;
}

/// Weak labels for one pair. Maximal runs of adjacent characters linked to
/// the same modern token become one word carrying that token's mapped POS;
/// unaligned characters become single-character words with POS "_".
inline CharTagSentence project(const ParallelPair& pair, const TaggedSentence& modern,
                               const AlignmentResult& align, const PosMappingDict& dict,
                               ProjectionReport* report = nullptr) {
  const std::size_t n = pair.target.size();
  if (align.links.size() != n) throw CorpusError("alignment does not cover every character");
  Segmentation seg;
  for (std::size_t j = 0; j < n;) {
    const auto& token = align.links[j].token;
    if (!token) {
      if (report) ++report->unaligned;
      seg.push_back({j, j + 1, std::string(kUnknownPos)});
      ++j;
      continue;
    }
    if (*token >= modern.size()) {
      throw CorpusError("alignment references modern token " + std::to_string(*token) +
                        " of a " + std::to_string(modern.size()) + "-word sentence");
    }
    std::size_t end = j + 1;
    while (end < n && align.links[end].token == token) ++end;
    seg.push_back({j, end, map_pos(modern[*token].pos, dict, report)});
    j = end;
  }
  if (report) {
    ++report->sentences;
    report->chars += n;
    for (const auto& s : seg) report->unknown_pos_words += s.pos == kUnknownPos;
  }
  return CharTagSentence{pair.target, encode_segmentation(seg)};
}

struct ProjectedCorpus {
  std::vector<CharTagSentence> data;
  ProjectionReport report;
};

/// Aligns every pair with `table` and projects the modern annotation.
/// pairs[k] and moderns[k] must describe the same modern sentence.
inline ProjectedCorpus project_corpus(const std::vector<ParallelPair>& pairs,
                                      const std::vector<TaggedSentence>& moderns,
                                      const TranslationTable& table, const PosMappingDict& dict,
                                      double tau, double diagonal_tension = 0.0) {
  if (pairs.size() != moderns.size()) {
    throw CorpusError("parallel corpus has " + std::to_string(pairs.size()) +
                      " pairs but tagged modern corpus has " + std::to_string(moderns.size()));
  }
  ProjectedCorpus out;
  out.data.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& src = pairs[k].source;
    const auto& mod = moderns[k];
    bool same = src.size() == mod.size();
    for (std::size_t i = 0; same && i < src.size(); ++i) same = src[i] == mod[i].surface;
    if (!same) {
      throw CorpusError("pair " + std::to_string(k) +
                        ": modern tokens differ from the tagged modern sentence");
    }
    const auto align = best_alignment(pairs[k], table, tau, diagonal_tension);
    out.data.push_back(project(pairs[k], mod, align, dict, &out.report));
  }
  return out;
}

}  // namespace projtag
