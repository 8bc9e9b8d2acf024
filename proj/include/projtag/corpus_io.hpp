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

// Readers and writers for the three corpus formats. All files are UTF-8
// with LF line ends; writers are deterministic and read(write(x)) == x.
//
//   parallel_tsv   ancient<TAB>modern                  one pair per line
//   tagged_words   surface/POS surface/POS ...         one sentence per line
//                  ('/' inside a surface is written '\/'; the separator is
//                  the last unescaped '/')
//   char_tags      char<TAB>B-pos                      one char per line,
//                                                      blank line between
//                                                      sentences

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "projtag/errors.hpp"
#include "projtag/tagset.hpp"
#include "projtag/utf8.hpp"

namespace projtag {

struct ParallelLine {
  std::string ancient;
  std::string modern;
  std::size_t line = 0;  // 1-based line in the source file
  bool operator==(const ParallelLine& o) const {
    return ancient == o.ancient && modern == o.modern;
  }
};

struct TaggedWord {
  std::string surface;
  std::string pos;
  bool operator==(const TaggedWord&) const = default;
};

using TaggedSentence = std::vector<TaggedWord>;

/// Characters with one hybrid tag each; POS may be kUnknownPos.
struct CharTagSentence {
  std::vector<std::string> chars;
  std::vector<HybridTag> tags;
  bool operator==(const CharTagSentence&) const = default;
};

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, 0, -1, "cannot open file");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

inline std::vector<std::string> split_chars_at(const std::string& s, const std::string& path,
                                               std::size_t line) {
  try {
    return utf8::split_chars(s);
  } catch (const Error& e) {
    throw FormatError(path, line, -1, e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------- parallel

inline std::vector<ParallelLine> read_parallel(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<ParallelLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (detail::is_blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path, lineno, -1, "missing TAB separator");
    if (line.find('\t', tab + 1) != std::string::npos) {
      throw FormatError(path, lineno, -1, "more than one TAB");
    }
    ParallelLine p{line.substr(0, tab), line.substr(tab + 1), lineno};
    detail::split_chars_at(p.ancient, path, lineno);
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_parallel(const std::vector<ParallelLine>& data, const std::string& path) {
  auto out = detail::open_output(path);
  for (const auto& p : data) {
    if (p.ancient.find_first_of("\t\n") != std::string::npos ||
        p.modern.find_first_of("\t\n") != std::string::npos || detail::is_blank(p.ancient)) {
      throw Error("parallel pair cannot be written without loss");
    }
    out << p.ancient << '\t' << p.modern << '\n';
  }
}

// ------------------------------------------------------------ tagged words

inline std::string escape_surface(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '/') out += '\\';
    out += c;
  }
  return out;
}

/// Parses one "surface/POS" token. Returns false when there is no
/// unescaped separator.
inline bool parse_tagged_token(std::string_view tok, TaggedWord& w) {
  std::size_t sep = std::string_view::npos;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (tok[i] == '\\' && i + 1 < tok.size() && tok[i + 1] == '/') {
      ++i;
    } else if (tok[i] == '/') {
      sep = i;
    }
  }
  if (sep == std::string_view::npos || sep == 0 || sep + 1 == tok.size()) return false;
  w.surface.clear();
  for (std::size_t i = 0; i < sep; ++i) {
    if (tok[i] == '\\' && i + 1 < sep && tok[i + 1] == '/') continue;
    w.surface += tok[i];
  }
  w.pos = std::string(tok.substr(sep + 1));
  return true;
}

inline std::vector<TaggedSentence> read_tagged_words(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<TaggedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (detail::is_blank(line)) continue;
    detail::split_chars_at(line, path, lineno);
    std::istringstream ss(line);
    std::string tok;
    TaggedSentence sent;
    long index = 0;
    while (ss >> tok) {
      TaggedWord w;
      if (!parse_tagged_token(tok, w)) {
        throw FormatError(path, lineno, index, "token '" + tok + "' has no surface/POS separator");
      }
      sent.push_back(std::move(w));
      ++index;
    }
    out.push_back(std::move(sent));
  }
  return out;
}

inline void write_tagged_words(const std::vector<TaggedSentence>& data, const std::string& path) {
  auto out = detail::open_output(path);
  for (const auto& sent : data) {
    if (sent.empty()) throw Error("cannot write an empty tagged sentence");
    for (std::size_t k = 0; k < sent.size(); ++k) {
      const auto& w = sent[k];
      if (w.surface.empty() || w.pos.empty() ||
          w.surface.find_first_of(" \t\n") != std::string::npos || w.surface.back() == '\\' ||
          w.surface.find("\\/") != std::string::npos ||
          w.pos.find_first_of(" \t\n/") != std::string::npos) {
        throw Error("tagged word cannot be written without loss");
      }
      out << (k ? " " : "") << escape_surface(w.surface) << '/' << w.pos;
    }
    out << '\n';
  }
}

/// Character view of a gold word sequence: each word becomes a span with
/// its POS, then BMES-encoded.
inline CharTagSentence to_char_tags(const TaggedSentence& sent) {
  CharTagSentence out;
  Segmentation seg;
  for (const auto& w : sent) {
    auto chars = utf8::split_chars(w.surface);
    const std::size_t start = out.chars.size();
    out.chars.insert(out.chars.end(), chars.begin(), chars.end());
    seg.push_back(Span{start, out.chars.size(), w.pos});
  }
  out.tags = encode_segmentation(seg);
  return out;
}

inline TaggedSentence to_tagged_words(const CharTagSentence& sent) {
  TaggedSentence out;
  for (const Span& s : decode_tags(sent.tags)) {
    out.push_back({utf8::join(sent.chars, s.start, s.end), s.pos});
  }
  return out;
}

// --------------------------------------------------------------- char tags

inline std::vector<CharTagSentence> read_char_tags(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<CharTagSentence> out;
  CharTagSentence cur;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (!cur.chars.empty()) out.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (line.empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path, lineno, -1, "missing TAB separator");
    const std::string ch = line.substr(0, tab);
    const auto chars = detail::split_chars_at(ch, path, lineno);
    if (chars.size() != 1) {
      throw FormatError(path, lineno, 0, "expected exactly one character, got '" + ch + "'");
    }
    auto tag = parse_hybrid_tag(std::string_view(line).substr(tab + 1));
    if (!tag) {
      throw FormatError(path, lineno, 1, "bad tag '" + line.substr(tab + 1) +
                                             "', expected (B|M|E|S)-(<pos>|_)");
    }
    cur.chars.push_back(chars[0]);
    cur.tags.push_back(std::move(*tag));
  }
  flush();
  return out;
}

inline void write_char_tags(const std::vector<CharTagSentence>& data, const std::string& path) {
  auto out = detail::open_output(path);
  for (const auto& s : data) {
    if (s.chars.empty() || s.chars.size() != s.tags.size()) {
      throw Error("char-tag sentence is empty or has mismatched lengths");
    }
    for (std::size_t i = 0; i < s.chars.size(); ++i) {
      out << s.chars[i] << '\t' << s.tags[i].str() << '\n';
    }
    out << '\n';
  }
}

}  // namespace projtag
