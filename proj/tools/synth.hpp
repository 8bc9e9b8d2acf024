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

// Seeded synthetic "ancient/modern" parallel corpus with gold annotation of
// the ancient side. Used by the CLI `synth` command and the test suites.
//
// Ancient sentences come from a POS Markov chain over a Zipfian lexicon of
// 1-3 character words built from a shared character inventory. Every
// ancient word type has a modern translation whose POS maps back to the
// ancient POS through the default mapping table, so with noise 0 projecting
// through the true alignment reproduces gold exactly. The noise rate r
// controls:
//   per type:        wrong or null-mapped modern POS (r/2), translation split
//                    over two modern tokens (r, multi-char words), synonym
//                    translation (r)
//   per occurrence:  dropped translation (r for function words, r/4 else),
//                    inserted filler token (r per sentence), adjacent swap of
//                    two modern tokens (r per sentence)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "projtag/corpus_io.hpp"
#include "projtag/errors.hpp"
#include "projtag/utf8.hpp"

namespace projtag::synth {

struct SynthConfig {
  std::size_t pairs = 2000;
  std::size_t annotated = 200;
  std::size_t test_size = 200;  // per test set
  std::size_t chars = 800;      // ancient character inventory
  std::size_t word_types = 600;
  std::size_t min_words = 3;
  std::size_t max_words = 9;
  double noise = 0.3;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const {
    return {{"pairs", pairs},         {"annotated", annotated}, {"test_size", test_size},
            {"chars", chars},         {"word_types", word_types}, {"min_words", min_words},
            {"max_words", max_words}, {"noise", noise},         {"seed", seed}};
  }

  static SynthConfig from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
      c.pairs = j.value("pairs", c.pairs);
      c.annotated = j.value("annotated", c.annotated);
      c.test_size = j.value("test_size", c.test_size);
      c.chars = j.value("chars", c.chars);
      c.word_types = j.value("word_types", c.word_types);
      c.min_words = j.value("min_words", c.min_words);
      c.max_words = j.value("max_words", c.max_words);
      c.noise = j.value("noise", c.noise);
      c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed synth config: ") + e.what());
    }
    c.validate();
    return c;
  }

  void validate() const {
    if (noise < 0.0 || noise > 1.0) throw DataError("noise must lie in [0, 1]");
    if (min_words < 1 || max_words < min_words) throw DataError("bad sentence length range");
    if (chars < 50 || word_types < 30) throw DataError("lexicon too small");
  }
};

/// One modern token produced by translating an ancient word; `first_char`
/// is the offset of the first ancient character it covers.
struct ModernPiece {
  std::string surface;
  std::string pos;
  std::size_t first_char = 0;
};

struct WordType {
  std::vector<std::string> chars;
  std::string pos;
  std::vector<std::vector<ModernPiece>> translations;  // [0] primary
};

struct SynthCorpus {
  std::vector<ParallelLine> parallel;
  std::vector<TaggedSentence> modern;         // tagged modern side of `parallel`
  std::vector<TaggedSentence> parallel_gold;  // gold ancient side of `parallel`
  std::vector<std::vector<std::optional<std::size_t>>> alignment;  // per char
  std::vector<TaggedSentence> annotated;
  std::vector<TaggedSentence> test_a;  // same distribution as `annotated`
  std::vector<TaggedSentence> test_b;  // shifted word and length distribution
};

namespace detail {

struct PosInfo {
  const char* pos;
  double weight;
  std::vector<double> length_weights;  // lengths 1, 2, 3
  std::vector<const char*> modern;     // modern tags mapping back to `pos`
  const char* confusion;               // ancient POS a wrong translation maps to
};

inline const std::vector<PosInfo>& pos_inventory() {
  static const std::vector<PosInfo> kInfo = {
      {"n", 0.24, {0.55, 0.40, 0.05}, {"n", "nl", "nz"}, "v"},
      {"v", 0.22, {0.60, 0.37, 0.03}, {"v"}, "n"},
      {"a", 0.08, {0.60, 0.40, 0.00}, {"a", "b", "z"}, "v"},
      {"d", 0.08, {0.90, 0.10, 0.00}, {"d"}, "a"},
      {"r", 0.06, {0.90, 0.10, 0.00}, {"r"}, "n"},
      {"p", 0.05, {0.95, 0.05, 0.00}, {"p"}, "v"},
      {"u", 0.05, {1.00, 0.00, 0.00}, {"u"}, "y"},
      {"c", 0.04, {0.90, 0.10, 0.00}, {"c"}, "d"},
      {"nr", 0.04, {0.00, 0.70, 0.30}, {"nh"}, "n"},
      {"ns", 0.03, {0.00, 0.70, 0.30}, {"ns", "ni"}, "n"},
      {"m", 0.03, {0.70, 0.30, 0.00}, {"m"}, "q"},
      {"q", 0.03, {0.90, 0.10, 0.00}, {"q"}, "n"},
      {"t", 0.02, {0.20, 0.80, 0.00}, {"nt"}, "n"},
      {"f", 0.02, {0.90, 0.10, 0.00}, {"nd"}, "n"},
      {"y", 0.02, {1.00, 0.00, 0.00}, {"e"}, "u"},
  };
  return kInfo;
}

inline const PosInfo& info_of(const std::string& pos) {
  for (const auto& i : pos_inventory()) {
    if (pos == i.pos) return i;
  }
  throw DataError("no synthetic POS '" + pos + "'");
}

inline bool is_function_pos(const std::string& p) {
  return p == "p" || p == "c" || p == "u" || p == "y";
}

// Modern tags with a null value in the default mapping table.
inline const std::vector<const char*>& null_modern_tags() {
  static const std::vector<const char*> kTags = {"i", "j", "h", "k", "g", "x"};
  return kTags;
}

inline std::discrete_distribution<std::size_t> zipf(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), exponent);
  return {w.begin(), w.end()};
}

// Sentence-level sampling parameters; test B uses a flatter word
// distribution and longer sentences.
struct Regime {
  double word_exponent;
  std::size_t min_words, max_words;
};

class Generator {
 public:
  explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    cfg.validate();
    build_lexicon();
    build_grammar();
  }

  SynthCorpus run() {
    SynthCorpus out;
    const Regime a{1.1, cfg_.min_words, cfg_.max_words};
    const Regime b{0.6, cfg_.min_words + 2, cfg_.max_words + 4};
    for (std::size_t k = 0; k < cfg_.pairs; ++k) {
      const auto words = sentence(a);
      emit_pair(words, out);
    }
    for (std::size_t k = 0; k < cfg_.annotated; ++k) out.annotated.push_back(gold(sentence(a)));
    for (std::size_t k = 0; k < cfg_.test_size; ++k) out.test_a.push_back(gold(sentence(a)));
    for (std::size_t k = 0; k < cfg_.test_size; ++k) out.test_b.push_back(gold(sentence(b)));
    return out;
  }

 private:
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::string ancient_char(std::size_t k) const {
    return utf8::encode(static_cast<char32_t>(0x4E00 + (k * 37) % 20000));
  }

  std::string modern_surface() {
    const std::size_t c = modern_counter_++;
    return utf8::encode(static_cast<char32_t>(0x8A00 + c / 200)) +
           utf8::encode(static_cast<char32_t>(0x9000 + c % 200));
  }

  std::string modern_pos_for(const std::string& ancient_pos, bool noisy) {
    const auto& info = info_of(ancient_pos);
    if (noisy) {
      if (uniform() < 0.5) {
        const auto& nulls = null_modern_tags();
        return nulls[below(nulls.size())];
      }
      const auto& wrong = info_of(info.confusion).modern;
      return wrong[below(wrong.size())];
    }
    return info.modern[below(info.modern.size())];
  }

  std::vector<ModernPiece> translation(const WordType& w, const std::string& modern_pos, bool split) {
    if (split && w.chars.size() >= 2) {
      return {{modern_surface(), modern_pos, 0}, {modern_surface(), modern_pos, 1}};
    }
    return {{modern_surface(), modern_pos, 0}};
  }

  void build_lexicon() {
    const double r = cfg_.noise;
    auto char_dist = zipf(cfg_.chars, 0.7);
    std::set<std::vector<std::string>> seen;
    const auto& inv = pos_inventory();
    double total = 0.0;
    for (const auto& i : inv) total += i.weight;
    for (std::size_t p = 0; p < inv.size(); ++p) {
      const auto n_types = std::max<std::size_t>(
          3, static_cast<std::size_t>(std::lround(inv[p].weight / total * cfg_.word_types)));
      std::discrete_distribution<int> len_dist(inv[p].length_weights.begin(),
                                               inv[p].length_weights.end());
      std::vector<std::size_t> ids;
      for (std::size_t t = 0; t < n_types; ++t) {
        WordType w;
        w.pos = inv[p].pos;
        const int len = len_dist(rng_) + 1;
        for (int attempt = 0; attempt < 200; ++attempt) {
          w.chars.clear();
          for (int c = 0; c < len; ++c) w.chars.push_back(ancient_char(char_dist(rng_)));
          if (!seen.count(w.chars)) break;
        }
        seen.insert(w.chars);
        const bool noisy = uniform() < r / 2;
        const std::string mpos = modern_pos_for(w.pos, noisy);
        const bool split = uniform() < r;
        w.translations.push_back(translation(w, mpos, split));
        if (uniform() < r) w.translations.push_back(translation(w, mpos, split));
        ids.push_back(lexicon_.size());
        lexicon_.push_back(std::move(w));
      }
      types_by_pos_.push_back(std::move(ids));
    }
    period_ = lexicon_.size();
    lexicon_.push_back({{"。"}, "w", {{{"。", "wp", 0}}}});
    comma_ = lexicon_.size();
    lexicon_.push_back({{"，"}, "w", {{{"，", "wp", 0}}}});
    for (const char* f : {"的", "了", "着", "过"}) fillers_.push_back({f, "u", 0});
  }

  void build_grammar() {
    const auto& inv = pos_inventory();
    const std::size_t n = inv.size();
    std::vector<double> base(n);
    for (std::size_t p = 0; p < n; ++p) base[p] = inv[p].weight;
    start_ = std::discrete_distribution<std::size_t>(base.begin(), base.end());
    for (std::size_t p = 0; p < n; ++p) {
      std::vector<double> row(n);
      for (std::size_t q = 0; q < n; ++q) row[q] = 0.15 * base[q];
      std::vector<std::size_t> order(n);
      for (std::size_t q = 0; q < n; ++q) order[q] = q;
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t k = 0; k < 4; ++k) row[order[k]] += 0.85 * (0.1 + uniform()) / 2.4;
      next_.emplace_back(row.begin(), row.end());
    }
  }

  // Word type ids of one sentence, ending in a period.
  std::vector<std::size_t> sentence(const Regime& g) {
    const std::size_t len = g.min_words + below(g.max_words - g.min_words + 1);
    std::vector<std::size_t> out;
    std::size_t pos = start_(rng_);
    for (std::size_t k = 0; k < len; ++k) {
      if (k > 0) pos = next_[pos](rng_);
      const auto& ids = types_by_pos_[pos];
      auto dist = zipf(ids.size(), g.word_exponent);
      out.push_back(ids[dist(rng_)]);
      if (k + 1 < len && k > 0 && uniform() < 0.12) out.push_back(comma_);
    }
    out.push_back(period_);
    return out;
  }

  TaggedSentence gold(const std::vector<std::size_t>& words) const {
    TaggedSentence s;
    for (std::size_t w : words) s.push_back({utf8::join(lexicon_[w].chars), lexicon_[w].pos});
    return s;
  }

  void emit_pair(const std::vector<std::size_t>& words, SynthCorpus& out) {
    const double r = cfg_.noise;
    struct Token {
      ModernPiece piece;
      std::size_t word;  // index into `words`, or npos for fillers
    };
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<Token> tokens;
    for (std::size_t k = 0; k < words.size(); ++k) {
      const WordType& w = lexicon_[words[k]];
      if (w.pos != "w") {
        const double drop = is_function_pos(w.pos) ? r : r / 4;
        if (uniform() < drop) continue;
      }
      const auto& tr = w.translations.size() > 1 && uniform() < 0.5 ? w.translations[1]
                                                                    : w.translations[0];
      for (const auto& piece : tr) tokens.push_back({piece, k});
    }
    if (uniform() < r) {
      const auto at = below(tokens.size() + 1);
      tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(at),
                    {fillers_[below(fillers_.size())], kNone});
    }
    if (tokens.size() >= 2 && uniform() < r) {
      const auto at = below(tokens.size() - 1);
      std::swap(tokens[at], tokens[at + 1]);
    }

    // Character-level true alignment.
    std::vector<std::size_t> word_start(words.size() + 1, 0);
    for (std::size_t k = 0; k < words.size(); ++k) {
      word_start[k + 1] = word_start[k] + lexicon_[words[k]].chars.size();
    }
    std::vector<std::optional<std::size_t>> align(word_start.back());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].word == kNone) continue;
      const auto& w = lexicon_[words[tokens[t].word]];
      const auto& tr_pieces = tokens[t].piece;
      // The piece covers chars from its first_char to the next piece's start
      // (or the end of the word).
      std::size_t end = w.chars.size();
      for (const auto& other : w.translations[0]) {
        if (other.first_char > tr_pieces.first_char) end = std::min(end, other.first_char);
      }
      for (std::size_t c = tr_pieces.first_char; c < end; ++c) {
        align[word_start[tokens[t].word] + c] = t;
      }
    }

    TaggedSentence modern;
    std::string modern_text;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      modern.push_back({tokens[t].piece.surface, tokens[t].piece.pos});
      modern_text += (t ? " " : "") + tokens[t].piece.surface;
    }
    TaggedSentence g = gold(words);
    std::string ancient;
    for (const auto& w : g) ancient += w.surface;
    out.parallel.push_back({ancient, modern_text, out.parallel.size() + 1});
    out.modern.push_back(std::move(modern));
    out.parallel_gold.push_back(std::move(g));
    out.alignment.push_back(std::move(align));
  }

  SynthConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<WordType> lexicon_;
  std::vector<std::vector<std::size_t>> types_by_pos_;
  std::size_t period_ = 0, comma_ = 0;
  std::vector<ModernPiece> fillers_;
  std::size_t modern_counter_ = 0;
  std::discrete_distribution<std::size_t> start_;
  std::vector<std::discrete_distribution<std::size_t>> next_;
};

}  // namespace detail

inline SynthCorpus generate(const SynthConfig& cfg) { return detail::Generator(cfg).run(); }

/// One line per pair; per ancient character the modern token index or "-".
inline void write_alignment(const std::vector<std::vector<std::optional<std::size_t>>>& a,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& line : a) {
    for (std::size_t j = 0; j < line.size(); ++j) {
      out << (j ? " " : "");
      if (line[j]) {
        out << *line[j];
      } else {
        out << '-';
      }
    }
    out << '\n';
  }
}

/// Writes the corpus files plus a pipeline config pointing at them.
inline void write_corpus(const SynthCorpus& c, const SynthConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  write_parallel(c.parallel, (d / "parallel.tsv").string());
  write_tagged_words(c.modern, (d / "modern.txt").string());
  write_tagged_words(c.parallel_gold, (d / "parallel_gold.txt").string());
  write_tagged_words(c.annotated, (d / "annotated.txt").string());
  write_tagged_words(c.test_a, (d / "test_a.txt").string());
  write_tagged_words(c.test_b, (d / "test_b.txt").string());
  write_alignment(c.alignment, (d / "alignment.txt").string());
  nlohmann::json pipeline = {
      {"parallel", "parallel.tsv"},
      {"modern", "modern.txt"},
      {"annotated", "annotated.txt"},
      {"tests", {{"test_a", "test_a.txt"}, {"test_b", "test_b.txt"}}},
      {"seed", cfg.seed},
      {"stage1_task", "joint"},
  };
  std::ofstream(d / "pipeline.json", std::ios::binary) << pipeline.dump(2) << "\n";
  std::ofstream(d / "synth.json", std::ios::binary) << cfg.to_json().dump(2) << "\n";
}

}  // namespace projtag::synth
