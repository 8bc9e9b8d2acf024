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

#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "projtag/errors.hpp"
#include "projtag/tagset.hpp"

namespace projtag {

enum class EvalMode { kWsg, kPos };

inline const char* mode_name(EvalMode m) { return m == EvalMode::kWsg ? "wsg" : "pos"; }

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t matched = 0;

  /// Micro-averaged P/R/F1 from counts. An empty side counts as perfect
  /// precision (or recall), so scoring an empty corpus against itself is 1.
  static Metrics from_counts(std::size_t gold, std::size_t predicted, std::size_t matched) {
    Metrics m;
    m.gold = gold;
    m.predicted = predicted;
    m.matched = matched;
    m.precision = predicted ? static_cast<double>(matched) / static_cast<double>(predicted) : 1.0;
    m.recall = gold ? static_cast<double>(matched) / static_cast<double>(gold) : 1.0;
    const double pr = m.precision + m.recall;
    m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    return m;
  }

  nlohmann::json to_json() const {
    return {{"precision", precision}, {"recall", recall}, {"f1", f1},
            {"gold", gold},           {"predicted", predicted}, {"matched", matched}};
  }
};

namespace detail {

struct SpanCounts {
  std::size_t gold = 0, predicted = 0, matched = 0;
};

// Both segmentations are sorted by start, so a merge finds the matches.
inline SpanCounts count_spans(const Segmentation& gold, const Segmentation& pred, EvalMode mode) {
  SpanCounts c;
  auto excluded = [&](const Span& g) { return mode == EvalMode::kPos && g.pos == kUnknownPos; };
  std::size_t gi = 0, pi = 0;
  // Predicted spans whose boundaries coincide with an unknown-POS gold span
  // are dropped from POS scoring together with that gold span.
  while (gi < gold.size() || pi < pred.size()) {
    if (pi == pred.size() || (gi < gold.size() && gold[gi].start < pred[pi].start)) {
      if (!excluded(gold[gi])) ++c.gold;
      ++gi;
    } else if (gi == gold.size() || pred[pi].start < gold[gi].start) {
      ++c.predicted;
      ++pi;
    } else {
      const Span& g = gold[gi];
      const Span& p = pred[pi];
      if (excluded(g)) {
        if (g.end != p.end) ++c.predicted;
      } else {
        ++c.gold;
        ++c.predicted;
        if (g.end == p.end && (mode == EvalMode::kWsg || g.pos == p.pos)) ++c.matched;
      }
      ++gi;
      ++pi;
    }
  }
  return c;
}

}  // namespace detail

/// Span-level scoring. A WSG match is an identical (start, end); a POS match
/// additionally needs the same POS. Gold words with unknown POS take part in
/// WSG scoring only.
inline Metrics score(const std::vector<std::vector<HybridTag>>& gold,
                     const std::vector<std::vector<HybridTag>>& pred, EvalMode mode) {
  if (gold.size() != pred.size()) {
    throw EvalError("gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                    std::to_string(pred.size()));
  }
  std::size_t g = 0, p = 0, m = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].size() != pred[k].size()) {
      throw EvalError("sentence " + std::to_string(k) + ": gold length " +
                      std::to_string(gold[k].size()) + " != predicted length " +
                      std::to_string(pred[k].size()));
    }
    const auto c = detail::count_spans(decode_tags(gold[k]), decode_tags(pred[k]), mode);
    g += c.gold;
    p += c.predicted;
    m += c.matched;
  }
  return Metrics::from_counts(g, p, m);
}

/// Plain-text listing of sentences whose spans differ. Gold-only spans are
/// prefixed with '-', prediction-only spans with '+'.
inline std::string format_diff(const std::vector<std::vector<std::string>>& chars,
                               const std::vector<std::vector<HybridTag>>& gold,
                               const std::vector<std::vector<HybridTag>>& pred, EvalMode mode) {
  if (gold.size() != pred.size() || chars.size() != gold.size()) {
    throw EvalError("corpus sizes differ");
  }
  auto same = [&](const Span& a, const Span& b) {
    return a.start == b.start && a.end == b.end && (mode == EvalMode::kWsg || a.pos == b.pos);
  };
  auto word = [&](std::size_t k, const Span& s) {
    std::string w;
    for (std::size_t i = s.start; i < s.end && i < chars[k].size(); ++i) w += chars[k][i];
    return w + "/" + s.pos + " [" + std::to_string(s.start) + "," + std::to_string(s.end) + ")";
  };
  std::ostringstream out;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    const Segmentation gs = decode_tags(gold[k]);
    const Segmentation ps = decode_tags(pred[k]);
    std::vector<std::string> lines;
    for (const Span& s : gs) {
      if (std::none_of(ps.begin(), ps.end(), [&](const Span& p) { return same(s, p); })) {
        lines.push_back("- " + word(k, s));
      }
    }
    for (const Span& s : ps) {
      if (std::none_of(gs.begin(), gs.end(), [&](const Span& g) { return same(g, s); })) {
        lines.push_back("+ " + word(k, s));
      }
    }
    if (lines.empty()) continue;
    out << "# sentence " << k << "\n";
    for (const auto& l : lines) out << l << "\n";
  }
  return out.str();
}

}  // namespace projtag
