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

// Lexical word alignment (IBM Model 1 with a NULL source word, optional
// Model 2 style diagonal distortion). Source = modern words, target =
// ancient characters.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "projtag/corpus_io.hpp"
#include "projtag/errors.hpp"
#include "projtag/utf8.hpp"

namespace projtag {

inline constexpr const char* kNullWord = "<NULL>";

struct ParallelPair {
  std::vector<std::string> source;  // modern words
  std::vector<std::string> target;  // ancient characters
};

/// Modern side split on whitespace; ancient side split into characters
/// with whitespace characters dropped.
inline ParallelPair make_parallel_pair(const std::string& ancient, const std::string& modern) {
  ParallelPair p;
  std::istringstream ss(modern);
  std::string w;
  while (ss >> w) p.source.push_back(w);
  for (auto& c : utf8::split_chars(ancient)) {
    if (c != " " && c != "\t") p.target.push_back(std::move(c));
  }
  return p;
}

/// t(f | e) over co-occurring pairs; absent pairs have probability 0.
/// Source id 0 is the NULL word.
class TranslationTable {
 public:
  TranslationTable() { source_id(kNullWord); }

  int source_id(const std::string& e) { return intern(e, sources_, source_index_, probs_); }
  int target_id(const std::string& f) {
    auto [it, fresh] = target_index_.emplace(f, static_cast<int>(targets_.size()));
    if (fresh) targets_.push_back(f);
    return it->second;
  }

  std::optional<int> find_source(const std::string& e) const { return find(source_index_, e); }
  std::optional<int> find_target(const std::string& f) const { return find(target_index_, f); }

  double prob(int e, int f) const {
    if (e < 0 || f < 0 || e >= static_cast<int>(probs_.size())) return 0.0;
    const auto& row = probs_[e];
    auto it = row.find(f);
    return it == row.end() ? 0.0 : it->second;
  }

  double prob(const std::string& e, const std::string& f) const {
    auto ei = find_source(e);
    auto fi = find_target(f);
    return ei && fi ? prob(*ei, *fi) : 0.0;
  }

  void set(int e, int f, double p) { probs_.at(e)[f] = p; }

  const std::vector<std::string>& sources() const { return sources_; }
  const std::vector<std::string>& targets() const { return targets_; }
  const std::unordered_map<int, double>& row(int e) const { return probs_.at(e); }
  std::unordered_map<int, double>& mutable_row(int e) { return probs_.at(e); }

  /// Entries sorted bytewise by (source, target) string.
  std::vector<std::tuple<std::string, std::string, double>> sorted_entries() const {
    std::vector<std::tuple<std::string, std::string, double>> out;
    for (std::size_t e = 0; e < probs_.size(); ++e) {
      for (const auto& [f, p] : probs_[e]) out.emplace_back(sources_[e], targets_[f], p);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool operator==(const TranslationTable& o) const { return sorted_entries() == o.sorted_entries(); }

 private:
  static int intern(const std::string& s, std::vector<std::string>& names,
                    std::unordered_map<std::string, int>& index,
                    std::vector<std::unordered_map<int, double>>& rows) {
    auto [it, fresh] = index.emplace(s, static_cast<int>(names.size()));
    if (fresh) {
      names.push_back(s);
      rows.emplace_back();
    }
    return it->second;
  }

  static std::optional<int> find(const std::unordered_map<std::string, int>& index,
                                 const std::string& s) {
    auto it = index.find(s);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> sources_;
  std::vector<std::string> targets_;
  std::unordered_map<std::string, int> source_index_;
  std::unordered_map<std::string, int> target_index_;
  std::vector<std::unordered_map<int, double>> probs_;
};

struct AlignOptions {
  int iterations = 5;
  double smoothing = 1e-6;
  /// Diagonal distortion prior over real source positions (0 = Model 1).
  double diagonal_tension = 0.0;
  unsigned threads = 1;
};

namespace detail {

/// Alignment prior p(i | j) over source positions 0..l-1 plus NULL at l.
inline std::vector<double> alignment_prior(std::size_t j, std::size_t m, std::size_t l,
                                           double tension) {
  std::vector<double> prior(l + 1, 1.0 / static_cast<double>(l + 1));
  if (tension <= 0.0 || l == 0) return prior;
  const double jpos = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
  double z = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    const double ipos = (static_cast<double>(i) + 0.5) / static_cast<double>(l);
    prior[i] = std::exp(-tension * std::abs(ipos - jpos));
    z += prior[i];
  }
  const double real_mass = static_cast<double>(l) / static_cast<double>(l + 1);
  for (std::size_t i = 0; i < l; ++i) prior[i] *= real_mass / z;
  return prior;
}

struct InternedPair {
  std::vector<int> source;  // without NULL
  std::vector<int> target;
};

/// Posterior rows for one pair (|target| x (|source|+1), NULL last) and the
/// pair's log-likelihood. A row with zero mass puts everything on NULL.
inline double pair_posterior(const TranslationTable& t, const std::vector<int>& source,
                             const std::vector<int>& target, double tension,
                             Eigen::MatrixXd& post) {
  const std::size_t l = source.size(), m = target.size();
  post.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l + 1));
  double loglik = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto prior = alignment_prior(j, m, l, tension);
    double z = 0.0;
    for (std::size_t i = 0; i <= l; ++i) {
      const int e = i < l ? source[i] : 0;
      const double w = prior[i] * t.prob(e, target[j]);
      post(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
      z += w;
    }
    if (z > 0.0) {
      post.row(static_cast<Eigen::Index>(j)) /= z;
      loglik += std::log(z);
    } else {
      post.row(static_cast<Eigen::Index>(j)).setZero();
      post(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = 1.0;
      loglik += -std::numeric_limits<double>::infinity();
    }
  }
  return loglik;
}

}  // namespace detail

/// Corpus log-likelihood sum_pairs sum_j log sum_i p(i|j) t(f_j | e_i).
inline double corpus_log_likelihood(const TranslationTable& t, const std::vector<ParallelPair>& pairs,
                                    double tension = 0.0) {
  double ll = 0.0;
  Eigen::MatrixXd post;
  for (const auto& p : pairs) {
    std::vector<int> s, f;
    for (const auto& w : p.source) s.push_back(t.find_source(w).value_or(-1));
    for (const auto& c : p.target) f.push_back(t.find_target(c).value_or(-1));
    ll += detail::pair_posterior(t, s, f, tension, post);
  }
  return ll;
}

struct EmTrace {
  std::vector<double> log_likelihood;  // before the first and after every M-step
};

/// EM training from a uniform table. Expected counts are computed per pair
/// (in parallel when options.threads > 1) and summed in corpus order, so the
/// result does not depend on the thread count.
inline TranslationTable em_train(const std::vector<ParallelPair>& pairs, const AlignOptions& opt,
                                 EmTrace* trace = nullptr) {
  if (pairs.empty()) throw AlignError("cannot train alignment on an empty corpus");
  if (opt.iterations < 1) throw AlignError("iterations must be >= 1");
  if (opt.smoothing < 0.0) throw AlignError("smoothing must be >= 0");

  TranslationTable t;
  std::vector<detail::InternedPair> corpus;
  corpus.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    if (p.source.empty() || p.target.empty()) {
      throw AlignError("pair " + std::to_string(k) + " has an empty side");
    }
    detail::InternedPair ip;
    for (const auto& w : p.source) ip.source.push_back(t.source_id(w));
    for (const auto& c : p.target) ip.target.push_back(t.target_id(c));
    corpus.push_back(std::move(ip));
  }
  // Uniform start over the co-occurrence support.
  const double uniform = 1.0 / static_cast<double>(t.targets().size());
  for (const auto& ip : corpus) {
    for (int f : ip.target) {
      t.set(0, f, uniform);
      for (int e : ip.source) t.set(e, f, uniform);
    }
  }

  const std::size_t n = corpus.size();
  std::vector<Eigen::MatrixXd> posts(n);
  std::vector<double> pair_ll(n);
  auto e_step = [&] {
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t k = begin; k < n; k += stride) {
        pair_ll[k] = detail::pair_posterior(t, corpus[k].source, corpus[k].target,
                                            opt.diagonal_tension, posts[k]);
      }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n)));
    if (threads == 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
    }
    double ll = 0.0;
    for (double x : pair_ll) ll += x;
    return ll;
  };

  for (int it = 0; it < opt.iterations; ++it) {
    const double ll = e_step();
    if (trace) trace->log_likelihood.push_back(ll);
    std::vector<std::unordered_map<int, double>> counts(t.sources().size());
    for (std::size_t k = 0; k < n; ++k) {
      const auto& ip = corpus[k];
      const std::size_t l = ip.source.size();
      for (std::size_t j = 0; j < ip.target.size(); ++j) {
        for (std::size_t i = 0; i <= l; ++i) {
          const int e = i < l ? ip.source[i] : 0;
          counts[e][ip.target[j]] +=
              posts[k](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        }
      }
    }
    // M-step with additive smoothing over each source word's support.
    for (std::size_t e = 0; e < counts.size(); ++e) {
      auto& row = t.mutable_row(static_cast<int>(e));
      double total = 0.0;
      for (const auto& [f, c] : counts[e]) total += c + opt.smoothing;
      for (auto& [f, p] : row) {
        const auto it2 = counts[e].find(f);
        const double c = it2 == counts[e].end() ? 0.0 : it2->second;
        p = total > 0.0 ? (c + opt.smoothing) / total : 0.0;
      }
    }
  }
  if (trace) trace->log_likelihood.push_back(e_step());
  return t;
}

/// |target| x (|source|+1) posterior matrix; the last column is NULL.
inline Eigen::MatrixXd posterior(const ParallelPair& pair, const TranslationTable& t,
                                 double diagonal_tension = 0.0) {
  std::vector<int> s, f;
  for (const auto& w : pair.source) s.push_back(t.find_source(w).value_or(-1));
  for (const auto& c : pair.target) f.push_back(t.find_target(c).value_or(-1));
  Eigen::MatrixXd post;
  detail::pair_posterior(t, s, f, diagonal_tension, post);
  return post;
}

struct AlignmentLink {
  std::optional<std::size_t> token;  // nullopt: unaligned
  double probability = 0.0;          // posterior of the winning column
  bool operator==(const AlignmentLink&) const = default;
};

struct AlignmentResult {
  std::vector<AlignmentLink> links;  // one per target character
};

/// Per-character argmax over the posterior row. Ties go to the smallest
/// token index and NULL loses ties; a NULL winner or a winning posterior
/// below tau leaves the character unaligned.
inline AlignmentResult best_alignment_from_posterior(const Eigen::MatrixXd& post, double tau) {
  if (tau < 0.0 || tau >= 1.0) throw AlignError("tau must lie in [0, 1)");
  AlignmentResult r;
  const Eigen::Index l = post.cols() - 1;
  for (Eigen::Index j = 0; j < post.rows(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < l; ++i) {
      if (post(j, i) > post(j, best)) best = i;
    }
    AlignmentLink link;
    if (l == 0 || post(j, l) > post(j, best)) {
      link.probability = post(j, l);
    } else {
      link.probability = post(j, best);
      if (link.probability >= tau) link.token = static_cast<std::size_t>(best);
    }
    r.links.push_back(link);
  }
  return r;
}

inline AlignmentResult best_alignment(const ParallelPair& pair, const TranslationTable& t, double tau,
                                      double diagonal_tension = 0.0) {
  return best_alignment_from_posterior(posterior(pair, t, diagonal_tension), tau);
}

// ------------------------------------------------------------------ table IO

inline void write_translation_table(const TranslationTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  char buf[64];
  for (const auto& [e, f, p] : t.sorted_entries()) {
    if (p < 1e-12) continue;
    std::snprintf(buf, sizeof buf, "%.17g", p);
    out << e << '\t' << f << '\t' << buf << '\n';
  }
}

inline TranslationTable read_translation_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, 0, -1, "cannot open file");
  TranslationTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) throw FormatError(path, lineno, -1, "expected 3 TAB-separated fields");
    const std::string num = line.substr(b + 1);
    char* end = nullptr;
    const double p = std::strtod(num.c_str(), &end);
    if (num.empty() || *end != '\0' || !(p >= 0.0) || p > 1.0) {
      throw FormatError(path, lineno, 2, "bad probability '" + num + "'");
    }
    t.set(t.source_id(line.substr(0, a)), t.target_id(line.substr(a + 1, b - a - 1)), p);
  }
  return t;
}

}  // namespace projtag
