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

// Character-window encoder -> linear emission head -> linear-chain CRF.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "projtag/crf.hpp"
#include "projtag/errors.hpp"
#include "projtag/tagset.hpp"

namespace projtag {

using crf::LabelConstraint;
using crf::Matrix;
using crf::TransitionParams;
using crf::Vector;

/// Character inventory. Index 0 is reserved for out-of-vocabulary input.
class Vocabulary {
 public:
  static constexpr const char* kOov = "<OOV>";

  Vocabulary() : chars_{kOov} { index_.emplace(kOov, 0); }

  /// Builds from every character of `sentences`, sorted bytewise.
  template <class Range>
  static Vocabulary from_sentences(const Range& sentences) {
    std::vector<std::string> all;
    for (const auto& s : sentences) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<std::string> chars{kOov};
    for (auto& c : all) {
      if (c != kOov) chars.push_back(std::move(c));
    }
    return Vocabulary(std::move(chars));
  }

  explicit Vocabulary(std::vector<std::string> chars) : chars_(std::move(chars)) {
    if (chars_.empty() || chars_[0] != kOov) throw ModelError("vocabulary must start with <OOV>");
    for (std::size_t i = 0; i < chars_.size(); ++i) {
      if (!index_.emplace(chars_[i], static_cast<int>(i)).second) {
        throw ModelError("duplicate vocabulary entry '" + chars_[i] + "'");
      }
    }
  }

  int size() const { return static_cast<int>(chars_.size()); }
  const std::vector<std::string>& chars() const { return chars_; }

  int id(const std::string& c) const {
    auto it = index_.find(c);
    return it == index_.end() ? 0 : it->second;
  }

  std::vector<int> ids(const std::vector<std::string>& chars) const {
    std::vector<int> out(chars.size());
    for (std::size_t i = 0; i < chars.size(); ++i) out[i] = id(chars[i]);
    return out;
  }

 private:
  std::vector<std::string> chars_;
  std::unordered_map<std::string, int> index_;
};

struct EncoderConfig {
  int embedding_dim = 64;
  int hidden_dim = 128;
  int window = 2;  // half-width

  int input_dim() const { return (2 * window + 1) * embedding_dim; }
  bool operator==(const EncoderConfig&) const = default;
};

/// Every trainable tensor. Gradients use the same layout.
struct LabelerParams {
  Matrix embeddings;       // |vocab| x d_e
  Matrix projection;       // (2w+1) d_e x d
  Vector projection_bias;  // d
  Matrix emission_weight;  // d x v   (W_s)
  Vector emission_bias;    // v       (b_s)
  TransitionParams crf;    // M, start, stop and the legality mask

  LabelerParams zeros_like() const {
    LabelerParams g = *this;
    visit(g, [](const char*, auto& x) { x.setZero(); });
    return g;
  }

  /// Calls f(name, tensor) for every trainable tensor in a fixed order.
  template <class P, class F>
  static void visit(P& p, F&& f) {
    f("embeddings", p.embeddings);
    f("projection", p.projection);
    f("projection_bias", p.projection_bias);
    f("emission_weight", p.emission_weight);
    f("emission_bias", p.emission_bias);
    f("transition", p.crf.transition);
    f("start", p.crf.start);
    f("stop", p.crf.stop);
  }

  template <class F>
  static void visit2(LabelerParams& a, const LabelerParams& b, F&& f) {
    f(a.embeddings, b.embeddings);
    f(a.projection, b.projection);
    f(a.projection_bias, b.projection_bias);
    f(a.emission_weight, b.emission_weight);
    f(a.emission_bias, b.emission_bias);
    f(a.crf.transition, b.crf.transition);
    f(a.crf.start, b.crf.start);
    f(a.crf.stop, b.crf.stop);
  }

  double squared_norm() const {
    double s = 0.0;
    visit(*this, [&](const char*, const auto& x) { s += x.squaredNorm(); });
    return s;
  }

  void scale(double k) {
    visit(*this, [&](const char*, auto& x) { x *= k; });
  }
};

struct LabelerModel {
  HybridTagSet tagset;
  Vocabulary vocab;
  EncoderConfig config;
  LabelerParams params;

  int num_tags() const { return tagset.size(); }
};

/// Fresh model. Weights are uniform in +-1/sqrt(fan_in) (embedding lookups
/// have fan-in 1); biases, transitions and start/stop scores start at zero.
inline LabelerModel init_model(HybridTagSet tagset, Vocabulary vocab, EncoderConfig cfg,
                               std::uint64_t seed) {
  if (cfg.embedding_dim <= 0 || cfg.hidden_dim <= 0 || cfg.window < 0) {
    throw ModelError("invalid encoder dimensions");
  }
  LabelerModel m{std::move(tagset), std::move(vocab), cfg, {}};
  const int v = m.num_tags();
  std::mt19937_64 rng(seed);
  auto uniform = [&](Eigen::Index rows, Eigen::Index cols, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix x(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = dist(rng);
    }
    return x;
  };
  auto& p = m.params;
  p.embeddings = uniform(m.vocab.size(), cfg.embedding_dim, 1.0);
  p.projection = uniform(cfg.input_dim(), cfg.hidden_dim, cfg.input_dim());
  p.projection_bias = Vector::Zero(cfg.hidden_dim);
  p.emission_weight = uniform(cfg.hidden_dim, v, cfg.hidden_dim);
  p.emission_bias = Vector::Zero(v);
  p.crf = TransitionParams::bmes(m.tagset);
  return m;
}

/// Window input for every position: row i concatenates the embeddings of
/// ids[i-w .. i+w], zero-padded at the edges.
inline Matrix window_inputs(const LabelerModel& m, std::span<const int> ids) {
  const int w = m.config.window, de = m.config.embedding_dim;
  const auto n = static_cast<Eigen::Index>(ids.size());
  Matrix x = Matrix::Zero(n, m.config.input_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = -w; k <= w; ++k) {
      const Eigen::Index j = i + k;
      if (j < 0 || j >= n) continue;
      x.block(i, static_cast<Eigen::Index>(k + w) * de, 1, de) =
          m.params.embeddings.row(ids[static_cast<std::size_t>(j)]);
    }
  }
  return x;
}

/// H = tanh(X P + bias), one row per character.
inline Matrix encode(const LabelerModel& m, std::span<const int> ids) {
  Matrix z = window_inputs(m, ids) * m.params.projection;
  z.rowwise() += m.params.projection_bias.transpose();
  return z.array().tanh().matrix();
}

inline Matrix encode(const LabelerModel& m, const std::vector<std::string>& chars) {
  const auto ids = m.vocab.ids(chars);
  return encode(m, ids);
}

/// s_i = h_i^T W_s + b_s for every row of H.
inline Matrix emissions(const Matrix& h, const Matrix& weight, const Vector& bias) {
  if (h.cols() != weight.rows() || weight.cols() != bias.size()) {
    throw ModelError("emission head dimension mismatch: H is " + std::to_string(h.rows()) + "x" +
                     std::to_string(h.cols()) + ", W_s is " + std::to_string(weight.rows()) +
                     "x" + std::to_string(weight.cols()));
  }
  Matrix s = h * weight;
  s.rowwise() += bias.transpose();
  return s;
}

inline Matrix emissions(const LabelerModel& m, std::span<const int> ids) {
  return emissions(encode(m, ids), m.params.emission_weight, m.params.emission_bias);
}

/// Adds scale * d(loss)/d(params) into `grad` and returns the loss
///   log Z(all paths) - log Z(paths allowed by c).
/// Fully constrained c gives the ordinary negative log-likelihood; the
/// unconstrained c gives exactly zero.
inline double accumulate_gradients(const LabelerModel& m, std::span<const int> ids,
                                   const LabelConstraint& c, LabelerParams& grad,
                                   double scale = 1.0) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (n == 0) throw ModelError("empty sentence");
  if (c.size() != ids.size()) throw ModelError("constraint length does not match sentence");
  const auto& p = m.params;
  const int v = m.num_tags();
  const crf::BoolMatrix mask = c.to_mask(v);
  crf::check_feasible(p.crf, mask);

  const Matrix x = window_inputs(m, ids);
  Matrix h = x * p.projection;
  h.rowwise() += p.projection_bias.transpose();
  h = h.array().tanh().matrix();
  const Matrix s = emissions(h, p.emission_weight, p.emission_bias);

  const crf::detail::ExpTransitions et(p.crf.transition);
  const crf::Marginals all = crf::detail::forward_backward(s, p.crf, et, nullptr, false);
  const crf::Marginals allowed = crf::detail::forward_backward(s, p.crf, et, &mask, false);
  const double loss = std::max(0.0, all.log_partition - allowed.log_partition);

  const Matrix ds = (all.node - allowed.node) * scale;
  grad.crf.transition +=
      p.crf.allowed.select(((all.edge_sum - allowed.edge_sum) * scale).array(), 0.0).matrix();
  for (int y = 0; y < v; ++y) {
    if (p.crf.start_allowed(y)) grad.crf.start(y) += ds(0, y);
    if (p.crf.stop_allowed(y)) grad.crf.stop(y) += ds(n - 1, y);
  }

  grad.emission_weight.noalias() += h.transpose() * ds;
  grad.emission_bias += ds.colwise().sum().transpose();
  const Matrix dz = ((ds * p.emission_weight.transpose()).array() * (1.0 - h.array().square()))
                        .matrix();
  grad.projection.noalias() += x.transpose() * dz;
  grad.projection_bias += dz.colwise().sum().transpose();
  const Matrix dx = dz * p.projection.transpose();
  const int w = m.config.window, de = m.config.embedding_dim;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = -w; k <= w; ++k) {
      const Eigen::Index j = i + k;
      if (j < 0 || j >= n) continue;
      grad.embeddings.row(ids[static_cast<std::size_t>(j)]) +=
          dx.block(i, static_cast<Eigen::Index>(k + w) * de, 1, de);
    }
  }
  return loss;
}

struct LossAndGradients {
  double loss = 0.0;
  LabelerParams grad;
};

inline LossAndGradients loss_and_gradients(const LabelerModel& m,
                                           const std::vector<std::string>& chars,
                                           const LabelConstraint& c) {
  LossAndGradients out{0.0, m.params.zeros_like()};
  const auto ids = m.vocab.ids(chars);
  out.loss = accumulate_gradients(m, ids, c, out.grad);
  return out;
}

/// Loss only; same value accumulate_gradients returns.
inline double constrained_loss(const LabelerModel& m, std::span<const int> ids,
                               const LabelConstraint& c) {
  const Matrix s = emissions(m, ids);
  const double all = crf::log_partition(s, m.params.crf);
  return std::max(0.0, all - crf::constrained_log_partition(s, m.params.crf, c));
}

inline std::vector<int> predict_ids(const LabelerModel& m, std::span<const int> ids) {
  return crf::viterbi(emissions(m, ids), m.params.crf);
}

inline std::vector<HybridTag> predict(const LabelerModel& m, const std::vector<std::string>& chars) {
  const auto ids = m.vocab.ids(chars);
  std::vector<HybridTag> out;
  for (int y : predict_ids(m, ids)) out.push_back(m.tagset.tag(y));
  return out;
}

/// Viterbi per sentence. Sentences are independent, so they are split across
/// `threads` workers; output order follows input order.
inline std::vector<std::vector<HybridTag>> predict(
    const LabelerModel& m, const std::vector<std::vector<std::string>>& sentences,
    unsigned threads = 0) {
  std::vector<std::vector<HybridTag>> out(sentences.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, sentences.size())));
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < sentences.size(); i += stride) {
      if (!sentences[i].empty()) out[i] = predict(m, sentences[i]);
    }
  };
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return out;
}

}  // namespace projtag
