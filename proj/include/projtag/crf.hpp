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

// Linear-chain CRF lattice over an n x v emission matrix S.
//
//   score(Y) = start[y_1] + sum_i S[i, y_i] + sum_{i>=2} M[y_{i-1}, y_i] + stop[y_n]
//
// accumulated left to right in exactly that order, so that every routine
// that walks a single path (sequence_score, Viterbi, a lattice constrained
// to one path) produces bit-identical doubles.
//
// Dense lattice sums use the factorization
//   logsumexp_a(alpha[a] + M[a,b]) = m + c + log sum_a exp(alpha[a]-m) exp(M[a,b]-c)
// which needs O(v^2) multiply-adds but only O(v) exp/log per position.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "projtag/errors.hpp"
#include "projtag/tagset.hpp"

namespace projtag::crf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Stand-in for -inf on forbidden transitions. Finite so log-space
/// arithmetic never produces NaN.
inline constexpr double kMaskedScore = -1e4;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Transition matrix plus start/stop vectors and which entries are legal.
/// Entries that are not allowed hold kMaskedScore and are never trained.
struct TransitionParams {
  Matrix transition;
  Vector start;
  Vector stop;
  BoolMatrix allowed;
  BoolVector start_allowed;
  BoolVector stop_allowed;

  int size() const { return static_cast<int>(transition.rows()); }

  /// All-zero, nothing masked.
  static TransitionParams zeros(int v) {
    TransitionParams t;
    t.transition = Matrix::Zero(v, v);
    t.start = Vector::Zero(v);
    t.stop = Vector::Zero(v);
    t.allowed = BoolMatrix::Constant(v, v, true);
    t.start_allowed = BoolVector::Constant(v, true);
    t.stop_allowed = BoolVector::Constant(v, true);
    return t;
  }

  /// All-zero with the BMES legality mask of `ts` applied: only B-/S- may
  /// start a sentence and only E-/S- may end it.
  static TransitionParams bmes(const HybridTagSet& ts) {
    const int v = ts.size();
    TransitionParams t = zeros(v);
    for (int a = 0; a < v; ++a) {
      t.start_allowed(a) = opens_word(ts.boundary_of(a));
      t.stop_allowed(a) = closes_word(ts.boundary_of(a));
      for (int b = 0; b < v; ++b) t.allowed(a, b) = is_valid_transition(ts, a, b);
    }
    t.apply_mask();
    return t;
  }

  void apply_mask() {
    transition = allowed.select(transition.array(), kMaskedScore).matrix();
    start = start_allowed.select(start.array(), kMaskedScore).matrix();
    stop = stop_allowed.select(stop.array(), kMaskedScore).matrix();
  }
};

/// Allowed tag set per position. Each set is sorted and non-empty.
struct LabelConstraint {
  std::vector<std::vector<int>> allowed;

  std::size_t size() const { return allowed.size(); }

  static LabelConstraint full(std::size_t n, int v) {
    LabelConstraint c;
    std::vector<int> all(v);
    for (int y = 0; y < v; ++y) all[y] = y;
    c.allowed.assign(n, all);
    return c;
  }

  static LabelConstraint exact(std::span<const int> tags) {
    LabelConstraint c;
    for (int y : tags) c.allowed.push_back({y});
    return c;
  }

  bool is_exact() const {
    return std::all_of(allowed.begin(), allowed.end(),
                       [](const auto& a) { return a.size() == 1; });
  }

  BoolMatrix to_mask(int v) const {
    BoolMatrix m = BoolMatrix::Constant(static_cast<Eigen::Index>(allowed.size()), v, false);
    for (std::size_t i = 0; i < allowed.size(); ++i) {
      if (allowed[i].empty()) {
        throw InfeasibleConstraintError("empty allowed set at position " + std::to_string(i));
      }
      for (int y : allowed[i]) {
        if (y < 0 || y >= v) throw ModelError("constraint tag index out of range");
        m(static_cast<Eigen::Index>(i), y) = true;
      }
    }
    return m;
  }
};

namespace detail {

inline void check_shapes(const Matrix& s, const TransitionParams& t) {
  if (s.rows() == 0) throw ModelError("empty sentence");
  if (s.cols() != t.size() || t.start.size() != t.size() || t.stop.size() != t.size()) {
    throw ModelError("emission/transition dimension mismatch");
  }
}

inline double logsumexp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - m);
  return m + std::log(sum);
}

// Terms this far below the maximum are flushed to zero. They are below
// double resolution relative to the leading term anyway, and letting them
// become subnormal makes the matrix products many times slower.
inline constexpr double kFlushBelow = -700.0;

inline double flushed_exp(double d) { return d < kFlushBelow ? 0.0 : std::exp(d); }

// Shift-and-exponentiate a log vector: returns exp(x - max) and the max.
inline double exp_shifted(const Vector& x, Vector& out) {
  const double m = x.maxCoeff();
  out.resize(x.size());
  if (m == kNegInf) {
    out.setZero();
    return m;
  }
  for (Eigen::Index k = 0; k < x.size(); ++k) out(k) = flushed_exp(x(k) - m);
  return m;
}

inline int single_finite_index(const Vector& x) {
  int idx = -1;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (x(k) != kNegInf) {
      if (idx >= 0) return -1;
      idx = static_cast<int>(k);
    }
  }
  return idx;
}

/// exp(M - c) with c = max(M).
struct ExpTransitions {
  Matrix e;
  double shift = 0.0;
  explicit ExpTransitions(const Matrix& m) : shift(m.maxCoeff()) {
    e = m.unaryExpr([this](double x) { return flushed_exp(x - shift); });
  }
};

/// Log forward table; rows are positions. A null mask means unconstrained.
inline Matrix forward(const Matrix& s, const TransitionParams& t, const ExpTransitions& et,
                      const BoolMatrix* mask) {
  const Eigen::Index n = s.rows(), v = s.cols();
  Matrix alpha(n, v);
  for (Eigen::Index y = 0; y < v; ++y) {
    alpha(0, y) = (!mask || (*mask)(0, y)) ? t.start(y) + s(0, y) : kNegInf;
  }
  Vector prev, p, q;
  for (Eigen::Index i = 1; i < n; ++i) {
    prev = alpha.row(i - 1).transpose();
    const int only = single_finite_index(prev);
    if (only >= 0) {
      for (Eigen::Index b = 0; b < v; ++b) {
        alpha(i, b) = (!mask || (*mask)(i, b))
                          ? (prev(only) + t.transition(only, b)) + s(i, b)
                          : kNegInf;
      }
      continue;
    }
    const double m = exp_shifted(prev, p);
    q.noalias() = et.e.transpose() * p;
    for (Eigen::Index b = 0; b < v; ++b) {
      alpha(i, b) = (!mask || (*mask)(i, b)) ? (m + et.shift + std::log(q(b))) + s(i, b)
                                             : kNegInf;
    }
  }
  return alpha;
}

inline double finish(const Matrix& alpha, const TransitionParams& t) {
  const Eigen::Index n = alpha.rows(), v = alpha.cols();
  std::vector<double> last(v);
  for (Eigen::Index y = 0; y < v; ++y) last[y] = alpha(n - 1, y) + t.stop(y);
  return logsumexp(last);
}

/// Log backward table: beta[i, a] = log-sum of scores of all suffixes
/// after position i given y_i = a (including stop).
inline Matrix backward(const Matrix& s, const TransitionParams& t, const ExpTransitions& et,
                       const BoolMatrix* mask) {
  const Eigen::Index n = s.rows(), v = s.cols();
  Matrix beta(n, v);
  for (Eigen::Index y = 0; y < v; ++y) {
    beta(n - 1, y) = (!mask || (*mask)(n - 1, y)) ? t.stop(y) : kNegInf;
  }
  Vector w(v), r, q;
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    for (Eigen::Index b = 0; b < v; ++b) w(b) = s(i + 1, b) + beta(i + 1, b);
    const int only = single_finite_index(w);
    if (only >= 0) {
      for (Eigen::Index a = 0; a < v; ++a) {
        beta(i, a) = (!mask || (*mask)(i, a)) ? t.transition(a, only) + w(only) : kNegInf;
      }
      continue;
    }
    const double m = exp_shifted(w, r);
    q.noalias() = et.e * r;
    for (Eigen::Index a = 0; a < v; ++a) {
      beta(i, a) = (!mask || (*mask)(i, a)) ? m + et.shift + std::log(q(a)) : kNegInf;
    }
  }
  return beta;
}

inline bool feasible(const TransitionParams& t, const BoolMatrix& mask) {
  const Eigen::Index n = mask.rows(), v = mask.cols();
  BoolVector reach = mask.row(0).transpose() && t.start_allowed;
  for (Eigen::Index i = 1; i < n; ++i) {
    BoolVector next = BoolVector::Constant(v, false);
    for (Eigen::Index a = 0; a < v; ++a) {
      if (!reach(a)) continue;
      next = next || t.allowed.row(a).transpose();
    }
    reach = next && mask.row(i).transpose();
  }
  return (reach && t.stop_allowed).any();
}

}  // namespace detail

/// Node and edge posteriors of a (possibly constrained) lattice.
struct Marginals {
  double log_partition = 0.0;
  Matrix node;               // n x v
  std::vector<Matrix> edge;  // n-1 matrices of v x v
  Matrix edge_sum;           // sum over positions of edge, v x v
};

inline double sequence_score(const Matrix& s, const TransitionParams& t,
                             std::span<const int> y) {
  detail::check_shapes(s, t);
  if (y.size() != static_cast<std::size_t>(s.rows())) {
    throw ModelError("tag sequence length does not match sentence length");
  }
  double score = t.start(y[0]) + s(0, y[0]);
  for (std::size_t i = 1; i < y.size(); ++i) {
    score = (score + t.transition(y[i - 1], y[i])) + s(static_cast<Eigen::Index>(i), y[i]);
  }
  return score + t.stop(y.back());
}

inline double log_partition(const Matrix& s, const TransitionParams& t) {
  detail::check_shapes(s, t);
  detail::ExpTransitions et(t.transition);
  return detail::finish(detail::forward(s, t, et, nullptr), t);
}

inline void check_feasible(const TransitionParams& t, const BoolMatrix& mask) {
  if (!detail::feasible(t, mask)) {
    throw InfeasibleConstraintError("no legal tag path satisfies the label constraint");
  }
}

inline double constrained_log_partition(const Matrix& s, const TransitionParams& t,
                                        const LabelConstraint& c) {
  detail::check_shapes(s, t);
  if (c.size() != static_cast<std::size_t>(s.rows())) {
    throw ModelError("constraint length does not match sentence length");
  }
  const BoolMatrix mask = c.to_mask(t.size());
  check_feasible(t, mask);
  detail::ExpTransitions et(t.transition);
  return detail::finish(detail::forward(s, t, et, &mask), t);
}

namespace detail {

inline Marginals forward_backward(const Matrix& s, const TransitionParams& t,
                                  const ExpTransitions& et, const BoolMatrix* mask,
                                  bool keep_edges) {
  const Eigen::Index n = s.rows(), v = s.cols();
  Marginals out;
  const Matrix alpha = forward(s, t, et, mask);
  const Matrix beta = backward(s, t, et, mask);
  out.log_partition = finish(alpha, t);
  const double log_z = out.log_partition;
  out.node = (alpha + beta).unaryExpr([log_z](double x) { return flushed_exp(x - log_z); });
  // edge_i[a,b] is proportional to p_i[a] exp(M[a,b]) r_i[b] and sums to
  // one, so sum_i edge_i = E .* (sum_i p_i r_i^T / z_i) = E .* (P^T R).
  Matrix pz(std::max<Eigen::Index>(n - 1, 0), v), rr(std::max<Eigen::Index>(n - 1, 0), v);
  Vector p, r, w(v), pe;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    exp_shifted(alpha.row(i).transpose(), p);
    for (Eigen::Index b = 0; b < v; ++b) w(b) = s(i + 1, b) + beta(i + 1, b);
    exp_shifted(w, r);
    pe.noalias() = et.e.transpose() * p;
    const double z = pe.dot(r);
    pz.row(i) = p.transpose() * (z > 0.0 ? 1.0 / z : 0.0);
    rr.row(i) = r.transpose();
    if (keep_edges) {
      Matrix e = (p * r.transpose()).cwiseProduct(et.e);
      if (z > 0.0) e /= z;
      out.edge.push_back(std::move(e));
    }
  }
  out.edge_sum = (pz.transpose() * rr).cwiseProduct(et.e);
  return out;
}

}  // namespace detail

inline Marginals marginals(const Matrix& s, const TransitionParams& t) {
  detail::check_shapes(s, t);
  detail::ExpTransitions et(t.transition);
  return detail::forward_backward(s, t, et, nullptr, /*keep_edges=*/true);
}

inline Marginals constrained_marginals(const Matrix& s, const TransitionParams& t,
                                       const LabelConstraint& c, bool keep_edges = true) {
  detail::check_shapes(s, t);
  const BoolMatrix mask = c.to_mask(t.size());
  check_feasible(t, mask);
  detail::ExpTransitions et(t.transition);
  return detail::forward_backward(s, t, et, &mask, keep_edges);
}

inline double nll(const Matrix& s, const TransitionParams& t, std::span<const int> y) {
  const double score = sequence_score(s, t, y);
  return std::max(0.0, log_partition(s, t) - score);
}

/// Best path. Ties go to the smallest tag index at the latest position where
/// the tied paths differ.
inline std::vector<int> viterbi(const Matrix& s, const TransitionParams& t) {
  detail::check_shapes(s, t);
  const Eigen::Index n = s.rows(), v = s.cols();
  Matrix delta(n, v);
  Eigen::MatrixXi back(n, v);
  for (Eigen::Index y = 0; y < v; ++y) delta(0, y) = t.start(y) + s(0, y);
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index b = 0; b < v; ++b) {
      double best = kNegInf;
      int arg = 0;
      for (Eigen::Index a = 0; a < v; ++a) {
        const double cand = delta(i - 1, a) + t.transition(a, b);
        if (cand > best) {
          best = cand;
          arg = static_cast<int>(a);
        }
      }
      delta(i, b) = best + s(i, b);
      back(i, b) = arg;
    }
  }
  double best = kNegInf;
  int arg = 0;
  for (Eigen::Index y = 0; y < v; ++y) {
    const double cand = delta(n - 1, y) + t.stop(y);
    if (cand > best) {
      best = cand;
      arg = static_cast<int>(y);
    }
  }
  std::vector<int> path(n);
  path[n - 1] = arg;
  for (Eigen::Index i = n - 1; i > 0; --i) path[i - 1] = back(i, path[i]);
  return path;
}

}  // namespace projtag::crf
