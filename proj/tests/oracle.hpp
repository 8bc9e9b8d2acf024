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

// Brute-force reference computations for small lattices and models. Nothing
// here calls the dynamic programs under test.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "projtag/crf.hpp"
#include "projtag/labeler.hpp"

namespace projtag::oracle {

using crf::Matrix;
using crf::Vector;

/// Calls f(path) for every path in {0..v-1}^n.
inline void for_each_path(int n, int v, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> y(n, 0);
  while (true) {
    f(y);
    int i = n - 1;
    while (i >= 0 && ++y[i] == v) y[i--] = 0;
    if (i < 0) return;
  }
}

/// Path score summed left to right in the same order as the library, so
/// equal paths give bit-identical values.
inline double path_score(const Matrix& s, const crf::TransitionParams& t, const std::vector<int>& y) {
  double score = t.start(y[0]) + s(0, y[0]);
  for (std::size_t i = 1; i < y.size(); ++i) {
    score = (score + t.transition(y[i - 1], y[i])) + s(static_cast<Eigen::Index>(i), y[i]);
  }
  return score + t.stop(y.back());
}

inline bool path_allowed(const crf::LabelConstraint* c, const std::vector<int>& y) {
  if (!c) return true;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& a = c->allowed[i];
    if (std::find(a.begin(), a.end(), y[i]) == a.end()) return false;
  }
  return true;
}

/// Reference tie rule: among equal scores the path whose reversed sequence is
/// lexicographically smallest wins.
inline bool reversed_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
}

inline std::vector<int> best_path(const Matrix& s, const crf::TransitionParams& t) {
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for_each_path(static_cast<int>(s.rows()), static_cast<int>(s.cols()), [&](const std::vector<int>& y) {
    const double sc = path_score(s, t, y);
    if (best.empty() || sc > best_score || (sc == best_score && reversed_less(y, best))) {
      best = y;
      best_score = sc;
    }
  });
  return best;
}

/// log sum over allowed paths of exp(score), by two-pass logsumexp.
inline double log_partition(const Matrix& s, const crf::TransitionParams& t,
                            const crf::LabelConstraint* c = nullptr) {
  const int n = static_cast<int>(s.rows()), v = static_cast<int>(s.cols());
  std::vector<double> scores;
  for_each_path(n, v, [&](const std::vector<int>& y) {
    if (path_allowed(c, y)) scores.push_back(path_score(s, t, y));
  });
  const double m = *std::max_element(scores.begin(), scores.end());
  long double sum = 0.0L;
  for (double x : scores) sum += std::exp(static_cast<long double>(x - m));
  return m + static_cast<double>(std::log(sum));
}

struct BruteMarginals {
  Matrix node;               // n x v
  std::vector<Matrix> edge;  // n-1 of v x v
};

inline BruteMarginals marginals(const Matrix& s, const crf::TransitionParams& t,
                                const crf::LabelConstraint* c = nullptr) {
  const int n = static_cast<int>(s.rows()), v = static_cast<int>(s.cols());
  const double log_z = log_partition(s, t, c);
  BruteMarginals out{Matrix::Zero(n, v), std::vector<Matrix>(n - 1, Matrix::Zero(v, v))};
  for_each_path(n, v, [&](const std::vector<int>& y) {
    if (!path_allowed(c, y)) return;
    const double p = std::exp(path_score(s, t, y) - log_z);
    for (int i = 0; i < n; ++i) out.node(i, y[i]) += p;
    for (int i = 0; i + 1 < n; ++i) out.edge[i](y[i], y[i + 1]) += p;
  });
  return out;
}

/// Random lattice parameters. With `integer` set, every score is a small
/// integer so that many paths tie exactly.
inline crf::TransitionParams random_transitions(int v, std::mt19937_64& rng, bool integer) {
  auto t = crf::TransitionParams::zeros(v);
  std::uniform_real_distribution<double> real(-2.0, 2.0);
  std::uniform_int_distribution<int> small(-2, 2);
  auto draw = [&] { return integer ? static_cast<double>(small(rng)) : real(rng); };
  for (int a = 0; a < v; ++a) {
    t.start(a) = draw();
    t.stop(a) = draw();
    for (int b = 0; b < v; ++b) t.transition(a, b) = draw();
  }
  return t;
}

inline Matrix random_emissions(int n, int v, std::mt19937_64& rng, bool integer) {
  Matrix s(n, v);
  std::uniform_real_distribution<double> real(-3.0, 3.0);
  std::uniform_int_distribution<int> small(-2, 2);
  for (int i = 0; i < n; ++i) {
    for (int y = 0; y < v; ++y) s(i, y) = integer ? small(rng) : real(rng);
  }
  return s;
}

/// Random non-empty allowed sets.
inline crf::LabelConstraint random_constraint(int n, int v, std::mt19937_64& rng) {
  crf::LabelConstraint c;
  std::bernoulli_distribution keep(0.5);
  std::uniform_int_distribution<int> any(0, v - 1);
  for (int i = 0; i < n; ++i) {
    std::vector<int> a;
    for (int y = 0; y < v; ++y) {
      if (keep(rng)) a.push_back(y);
    }
    if (a.empty()) a.push_back(any(rng));
    c.allowed.push_back(a);
  }
  return c;
}

/// Central finite differences of `loss` with respect to every scalar of
/// every parameter group; masked CRF entries are left at zero.
inline LabelerParams finite_difference(const LabelerModel& model,
                                       const std::function<double(const LabelerModel&)>& loss,
                                       double eps) {
  LabelerModel probe = model;
  LabelerParams grad = model.params.zeros_like();
  LabelerParams::visit(probe.params, [&](const char* name, auto& tensor) {
    for (Eigen::Index k = 0; k < tensor.size(); ++k) {
      double& x = tensor.data()[k];
      const double saved = x;
      x = saved + eps;
      const double up = loss(probe);
      x = saved - eps;
      const double down = loss(probe);
      x = saved;
      LabelerParams::visit(grad, [&](const char* gname, auto& g) {
        if (std::string(gname) == name) g.data()[k] = (up - down) / (2.0 * eps);
      });
    }
  });
  const auto& crf = model.params.crf;
  grad.crf.transition = crf.allowed.select(grad.crf.transition.array(), 0.0).matrix();
  grad.crf.start = crf.start_allowed.select(grad.crf.start.array(), 0.0).matrix();
  grad.crf.stop = crf.stop_allowed.select(grad.crf.stop.array(), 0.0).matrix();
  return grad;
}

}  // namespace projtag::oracle
