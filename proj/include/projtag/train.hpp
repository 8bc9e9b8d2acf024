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
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "projtag/evaluator.hpp"
#include "projtag/labeler.hpp"

namespace projtag {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  double clip_norm = 5.0;
  int patience = 5;
  int max_epochs = 50;
  std::uint64_t seed = 1;
  bool verbose = false;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},         {"beta2", c.beta2},
       {"epsilon", c.epsilon},             {"batch_size", c.batch_size}, {"clip_norm", c.clip_norm},
       {"patience", c.patience},           {"max_epochs", c.max_epochs}, {"seed", c.seed}};
}

/// Overrides fields present in `j`; absent keys keep their current values.
inline void update_from_json(TrainConfig& c, const nlohmann::json& j) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.patience = j.value("patience", c.patience);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.verbose = j.value("verbose", c.verbose);
  if (c.batch_size < 1 || c.max_epochs < 0 || c.learning_rate <= 0.0) {
    throw DataError("invalid training configuration");
  }
}

/// A sentence with its (possibly partial) supervision.
struct TrainingExample {
  std::vector<std::string> chars;
  LabelConstraint constraint;
};

/// A fully labeled sentence.
struct LabeledSentence {
  std::vector<std::string> chars;
  std::vector<HybridTag> tags;
};

struct TrainReport {
  std::size_t examples = 0;
  std::size_t skipped = 0;  // infeasible constraints
  int epochs_run = 0;
  int best_epoch = 0;
  std::vector<double> train_loss;  // mean loss per epoch
  std::vector<double> dev_pos_f1;  // index 0 is the starting model

  nlohmann::json to_json() const {
    return {{"examples", examples},     {"skipped", skipped},   {"epochs_run", epochs_run},
            {"best_epoch", best_epoch}, {"train_loss", train_loss}, {"dev_pos_f1", dev_pos_f1}};
  }
};

struct TrainResult {
  LabelerModel model;
  TrainReport report;
};

/// Adam with bias correction. Moments start at zero for every call to
/// train(): a warm-started stage gets fresh optimizer state.
class Adam {
 public:
  Adam(const LabelerParams& shape, const TrainConfig& cfg)
      : cfg_(cfg), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

  void step(LabelerParams& params, const LabelerParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    const double lr = cfg_.learning_rate;
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = (cfg_.beta2 * v.array() + (1.0 - cfg_.beta2) * g.array().square()).matrix();
      p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.epsilon);
    };
    update(params.embeddings, grad.embeddings, m_.embeddings, v_.embeddings);
    update(params.projection, grad.projection, m_.projection, v_.projection);
    update(params.projection_bias, grad.projection_bias, m_.projection_bias, v_.projection_bias);
    update(params.emission_weight, grad.emission_weight, m_.emission_weight, v_.emission_weight);
    update(params.emission_bias, grad.emission_bias, m_.emission_bias, v_.emission_bias);
    update(params.crf.transition, grad.crf.transition, m_.crf.transition, v_.crf.transition);
    update(params.crf.start, grad.crf.start, m_.crf.start, v_.crf.start);
    update(params.crf.stop, grad.crf.stop, m_.crf.stop, v_.crf.stop);
    params.crf.apply_mask();
  }

 private:
  TrainConfig cfg_;
  LabelerParams m_, v_;
  int t_ = 0;
};

inline std::vector<std::vector<HybridTag>> predict_all(const LabelerModel& m,
                                                       const std::vector<LabeledSentence>& data) {
  std::vector<std::vector<std::string>> chars;
  chars.reserve(data.size());
  for (const auto& s : data) chars.push_back(s.chars);
  return predict(m, chars);
}

inline Metrics evaluate(const LabelerModel& m, const std::vector<LabeledSentence>& data,
                        EvalMode mode) {
  std::vector<std::vector<HybridTag>> gold;
  gold.reserve(data.size());
  for (const auto& s : data) gold.push_back(s.tags);
  return score(gold, predict_all(m, data), mode);
}

/// Mini-batch training with global-norm clipping. After every epoch the
/// model is scored on `dev` (POS-F1); the best-scoring model, counting the
/// starting one as epoch 0, is returned. Training stops after `patience`
/// epochs without improvement. With an empty dev set the last epoch wins.
inline TrainResult train(const LabelerModel& initial, const std::vector<TrainingExample>& data,
                         const std::vector<LabeledSentence>& dev, const TrainConfig& cfg) {
  if (data.empty()) throw DataError("training data is empty");
  TrainResult result{initial, {}};
  TrainReport& report = result.report;
  report.examples = data.size();

  struct Encoded {
    std::vector<int> ids;
    const LabelConstraint* constraint;
  };
  std::vector<Encoded> usable;
  usable.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& ex = data[k];
    bool ok = !ex.chars.empty() && ex.constraint.size() == ex.chars.size();
    if (ok) {
      try {
        crf::check_feasible(initial.params.crf, ex.constraint.to_mask(initial.num_tags()));
      } catch (const InfeasibleConstraintError&) {
        ok = false;
      }
    }
    if (!ok) {
      ++report.skipped;
      if (cfg.verbose) std::clog << "train: skipping infeasible example " << k << "\n";
      continue;
    }
    usable.push_back({initial.vocab.ids(ex.chars), &ex.constraint});
  }
  if (report.skipped > 0) {
    std::clog << "train: skipped " << report.skipped << " of " << data.size()
              << " examples with infeasible labels\n";
  }
  if (usable.empty()) throw DataError("no feasible training examples");

  LabelerModel current = initial;
  double best_f1 = dev.empty() ? 0.0 : evaluate(current, dev, EvalMode::kPos).f1;
  report.dev_pos_f1.push_back(best_f1);
  if (cfg.max_epochs == 0) return result;

  Adam adam(current.params, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  LabelerParams grad = current.params.zeros_like();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      LabelerParams::visit(grad, [](const char*, auto& x) { x.setZero(); });
      for (std::size_t k = begin; k < end; ++k) {
        const Encoded& ex = usable[order[k]];
        loss_sum += accumulate_gradients(current, ex.ids, *ex.constraint, grad, scale);
      }
      const double norm = std::sqrt(grad.squared_norm());
      if (norm > cfg.clip_norm) grad.scale(cfg.clip_norm / norm);
      adam.step(current.params, grad);
    }
    report.epochs_run = epoch;
    report.train_loss.push_back(loss_sum / static_cast<double>(usable.size()));

    if (dev.empty()) {
      result.model = current;
      report.best_epoch = epoch;
      continue;
    }
    const double f1 = evaluate(current, dev, EvalMode::kPos).f1;
    report.dev_pos_f1.push_back(f1);
    if (cfg.verbose) {
      std::clog << "epoch " << epoch << " loss " << report.train_loss.back() << " dev pos-f1 "
                << f1 << "\n";
    }
    if (f1 > best_f1) {
      best_f1 = f1;
      result.model = current;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace projtag
