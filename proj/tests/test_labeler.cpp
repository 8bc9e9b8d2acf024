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

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "projtag/checkpoint.hpp"
#include "projtag/labeler.hpp"
#include "projtag/train.hpp"
#include "projtag/utf8.hpp"

namespace projtag {
namespace {

std::vector<std::string> chars_of(const std::string& s) { return utf8::split_chars(s); }

LabelerModel small_model(std::uint64_t seed, EncoderConfig cfg = {3, 5, 1}) {
  std::vector<std::vector<std::string>> text{chars_of("abcdef"), chars_of("fedcba")};
  return init_model(HybridTagSet(PosTagSet({"n", "v"})), Vocabulary::from_sentences(text), cfg, seed);
}

// Perturbs the zero-initialised CRF scores so their gradients are generic.
void randomize_crf(LabelerModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  auto& t = m.params.crf;
  for (Eigen::Index k = 0; k < t.transition.size(); ++k) t.transition.data()[k] = g(rng);
  for (Eigen::Index k = 0; k < t.start.size(); ++k) {
    t.start(k) = g(rng);
    t.stop(k) = g(rng);
  }
  for (Eigen::Index k = 0; k < m.params.emission_bias.size(); ++k) m.params.emission_bias(k) = g(rng);
  t.apply_mask();
}

double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

TEST(Vocabulary, SortedWithOovAtZero) {
  const auto v = Vocabulary::from_sentences(std::vector<std::vector<std::string>>{{"b", "a"}, {"c", "a"}});
  EXPECT_EQ(v.chars(), (std::vector<std::string>{"<OOV>", "a", "b", "c"}));
  EXPECT_EQ(v.id("zz"), 0);
  EXPECT_EQ(v.id("c"), 3);
}

TEST(Labeler, EmissionShape) {
  const auto m = small_model(1);
  const auto ids = m.vocab.ids(chars_of("abc"));
  const Matrix s = emissions(m, ids);
  EXPECT_EQ(s.rows(), 3);
  EXPECT_EQ(s.cols(), 8);
  EXPECT_THROW(emissions(Matrix::Zero(3, 4), Matrix::Zero(5, 8), Vector::Zero(8)), ModelError);
}

TEST(Labeler, GradientsMatchFiniteDifferences) {
  auto m = small_model(2);
  randomize_crf(m, 3);
  const auto ids = m.vocab.ids(chars_of("abcfed"));
  const HybridTagSet& ts = m.tagset;
  // Mixed supervision: exact tags, a boundary-only position, a free position.
  LabelConstraint c;
  c.allowed = {{ts.index(Boundary::B, 0)},
               {ts.index(Boundary::E, 0)},
               {ts.index(Boundary::S, 0), ts.index(Boundary::S, 1)},
               {0, 1, 2, 3, 4, 5, 6, 7},
               {ts.index(Boundary::M, 1), ts.index(Boundary::E, 1)},
               {ts.index(Boundary::E, 1)}};
  LabelerParams grad = m.params.zeros_like();
  const double loss = accumulate_gradients(m, ids, c, grad);
  EXPECT_GT(loss, 0.0);
  const auto fd = oracle::finite_difference(
      m, [&](const LabelerModel& p) { return constrained_loss(p, ids, c); }, 1e-4);
  LabelerParams::visit(grad, [&](const char* name, const auto& g) {
    LabelerParams::visit(fd, [&](const char* fname, const auto& f) {
      if (std::string(name) != fname) return;
      EXPECT_LE(relative_error(g, f), 1e-4) << name;
    });
  });
}

TEST(Labeler, UnconstrainedLossIsZero) {
  const auto m = small_model(4);
  const auto ids = m.vocab.ids(chars_of("abcdef"));
  LabelerParams grad = m.params.zeros_like();
  EXPECT_EQ(accumulate_gradients(m, ids, LabelConstraint::full(6, 8), grad), 0.0);
  EXPECT_LE(std::sqrt(grad.squared_norm()), 1e-12);
}

TEST(Labeler, ExactConstraintLossIsNll) {
  auto m = small_model(5);
  randomize_crf(m, 6);
  const auto ids = m.vocab.ids(chars_of("abcd"));
  const std::vector<int> y{1 * 4 + 0, 1 * 4 + 2, 0 * 4 + 3, 1 * 4 + 3};
  const Matrix s = emissions(m, ids);
  EXPECT_EQ(constrained_loss(m, ids, LabelConstraint::exact(y)), crf::nll(s, m.params.crf, y));
}

TEST(Labeler, MaskedTransitionsGetNoGradient) {
  auto m = small_model(7);
  const auto ids = m.vocab.ids(chars_of("abcd"));
  LabelerParams grad = m.params.zeros_like();
  accumulate_gradients(m, ids, LabelConstraint::exact(std::vector<int>{0, 2, 7, 3}), grad);
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      if (!m.params.crf.allowed(a, b)) {
        EXPECT_EQ(grad.crf.transition(a, b), 0.0);
      }
    }
  }
}

std::vector<TrainingExample> toy_data(const HybridTagSet& ts) {
  // "ab" is always a noun word, "c" a verb, "d" a noun.
  std::vector<TrainingExample> data;
  const std::vector<std::pair<std::string, std::vector<int>>> raw = {
      {"abc", {ts.index(Boundary::B, 0), ts.index(Boundary::E, 0), ts.index(Boundary::S, 1)}},
      {"cab", {ts.index(Boundary::S, 1), ts.index(Boundary::B, 0), ts.index(Boundary::E, 0)}},
      {"dc", {ts.index(Boundary::S, 0), ts.index(Boundary::S, 1)}},
      {"abcd", {ts.index(Boundary::B, 0), ts.index(Boundary::E, 0), ts.index(Boundary::S, 1),
                ts.index(Boundary::S, 0)}},
  };
  for (const auto& [s, y] : raw) data.push_back({chars_of(s), LabelConstraint::exact(y)});
  return data;
}

std::vector<LabeledSentence> as_labeled(const std::vector<TrainingExample>& data,
                                        const HybridTagSet& ts) {
  std::vector<LabeledSentence> out;
  for (const auto& ex : data) {
    std::vector<HybridTag> tags;
    for (const auto& a : ex.constraint.allowed) tags.push_back(ts.tag(a[0]));
    out.push_back({ex.chars, tags});
  }
  return out;
}

TEST(Train, OverfitsToyData) {
  auto m = init_model(HybridTagSet(PosTagSet({"n", "v"})),
                      Vocabulary::from_sentences(std::vector<std::vector<std::string>>{chars_of("abcd")}),
                      EncoderConfig{8, 16, 1}, 3);
  const auto data = toy_data(m.tagset);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.batch_size = 2;
  const auto r = train(m, data, as_labeled(data, m.tagset), cfg);
  EXPECT_EQ(evaluate(r.model, as_labeled(data, m.tagset), EvalMode::kPos).f1, 1.0);
  EXPECT_LT(r.report.train_loss.back(), r.report.train_loss.front());
}

TEST(Train, ZeroEpochsReturnsInputModel) {
  const auto m = small_model(8);
  const auto data = toy_data(m.tagset);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const auto r = train(m, data, {}, cfg);
  EXPECT_EQ(checkpoint_to_json(r.model), checkpoint_to_json(m));
  EXPECT_EQ(r.report.epochs_run, 0);
}

TEST(Train, DeterministicGivenSeed) {
  const auto m = small_model(9);
  const auto data = toy_data(m.tagset);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.batch_size = 2;
  const auto a = train(m, data, as_labeled(data, m.tagset), cfg);
  const auto b = train(m, data, as_labeled(data, m.tagset), cfg);
  EXPECT_EQ(checkpoint_to_json(a.model).dump(), checkpoint_to_json(b.model).dump());
}

TEST(Train, SkipsInfeasibleExamples) {
  const auto m = small_model(10);
  auto data = toy_data(m.tagset);
  // B followed by B is illegal under BMES.
  data.push_back({chars_of("ab"), LabelConstraint::exact(std::vector<int>{0, 0})});
  TrainConfig cfg;
  cfg.max_epochs = 1;
  const auto r = train(m, data, {}, cfg);
  EXPECT_EQ(r.report.skipped, 1u);
  EXPECT_EQ(r.report.examples, data.size());
}

TEST(Predict, ThreadCountDoesNotChangeOutput) {
  const auto m = small_model(11);
  std::vector<std::vector<std::string>> text;
  for (int k = 0; k < 20; ++k) text.push_back(chars_of(std::string("abcdef").substr(k % 3, 2 + k % 4)));
  EXPECT_EQ(predict(m, text, 1), predict(m, text, 4));
}

TEST(Checkpoint, RoundTripIsExact) {
  auto m = small_model(12);
  randomize_crf(m, 13);
  const auto path = (std::filesystem::temp_directory_path() / "projtag_ckpt.json").string();
  write_checkpoint(m, path);
  const auto back = read_checkpoint(path);
  LabelerParams copy = back.params;
  LabelerParams::visit2(copy, m.params, [](auto& a, const auto& b) { EXPECT_TRUE(a == b); });
  EXPECT_EQ(back.vocab.chars(), m.vocab.chars());
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.tagset.pos_set(), m.tagset.pos_set());
  EXPECT_TRUE((back.params.crf.allowed == m.params.crf.allowed).all());
}

TEST(Checkpoint, RejectsMalformed) {
  auto j = checkpoint_to_json(small_model(14));
  j["parameters"]["projection"] = nlohmann::json::array();
  EXPECT_THROW(checkpoint_from_json(j), ModelError);
  auto k = checkpoint_to_json(small_model(14));
  k["format_version"] = 99;
  EXPECT_THROW(checkpoint_from_json(k), ModelError);
}

}  // namespace
}  // namespace projtag
