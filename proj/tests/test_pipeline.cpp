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
#include <set>

#include <gtest/gtest.h>

#include "projtag/pipeline.hpp"
#include "synth.hpp"

namespace projtag {
namespace {

std::vector<int> iota_vec(int n) {
  std::vector<int> v(n);
  for (int k = 0; k < n; ++k) v[k] = k;
  return v;
}

CharTagSentence sentence(const std::string& text, std::initializer_list<const char*> tags) {
  CharTagSentence s{utf8::split_chars(text), {}};
  for (const char* t : tags) s.tags.push_back(*parse_hybrid_tag(t));
  return s;
}

TEST(Split, NinetyTen) {
  auto [train, dev] = split_annotated(iota_vec(10));
  EXPECT_EQ(train, iota_vec(9));
  EXPECT_EQ(dev, std::vector<int>{9});
  auto [t2, d2] = split_annotated(iota_vec(8701));
  EXPECT_EQ(t2.size(), 7830u);
  EXPECT_EQ(d2.size(), 871u);
  EXPECT_EQ(d2.front(), 7830);
  EXPECT_THROW(split_annotated(iota_vec(9)), DataError);
}

TEST(Subsample, SizeOrderAndSeed) {
  EXPECT_EQ(subsample_size(10, 0.3), 3u);
  EXPECT_EQ(subsample_size(10, 0.25), 3u);
  EXPECT_EQ(subsample_size(7830, 0.1), 783u);
  EXPECT_EQ(subsample_size(5, 1.0), 5u);
  const auto data = iota_vec(100);
  const auto a = subsample(data, 0.2, 5);
  EXPECT_EQ(a.size(), 20u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 20u);
  EXPECT_EQ(subsample(data, 0.2, 5), a);
  EXPECT_NE(subsample(data, 0.2, 6), a);
  EXPECT_EQ(subsample(data, 1.0, 5), data);
  EXPECT_THROW(subsample(data, 0.0, 1), DataError);
  EXPECT_THROW(subsample(data, 1.5, 1), DataError);
}

TEST(CollapseTask, AllowedSets) {
  const HybridTagSet ts(PosTagSet::default_set());
  const auto s = sentence("之乎者", {"S-v", "B-_", "E-_"});
  const auto joint = collapse_task(s.tags, StageTask::kJoint, ts);
  EXPECT_EQ(joint.allowed[0], std::vector<int>{ts.index(s.tags[0])});
  EXPECT_EQ(joint.allowed[1].size(), 22u);
  for (int y : joint.allowed[1]) EXPECT_EQ(HybridTagSet::boundary_of(y), Boundary::B);

  const auto wsg = collapse_task(s.tags, StageTask::kWsgOnly, ts);
  EXPECT_EQ(wsg.allowed[0].size(), 22u);
  for (int y : wsg.allowed[0]) EXPECT_EQ(HybridTagSet::boundary_of(y), Boundary::S);

  const auto pos = collapse_task(s.tags, StageTask::kPosOnly, ts);
  EXPECT_EQ(pos.allowed[0].size(), 4u);
  for (int y : pos.allowed[0]) EXPECT_EQ(ts.tag(y).pos, "v");
  EXPECT_EQ(pos.allowed[1].size(), 88u);
  EXPECT_THROW(collapse_task(s.tags, StageTask::kNone, ts), DataError);
}

TEST(StageTask, Names) {
  EXPECT_EQ(parse_stage_task("wsg"), StageTask::kWsgOnly);
  EXPECT_EQ(parse_stage_task("pos_only"), StageTask::kPosOnly);
  EXPECT_STREQ(stage_task_name(StageTask::kNone), "none");
  EXPECT_THROW(parse_stage_task("both"), DataError);
}

TEST(MakeExamples, RejectsForeignPos) {
  const HybridTagSet ts(PosTagSet({"n", "v"}));
  EXPECT_THROW(make_examples({sentence("之", {"S-a"})}, StageTask::kJoint, ts), DataError);
  EXPECT_NO_THROW(make_examples({sentence("之", {"S-_"})}, StageTask::kJoint, ts));
}

LabelerModel tiny_model(const std::vector<CharTagSentence>& data) {
  std::vector<std::vector<std::string>> text;
  for (const auto& s : data) text.push_back(s.chars);
  return init_model(HybridTagSet(PosTagSet({"n", "v"})), Vocabulary::from_sentences(text),
                    EncoderConfig{4, 6, 1}, 3);
}

TEST(RunStage, ZeroEpochsAndProvenance) {
  const std::vector<CharTagSentence> data{sentence("甲乙丙", {"B-n", "E-n", "S-v"}),
                                          sentence("丙甲", {"S-v", "S-_"})};
  const auto m0 = tiny_model(data);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const auto r = run_stage("stage1", "M0", m0, "D_p", data, StageTask::kJoint, {}, cfg);
  EXPECT_EQ(checkpoint_to_json(r.model), checkpoint_to_json(m0));
  EXPECT_EQ(r.provenance.init, "M0");
  EXPECT_EQ(r.provenance.dataset, "D_p");
  EXPECT_EQ(r.provenance.data_hash, data_hash(data));
  EXPECT_EQ(r.provenance.sentences, 2u);
  EXPECT_THROW(run_stage("stage1", "M0", m0, "D_p", {}, StageTask::kJoint, {}, cfg), StageError);
}

TEST(RunStage, WarmStartMovesAwayFromInit) {
  const std::vector<CharTagSentence> data{sentence("甲乙丙", {"B-n", "E-n", "S-v"}),
                                          sentence("丙甲乙", {"S-v", "B-n", "E-n"})};
  const auto m0 = tiny_model(data);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.learning_rate = 0.01;
  const auto r1 = run_stage("stage1", "M0", m0, "D_p", data, StageTask::kWsgOnly, {}, cfg);
  const auto r2 = run_stage("stage2", "M1", r1.model, "D_a", data, StageTask::kJoint, {}, cfg);
  EXPECT_NE(checkpoint_to_json(r2.model), checkpoint_to_json(r1.model));
  EXPECT_EQ(r2.provenance.init, "M1");
  EXPECT_EQ(r2.provenance.task, "joint");
}

TEST(Relabel, CompleteAndIdempotent) {
  const std::vector<CharTagSentence> data{sentence("甲乙丙", {"B-_", "E-_", "S-_"}),
                                          sentence("丙", {"S-_"})};
  const auto m = tiny_model(data);
  const auto r = relabel(m, data);
  ASSERT_EQ(r.size(), data.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    EXPECT_EQ(r[k].chars, data[k].chars);
    for (const auto& t : r[k].tags) EXPECT_TRUE(t.known());
  }
  EXPECT_EQ(relabel(m, r), r);
}

TEST(DataHash, StableAndSensitive) {
  const std::vector<CharTagSentence> a{sentence("甲乙", {"B-n", "E-n"})};
  const std::vector<CharTagSentence> b{sentence("甲乙", {"S-n", "S-n"})};
  EXPECT_EQ(data_hash(a), data_hash(a));
  EXPECT_NE(data_hash(a), data_hash(b));
  EXPECT_EQ(data_hash({}).size(), 16u);
}

TEST(PipelineConfig, ParsesAndResolvesPaths) {
  const nlohmann::json j = {{"parallel", "p.tsv"},
                            {"modern", "/abs/m.txt"},
                            {"annotated", "a.txt"},
                            {"tests", {{"t", "t.txt"}}},
                            {"seed", 9},
                            {"stage1_task", "wsg"},
                            {"align", {{"iterations", 3}, {"tau", 0.2}}},
                            {"train", {{"max_epochs", 4}}},
                            {"stage2", {{"max_epochs", 7}}}};
  const auto c = pipeline_config_from_json(j, "/base");
  EXPECT_EQ(c.parallel, "/base/p.tsv");
  EXPECT_EQ(c.modern, "/abs/m.txt");
  EXPECT_EQ(c.tests.at(0).second, "/base/t.txt");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.stage1_task, StageTask::kWsgOnly);
  EXPECT_EQ(c.align.iterations, 3);
  EXPECT_EQ(c.tau, 0.2);
  EXPECT_EQ(c.train.stage1.max_epochs, 4);
  EXPECT_EQ(c.train.stage2.max_epochs, 7);
  EXPECT_THROW(pipeline_config_from_json({{"parallel", "p"}}), DataError);
  auto bad = j;
  bad["ratio_annotated"] = 0.0;
  EXPECT_THROW(pipeline_config_from_json(bad), DataError);
}

class SmallPipeline : public ::testing::Test {
 protected:
  static PipelineConfig config() {
    const auto dir = std::filesystem::temp_directory_path() / "projtag_small_pipeline";
    synth::SynthConfig sc;
    sc.pairs = 80;
    sc.annotated = 30;
    sc.test_size = 15;
    sc.chars = 80;
    sc.word_types = 60;
    sc.seed = 4;
    synth::write_corpus(synth::generate(sc), sc, dir.string());
    auto cfg = read_pipeline_config((dir / "pipeline.json").string());
    cfg.encoder = EncoderConfig{8, 12, 1};
    cfg.train.stage1.max_epochs = 2;
    cfg.train.stage2.max_epochs = 3;
    cfg.train.stage3.max_epochs = 2;
    return cfg;
  }
};

TEST_F(SmallPipeline, RunsAllStages) {
  const auto cfg = config();
  const auto st = run_full(cfg);
  for (const char* m : {"M1", "M2", "M3"}) {
    ASSERT_TRUE(st.metrics.contains(m)) << m;
    for (const char* t : {"test_a", "test_b"}) {
      for (const char* mode : {"wsg", "pos"}) {
        const double f1 = st.metrics[m][t][mode]["f1"].get<double>();
        EXPECT_GE(f1, 0.0);
        EXPECT_LE(f1, 1.0);
      }
    }
  }
  EXPECT_EQ(st.relabeled.size(), st.projected.size());
  for (const auto& s : st.relabeled) {
    for (const auto& t : s.tags) EXPECT_TRUE(t.known());
  }
  EXPECT_EQ(st.annotated_train.size(), 27u);
  EXPECT_EQ(st.annotated_dev.size(), 3u);
  ASSERT_EQ(st.provenance.size(), 3u);
  EXPECT_EQ(st.provenance[0].dataset, "D_p");
  EXPECT_EQ(st.provenance[0].data_hash, data_hash(st.projected));
  EXPECT_EQ(st.provenance[1].init, "M1");
  EXPECT_EQ(st.provenance[2].dataset, "D_r");
  EXPECT_EQ(st.provenance[2].data_hash, data_hash(st.relabeled));

  const auto out = std::filesystem::temp_directory_path() / "projtag_small_pipeline_out";
  write_pipeline_outputs(st, out.string());
  for (const char* f : {"M1.json", "M2.json", "M3.json", "D_p.txt", "D_r.txt", "metrics.json",
                        "provenance.json"}) {
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  }
  EXPECT_EQ(read_char_tags((out / "D_r.txt").string()), st.relabeled);
}

TEST_F(SmallPipeline, NoneTaskTrainsBaselineOnly) {
  auto cfg = config();
  cfg.stage1_task = StageTask::kNone;
  const auto st = run_full(cfg);
  EXPECT_TRUE(st.metrics.contains("Mb"));
  EXPECT_FALSE(st.metrics.contains("M1"));
  EXPECT_FALSE(st.m3);
  ASSERT_EQ(st.provenance.size(), 1u);
  EXPECT_EQ(st.provenance[0].init, "M0");
}

TEST_F(SmallPipeline, MissingFileIsAStageError) {
  auto cfg = config();
  cfg.annotated = "/nonexistent/annotated.txt";
  try {
    run_full(cfg);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load");
  }
}

}  // namespace
}  // namespace projtag
