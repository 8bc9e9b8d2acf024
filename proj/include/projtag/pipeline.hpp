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

// Denoise-and-complete training schedule over projected data:
//
//   M0 --train on D_p--> M1 --continue on D_a--> M2
//   D_r = M2(D_p)
//   M0 --train on D_r--> M3
//
// plus the data split, subsampling and first-stage task ablation helpers.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "projtag/aligner.hpp"
#include "projtag/checkpoint.hpp"
#include "projtag/corpus_io.hpp"
#include "projtag/evaluator.hpp"
#include "projtag/labeler.hpp"
#include "projtag/projector.hpp"
#include "projtag/train.hpp"

namespace projtag {

/// Failure inside one pipeline stage; what() starts with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class StageTask { kJoint, kWsgOnly, kPosOnly, kNone };

inline StageTask parse_stage_task(const std::string& s) {
  if (s == "joint") return StageTask::kJoint;
  if (s == "wsg" || s == "wsg_only") return StageTask::kWsgOnly;
  if (s == "pos" || s == "pos_only") return StageTask::kPosOnly;
  if (s == "none") return StageTask::kNone;
  throw DataError("unknown stage task '" + s + "' (expected joint|wsg|pos|none)");
}

inline const char* stage_task_name(StageTask t) {
  switch (t) {
    case StageTask::kJoint: return "joint";
    case StageTask::kWsgOnly: return "wsg_only";
    case StageTask::kPosOnly: return "pos_only";
    case StageTask::kNone: return "none";
  }
  return "?";
}

/// First ninth-tenths (floor) train, the rest dev. Order preserved.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split_annotated(const std::vector<T>& data) {
  if (data.size() < 10) {
    throw DataError("need at least 10 annotated sentences to split, got " +
                    std::to_string(data.size()));
  }
  const std::size_t n_train = data.size() * 9 / 10;
  return {std::vector<T>(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_train)),
          std::vector<T>(data.begin() + static_cast<std::ptrdiff_t>(n_train), data.end())};
}

/// Number of items a ratio selects: ceil(ratio * n), computed so that exact
/// products such as 0.3 * 10 are not rounded up by representation error.
inline std::size_t subsample_size(std::size_t n, double ratio) {
  const double raw = ratio * static_cast<double>(n);
  const double nearest = std::round(raw);
  const double k = std::abs(raw - nearest) < 1e-9 ? nearest : std::ceil(raw);
  return std::min(n, static_cast<std::size_t>(k));
}

/// Seeded uniform sample without replacement; the kept items stay in their
/// original order.
template <class T>
std::vector<T> subsample(const std::vector<T>& data, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw DataError("ratio must lie in (0, 1]");
  const std::size_t k = subsample_size(data.size(), ratio);
  if (k == data.size()) return data;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(data[i]);
  return out;
}

/// Label constraint expressing what a (weak) tag sequence tells the model
/// under a given first-stage task.
inline LabelConstraint collapse_task(const std::vector<HybridTag>& tags, StageTask task,
                                     const HybridTagSet& ts) {
  if (task == StageTask::kNone) throw DataError("collapse_task: task 'none' has no labels");
  const int npos = ts.pos_set().size();
  LabelConstraint c;
  c.allowed.reserve(tags.size());
  for (const HybridTag& t : tags) {
    std::vector<int> a;
    if (task == StageTask::kJoint && t.known()) {
      a.push_back(ts.index(t));
    } else if (task == StageTask::kPosOnly && t.known()) {
      const auto p = ts.pos_set().index_of(t.pos);
      if (!p) throw TagSetError("unknown POS '" + t.pos + "'");
      for (int b = 0; b < kNumBoundaries; ++b) a.push_back(ts.index(static_cast<Boundary>(b), *p));
    } else if (task == StageTask::kPosOnly) {
      for (int y = 0; y < ts.size(); ++y) a.push_back(y);
    } else {
      // wsg_only, or joint with an unknown POS: boundary fixed, POS free
      for (int p = 0; p < npos; ++p) a.push_back(ts.index(t.boundary, p));
    }
    std::sort(a.begin(), a.end());
    c.allowed.push_back(std::move(a));
  }
  return c;
}

inline std::vector<TrainingExample> make_examples(const std::vector<CharTagSentence>& data,
                                                  StageTask task, const HybridTagSet& ts) {
  std::vector<TrainingExample> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    if (s.tags.size() != s.chars.size()) throw DataError("sentence with mismatched tags");
    for (const auto& t : s.tags) {
      if (t.known() && !ts.pos_set().contains(t.pos)) {
        throw DataError("POS '" + t.pos + "' is not in the model's tag set");
      }
    }
    out.push_back({s.chars, collapse_task(s.tags, task, ts)});
  }
  return out;
}

inline std::vector<LabeledSentence> to_labeled(const std::vector<CharTagSentence>& data) {
  std::vector<LabeledSentence> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back({s.chars, s.tags});
  return out;
}

/// 64-bit FNV-1a of the char-tag serialization, as 16 hex digits.
inline std::string data_hash(const std::vector<CharTagSentence>& data) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& s : data) {
    for (std::size_t i = 0; i < s.chars.size(); ++i) feed(s.chars[i] + "\t" + s.tags[i].str() + "\n");
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Where a checkpoint came from.
struct Provenance {
  std::string stage;
  std::string init;     // name of the starting checkpoint
  std::string dataset;  // D_p, D_a or D_r
  std::string task;
  std::string data_hash;
  std::size_t sentences = 0;
  TrainReport report;

  nlohmann::json to_json() const {
    return {{"stage", stage},     {"init", init},           {"dataset", dataset},
            {"task", task},       {"data_hash", data_hash}, {"sentences", sentences},
            {"training", report.to_json()}};
  }
};

struct StageResult {
  LabelerModel model;
  Provenance provenance;
};

/// One training stage: `data` is converted to constraints under `task` and
/// the model is trained from `init`.
inline StageResult run_stage(const std::string& stage, const std::string& init_name,
                             const LabelerModel& init, const std::string& dataset_name,
                             const std::vector<CharTagSentence>& data, StageTask task,
                             const std::vector<LabeledSentence>& dev, const TrainConfig& cfg) {
  if (data.empty()) throw StageError(stage, "dataset " + dataset_name + " is empty");
  const auto examples = make_examples(data, task, init.tagset);
  TrainResult r = train(init, examples, dev, cfg);
  Provenance p{stage, init_name, dataset_name, stage_task_name(task), data_hash(data),
               data.size(), r.report};
  return {std::move(r.model), std::move(p)};
}

/// Replaces every tag of D_p with the model's Viterbi output.
inline std::vector<CharTagSentence> relabel(const LabelerModel& m,
                                            const std::vector<CharTagSentence>& data) {
  std::vector<std::vector<std::string>> chars;
  chars.reserve(data.size());
  for (const auto& s : data) chars.push_back(s.chars);
  auto tags = predict(m, chars);
  std::vector<CharTagSentence> out;
  out.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) out.push_back({data[k].chars, std::move(tags[k])});
  return out;
}

// ------------------------------------------------------------------ config

struct StageTrainConfigs {
  TrainConfig stage1, stage2, stage3;

  /// Large-data stages 1 and 3 default to 10 epochs, stage 2 to 50.
  static StageTrainConfigs defaults() {
    StageTrainConfigs s;
    s.stage1.max_epochs = 10;
    s.stage2.max_epochs = 50;
    s.stage3.max_epochs = 10;
    return s;
  }
};

struct PipelineConfig {
  std::string parallel;   // parallel_tsv: ancient<TAB>modern words
  std::string modern;     // tagged_words, index-aligned with `parallel`
  std::string annotated;  // tagged_words gold ancient data (train + dev)
  std::vector<std::pair<std::string, std::string>> tests;  // name -> tagged_words path
  std::string pos_tagset;       // optional; default tag set when empty
  std::string pos_dict;         // optional; default mapping table when empty
  std::string init_checkpoint;  // optional pre-existing M0

  double ratio_annotated = 1.0;
  double ratio_projected = 1.0;
  std::uint64_t seed = 1;
  StageTask stage1_task = StageTask::kJoint;

  AlignOptions align;
  double tau = 0.0;
  EncoderConfig encoder;
  StageTrainConfigs train = StageTrainConfigs::defaults();
  bool verbose = false;
};

inline void apply_train_overrides(StageTrainConfigs& t, const nlohmann::json& j) {
  if (j.contains("train")) {
    update_from_json(t.stage1, j["train"]);
    update_from_json(t.stage2, j["train"]);
    update_from_json(t.stage3, j["train"]);
  }
  if (j.contains("stage1")) update_from_json(t.stage1, j["stage1"]);
  if (j.contains("stage2")) update_from_json(t.stage2, j["stage2"]);
  if (j.contains("stage3")) update_from_json(t.stage3, j["stage3"]);
}

/// Parses a pipeline config document. Relative paths are resolved against
/// `base_dir`.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                                const std::filesystem::path& base_dir = {}) {
  PipelineConfig c;
  auto path = [&](const std::string& key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw DataError("pipeline config is missing '" + key + "'");
      return {};
    }
    std::filesystem::path p = j.at(key).get<std::string>();
    return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  };
  try {
    c.parallel = path("parallel", true);
    c.modern = path("modern", true);
    c.annotated = path("annotated", true);
    c.pos_tagset = path("pos_tagset", false);
    c.pos_dict = path("pos_dict", false);
    c.init_checkpoint = path("init_checkpoint", false);
    if (j.contains("tests")) {
      for (const auto& [name, p] : j.at("tests").items()) {
        std::filesystem::path fp = p.get<std::string>();
        c.tests.emplace_back(name, (fp.is_relative() && !base_dir.empty() ? base_dir / fp : fp).string());
      }
    }
    c.ratio_annotated = j.value("ratio_annotated", c.ratio_annotated);
    c.ratio_projected = j.value("ratio_projected", c.ratio_projected);
    c.seed = j.value("seed", c.seed);
    c.stage1_task = parse_stage_task(j.value("stage1_task", std::string("joint")));
    c.verbose = j.value("verbose", false);
    if (j.contains("align")) {
      const auto& a = j["align"];
      c.align.iterations = a.value("iterations", c.align.iterations);
      c.align.smoothing = a.value("smoothing", c.align.smoothing);
      c.align.diagonal_tension = a.value("diagonal_tension", c.align.diagonal_tension);
      c.tau = a.value("tau", c.tau);
    }
    if (j.contains("encoder")) {
      const auto& e = j["encoder"];
      c.encoder.embedding_dim = e.value("embedding_dim", c.encoder.embedding_dim);
      c.encoder.hidden_dim = e.value("hidden_dim", c.encoder.hidden_dim);
      c.encoder.window = e.value("window", c.encoder.window);
    }
    apply_train_overrides(c.train, j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed pipeline config: ") + e.what());
  }
  if (!(c.ratio_annotated > 0.0 && c.ratio_annotated <= 1.0) ||
      !(c.ratio_projected > 0.0 && c.ratio_projected <= 1.0)) {
    throw DataError("ratios must lie in (0, 1]");
  }
  return c;
}

inline PipelineConfig read_pipeline_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, 0, -1, "cannot open file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path, 1, -1, std::string("invalid JSON: ") + e.what());
  }
  return pipeline_config_from_json(j, std::filesystem::path(path).parent_path());
}

// ------------------------------------------------------------------- state

struct PipelineState {
  std::optional<LabelerModel> m0, m1, m2, m3;
  std::vector<CharTagSentence> projected;  // D_p (after ratio subsampling)
  std::vector<CharTagSentence> annotated_train, annotated_dev;  // D_a
  std::vector<CharTagSentence> relabeled;  // D_r
  ProjectionReport projection;
  std::vector<Provenance> provenance;
  nlohmann::json metrics = nlohmann::json::object();

  /// Checkpoint name -> model, in report order.
  std::vector<std::pair<std::string, const LabelerModel*>> evaluated() const {
    std::vector<std::pair<std::string, const LabelerModel*>> out;
    if (m3) {
      out.emplace_back("M1", &*m1);
      out.emplace_back("M2", &*m2);
      out.emplace_back("M3", &*m3);
    } else if (m2) {
      out.emplace_back("Mb", &*m2);
    }
    return out;
  }

  nlohmann::json provenance_json() const {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& p : provenance) stages.push_back(p.to_json());
    return {{"projection", projection.to_json()},
            {"datasets",
             {{"D_p", {{"sentences", projected.size()}, {"hash", data_hash(projected)}}},
              {"D_a_train", {{"sentences", annotated_train.size()}, {"hash", data_hash(annotated_train)}}},
              {"D_a_dev", {{"sentences", annotated_dev.size()}, {"hash", data_hash(annotated_dev)}}},
              {"D_r", {{"sentences", relabeled.size()}, {"hash", data_hash(relabeled)}}}}},
            {"stages", stages}};
  }
};

inline std::vector<CharTagSentence> read_gold(const std::string& path) {
  std::vector<CharTagSentence> out;
  for (const auto& s : read_tagged_words(path)) out.push_back(to_char_tags(s));
  return out;
}

/// align -> project -> stage 1 -> stage 2 -> relabel -> stage 3 -> evaluate.
/// With stage1_task == none only the baseline Mb (M0 trained on D_a) is
/// built and evaluated.
inline PipelineState run_full(const PipelineConfig& cfg) {
  PipelineState st;
  using Clock = std::chrono::steady_clock;
  auto log = [&](const std::string& msg) {
    if (cfg.verbose) std::clog << "pipeline: " << msg << std::endl;
  };
  auto guarded = [&](const std::string& stage, auto&& fn) {
    const auto t0 = Clock::now();
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
    log(stage + " done in " +
        std::to_string(std::chrono::duration<double>(Clock::now() - t0).count()) + " s");
  };

  HybridTagSet tagset;
  PosMappingDict dict;
  std::vector<ParallelPair> pairs;
  std::vector<TaggedSentence> moderns;
  std::vector<CharTagSentence> annotated;
  std::vector<std::pair<std::string, std::vector<LabeledSentence>>> tests;

  guarded("load", [&] {
    tagset = HybridTagSet(cfg.pos_tagset.empty() ? PosTagSet::default_set()
                                                 : read_pos_tagset(cfg.pos_tagset));
    dict = cfg.pos_dict.empty() ? PosMappingDict::default_dict() : read_pos_dict(cfg.pos_dict);
    for (const auto& l : read_parallel(cfg.parallel)) {
      pairs.push_back(make_parallel_pair(l.ancient, l.modern));
    }
    moderns = read_tagged_words(cfg.modern);
    annotated = read_gold(cfg.annotated);
    for (const auto& [name, p] : cfg.tests) tests.emplace_back(name, to_labeled(read_gold(p)));
  });

  TranslationTable table;
  guarded("align", [&] { table = em_train(pairs, cfg.align); });
  guarded("project", [&] {
    auto projected = project_corpus(pairs, moderns, table, dict, cfg.tau, cfg.align.diagonal_tension);
    st.projection = projected.report;
    st.projected = subsample(projected.data, cfg.ratio_projected, cfg.seed ^ 0x9e3779b97f4a7c15ull);
  });
  guarded("split", [&] {
    auto [train, dev] = split_annotated(annotated);
    st.annotated_train = subsample(train, cfg.ratio_annotated, cfg.seed ^ 0xbf58476d1ce4e5b9ull);
    st.annotated_dev = std::move(dev);
  });
  const auto dev = to_labeled(st.annotated_dev);

  guarded("init", [&] {
    if (!cfg.init_checkpoint.empty()) {
      st.m0 = read_checkpoint(cfg.init_checkpoint);
      if (!(st.m0->tagset.pos_set() == tagset.pos_set())) {
        throw DataError("initial checkpoint uses a different POS tag set");
      }
      return;
    }
    std::vector<std::vector<std::string>> sentences;
    for (const auto* part : {&st.projected, &st.annotated_train, &st.annotated_dev}) {
      for (const auto& s : *part) sentences.push_back(s.chars);
    }
    st.m0 = init_model(tagset, Vocabulary::from_sentences(sentences), cfg.encoder, cfg.seed);
  });

  auto stage_cfg = [&](TrainConfig c, std::uint64_t salt) {
    c.seed = cfg.seed * 1000003ull + salt;
    c.verbose = c.verbose || cfg.verbose;
    return c;
  };

  if (cfg.stage1_task == StageTask::kNone) {
    guarded("stage2", [&] {
      auto r = run_stage("stage2", "M0", *st.m0, "D_a", st.annotated_train, StageTask::kJoint, dev,
                         stage_cfg(cfg.train.stage2, 2));
      st.m1 = st.m0;
      st.m2 = std::move(r.model);
      st.provenance.push_back(std::move(r.provenance));
    });
  } else {
    guarded("stage1", [&] {
      auto r = run_stage("stage1", "M0", *st.m0, "D_p", st.projected, cfg.stage1_task, dev,
                         stage_cfg(cfg.train.stage1, 1));
      st.m1 = std::move(r.model);
      st.provenance.push_back(std::move(r.provenance));
    });
    guarded("stage2", [&] {
      auto r = run_stage("stage2", "M1", *st.m1, "D_a", st.annotated_train, StageTask::kJoint, dev,
                         stage_cfg(cfg.train.stage2, 2));
      st.m2 = std::move(r.model);
      st.provenance.push_back(std::move(r.provenance));
    });
    guarded("relabel", [&] { st.relabeled = relabel(*st.m2, st.projected); });
    guarded("stage3", [&] {
      auto r = run_stage("stage3", "M0", *st.m0, "D_r", st.relabeled, StageTask::kJoint, dev,
                         stage_cfg(cfg.train.stage3, 3));
      st.m3 = std::move(r.model);
      st.provenance.push_back(std::move(r.provenance));
    });
  }

  guarded("evaluate", [&] {
    for (const auto& [name, model] : st.evaluated()) {
      nlohmann::json per_model = nlohmann::json::object();
      for (const auto& [test, data] : tests) {
        per_model[test] = {{"wsg", evaluate(*model, data, EvalMode::kWsg).to_json()},
                           {"pos", evaluate(*model, data, EvalMode::kPos).to_json()}};
      }
      st.metrics[name] = std::move(per_model);
    }
  });
  return st;
}

/// Writes checkpoints, datasets, the metrics report and provenance to `dir`.
inline void write_pipeline_outputs(const PipelineState& st, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  if (st.m1 && st.m3) write_checkpoint(*st.m1, (d / "M1.json").string());
  if (st.m2) write_checkpoint(*st.m2, (d / (st.m3 ? "M2.json" : "Mb.json")).string());
  if (st.m3) write_checkpoint(*st.m3, (d / "M3.json").string());
  write_char_tags(st.projected, (d / "D_p.txt").string());
  if (!st.relabeled.empty()) write_char_tags(st.relabeled, (d / "D_r.txt").string());
  {
    std::ofstream out(d / "metrics.json", std::ios::binary);
    out << st.metrics.dump(2) << "\n";
  }
  {
    std::ofstream out(d / "provenance.json", std::ios::binary);
    out << st.provenance_json().dump(2) << "\n";
  }
}

}  // namespace projtag
