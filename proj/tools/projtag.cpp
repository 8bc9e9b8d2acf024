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

// projtag: command-line front end.
//
//   projtag align    --parallel P --out TABLE
//   projtag project  --parallel P --modern M --out D_p.txt
//   projtag train    (--projected D_p.txt | --annotated A.txt) --out M.json
//   projtag relabel  --model M.json --data D_p.txt --out D_r.txt
//   projtag evaluate --gold G --pred P [--mode wsg|pos]
//   projtag pipeline --config pipeline.json --out DIR
//   projtag synth    --out DIR
//
// Exit status: 0 success, 1 usage error, 2 data or format error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "projtag/aligner.hpp"
#include "projtag/checkpoint.hpp"
#include "projtag/corpus_io.hpp"
#include "projtag/evaluator.hpp"
#include "projtag/pipeline.hpp"
#include "projtag/projector.hpp"
#include "projtag/train.hpp"
#include "synth.hpp"

namespace {

using namespace projtag;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

std::vector<ParallelPair> load_pairs(const std::string& path) {
  std::vector<ParallelPair> pairs;
  for (const auto& l : read_parallel(path)) pairs.push_back(make_parallel_pair(l.ancient, l.modern));
  return pairs;
}

std::vector<CharTagSentence> load_sentences(const std::string& path, const std::string& format) {
  if (format == "chars") return read_char_tags(path);
  return read_gold(path);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

// ---------------------------------------------------------------- commands

struct AlignArgs {
  std::string parallel, out, links;
  AlignOptions opt;
  double tau = 0.0;
  std::uint64_t seed = 1;
};

int run_align(const AlignArgs& a) {
  const auto pairs = load_pairs(a.parallel);
  EmTrace trace;
  const auto table = em_train(pairs, a.opt, &trace);
  write_translation_table(table, a.out);
  if (!a.links.empty()) {
    auto out = open_out(a.links);
    for (const auto& p : pairs) {
      const auto r = best_alignment(p, table, a.tau, a.opt.diagonal_tension);
      for (std::size_t j = 0; j < r.links.size(); ++j) {
        out << (j ? " " : "");
        if (r.links[j].token) {
          out << *r.links[j].token;
        } else {
          out << '-';
        }
      }
      out << '\n';
    }
  }
  std::cerr << "align: " << pairs.size() << " pairs, log-likelihood "
            << trace.log_likelihood.front() << " -> " << trace.log_likelihood.back() << "\n";
  return 0;
}

struct ProjectArgs {
  std::string parallel, modern, table, dict, out, report;
  AlignOptions opt;
  double tau = 0.0;
  std::uint64_t seed = 1;
};

int run_project(const ProjectArgs& a) {
  const auto pairs = load_pairs(a.parallel);
  const auto moderns = read_tagged_words(a.modern);
  const TranslationTable table =
      a.table.empty() ? em_train(pairs, a.opt) : read_translation_table(a.table);
  const PosMappingDict dict = a.dict.empty() ? PosMappingDict::default_dict() : read_pos_dict(a.dict);
  const auto projected = project_corpus(pairs, moderns, table, dict, a.tau, a.opt.diagonal_tension);
  write_char_tags(projected.data, a.out);
  const auto report = projected.report.to_json();
  if (!a.report.empty()) open_out(a.report) << report.dump(2) << "\n";
  std::cerr << "project: " << report.dump() << "\n";
  return 0;
}

struct TrainArgs {
  std::string projected, annotated, dev, init, config, tagset, out, report;
  std::string task = "joint";
  double ratio_annotated = 1.0, ratio_projected = 1.0;
  int epochs = -1;
  std::uint64_t seed = 1;
  EncoderConfig encoder;
};

int run_train(const TrainArgs& a) {
  if (a.projected.empty() == a.annotated.empty()) {
    throw CLI::ValidationError("train", "exactly one of --projected and --annotated is required");
  }
  TrainConfig cfg;
  cfg.max_epochs = a.projected.empty() ? 50 : 10;
  if (!a.config.empty()) {
    std::ifstream in(a.config, std::ios::binary);
    if (!in) throw FormatError(a.config, 0, -1, "cannot open file");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(a.config, 1, -1, std::string("invalid JSON: ") + e.what());
    }
    update_from_json(cfg, j);
  }
  if (a.epochs >= 0) cfg.max_epochs = a.epochs;
  cfg.seed = a.seed;

  std::vector<CharTagSentence> data;
  std::vector<LabeledSentence> dev;
  StageTask task = parse_stage_task(a.task);
  std::string dataset;
  if (!a.projected.empty()) {
    if (task == StageTask::kNone) throw DataError("task 'none' cannot train on projected data");
    data = subsample(read_char_tags(a.projected), a.ratio_projected, a.seed);
    dataset = "D_p";
    if (!a.dev.empty()) dev = to_labeled(read_gold(a.dev));
  } else {
    auto [train, held_out] = split_annotated(read_gold(a.annotated));
    data = subsample(train, a.ratio_annotated, a.seed);
    dev = to_labeled(a.dev.empty() ? held_out : read_gold(a.dev));
    task = StageTask::kJoint;
    dataset = "D_a";
  }

  LabelerModel init;
  std::string init_name = "M0";
  if (!a.init.empty()) {
    init = read_checkpoint(a.init);
    init_name = a.init;
  } else {
    std::vector<std::vector<std::string>> sentences;
    for (const auto& s : data) sentences.push_back(s.chars);
    for (const auto& s : dev) sentences.push_back(s.chars);
    const PosTagSet pos = a.tagset.empty() ? PosTagSet::default_set() : read_pos_tagset(a.tagset);
    init = init_model(HybridTagSet(pos), Vocabulary::from_sentences(sentences), a.encoder, a.seed);
  }
  auto r = run_stage("train", init_name, init, dataset, data, task, dev, cfg);
  write_checkpoint(r.model, a.out);
  const auto report = r.provenance.to_json();
  if (!a.report.empty()) open_out(a.report) << report.dump(2) << "\n";
  std::cerr << "train: " << report["training"].dump() << "\n";
  return 0;
}

int run_relabel(const std::string& model_path, const std::string& data, const std::string& out) {
  const auto model = read_checkpoint(model_path);
  write_char_tags(relabel(model, read_char_tags(data)), out);
  return 0;
}

struct EvaluateArgs {
  std::string gold, pred, mode = "both", format = "words", diff;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto gold = load_sentences(a.gold, a.format);
  const auto pred = load_sentences(a.pred, a.format);
  if (gold.size() != pred.size()) {
    throw EvalError("gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                    std::to_string(pred.size()));
  }
  std::vector<std::vector<HybridTag>> g, p;
  std::vector<std::vector<std::string>> chars;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].chars != pred[k].chars) {
      throw EvalError("sentence " + std::to_string(k + 1) + " differs between gold and prediction");
    }
    g.push_back(gold[k].tags);
    p.push_back(pred[k].tags);
    chars.push_back(gold[k].chars);
  }
  nlohmann::json out;
  if (a.mode == "wsg") {
    out = score(g, p, EvalMode::kWsg).to_json();
  } else if (a.mode == "pos") {
    out = score(g, p, EvalMode::kPos).to_json();
  } else {
    out = {{"wsg", score(g, p, EvalMode::kWsg).to_json()},
           {"pos", score(g, p, EvalMode::kPos).to_json()}};
  }
  if (!a.diff.empty()) {
    open_out(a.diff) << format_diff(chars, g, p, a.mode == "wsg" ? EvalMode::kWsg : EvalMode::kPos);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct PipelineArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::string task;
  std::optional<double> ratio_annotated, ratio_projected;
  bool verbose = false;
};

int run_pipeline(const PipelineArgs& a) {
  PipelineConfig cfg = read_pipeline_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.task.empty()) cfg.stage1_task = parse_stage_task(a.task);
  if (a.ratio_annotated) cfg.ratio_annotated = *a.ratio_annotated;
  if (a.ratio_projected) cfg.ratio_projected = *a.ratio_projected;
  cfg.verbose = cfg.verbose || a.verbose;
  const auto state = run_full(cfg);
  write_pipeline_outputs(state, a.out);
  std::cout << state.metrics.dump(2) << "\n";
  return 0;
}

struct SynthArgs {
  std::string config, out;
  synth::SynthConfig cfg;
};

int run_synth(SynthArgs a, const CLI::App& cmd) {
  if (!a.config.empty()) {
    std::ifstream in(a.config, std::ios::binary);
    if (!in) throw FormatError(a.config, 0, -1, "cannot open file");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(a.config, 1, -1, std::string("invalid JSON: ") + e.what());
    }
    // Flags given explicitly win over the file.
    auto from_file = synth::SynthConfig::from_json(j);
    auto keep = [&](const char* flag, auto& field, const auto& file_value) {
      if (cmd.count(flag) == 0) field = file_value;
    };
    keep("--pairs", a.cfg.pairs, from_file.pairs);
    keep("--annotated", a.cfg.annotated, from_file.annotated);
    keep("--test-size", a.cfg.test_size, from_file.test_size);
    keep("--chars", a.cfg.chars, from_file.chars);
    keep("--word-types", a.cfg.word_types, from_file.word_types);
    keep("--min-words", a.cfg.min_words, from_file.min_words);
    keep("--max-words", a.cfg.max_words, from_file.max_words);
    keep("--noise", a.cfg.noise, from_file.noise);
    keep("--seed", a.cfg.seed, from_file.seed);
  }
  a.cfg.validate();
  synth::write_corpus(synth::generate(a.cfg), a.cfg, a.out);
  std::cerr << "synth: wrote " << a.cfg.pairs << " pairs to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distant-supervision toolkit for joint segmentation and POS tagging"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  AlignArgs align;
  auto* c_align = app.add_subcommand("align", "Train IBM Model 1 and write the translation table");
  c_align->add_option("--parallel", align.parallel, "parallel TSV")->required();
  c_align->add_option("--out", align.out, "translation table output")->required();
  c_align->add_option("--links", align.links, "optional best-alignment output");
  c_align->add_option("--iters", align.opt.iterations, "EM iterations")->capture_default_str();
  c_align->add_option("--smoothing", align.opt.smoothing, "additive smoothing")->capture_default_str();
  c_align->add_option("--tension", align.opt.diagonal_tension, "diagonal prior tension (0 = off)");
  c_align->add_option("--threads", align.opt.threads, "E-step worker threads")->capture_default_str();
  c_align->add_option("--tau", align.tau, "link probability threshold")->capture_default_str();
  c_align->add_option("--seed", align.seed, "accepted for uniformity; EM is deterministic");

  ProjectArgs proj;
  auto* c_proj = app.add_subcommand("project", "Project modern annotation onto ancient characters");
  c_proj->add_option("--parallel", proj.parallel, "parallel TSV")->required();
  c_proj->add_option("--modern", proj.modern, "tagged modern side")->required();
  c_proj->add_option("--out", proj.out, "char-tag output (D_p)")->required();
  c_proj->add_option("--table", proj.table, "translation table (trained on the fly if absent)");
  c_proj->add_option("--dict", proj.dict, "POS mapping table (default: built-in)");
  c_proj->add_option("--report", proj.report, "projection report JSON");
  c_proj->add_option("--tau", proj.tau, "link probability threshold")->capture_default_str();
  c_proj->add_option("--iters", proj.opt.iterations, "EM iterations")->capture_default_str();
  c_proj->add_option("--smoothing", proj.opt.smoothing, "additive smoothing")->capture_default_str();
  c_proj->add_option("--tension", proj.opt.diagonal_tension, "diagonal prior tension (0 = off)");
  c_proj->add_option("--seed", proj.seed, "accepted for uniformity; projection is deterministic");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Run one training stage");
  c_train->add_option("--projected", tr.projected, "char-tag weak labels");
  c_train->add_option("--annotated", tr.annotated, "tagged-word gold data (split 9:1 train/dev)");
  c_train->add_option("--dev", tr.dev, "tagged-word dev set");
  c_train->add_option("--init", tr.init, "starting checkpoint (fresh model if absent)");
  c_train->add_option("--config", tr.config, "JSON training overrides");
  c_train->add_option("--pos-tags", tr.tagset, "POS tag set file for a fresh model");
  c_train->add_option("--out", tr.out, "checkpoint output")->required();
  c_train->add_option("--report", tr.report, "training report JSON");
  c_train->add_option("--task", tr.task, "joint|wsg|pos")
      ->check(CLI::IsMember({"joint", "wsg", "pos", "wsg_only", "pos_only"}))
      ->capture_default_str();
  c_train->add_option("--ratio-annotated", tr.ratio_annotated)->check(CLI::Range(0.0, 1.0));
  c_train->add_option("--ratio-projected", tr.ratio_projected)->check(CLI::Range(0.0, 1.0));
  c_train->add_option("--epochs", tr.epochs, "maximum epochs");
  c_train->add_option("--seed", tr.seed)->capture_default_str();
  c_train->add_option("--embedding-dim", tr.encoder.embedding_dim)->capture_default_str();
  c_train->add_option("--hidden-dim", tr.encoder.hidden_dim)->capture_default_str();
  c_train->add_option("--window", tr.encoder.window)->capture_default_str();

  std::string rl_model, rl_data, rl_out;
  auto* c_relabel = app.add_subcommand("relabel", "Replace weak labels with model predictions");
  c_relabel->add_option("--model", rl_model, "checkpoint")->required();
  c_relabel->add_option("--data", rl_data, "char-tag input")->required();
  c_relabel->add_option("--out", rl_out, "char-tag output")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Span F1 of predictions against gold");
  c_eval->add_option("--gold", ev.gold)->required();
  c_eval->add_option("--pred", ev.pred)->required();
  c_eval->add_option("--mode", ev.mode, "wsg|pos|both")
      ->check(CLI::IsMember({"wsg", "pos", "both"}))
      ->capture_default_str();
  c_eval->add_option("--format", ev.format, "words (tagged words) or chars (char tags)")
      ->check(CLI::IsMember({"words", "chars"}))
      ->capture_default_str();
  c_eval->add_option("--diff", ev.diff, "write a per-sentence span diff");

  PipelineArgs pl;
  auto* c_pipe = app.add_subcommand("pipeline", "Run the full three-stage pipeline");
  c_pipe->add_option("--config", pl.config, "pipeline JSON")->required();
  c_pipe->add_option("--out", pl.out, "output directory")->required();
  c_pipe->add_option("--seed", pl.seed, "overrides the config seed");
  c_pipe->add_option("--task", pl.task, "first-stage task: joint|wsg|pos|none")
      ->check(CLI::IsMember({"joint", "wsg", "pos", "none", "wsg_only", "pos_only"}));
  c_pipe->add_option("--ratio-annotated", pl.ratio_annotated)->check(CLI::Range(0.0, 1.0));
  c_pipe->add_option("--ratio-projected", pl.ratio_projected)->check(CLI::Range(0.0, 1.0));
  c_pipe->add_flag("--verbose", pl.verbose, "log stage progress");

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic parallel corpus");
  c_synth->add_option("--out", sy.out, "output directory")->required();
  c_synth->add_option("--config", sy.config, "JSON generator settings");
  c_synth->add_option("--pairs", sy.cfg.pairs)->capture_default_str();
  c_synth->add_option("--annotated", sy.cfg.annotated)->capture_default_str();
  c_synth->add_option("--test-size", sy.cfg.test_size)->capture_default_str();
  c_synth->add_option("--chars", sy.cfg.chars)->capture_default_str();
  c_synth->add_option("--word-types", sy.cfg.word_types)->capture_default_str();
  c_synth->add_option("--min-words", sy.cfg.min_words)->capture_default_str();
  c_synth->add_option("--max-words", sy.cfg.max_words)->capture_default_str();
  c_synth->add_option("--noise", sy.cfg.noise)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  c_synth->add_option("--seed", sy.cfg.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*c_align) return run_align(align);
    if (*c_proj) return run_project(proj);
    if (*c_train) return run_train(tr);
    if (*c_relabel) return run_relabel(rl_model, rl_data, rl_out);
    if (*c_eval) return run_evaluate(ev);
    if (*c_pipe) return run_pipeline(pl);
    if (*c_synth) return run_synth(sy, *c_synth);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
