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

// Model checkpoints as a single JSON document. Doubles are written in
// shortest round-trip form, so write -> read is bit-exact.

#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "projtag/errors.hpp"
#include "projtag/labeler.hpp"

namespace projtag {

inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                               const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ModelError(std::string("checkpoint tensor '") + name + "' has wrong row count");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ModelError(std::string("checkpoint tensor '") + name + "' has wrong column count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Vector vector_from_json(const nlohmann::json& j, Eigen::Index size, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ModelError(std::string("checkpoint tensor '") + name + "' has wrong size");
  }
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const LabelerModel& m) {
  const auto& p = m.params;
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["pos_tags"] = m.tagset.pos_set().tags();
  j["hyperparameters"] = {{"embedding_dim", m.config.embedding_dim},
                          {"hidden_dim", m.config.hidden_dim},
                          {"window", m.config.window},
                          {"masked_score", crf::kMaskedScore}};
  j["vocab"] = m.vocab.chars();
  j["parameters"] = {{"embeddings", detail::matrix_to_json(p.embeddings)},
                     {"projection", detail::matrix_to_json(p.projection)},
                     {"projection_bias", detail::vector_to_json(p.projection_bias)},
                     {"emission_weight", detail::matrix_to_json(p.emission_weight)},
                     {"emission_bias", detail::vector_to_json(p.emission_bias)},
                     {"transition", detail::matrix_to_json(p.crf.transition)},
                     {"start", detail::vector_to_json(p.crf.start)},
                     {"stop", detail::vector_to_json(p.crf.stop)}};
  return j;
}

inline LabelerModel checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw ModelError("unsupported checkpoint format_version");
    }
    LabelerModel m;
    m.tagset = HybridTagSet(PosTagSet(j.at("pos_tags").get<std::vector<std::string>>()));
    const auto& hp = j.at("hyperparameters");
    m.config.embedding_dim = hp.at("embedding_dim").get<int>();
    m.config.hidden_dim = hp.at("hidden_dim").get<int>();
    m.config.window = hp.at("window").get<int>();
    m.vocab = Vocabulary(j.at("vocab").get<std::vector<std::string>>());
    const auto& ps = j.at("parameters");
    const Eigen::Index v = m.num_tags(), d = m.config.hidden_dim;
    auto& p = m.params;
    p.embeddings = detail::matrix_from_json(ps.at("embeddings"), m.vocab.size(),
                                            m.config.embedding_dim, "embeddings");
    p.projection = detail::matrix_from_json(ps.at("projection"), m.config.input_dim(), d,
                                            "projection");
    p.projection_bias = detail::vector_from_json(ps.at("projection_bias"), d, "projection_bias");
    p.emission_weight = detail::matrix_from_json(ps.at("emission_weight"), d, v, "emission_weight");
    p.emission_bias = detail::vector_from_json(ps.at("emission_bias"), v, "emission_bias");
    p.crf = TransitionParams::bmes(m.tagset);
    p.crf.transition = detail::matrix_from_json(ps.at("transition"), v, v, "transition");
    p.crf.start = detail::vector_from_json(ps.at("start"), v, "start");
    p.crf.stop = detail::vector_from_json(ps.at("stop"), v, "stop");
    p.crf.apply_mask();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed checkpoint: ") + e.what());
  } catch (const TagSetError& e) {
    throw ModelError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void write_checkpoint(const LabelerModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path);
  out << checkpoint_to_json(m).dump() << "\n";
  if (!out) throw Error("failed writing checkpoint " + path);
}

inline LabelerModel read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path, 1, -1, std::string("invalid JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace projtag
