// Copyright 2026 The Partial-EL Authors.
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

// Prediction and retrieval files.
//
// A prediction file is JSONL, one {"doc_id", "start", "end", "concept",
// "score"} object per line, sorted by (doc_id, span, concept). Next to it,
// `<file>.meta.json` records which KB view produced the predictions so later
// steps can refuse to mix views.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "partial_el/corpus.hpp"
#include "partial_el/error.hpp"
#include "partial_el/eval.hpp"
#include "partial_el/paradigms.hpp"

namespace partial_el {

struct PredictionMeta {
  std::string kb;
  std::string view;
  Paradigm paradigm = Paradigm::kNerNed;
  Split split = Split::kTest;
  std::string stage;  // raw, pruned or final

  friend bool operator==(const PredictionMeta &, const PredictionMeta &) = default;
};

inline nlohmann::json meta_to_json(const PredictionMeta &m) {
  return nlohmann::json{{"kb", m.kb},
                        {"view", m.view},
                        {"paradigm", to_string(m.paradigm)},
                        {"split", to_string(m.split)},
                        {"stage", m.stage}};
}

inline PredictionMeta meta_from_json(const nlohmann::json &j) {
  try {
    return PredictionMeta{j.at("kb").get<std::string>(), j.at("view").get<std::string>(),
                          parse_paradigm(j.at("paradigm").get<std::string>()),
                          parse_split(j.at("split").get<std::string>()), j.at("stage").get<std::string>()};
  } catch (const nlohmann::json::exception &e) {
    throw Error("parse_error", std::string("prediction metadata: ") + e.what());
  }
}

inline std::filesystem::path meta_path(const std::filesystem::path &predictions) {
  return predictions.string() + ".meta.json";
}

inline void write_predictions(std::vector<ScoredPrediction> predictions, std::ostream &out) {
  sort_predictions(predictions);
  for (const auto &p : predictions) {
    out << nlohmann::json{{"doc_id", p.doc_id},
                          {"start", p.span.start},
                          {"end", p.span.end},
                          {"concept", p.concept_id.str()},
                          {"score", p.score}}
               .dump()
        << '\n';
  }
}

inline std::vector<ScoredPrediction> parse_predictions(std::istream &in, Paradigm paradigm) {
  std::vector<ScoredPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ScoredPrediction p;
      p.doc_id = j.at("doc_id").get<std::string>();
      p.span = Span{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
      p.concept_id = ConceptId(j.at("concept").get<std::string>());
      p.score = j.at("score").get<double>();
      p.paradigm = paradigm;
      if (p.span.start >= p.span.end) throw Error("parse_error", "empty span");
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception &e) {
      throw Error("parse_error", "predictions line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error &e) {
      throw Error(e.code(), "predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io_error", "cannot write " + path.string());
  return f;
}

inline std::ifstream open_in(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("file_not_found", "cannot open " + path.string());
  return f;
}

}  // namespace detail

inline void write_json_file(const std::filesystem::path &path, const nlohmann::json &j) {
  auto f = detail::open_out(path);
  f << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path &path) {
  auto f = detail::open_in(path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception &e) {
    throw Error("parse_error", path.string() + ": " + e.what());
  }
}

inline void write_prediction_file(const std::filesystem::path &path, std::vector<ScoredPrediction> predictions,
                                  const PredictionMeta &meta) {
  {
    auto f = detail::open_out(path);
    write_predictions(std::move(predictions), f);
  }
  write_json_file(meta_path(path), meta_to_json(meta));
}

struct PredictionFile {
  std::vector<ScoredPrediction> predictions;
  PredictionMeta meta;
};

inline PredictionFile read_prediction_file(const std::filesystem::path &path) {
  PredictionFile out;
  if (!std::filesystem::exists(meta_path(path))) {
    throw Error("missing_view", path.string() + " has no " + meta_path(path).filename().string() +
                                    "; the producing view is unknown");
  }
  out.meta = meta_from_json(read_json_file(meta_path(path)));
  auto f = detail::open_in(path);
  out.predictions = parse_predictions(f, out.meta.paradigm);
  return out;
}

// Retrieval lists, one {"doc_id", "concepts", "scores"} line per document.
inline void write_retrieved(const std::vector<std::pair<std::string, Retrieval>> &lists, std::ostream &out) {
  for (const auto &[doc_id, r] : lists) {
    std::vector<std::string> ids;
    std::vector<double> scores;
    for (const auto &n : r.concepts) {
      ids.push_back(n.concept_id.str());
      scores.push_back(n.score);
    }
    out << nlohmann::json{{"doc_id", doc_id}, {"concepts", ids}, {"scores", scores}}.dump() << '\n';
  }
}

inline RetrievedLists parse_retrieved(std::istream &in) {
  RetrievedLists out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto &list = out[j.at("doc_id").get<std::string>()];
      for (const auto &c : j.at("concepts")) list.emplace_back(c.get<std::string>());
    } catch (const nlohmann::json::exception &e) {
      throw Error("parse_error", "retrieval line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace partial_el
