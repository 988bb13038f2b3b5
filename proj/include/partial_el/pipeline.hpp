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

// Run configuration and the file-based pipeline stages.
//
// A run directory holds
//   model/gazetteer.json | model/lm.json    train
//   raw_<split>.jsonl (+ .meta.json)        link (view: inference view)
//   retrieved_<split>.jsonl                 link, ned_ner only
//   pruned_<split>.jsonl (+ .meta.json)     prune, post_prune mode
//   threshold.json                          tune-threshold
//   predictions_test.jsonl, metrics.json    evaluate
//   manifest.json                           run
// Every stage reads its inputs from the directory, so runs can be resumed
// or recomposed step by step.

#pragma once

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "partial_el/corpus.hpp"
#include "partial_el/embed.hpp"
#include "partial_el/error.hpp"
#include "partial_el/eval.hpp"
#include "partial_el/io.hpp"
#include "partial_el/kb.hpp"
#include "partial_el/lm.hpp"
#include "partial_el/parallel.hpp"
#include "partial_el/paradigms.hpp"
#include "partial_el/redemption.hpp"
#include "partial_el/synth.hpp"
#include "partial_el/tagger.hpp"
#include "partial_el/trie.hpp"

namespace partial_el {

inline constexpr std::string_view kCodeVersion = "0.1.0";
inline constexpr const char *kCacheDirEnv = "PARTIAL_EL_CACHE_DIR";

enum class Mode { kDirect, kThreshold, kPostPrune, kInKbTrain };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kDirect: return "direct";
    case Mode::kThreshold: return "threshold";
    case Mode::kPostPrune: return "post_prune";
    case Mode::kInKbTrain: return "in_kb_train";
  }
  return "direct";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "direct") return Mode::kDirect;
  if (s == "threshold") return Mode::kThreshold;
  if (s == "post_prune") return Mode::kPostPrune;
  if (s == "in_kb_train") return Mode::kInKbTrain;
  throw Error("invalid_config", "unknown mode '" + std::string(s) + "'");
}

struct ParadigmConfig {
  Paradigm paradigm = Paradigm::kNerNed;
  std::size_t top_k = 100;
  std::size_t beam = 6;
  std::size_t max_span_tokens = 8;
  std::optional<double> theta;  // null: no fixed threshold
  bool canonical_only = false;
  double temperature = 0.05;  // ned_ner span softmax
  double copy_weight = 0.5;   // generative copy mixture
};

inline nlohmann::json paradigm_config_to_json(const ParadigmConfig &p) {
  return nlohmann::json{{"paradigm", to_string(p.paradigm)},
                        {"K", p.top_k},
                        {"beam", p.beam},
                        {"max_span_tokens", p.max_span_tokens},
                        {"theta", p.theta ? nlohmann::json(*p.theta) : nlohmann::json(nullptr)},
                        {"canonical_only", p.canonical_only},
                        {"temperature", p.temperature},
                        {"copy_weight", p.copy_weight}};
}

inline ParadigmConfig paradigm_config_from_json(const nlohmann::json &j) {
  static const std::set<std::string> known = {"paradigm", "K",           "beam",       "max_span_tokens",
                                              "theta",    "canonical_only", "temperature", "copy_weight"};
  if (!j.is_object()) throw Error("invalid_config", "paradigm block must be an object");
  for (const auto &[k, v] : j.items()) {
    if (!known.count(k)) throw Error("invalid_config", "unknown paradigm key '" + k + "'");
  }
  ParadigmConfig p;
  try {
    p.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
    p.top_k = j.value("K", p.top_k);
    p.beam = j.value("beam", p.beam);
    p.max_span_tokens = j.value("max_span_tokens", p.max_span_tokens);
    if (j.contains("theta") && !j["theta"].is_null()) p.theta = j["theta"].get<double>();
    p.canonical_only = j.value("canonical_only", p.canonical_only);
    p.temperature = j.value("temperature", p.temperature);
    p.copy_weight = j.value("copy_weight", p.copy_weight);
  } catch (const nlohmann::json::exception &e) {
    throw Error("invalid_config", std::string("paradigm block: ") + e.what());
  }
  if (p.top_k < 1) throw Error("invalid_config", "K must be >= 1");
  if (p.beam < 1) throw Error("invalid_config", "beam must be >= 1");
  if (p.max_span_tokens < 1) throw Error("invalid_config", "max_span_tokens must be >= 1");
  if (!(p.temperature > 0.0)) throw Error("invalid_config", "temperature must be positive");
  if (!(p.copy_weight >= 0.0 && p.copy_weight < 1.0)) throw Error("invalid_config", "copy_weight must be in [0, 1)");
  return p;
}

// Paths are kept as written and resolved against base_dir (the directory of
// the config file), so the config hash does not depend on where it lives.
struct RunConfig {
  std::filesystem::path base_dir;
  std::string kb;
  std::optional<std::string> view;  // partial KB file; none = full KB
  std::string train, dev, test;
  std::string output_dir;
  Mode mode = Mode::kDirect;
  std::uint64_t seed = 42;
  ParadigmConfig paradigm;

  std::filesystem::path resolve(const std::string &p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

// Everything that determines the outputs; the output directory is not part
// of it.
inline nlohmann::json run_identity(const RunConfig &c) {
  return nlohmann::json{{"kb", c.kb},
                        {"view", c.view ? nlohmann::json(*c.view) : nlohmann::json(nullptr)},
                        {"train", c.train},
                        {"dev", c.dev},
                        {"test", c.test},
                        {"mode", to_string(c.mode)},
                        {"seed", c.seed},
                        {"paradigm", paradigm_config_to_json(c.paradigm)}};
}

struct MatrixConfig {
  std::vector<Paradigm> paradigms;
  std::vector<Mode> modes;
  std::vector<std::optional<std::string>> views;  // null entry = full KB
};

struct ConfigFile {
  RunConfig run;
  std::optional<MatrixConfig> matrix;
};

namespace detail {

inline std::string required_string(const nlohmann::json &j, const char *key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error("invalid_config", std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

inline std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

inline std::string file_hash(const std::filesystem::path &path) {
  auto f = open_in(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

}  // namespace detail

inline ConfigFile parse_config(const nlohmann::json &j, const std::filesystem::path &base_dir) {
  static const std::set<std::string> known = {"kb",         "view", "train", "dev",      "test",
                                              "output_dir", "mode", "seed",  "paradigm", "matrix"};
  if (!j.is_object()) throw Error("invalid_config", "config must be a JSON object");
  for (const auto &[k, v] : j.items()) {
    if (!known.count(k)) throw Error("invalid_config", "unknown config key '" + k + "'");
  }
  ConfigFile out;
  RunConfig &r = out.run;
  r.base_dir = base_dir;
  r.kb = detail::required_string(j, "kb");
  r.train = detail::required_string(j, "train");
  r.dev = detail::required_string(j, "dev");
  r.test = detail::required_string(j, "test");
  r.output_dir = detail::required_string(j, "output_dir");
  try {
    if (j.contains("view") && !j["view"].is_null()) r.view = j["view"].get<std::string>();
    if (j.contains("mode")) r.mode = parse_mode(j["mode"].get<std::string>());
    r.seed = j.value("seed", r.seed);
    if (j.contains("matrix")) {
      const auto &m = j["matrix"];
      MatrixConfig mc;
      for (const auto &p : m.at("paradigms")) mc.paradigms.push_back(parse_paradigm(p.get<std::string>()));
      for (const auto &p : m.at("modes")) mc.modes.push_back(parse_mode(p.get<std::string>()));
      for (const auto &v : m.at("views")) {
        mc.views.push_back(v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>()));
      }
      if (mc.paradigms.empty() || mc.modes.empty() || mc.views.empty()) {
        throw Error("invalid_config", "matrix lists must be non-empty");
      }
      out.matrix = std::move(mc);
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error("invalid_config", e.what());
  }
  if (j.contains("paradigm")) {
    r.paradigm = paradigm_config_from_json(j["paradigm"]);
  } else if (!out.matrix) {
    throw Error("invalid_config", "missing paradigm block");
  }
  return out;
}

inline ConfigFile load_config(const std::filesystem::path &path) {
  const auto j = read_json_file(path);
  return parse_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

// Loaded inputs of one run. Cheap to copy; the KB and corpora are shared.
struct Inputs {
  std::shared_ptr<const KnowledgeBase> kb;
  std::optional<PartialKb> partial;
  std::shared_ptr<const Corpus> train, dev, test;

  KbView full_view() const { return KbView(*kb); }
  // E2: the partial view, or the whole KB when the run has none.
  KbView partial_view() const { return partial ? KbView(*kb, *partial) : KbView(*kb); }
};

inline Inputs load_inputs(const RunConfig &c) {
  Inputs in;
  in.kb = std::make_shared<const KnowledgeBase>(load_kb(c.resolve(c.kb)));
  if (c.view) {
    in.partial = load_partial(c.resolve(*c.view));
    (void)in.partial_view();  // parent and membership checks
  }
  in.train = std::make_shared<const Corpus>(load_corpus(c.resolve(c.train), Split::kTrain, in.kb.get()));
  in.dev = std::make_shared<const Corpus>(load_corpus(c.resolve(c.dev), Split::kDev, in.kb.get()));
  in.test = std::make_shared<const Corpus>(load_corpus(c.resolve(c.test), Split::kTest, in.kb.get()));
  return in;
}

struct Log {
  bool verbose = false;
  void operator()(const std::string &message) const {
    if (verbose) std::cerr << message << '\n';
  }
};

inline std::filesystem::path cache_dir_from_env() {
  const char *v = std::getenv(kCacheDirEnv);
  return v == nullptr ? std::filesystem::path() : std::filesystem::path(v);
}

inline bool needs_dev_tuning(const RunConfig &c) {
  return c.mode == Mode::kThreshold || (c.paradigm.paradigm == Paradigm::kNedNer && !c.paradigm.theta);
}

inline std::filesystem::path stage_file(const std::filesystem::path &dir, std::string_view stage, Split split) {
  return dir / (std::string(stage) + "_" + std::string(to_string(split)) + ".jsonl");
}

// Predictions that threshold tuning and evaluation start from.
inline std::filesystem::path scored_file(const RunConfig &c, const std::filesystem::path &dir, Split split) {
  return stage_file(dir, c.mode == Mode::kPostPrune ? "pruned" : "raw", split);
}

// --- stages ----------------------------------------------------------------

inline void train_stage(const RunConfig &c, const Inputs &in, const std::filesystem::path &dir, const Log &log) {
  if (c.paradigm.paradigm == Paradigm::kNedNer) {
    log("train: ned_ner has no trained parts");
    return;
  }
  const KbView e2 = in.partial_view();
  const Corpus restricted = c.mode == Mode::kInKbTrain ? restrict_gold(*in.train, e2) : *in.train;
  if (c.paradigm.paradigm == Paradigm::kNerNed) {
    const Gazetteer g = build_gazetteer(restricted, *in.kb);
    log("train: gazetteer with " + std::to_string(g.size()) + " entries");
    write_json_file(dir / "model" / "gazetteer.json", gazetteer_to_json(g));
  } else {
    const BigramLm lm = train_lm(restricted, *in.kb);
    log("train: bigram model over " + std::to_string(lm.vocab_size()) + " tokens");
    write_json_file(dir / "model" / "lm.json", lm.to_json());
  }
}

inline void link_stage(const RunConfig &c, const Inputs &in, const std::filesystem::path &dir, std::size_t jobs,
                       const Log &log) {
  const KbView view = c.mode == Mode::kPostPrune ? in.full_view() : in.partial_view();
  std::vector<Split> splits{Split::kTest};
  if (needs_dev_tuning(c)) splits.insert(splits.begin(), Split::kDev);
  const auto &pc = c.paradigm;

  std::optional<Gazetteer> gazetteer;
  std::optional<BigramLm> lm;
  std::optional<ConceptIndex> index;
  std::optional<NameTrie> trie;
  auto require = [&](const char *name) {
    const auto p = dir / "model" / name;
    if (!std::filesystem::exists(p)) throw Error("missing_stage", p.string() + " not found; run train first");
    return read_json_file(p);
  };
  switch (pc.paradigm) {
    case Paradigm::kNerNed:
      gazetteer = gazetteer_from_json(require("gazetteer.json"));
      index = load_or_build_index(view, cache_dir_from_env());
      break;
    case Paradigm::kNedNer:
      index = load_or_build_index(view, cache_dir_from_env());
      break;
    case Paradigm::kGenerative:
      lm = BigramLm::from_json(require("lm.json"));
      trie = build_trie(view, TrieOptions{pc.canonical_only});
      break;
  }
  const NedNerOptions ned_options{pc.top_k, pc.max_span_tokens, pc.theta.value_or(kNegInf), pc.temperature};
  const GenerativeOptions gen_options{pc.beam, pc.max_span_tokens, kNegInf, pc.copy_weight};
  std::optional<GenerativeDecoder> decoder;
  if (trie) decoder.emplace(*lm, *trie, gen_options);

  for (const Split split : splits) {
    const Corpus &corpus = split == Split::kDev ? *in.dev : *in.test;
    const auto &docs = corpus.documents();
    using Result = std::pair<std::vector<ScoredPrediction>, Retrieval>;
    auto results = parallel_map<Result>(docs.size(), jobs, [&](std::size_t i) -> Result {
      const Document &doc = docs[i];
      switch (pc.paradigm) {
        case Paradigm::kNerNed: return {link_ner_ned(doc, *gazetteer, *index), {}};
        case Paradigm::kNedNer: {
          auto r = link_ned_ner_detailed(doc, *index, ned_options);
          return {std::move(r.predictions), std::move(r.retrieval)};
        }
        case Paradigm::kGenerative:
          return {generative_predictions(doc, *trie, decoder->decode(doc), kNegInf), {}};
      }
      return {};
    });
    std::vector<ScoredPrediction> all;
    for (auto &r : results) all.insert(all.end(), r.first.begin(), r.first.end());
    log("link: " + std::to_string(all.size()) + " " + std::string(to_string(split)) + " predictions against " +
        view.name());
    write_prediction_file(stage_file(dir, "raw", split), std::move(all),
                          PredictionMeta{in.kb->name(), view.name(), pc.paradigm, split, "raw"});
    if (pc.paradigm == Paradigm::kNedNer) {
      std::vector<std::pair<std::string, Retrieval>> lists;
      for (std::size_t i = 0; i < docs.size(); ++i) lists.emplace_back(docs[i].doc_id(), std::move(results[i].second));
      auto f = detail::open_out(stage_file(dir, "retrieved", split));
      write_retrieved(lists, f);
    }
  }
}

// Post-pruning needs predictions made against the full KB.
inline void prune_stage(const RunConfig &c, const Inputs &in, const std::filesystem::path &dir, const Log &log) {
  const KbView e2 = in.partial_view();
  bool any = false;
  for (const Split split : {Split::kDev, Split::kTest}) {
    const auto raw = stage_file(dir, "raw", split);
    if (!std::filesystem::exists(raw)) continue;
    any = true;
    auto file = read_prediction_file(raw);
    if (file.meta.view != in.kb->name()) {
      throw Error("view_mismatch", raw.string() + " was produced against view '" + file.meta.view +
                                       "'; post-pruning needs predictions against the full KB '" + in.kb->name() +
                                       "'");
    }
    auto pruned = post_prune(file.predictions, e2);
    log("prune: kept " + std::to_string(pruned.size()) + " of " + std::to_string(file.predictions.size()) + " " +
        std::string(to_string(split)) + " predictions in " + e2.name());
    write_prediction_file(stage_file(dir, "pruned", split), std::move(pruned),
                          PredictionMeta{in.kb->name(), e2.name(), c.paradigm.paradigm, split, "pruned"});
  }
  if (!any) throw Error("missing_stage", "no raw predictions in " + dir.string() + "; run link first");
}

namespace detail {

inline PredictionFile read_scored(const RunConfig &c, const Inputs &in, const std::filesystem::path &dir,
                                  Split split) {
  const auto path = scored_file(c, dir, split);
  if (!std::filesystem::exists(path)) {
    throw Error("missing_stage", path.string() + " not found; run " +
                                     (c.mode == Mode::kPostPrune ? "prune" : "link") + " first");
  }
  auto file = read_prediction_file(path);
  const std::string e2 = in.partial_view().name();
  if (file.meta.view != e2) {
    throw Error("view_mismatch",
                path.string() + " holds predictions for view '" + file.meta.view + "', but the gold is '" + e2 + "'");
  }
  if (file.meta.paradigm != c.paradigm.paradigm) {
    throw Error("paradigm_mismatch", path.string() + " holds " + std::string(to_string(file.meta.paradigm)) +
                                         " predictions");
  }
  return file;
}

}  // namespace detail

inline Threshold tune_stage(const RunConfig &c, const Inputs &in, const std::filesystem::path &dir, const Log &log) {
  const auto file = detail::read_scored(c, in, dir, Split::kDev);
  const Corpus gold = restrict_gold(*in.dev, in.partial_view());
  const Threshold t = tune_threshold(file.predictions, gold.annotations(), c.paradigm.paradigm, "dev");
  log("tune-threshold: theta " + (std::isinf(t.value) ? std::string("-inf") : std::to_string(t.value)) +
      ", dev F1 " + std::to_string(t.dev_f1));
  write_json_file(dir / "threshold.json", threshold_to_json(t));
  return t;
}

inline MetricsReport evaluate_stage(const RunConfig &c, const Inputs &in, const std::filesystem::path &dir,
                                    const Log &log) {
  auto file = detail::read_scored(c, in, dir, Split::kTest);
  std::vector<ScoredPrediction> preds = std::move(file.predictions);
  if (needs_dev_tuning(c)) {
    const auto path = dir / "threshold.json";
    if (!std::filesystem::exists(path)) throw Error("missing_stage", path.string() + " not found; run tune-threshold");
    const Threshold t = threshold_from_json(read_json_file(path));
    if (t.paradigm != c.paradigm.paradigm) throw Error("paradigm_mismatch", path.string() + " belongs to another paradigm");
    preds = apply_threshold(preds, t.value);
  } else if (c.paradigm.theta && c.paradigm.paradigm != Paradigm::kNedNer) {
    preds = apply_threshold(preds, *c.paradigm.theta);
  }
  const Corpus gold = restrict_gold(*in.test, in.partial_view());
  const MetricsReport m = evaluate(preds, gold.annotations());
  auto j = metrics_to_json(m);
  if (c.paradigm.paradigm == Paradigm::kNedNer) {
    const auto retrieved_path = stage_file(dir, "retrieved", Split::kTest);
    if (std::filesystem::exists(retrieved_path)) {
      auto f = detail::open_in(retrieved_path);
      j["recall_at_k"] = {{"k", c.paradigm.top_k},
                          {"value", recall_at_k(parse_retrieved(f), gold.annotations(), c.paradigm.top_k)}};
    }
  }
  log("evaluate: EL F1 " + std::to_string(m.el.f1) + ", NER F1 " + std::to_string(m.ner.f1));
  write_prediction_file(dir / "predictions_test.jsonl", std::move(preds),
                        PredictionMeta{in.kb->name(), in.partial_view().name(), c.paradigm.paradigm, Split::kTest,
                                       "final"});
  write_json_file(dir / "metrics.json", j);
  return m;
}

inline nlohmann::json make_manifest(const RunConfig &c, const Inputs &in, const std::filesystem::path &dir) {
  nlohmann::json inputs{{"kb", detail::file_hash(c.resolve(c.kb))},
                        {"train", detail::file_hash(c.resolve(c.train))},
                        {"dev", detail::file_hash(c.resolve(c.dev))},
                        {"test", detail::file_hash(c.resolve(c.test))}};
  if (c.view) inputs["view"] = detail::file_hash(c.resolve(*c.view));
  std::map<std::string, std::string> outputs;
  for (const auto &e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), dir).generic_string();
    if (rel != "manifest.json") outputs[rel] = detail::file_hash(e.path());
  }
  return nlohmann::json{{"code_version", kCodeVersion},
                        {"config_hash", detail::hex64(fnv1a64(run_identity(c).dump()))},
                        {"kb", in.kb->name()},
                        {"view", in.partial_view().name()},
                        {"inference_view", c.mode == Mode::kPostPrune ? in.kb->name() : in.partial_view().name()},
                        {"paradigm", to_string(c.paradigm.paradigm)},
                        {"mode", to_string(c.mode)},
                        {"seed", c.seed},
                        {"inputs", std::move(inputs)},
                        {"outputs", outputs}};
}

// Names the pipeline may leave in a run directory.
inline bool is_stage_output(const std::string &rel) {
  static const char *prefixes[] = {"model/", "raw_", "pruned_", "retrieved_", "predictions_"};
  for (const char *p : prefixes) {
    if (rel.rfind(p, 0) == 0) return true;
  }
  return rel == "threshold.json" || rel == "metrics.json" || rel == "manifest.json";
}

enum class Commit {
  kReplace,  // the staged files replace every stage output of the target
  kMerge,    // the staging directory starts as a copy; files are updated
};

// Runs fn on a fresh staging directory next to `target`. On success the
// staged files are moved into `target`; on failure nothing in `target`
// changes and the staging directory is removed.
template <typename Fn>
void with_staging(const std::filesystem::path &target, Fn &&fn, Commit commit = Commit::kReplace) {
  namespace fs = std::filesystem;
  const fs::path abs = fs::absolute(target).lexically_normal();
  const fs::path parent = abs.has_filename() ? abs.parent_path() : abs.parent_path().parent_path();
  const fs::path name = abs.has_filename() ? abs.filename() : abs.parent_path().filename();
  const fs::path staging = parent / ("." + name.string() + ".staging");
  fs::remove_all(staging);
  fs::create_directories(staging);
  if (commit == Commit::kMerge && fs::exists(abs)) {
    for (const auto &e : fs::recursive_directory_iterator(abs)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), abs);
      if (!is_stage_output(rel.generic_string())) continue;
      fs::create_directories((staging / rel).parent_path());
      fs::copy_file(e.path(), staging / rel);
    }
  }
  try {
    fn(staging);
  } catch (const Error &e) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    // Report paths as the user knows them.
    std::string msg = e.what();
    const std::string from = staging.string(), to = abs.string();
    for (auto pos = msg.find(from); pos != std::string::npos; pos = msg.find(from, pos + to.size())) {
      msg.replace(pos, from.size(), to);
    }
    throw Error(e.code(), msg);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  fs::create_directories(abs);
  std::set<std::string> produced;
  for (const auto &e : fs::recursive_directory_iterator(staging)) {
    if (e.is_regular_file()) produced.insert(fs::relative(e.path(), staging).generic_string());
  }
  std::vector<fs::path> stale;
  for (const auto &e : fs::recursive_directory_iterator(abs)) {
    if (commit == Commit::kMerge || !e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), abs).generic_string();
    if (is_stage_output(rel) && !produced.count(rel)) stale.push_back(e.path());
  }
  for (const auto &p : stale) fs::remove(p);
  for (const auto &rel : produced) {
    const fs::path dst = abs / rel;
    fs::create_directories(dst.parent_path());
    fs::rename(staging / rel, dst);
  }
  fs::remove_all(staging);
}

// Full pipeline of one run: train, link, prune, tune, evaluate, manifest.
inline MetricsReport run_pipeline(const RunConfig &c, const Inputs &in, std::size_t jobs, const Log &log) {
  MetricsReport metrics;
  with_staging(c.resolve(c.output_dir), [&](const std::filesystem::path &dir) {
    log("run: " + std::string(to_string(c.paradigm.paradigm)) + " / " + std::string(to_string(c.mode)) + " / " +
        in.partial_view().name());
    train_stage(c, in, dir, log);
    link_stage(c, in, dir, jobs, log);
    if (c.mode == Mode::kPostPrune) prune_stage(c, in, dir, log);
    if (needs_dev_tuning(c)) tune_stage(c, in, dir, log);
    metrics = evaluate_stage(c, in, dir, log);
    write_json_file(dir / "manifest.json", make_manifest(c, in, dir));
  });
  return metrics;
}

// Directory label of a view inside a matrix output tree.
inline std::string view_label(const Inputs &in) {
  const std::string f = view_file_name(in.partial_view().name());
  return f.substr(0, f.size() - 5);  // drop ".json"
}

struct MatrixRun {
  RunConfig config;
  std::filesystem::path output_dir;
  MetricsReport metrics;
};

// Expands the matrix into <output_dir>/<paradigm>/<mode>/<view>/ runs.
inline std::vector<MatrixRun> run_matrix(const ConfigFile &cf, std::size_t jobs, const Log &log) {
  if (!cf.matrix) throw Error("invalid_config", "no matrix block");
  std::vector<MatrixRun> runs;
  const RunConfig &base = cf.run;
  const Inputs shared = [&] {
    RunConfig full = base;
    full.view.reset();
    return load_inputs(full);
  }();
  for (const auto &view : cf.matrix->views) {
    Inputs in = shared;
    if (view) {
      in.partial = load_partial(base.resolve(*view));
      (void)in.partial_view();
    }
    for (const Paradigm p : cf.matrix->paradigms) {
      for (const Mode m : cf.matrix->modes) {
        RunConfig c = base;
        c.view = view;
        c.mode = m;
        if (!(c.paradigm.paradigm == p)) {
          const ParadigmConfig defaults;
          c.paradigm.paradigm = p;
          if (base.paradigm.paradigm != p) c.paradigm.theta = defaults.theta;
        }
        const std::filesystem::path rel =
            std::filesystem::path(base.output_dir) / std::string(to_string(p)) / std::string(to_string(m)) /
            view_label(in);
        c.output_dir = rel.generic_string();
        MatrixRun r{c, c.resolve(c.output_dir), {}};
        r.metrics = run_pipeline(c, in, jobs, log);
        runs.push_back(std::move(r));
      }
    }
  }
  return runs;
}

// Annotation-proportion report of a matrix: for each paradigm, the direct
// runs on the partial views against the direct full-KB run. Writes
// <output_dir>/<paradigm>/proportion.tsv, and proportion.svg when asked.
inline std::vector<std::pair<Paradigm, ProportionReport>> report_stage(const ConfigFile &cf, bool plot,
                                                                       const Log &log) {
  if (!cf.matrix) throw Error("invalid_config", "report needs a matrix block");
  const auto &m = *cf.matrix;
  if (std::find(m.modes.begin(), m.modes.end(), Mode::kDirect) == m.modes.end()) {
    throw Error("invalid_config", "report needs the direct mode in the matrix");
  }
  if (std::find(m.views.begin(), m.views.end(), std::nullopt) == m.views.end()) {
    throw Error("invalid_config", "report needs the full KB (a null view) in the matrix");
  }
  const RunConfig &base = cf.run;
  RunConfig full_cfg = base;
  full_cfg.view.reset();
  const Inputs shared = load_inputs(full_cfg);
  const std::filesystem::path root = base.resolve(base.output_dir);
  auto metrics_of = [&](Paradigm p, const Inputs &in) {
    const auto path = root / std::string(to_string(p)) / "direct" / view_label(in) / "metrics.json";
    if (!std::filesystem::exists(path)) throw Error("missing_stage", path.string() + " not found; run the matrix first");
    return metrics_from_json(read_json_file(path));
  };
  std::vector<std::pair<Paradigm, ProportionReport>> out;
  for (const Paradigm p : m.paradigms) {
    const MetricsReport full = metrics_of(p, shared);
    std::vector<ProportionRun> runs;
    for (const auto &view : m.views) {
      if (!view) continue;
      Inputs in = shared;
      in.partial = load_partial(base.resolve(*view));
      const KbView v = in.partial_view();
      runs.push_back(ProportionRun{v.name(), *stats(*in.train, v, in.train.get()).annotation_proportion, full,
                                   metrics_of(p, in)});
    }
    ProportionReport report = proportion_report(runs);
    const auto dir = root / std::string(to_string(p));
    {
      auto f = detail::open_out(dir / "proportion.tsv");
      write_proportion_tsv(report, f);
    }
    if (plot) {
      auto f = detail::open_out(dir / "proportion.svg");
      write_proportion_svg(report, f);
    }
    log("report: " + std::string(to_string(p)) + " over " + std::to_string(runs.size()) + " views");
    out.emplace_back(p, std::move(report));
  }
  return out;
}

}  // namespace partial_el
