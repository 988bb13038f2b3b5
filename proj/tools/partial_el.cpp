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


// partial-el: command-line front end.
//
//   partial-el <subcommand> --config PATH [--jobs N] [--plot] [--verbose]
//
// Failures print one "error: <code>: <message>" line and exit nonzero.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "partial_el/partial_el.hpp"

namespace pel = partial_el;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::size_t jobs = 1;
  bool plot = false;
  bool verbose = false;
};

fs::path base_of(const fs::path &config) {
  return config.has_parent_path() ? config.parent_path() : fs::path(".");
}

fs::path resolve(const fs::path &base, const std::string &p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string string_field(const json &j, const char *key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw pel::Error("invalid_config", std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

// {"kb", "name", "selector": {"ids": [...]} | {"semantic_type": code} |
//  {"names_file": path}, "output"}
int cmd_kb_subset(const Options &o) {
  const auto j = pel::read_json_file(o.config);
  const auto base = base_of(o.config);
  const auto kb = pel::load_kb(resolve(base, string_field(j, "kb")));
  if (!j.contains("selector") || !j["selector"].is_object() || j["selector"].size() != 1) {
    throw pel::Error("invalid_config", "selector must hold exactly one of ids, semantic_type, names_file");
  }
  const auto &s = j["selector"];
  pel::Selector selector;
  try {
    if (s.contains("ids")) {
      pel::IdListSelector ids;
      for (const auto &id : s["ids"]) ids.ids.emplace_back(id.get<std::string>());
      selector = std::move(ids);
    } else if (s.contains("semantic_type")) {
      selector = pel::SemanticTypeSelector{s["semantic_type"].get<std::string>()};
    } else if (s.contains("names_file")) {
      selector = pel::NameListSelector{resolve(base, s["names_file"].get<std::string>())};
    } else {
      throw pel::Error("invalid_config", "unknown selector kind '" + s.begin().key() + "'");
    }
  } catch (const json::exception &e) {
    throw pel::Error("invalid_config", std::string("selector: ") + e.what());
  }
  const auto r = pel::subset(kb, selector, string_field(j, "name"));
  pel::write_json_file(resolve(base, string_field(j, "output")), pel::partial_to_json(r.partial));
  std::cout << r.partial.name << '\t' << r.partial.member_ids.size() << " concepts\t" << r.dropped
            << " selector entries not in " << kb.name() << '\n';
  if (!r.proper) std::cerr << "warning: '" << r.partial.name << "' covers the whole KB\n";
  return 0;
}

// {"kb", "view", "output"}
int cmd_kb_complement(const Options &o) {
  const auto j = pel::read_json_file(o.config);
  const auto base = base_of(o.config);
  const auto kb = pel::load_kb(resolve(base, string_field(j, "kb")));
  const auto partial = pel::load_partial(resolve(base, string_field(j, "view")));
  const auto c = pel::complement(kb, partial);
  pel::write_json_file(resolve(base, string_field(j, "output")), pel::partial_to_json(c));
  std::cout << c.name << '\t' << c.member_ids.size() << " concepts\n";
  return 0;
}

// Synth config plus "output_dir".
int cmd_synth(const Options &o) {
  auto j = pel::read_json_file(o.config);
  const auto out = resolve(base_of(o.config), string_field(j, "output_dir"));
  j.erase("output_dir");
  const auto config = pel::synth_config_from_json(j);
  pel::with_staging(out, [&](const fs::path &dir) { pel::write_synth(pel::generate(config), dir); });
  if (o.verbose) std::cerr << "synth: wrote " << out.string() << '\n';
  return 0;
}

pel::RunConfig single_run(const Options &o) {
  auto cf = pel::load_config(o.config);
  if (cf.matrix) throw pel::Error("invalid_config", "matrix configs are handled by 'run' and 'report'");
  return cf.run;
}

void print_metrics(const pel::MetricsReport &m) { std::cout << pel::metrics_to_json(m).dump() << '\n'; }

template <typename Step>
int stage(const Options &o, Step &&step) {
  const auto cfg = single_run(o);
  const auto in = pel::load_inputs(cfg);
  const pel::Log log{o.verbose};
  pel::with_staging(
      cfg.resolve(cfg.output_dir), [&](const fs::path &dir) { step(cfg, in, dir, log); }, pel::Commit::kMerge);
  return 0;
}

int cmd_run(const Options &o) {
  const auto cf = pel::load_config(o.config);
  const pel::Log log{o.verbose};
  if (!cf.matrix) {
    print_metrics(pel::run_pipeline(cf.run, pel::load_inputs(cf.run), o.jobs, log));
    return 0;
  }
  for (const auto &r : pel::run_matrix(cf, o.jobs, log)) {
    std::printf("%s\tel_f1=%.6f\tner_f1=%.6f\n", r.config.output_dir.c_str(), r.metrics.el.f1, r.metrics.ner.f1);
  }
  return 0;
}

int cmd_report(const Options &o) {
  const auto cf = pel::load_config(o.config);
  for (const auto &[p, report] : pel::report_stage(cf, o.plot, pel::Log{o.verbose})) {
    std::cout << "# " << pel::to_string(p) << '\n';
    pel::write_proportion_tsv(report, std::cout);
  }
  return 0;
}

std::string one_line(std::string s) {
  for (char &c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Entity linking with partial knowledge bases"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--jobs", o.jobs, "Worker threads for document-level work")->check(CLI::PositiveNumber);
  app.add_flag("--plot", o.plot, "Also write SVG plots");
  app.add_flag("--verbose", o.verbose, "Progress on stderr");

  using Handler = int (*)(const Options &);
  const std::vector<std::pair<const char *, std::pair<const char *, Handler>>> commands = {
      {"kb-subset", {"Select a partial KB", cmd_kb_subset}},
      {"kb-complement", {"Complement of a partial KB", cmd_kb_complement}},
      {"synth", {"Generate a synthetic KB and corpus", cmd_synth}},
      {"train", {"Build the gazetteer or language model",
                 [](const Options &o) { return stage(o, pel::train_stage); }}},
      {"link", {"Link dev/test documents",
                [](const Options &o) {
                  return stage(o, [&](const pel::RunConfig &c, const pel::Inputs &in, const fs::path &dir,
                                      const pel::Log &log) { pel::link_stage(c, in, dir, o.jobs, log); });
                }}},
      {"tune-threshold", {"Tune the score threshold on dev",
                          [](const Options &o) {
                            return stage(o, [](const pel::RunConfig &c, const pel::Inputs &in, const fs::path &dir,
                                               const pel::Log &log) { pel::tune_stage(c, in, dir, log); });
                          }}},
      {"prune", {"Drop predictions outside the partial KB", [](const Options &o) { return stage(o, pel::prune_stage); }}},
      {"evaluate", {"Score test predictions",
                    [](const Options &o) {
                      return stage(o, [](const pel::RunConfig &c, const pel::Inputs &in, const fs::path &dir,
                                         const pel::Log &log) { print_metrics(pel::evaluate_stage(c, in, dir, log)); });
                    }}},
      {"report", {"Annotation-proportion report of a matrix", cmd_report}},
      {"run", {"Full pipeline, or the whole matrix", cmd_run}},
  };
  std::vector<std::pair<CLI::App *, Handler>> subs;
  for (const auto &[name, entry] : commands) subs.emplace_back(app.add_subcommand(name, entry.first), entry.second);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    for (const auto &[sub, handler] : subs) {
      if (sub->parsed()) return handler(o);
    }
  } catch (const pel::Error &e) {
    std::cerr << "error: " << e.code() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error: io_error: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 1;
}
