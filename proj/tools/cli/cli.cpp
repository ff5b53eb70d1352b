// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include <relann/errors.hpp>
#include <relann/log.hpp>

#include "commands.hpp"

namespace relann::cli {

namespace {

// Option long names double as config keys (dashes or underscores) and as
// RELANN_<NAME> environment variables.
std::string key_of(const CLI::Option* opt) {
  auto name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

std::string env_name(const std::string& key) {
  std::string out = "RELANN_";
  for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

struct ConfigValues {
  std::map<std::string, std::string> global;
  std::map<std::string, std::map<std::string, std::string>> sections;
};

ConfigValues load_config(const std::string& path) {
  ConfigValues out;
  if (path.empty()) return out;
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '-', '_');
    std::string value = item.inputs.size() == 1 ? item.inputs.front() : CLI::detail::join(item.inputs, ",");
    if (item.parents.empty()) {
      out.global[key] = value;
    } else {
      out.sections[item.parents.front()][key] = value;
    }
  }
  return out;
}

// Precedence: flag > environment > [subcommand] section > top-level key >
// built-in default.
void apply_layers(CLI::App& scope, const ConfigValues& config, const std::string& section,
                  std::map<std::string, bool>& used_keys) {
  const auto sect = config.sections.find(section);
  for (auto* opt : scope.get_options()) {
    if (opt->get_lnames().empty() || opt->count() > 0) continue;
    const auto key = key_of(opt);
    if (key == "help" || key == "config") continue;
    std::optional<std::string> value;
    if (const char* env = std::getenv(env_name(key).c_str())) {
      value = env;
    } else if (sect != config.sections.end() && sect->second.contains(key)) {
      value = sect->second.at(key);
    } else if (config.global.contains(key)) {
      value = config.global.at(key);
    }
    if (sect != config.sections.end() && sect->second.contains(key)) used_keys["[" + section + "]." + key] = true;
    if (config.global.contains(key)) used_keys[key] = true;
    if (!value) continue;
    opt->add_result(*value);
    opt->run_callback();
  }
}

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const LeakageError*>(&e)) return "LeakageError";
  if (dynamic_cast<const CapabilityError*>(&e)) return "CapabilityError";
  if (dynamic_cast<const TransportError*>(&e)) return "TransportError";
  if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const ExtractionError*>(&e)) return "ExtractionError";
  if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
  if (dynamic_cast<const UndefinedMetricError*>(&e)) return "UndefinedMetricError";
  if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

log::Level level_from_string(const std::string& s) {
  if (s == "debug") return log::Level::debug;
  if (s == "info") return log::Level::info;
  if (s == "warn") return log::Level::warn;
  if (s == "error") return log::Level::error;
  throw CLI::ValidationError("--log-level", "must be debug, info, warn or error");
}

struct Options {
  std::string config;
  std::string log_level = "info";
  EndpointOptions endpoint;
  IngestOptions ingest;
  RankOptions rank;
  SampleOptions sample;
  DefineOptions define;
  AnnotateOptions annotate;
  DistillOptions distill;
  EvaluateOptions evaluate;
  AuditOptions audit;
  SweepOptions sweep;
  BenchmarkOptions benchmark;
};

void add_endpoint_options(CLI::App& app, EndpointOptions& e) {
  const char* group = "Endpoints";
  app.add_option("--teacher-base-url", e.teacher_base_url, "OpenAI-compatible base URL of the teacher chat model")
      ->group(group)
      ->capture_default_str();
  app.add_option("--teacher-model", e.teacher_model, "Teacher chat model name")->group(group);
  app.add_option("--student-base-url", e.student_base_url, "Student endpoint (default: teacher URL)")->group(group);
  app.add_option("--student-model", e.student_model, "Student chat model name")->group(group);
  app.add_option("--embedding-base-url", e.embedding_base_url, "Embedding endpoint (default: teacher URL)")
      ->group(group);
  app.add_option("--embedding-model", e.embedding_model, "Embedding model name")->group(group)->capture_default_str();
  app.add_option("--api-key-env", e.api_key_env, "Environment variable holding the API key")
      ->group(group)
      ->capture_default_str();
  app.add_option("--cache-dir", e.cache_dir, "Response cache directory")->group(group)->capture_default_str();
  app.add_flag("--no-cache", e.no_cache, "Bypass the response cache")->group(group);
  app.add_option("--max-in-flight", e.max_in_flight, "Concurrent HTTP requests per endpoint")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--max-attempts", e.max_attempts, "Attempts per request including retries")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--timeout", e.timeout_s, "Per-request timeout in seconds")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void build(CLI::App& app, Options& o, std::map<CLI::App*, std::function<int()>>& actions) {
  app.add_option("--config", o.config, "TOML config file (also RELANN_CONFIG)");
  app.add_option("--log-level", o.log_level, "debug | info | warn | error")->capture_default_str();
  add_endpoint_options(app, o.endpoint);
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  {
    auto& x = o.ingest;
    auto* c = app.add_subcommand("ingest", "Validate a corpus, optionally merge short chunks and write a split");
    c->add_option("--queries", x.queries, "queries.jsonl");
    c->add_option("--documents", x.documents, "documents.jsonl");
    c->add_option("--gold", x.gold, "gold.jsonl");
    c->add_option("--out-dir", x.out_dir, "Directory for the normalized corpus");
    c->add_option("--min-tokens", x.min_tokens, "Merge chunks shorter than this into a neighbour")->capture_default_str();
    c->add_option("--split-out", x.split_out, "Write a train/test split to this path");
    c->add_option("--query-test-fraction", x.query_test_fraction, "Share of queries held out")->capture_default_str();
    c->add_option("--report-test-fraction", x.report_test_fraction, "Share of reports held out")
        ->capture_default_str();
    c->add_option("--seed", x.seed, "Split seed")->capture_default_str();
    actions[c] = [&] { return run_ingest(x); };
  }
  {
    auto& x = o.rank;
    auto* c = app.add_subcommand("rank", "Dense retrieval or listwise reranking");
    c->add_option("--queries", x.queries, "queries.jsonl");
    c->add_option("--documents", x.documents, "documents.jsonl");
    c->add_option("--out", x.out, "rankings.jsonl");
    c->add_option("--method", x.method, "dense | listwise")->capture_default_str();
    c->add_option("--initial", x.initial, "Initial rankings for listwise reranking");
    c->add_option("--window", x.window, "Listwise window size")->capture_default_str()->check(CLI::Range(1, 100));
    c->add_option("--step", x.step, "Listwise step")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--top-n", x.top_n, "Rerank only the first N documents (0: all)")->capture_default_str();
    c->add_flag("--with-definition", x.with_definition, "Include query definitions in listwise prompts");
    actions[c] = [&] { return run_rank(x, o.endpoint); };
  }
  {
    auto& x = o.sample;
    auto* c = app.add_subcommand("sample", "Draw balanced inside/outside top-k pairs per query");
    c->add_option("--rankings", x.rankings, "rankings.jsonl");
    c->add_option("--out", x.out, "pairs.jsonl");
    c->add_option("--k", x.k, "Top-k cutoff")->capture_default_str();
    c->add_option("--per-side", x.per_side, "Pairs per side of the cutoff")->capture_default_str();
    c->add_option("--seed", x.seed, "Sampling seed")->capture_default_str();
    c->add_option("--fill-policy", x.fill_policy, "strict | fill")->capture_default_str();
    c->add_option("--split", x.split, "split.json used to tag pairs");
    c->add_option("--documents", x.documents, "documents.jsonl (needed with --split)");
    actions[c] = [&] { return run_sample(x); };
  }
  {
    auto& x = o.define;
    auto* c = app.add_subcommand("define", "Generate relevance definitions for queries");
    c->add_option("--queries", x.queries, "queries.jsonl");
    c->add_option("--out", x.out, "queries.jsonl with definitions");
    c->add_option("--improved-examples", x.improved_examples,
                  "JSONL of {query_id, examples} used to regenerate definitions");
    c->add_flag("--fixed-qa", x.fixed_qa, "Use the fixed question-answering definition for every query");
    c->add_flag("--overwrite", x.overwrite, "Regenerate definitions that already exist");
    actions[c] = [&] { return run_define(x, o.endpoint); };
  }
  {
    auto& x = o.annotate;
    auto* c = app.add_subcommand("annotate", "Annotate query-document pairs with a chat model");
    c->add_option("--queries", x.queries, "queries.jsonl");
    c->add_option("--documents", x.documents, "documents.jsonl");
    c->add_option("--pairs", x.pairs, "pairs.jsonl");
    c->add_option("--out", x.out, "annotations.jsonl");
    c->add_option("--errors", x.errors, "Per-pair error ledger (default: errors.jsonl next to --out)");
    c->add_option("--variant", x.variant, "Prompt variant, e.g. point-ask-d, point-cot-prob-d")->capture_default_str();
    c->add_option("--calib", x.calib, "ask | tok | both")->capture_default_str();
    c->add_option("--primary", x.primary, "Source of relevance_score: ask | tok");
    c->add_option("--role", x.role, "teacher | student")->capture_default_str();
    c->add_flag("--renormalize-tok", x.renormalize_tok, "Divide tok confidence by the Yes+No alternative mass");
    c->add_option("--parallelism", x.parallelism, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--proxy-out", x.proxy_out, "CSV of mean relevance score per query");
    actions[c] = [&] { return run_annotate(x, o.endpoint); };
  }
  {
    auto& x = o.distill;
    auto* c = app.add_subcommand("distill", "Export train-side annotations as fine-tuning records");
    c->add_option("--annotations", x.annotations, "annotations.jsonl");
    c->add_option("--queries", x.queries, "queries.jsonl");
    c->add_option("--documents", x.documents, "documents.jsonl");
    c->add_option("--split", x.split, "split.json");
    c->add_option("--out", x.out, "train.jsonl (manifest.json is written next to it)");
    c->add_option("--variant", x.variant, "Prompt variant of the exported records")->capture_default_str();
    c->add_option("--source", x.source, "Confidence written into completions: ask | tok");
    c->add_option("--balance-out", x.balance_out, "Write a Yes/No balance report");
    c->add_option("--band-low", x.band_low, "Lowest acceptable Yes fraction")->capture_default_str();
    c->add_option("--band-high", x.band_high, "Highest acceptable Yes fraction")->capture_default_str();
    actions[c] = [&] { return run_distill(x); };
  }
  {
    auto& x = o.evaluate;
    auto* c = app.add_subcommand("evaluate", "Score annotations against gold labels");
    c->add_option("--annotations", x.annotations, "annotations.jsonl");
    c->add_option("--gold", x.gold, "gold.jsonl");
    c->add_option("--out", x.out, "report.json (default: stdout)");
    c->add_option("--scheme", x.scheme, "grade | three_way | graded_1_3 | binary")->capture_default_str();
    c->add_option("--partial-policy", x.partial_policy, "relevant | irrelevant")->capture_default_str();
    c->add_option("--confidence-source", x.confidence_source, "ask | tok (default: primary source)");
    c->add_option("--unlabeled", x.unlabeled, "Annotated pairs without gold: irrelevant | skip")
        ->capture_default_str();
    c->add_option("--bins", x.bins, "ECE bins")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--k", x.k, "Rank cutoff for nDCG and MAP (0: full list)")->capture_default_str();
    actions[c] = [&] { return run_evaluate(x); };
  }
  {
    auto& x = o.audit;
    auto* c = app.add_subcommand("audit", "Sample disagreements for review, or tabulate reviewed verdicts");
    c->add_option("--annotations", x.annotations, "annotations.jsonl");
    c->add_option("--original-labels", x.original_labels, "gold.jsonl with the original labels");
    c->add_option("--out", x.out, "disagreements.jsonl");
    c->add_option("--per-bin", x.per_bin, "Disagreements sampled per confidence bin")->capture_default_str();
    c->add_option("--seed", x.seed, "Sampling seed")->capture_default_str();
    c->add_option("--disagreements", x.disagreements, "disagreements.jsonl to tabulate");
    c->add_option("--verdicts", x.verdicts, "verdicts.jsonl from human review");
    c->add_option("--table-out", x.table_out, "Accuracy table JSON (default: stdout)");
    c->add_option("--cutoff", x.cutoff, "Confidence cutoff separating table columns")->capture_default_str();
    actions[c] = [&] { return run_audit(x); };
  }
  {
    auto& x = o.sweep;
    auto* c = app.add_subcommand("sweep", "F1 of thresholded relevance scores over a grid");
    c->add_option("--annotations", x.annotations, "annotations.jsonl");
    c->add_option("--gold", x.gold, "gold.jsonl");
    c->add_option("--out", x.out, "CSV output (default: stdout)");
    c->add_option("--grid-step", x.grid_step, "Threshold grid step")->capture_default_str();
    c->add_option("--partial-policy", x.partial_policy, "relevant | irrelevant")->capture_default_str();
    c->add_option("--unlabeled", x.unlabeled, "irrelevant | skip")->capture_default_str();
    actions[c] = [&] { return run_sweep(x); };
  }
  {
    auto& x = o.benchmark;
    auto* c = app.add_subcommand("benchmark", "Kendall tau between two rankings or annotation files");
    c->add_option("--a", x.a, "First rankings.jsonl or annotations.jsonl");
    c->add_option("--b", x.b, "Second rankings.jsonl or annotations.jsonl");
    c->add_option("--out", x.out, "JSON output (default: stdout)");
    actions[c] = [&] { return run_benchmark(x); };
  }
}

int execute(CLI::App& app, Options& o, const std::map<CLI::App*, std::function<int()>>& actions) {
  if (o.config.empty()) {
    if (const char* p = std::getenv("RELANN_CONFIG")) o.config = p;
  }
  const auto config = load_config(o.config);
  CLI::App* sub = app.get_subcommands().front();
  std::map<std::string, bool> used;
  apply_layers(app, config, sub->get_name(), used);
  apply_layers(*sub, config, sub->get_name(), used);
  for (const auto& [key, _] : config.global) {
    if (!used.contains(key)) log::warn("unknown_config_key", {{"key", key}});
  }
  if (const auto it = config.sections.find(sub->get_name()); it != config.sections.end()) {
    for (const auto& [key, _] : it->second) {
      if (!used.contains("[" + sub->get_name() + "]." + key)) {
        log::warn("unknown_config_key", {{"key", key}, {"section", sub->get_name()}});
      }
    }
  }
  log::set_min_level(level_from_string(o.log_level));
  return actions.at(sub)();
}

int run(CLI::App& app, Options& o, const std::map<CLI::App*, std::function<int()>>& actions,
        const std::function<void()>& parse) {
  try {
    parse();
    return execute(app, o, actions);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const CapabilityError& e) {
    log::error("command_failed",
               {{"error_type", "CapabilityError"},
                {"message", e.what()},
                {"hint", "the endpoint does not return token log probabilities; rerun with --calib ask"}});
    return 1;
  } catch (const TransportError& e) {
    log::error("command_failed", {{"error_type", "TransportError"},
                                  {"message", e.what()},
                                  {"attempts", e.attempts()},
                                  {"last_status", e.last_status()}});
    return 1;
  } catch (const std::exception& e) {
    log::error("command_failed", {{"error_type", error_type(e)}, {"message", e.what()}});
    return 1;
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app("relann: relevance annotation with calibrated LLM judges", "relann");
  Options o;
  std::map<CLI::App*, std::function<int()>> actions;
  build(app, o, actions);
  return run(app, o, actions, [&] { app.parse(argc, argv); });
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app("relann: relevance annotation with calibrated LLM judges", "relann");
  Options o;
  std::map<CLI::App*, std::function<int()>> actions;
  build(app, o, actions);
  // CLI11 consumes the vector from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  return run(app, o, actions, [&] { app.parse(reversed); });
}

}  // namespace relann::cli
