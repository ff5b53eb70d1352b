// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <relann/annotator.hpp>
#include <relann/corpus_io.hpp>
#include <relann/distill.hpp>
#include <relann/errors.hpp>
#include <relann/evaluate.hpp>
#include <relann/jsonl.hpp>
#include <relann/log.hpp>
#include <relann/metrics.hpp>
#include <relann/retrieval.hpp>
#include <relann/sampler.hpp>

namespace relann::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw PreconditionError(std::string("missing required option ") + flag);
}

void print(const ojson& j) { std::cout << j.dump(2) << "\n"; }

// Writes `text` to `path`, or to stdout when path is empty.
void emit_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    jsonl::write_text(path, text);
  }
}

enum class Role { teacher, student, embedding };

GatewayConfig gateway_config(const EndpointOptions& e, Role role) {
  GatewayConfig c;
  c.base_url = e.teacher_base_url;
  if (role == Role::student && !e.student_base_url.empty()) c.base_url = e.student_base_url;
  if (role == Role::embedding && !e.embedding_base_url.empty()) c.base_url = e.embedding_base_url;
  if (!e.api_key_env.empty()) {
    if (const char* key = std::getenv(e.api_key_env.c_str())) c.api_key = key;
  }
  c.embedding_model = e.embedding_model;
  c.cache_dir = e.cache_dir;
  c.cache_enabled = !e.no_cache;
  c.max_in_flight = e.max_in_flight;
  c.max_attempts = e.max_attempts;
  c.timeout = std::chrono::seconds(e.timeout_s);
  return c;
}

std::string chat_model(const EndpointOptions& e, Role role) {
  const auto& m = role == Role::student ? e.student_model : e.teacher_model;
  if (m.empty()) {
    throw PreconditionError(role == Role::student ? "missing --student-model (or student_model in the config file)"
                                                  : "missing --teacher-model (or teacher_model in the config file)");
  }
  return m;
}

metrics::PartialPolicy partial_policy(const std::string& s) {
  if (s == "relevant") return metrics::PartialPolicy::as_relevant;
  if (s == "irrelevant") return metrics::PartialPolicy::as_irrelevant;
  throw PreconditionError("--partial-policy must be relevant or irrelevant");
}

UnlabeledPolicy unlabeled_policy(const std::string& s) {
  if (s == "irrelevant") return UnlabeledPolicy::irrelevant;
  if (s == "skip") return UnlabeledPolicy::skip;
  throw PreconditionError("--unlabeled must be irrelevant or skip");
}

std::unordered_map<std::string, const DocumentChunk*> index_chunks(const std::vector<DocumentChunk>& chunks) {
  std::unordered_map<std::string, const DocumentChunk*> out;
  for (const auto& c : chunks) out.emplace(c.id, &c);
  return out;
}

ojson stats_json(const CorpusStats& s) {
  ojson j;
  j["pairs"] = s.pairs;
  j["annotated"] = s.annotated;
  j["failed"] = s.failed;
  j["network_calls"] = s.network_calls;
  j["cache_hits"] = s.cache_hits;
  j["prompt_tokens"] = s.prompt_tokens;
  j["completion_tokens"] = s.completion_tokens;
  return j;
}

}  // namespace

int run_ingest(const IngestOptions& o) {
  require(o.queries, "--queries");
  require(o.documents, "--documents");
  const auto queries = io::read_queries(o.queries);
  auto chunks = io::read_documents(o.documents);
  std::vector<GoldLabel> gold;
  if (!o.gold.empty()) gold = io::read_gold(o.gold);

  const auto report = validate_corpus(queries, chunks, gold, count_whitespace_tokens);
  if (!report.ok()) {
    ojson findings = ojson::array();
    for (const auto& f : report.findings) findings.push_back({{"kind", to_string(f.kind)}, {"detail", f.detail}});
    print({{"ok", false}, {"findings", findings}});
    throw SchemaError("corpus validation failed with " + std::to_string(report.findings.size()) + " finding(s)");
  }

  ojson summary;
  summary["ok"] = true;
  summary["queries"] = queries.size();
  summary["documents_in"] = chunks.size();

  if (o.min_tokens > 0) {
    auto merged = merge_short_chunks(chunks, o.min_tokens);
    // Gold rows follow their chunk into the merged chunk.
    std::map<std::string, std::string> merged_id;
    for (const auto& m : merged.chunks) {
      std::stringstream ids(m.id);
      for (std::string part; std::getline(ids, part, '+');) merged_id[part] = m.id;
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (auto& g : gold) {
      g.doc_id = merged_id.at(g.doc_id);
      if (!seen.emplace(g.query_id, g.doc_id).second) {
        throw PreconditionError("--min-tokens merges two gold-labelled chunks of query " + g.query_id + " into " +
                                g.doc_id + "; merge before labelling");
      }
    }
    chunks = std::move(merged.chunks);
    summary["short_chunks"] = merged.short_chunks;
  }
  summary["documents_out"] = chunks.size();
  summary["gold"] = gold.size();

  if (!o.out_dir.empty()) {
    const fs::path dir(o.out_dir);
    io::write_queries(dir / "queries.jsonl", queries);
    io::write_documents(dir / "documents.jsonl", chunks);
    if (!o.gold.empty()) io::write_gold(dir / "gold.jsonl", gold);
  }

  if (!o.split_out.empty()) {
    std::vector<std::string> qids, rids;
    for (const auto& q : queries) qids.push_back(q.id);
    for (const auto& c : chunks) rids.push_back(c.report_id);
    const auto split = split_train_test(qids, rids, o.query_test_fraction, o.report_test_fraction, o.seed);
    io::write_split(o.split_out, split);
    summary["split"] = {{"train_queries", split.train_queries.size()},
                        {"test_queries", split.test_queries.size()},
                        {"train_reports", split.train_reports.size()},
                        {"test_reports", split.test_reports.size()},
                        {"seed", split.seed}};
  }
  print(summary);
  return 0;
}

int run_rank(const RankOptions& o, const EndpointOptions& e) {
  require(o.queries, "--queries");
  require(o.documents, "--documents");
  require(o.out, "--out");
  const auto queries = io::read_queries(o.queries);
  const auto chunks = io::read_documents(o.documents);
  std::vector<Ranking> rankings;

  if (o.method == "dense") {
    Gateway gateway(gateway_config(e, Role::embedding));
    for (const auto& q : queries) rankings.push_back(rank_documents(q, chunks, gateway));
  } else if (o.method == "listwise") {
    require(o.initial, "--initial");
    Gateway gateway(gateway_config(e, Role::teacher));
    ListwiseConfig cfg;
    cfg.model = chat_model(e, Role::teacher);
    cfg.window = o.window;
    cfg.step = o.step;
    const auto by_id = index_chunks(chunks);
    std::map<std::string, Ranking> initial;
    for (auto& r : read_rankings(o.initial)) initial.emplace(r.query_id, std::move(r));
    std::size_t failed = 0;
    for (const auto& q : queries) {
      const auto it = initial.find(q.id);
      if (it == initial.end()) {
        log::warn("query_without_initial_ranking", {{"query_id", q.id}});
        continue;
      }
      if (o.with_definition && !q.definition) {
        throw PreconditionError("--with-definition: query " + q.id + " has no definition (run `define` first)");
      }
      std::vector<DocumentChunk> order;
      for (const auto& entry : it->second.entries) {
        const auto c = by_id.find(entry.doc_id);
        if (c == by_id.end()) throw PreconditionError("initial ranking references unknown document " + entry.doc_id);
        order.push_back(*c->second);
      }
      const std::size_t head = o.top_n > 0 ? std::min(o.top_n, order.size()) : order.size();
      auto result = listwise_rerank(q, std::span(order).first(head), o.with_definition ? &*q.definition : nullptr, cfg,
                                    gateway);
      failed += result.failed_windows;
      Ranking r;
      r.query_id = q.id;
      for (const auto& entry : result.ranking.entries) r.entries.push_back({entry.doc_id, 0.0});
      for (std::size_t i = head; i < order.size(); ++i) r.entries.push_back({order[i].id, 0.0});
      const auto n = static_cast<double>(r.entries.size());
      for (std::size_t i = 0; i < r.entries.size(); ++i) r.entries[i].score = (n - static_cast<double>(i)) / n;
      rankings.push_back(std::move(r));
    }
    if (failed) log::warn("listwise_failed_windows", {{"count", failed}});
  } else {
    throw PreconditionError("--method must be dense or listwise");
  }
  write_rankings(o.out, rankings);
  print({{"rankings", rankings.size()}, {"method", o.method}});
  return 0;
}

int run_sample(const SampleOptions& o) {
  require(o.rankings, "--rankings");
  require(o.out, "--out");
  const auto policy = fill_policy_from_string(o.fill_policy);
  std::optional<Split> split;
  std::unordered_map<std::string, std::string> report_of;
  if (!o.split.empty()) {
    require(o.documents, "--documents (needed with --split)");
    split = io::read_split(o.split);
    for (const auto& c : io::read_documents(o.documents)) report_of.emplace(c.id, c.report_id);
  }

  std::vector<QueryDocPair> pairs;
  std::size_t shortfall = 0;
  for (const auto& r : read_rankings(o.rankings)) {
    auto result = balanced_sample(r, o.k, o.per_side, derive_seed(o.seed, r.query_id), policy);
    shortfall += result.inside_shortfall + result.outside_shortfall;
    for (auto& p : result.pairs) {
      if (split) {
        const auto it = report_of.find(p.doc_id);
        if (it == report_of.end()) throw PreconditionError("ranking references unknown document " + p.doc_id);
        p.split = split->classify(p.query_id, it->second);
      }
      pairs.push_back(std::move(p));
    }
  }
  io::write_pairs(o.out, pairs);
  print({{"pairs", pairs.size()}, {"shortfall", shortfall}});
  return 0;
}

int run_define(const DefineOptions& o, const EndpointOptions& e) {
  require(o.queries, "--queries");
  require(o.out, "--out");
  auto queries = io::read_queries(o.queries);

  std::map<std::string, std::vector<std::string>> improved;
  if (!o.improved_examples.empty()) {
    jsonl::for_each_line(o.improved_examples, [&](const nlohmann::json& j, std::size_t line) {
      const auto where = fs::path(o.improved_examples).filename().string() + ":" + std::to_string(line);
      const auto qid = jsonl::require_string(j, "query_id", where);
      const auto it = j.find("examples");
      if (it == j.end() || !it->is_array()) throw SchemaError(where + ": \"examples\" must be an array of strings");
      for (const auto& ex : *it) {
        if (!ex.is_string()) throw SchemaError(where + ": \"examples\" must be an array of strings");
        improved[qid].push_back(ex.get<std::string>());
      }
    });
  }

  std::size_t generated = 0, kept = 0;
  if (o.fixed_qa) {
    const auto fixed = render_fixed_qa_definition();
    for (auto& q : queries) q.definition = fixed;
    generated = queries.size();
  } else {
    std::optional<Gateway> gateway;
    std::string model;
    for (auto& q : queries) {
      const auto ex = improved.find(q.id);
      if (q.definition && !o.overwrite && ex == improved.end()) {
        ++kept;
        continue;
      }
      if (!gateway) {
        gateway.emplace(gateway_config(e, Role::teacher));
        model = chat_model(e, Role::teacher);
      }
      ChatRequest req;
      req.model = model;
      req.user = ex != improved.end() ? render_improved_definition_prompt(q.text, ex->second)
                                      : render_definition_prompt(q.text);
      const auto resp = gateway->chat_complete(req);
      q.definition = parse_definition_response(
          resp.text, ex != improved.end() ? DefinitionProvenance::improved : DefinitionProvenance::generated);
      ++generated;
    }
  }
  io::write_queries(o.out, queries);
  print({{"queries", queries.size()}, {"generated", generated}, {"kept", kept}});
  return 0;
}

int run_annotate(const AnnotateOptions& o, const EndpointOptions& e) {
  require(o.queries, "--queries");
  require(o.documents, "--documents");
  require(o.pairs, "--pairs");
  require(o.out, "--out");
  Role role;
  if (o.role == "teacher") {
    role = Role::teacher;
  } else if (o.role == "student") {
    role = Role::student;
  } else {
    throw PreconditionError("--role must be teacher or student");
  }

  AnnotatorConfig cfg;
  cfg.model = chat_model(e, role);
  cfg.variant = parse_variant(o.variant);
  cfg.calibration = calibration_from_string(o.calib);
  if (!o.primary.empty()) cfg.primary = confidence_source_from_string(o.primary);
  cfg.renormalize_tok = o.renormalize_tok;
  cfg.validate();

  const auto queries = io::read_queries(o.queries);
  const auto chunks = io::read_documents(o.documents);
  const auto pairs = io::read_pairs(o.pairs);
  Gateway gateway(gateway_config(e, role));
  const auto result = annotate_corpus(pairs, queries, chunks, cfg, gateway, o.parallelism);

  write_annotations(o.out, result.annotations);
  const fs::path errors_path = o.errors.empty() ? fs::path(o.out).parent_path() / "errors.jsonl" : fs::path(o.errors);
  write_errors(errors_path, result.errors);
  if (!o.proxy_out.empty()) {
    const auto proxy = relevant_info_proxy(result.annotations);
    jsonl::write_text(o.proxy_out, proxy_csv(proxy));
  }
  print(stats_json(result.stats));
  return 0;
}

int run_distill(const DistillOptions& o) {
  require(o.annotations, "--annotations");
  require(o.queries, "--queries");
  require(o.documents, "--documents");
  require(o.split, "--split");
  require(o.out, "--out");
  const auto annotations = read_annotations(o.annotations);
  const auto queries = io::read_queries(o.queries);
  const auto chunks = io::read_documents(o.documents);
  const auto split = io::read_split(o.split);

  ExportOptions opts;
  opts.variant = parse_variant(o.variant);
  if (!o.source.empty()) opts.source = confidence_source_from_string(o.source);
  const auto n = export_training_data(annotations, queries, chunks, split, opts, o.out);

  ojson summary;
  summary["records"] = n;
  if (!o.balance_out.empty() && n > 0) {
    const auto records = read_training_records(o.out);
    std::vector<std::string> expected(split.train_queries.begin(), split.train_queries.end());
    const auto balance = audit_balance(records, expected, o.band_low, o.band_high);
    jsonl::write_text(o.balance_out, to_json(balance).dump(2) + "\n");
    summary["balance_flagged"] = balance.flagged;
  }
  print(summary);
  return 0;
}

int run_evaluate(const EvaluateOptions& o) {
  require(o.annotations, "--annotations");
  require(o.gold, "--gold");
  const auto annotations = read_annotations(o.annotations);
  const auto gold = io::read_gold(o.gold);
  relann::EvaluateOptions opts;
  opts.gains = gain_source_from_string(o.scheme);
  opts.partial_policy = partial_policy(o.partial_policy);
  if (!o.confidence_source.empty()) opts.confidence_source = confidence_source_from_string(o.confidence_source);
  opts.unlabeled = unlabeled_policy(o.unlabeled);
  opts.ece_bins = o.bins;
  if (o.k > 0) opts.k = o.k;

  const auto evaluation = evaluate_annotations(annotations, gold, opts);
  const auto report = to_json(evaluation, opts);
  if (o.out.empty()) {
    print(report);
    return 0;
  }
  jsonl::write_text(o.out, report.dump(2) + "\n");
  auto cell = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) {
      s << std::fixed << std::setprecision(2) << *v;
    } else {
      s << "-";
    }
    return s.str();
  };
  std::cout << std::left << std::setw(8) << "Unc." << std::setw(8) << "Bin." << std::setw(8) << "Cal." << std::setw(8)
            << "Info." << "Avg.\n"
            << std::setw(8) << cell(evaluation.unc) << std::setw(8) << cell(evaluation.bin) << std::setw(8)
            << cell(evaluation.cal) << std::setw(8) << cell(evaluation.info) << cell(evaluation.avg) << "\n";
  return 0;
}

int run_audit(const AuditOptions& o) {
  if (!o.verdicts.empty()) {
    require(o.disagreements, "--disagreements (needed with --verdicts)");
    const auto items = read_disagreements(o.disagreements);
    const auto audited = join_verdicts(items, o.verdicts);
    std::vector<Annotation> corpus;
    if (!o.annotations.empty()) corpus = read_annotations(o.annotations);
    const auto table = disagreement_accuracy_table(audited, o.cutoff, corpus);
    emit_text(o.table_out, to_json(table).dump(2) + "\n");
    return 0;
  }
  require(o.annotations, "--annotations");
  require(o.original_labels, "--original-labels");
  require(o.out, "--out");
  const auto annotations = read_annotations(o.annotations);
  const auto original = io::read_gold(o.original_labels);
  const auto items = stratify_disagreements(annotations, original, o.per_bin, o.seed);
  write_disagreements(o.out, items);
  std::map<std::string, std::size_t> per_bin;
  for (const auto& d : items) ++per_bin[std::string(to_string(d.bin))];
  print({{"disagreements", items.size()}, {"per_bin", per_bin}});
  return 0;
}

int run_sweep(const SweepOptions& o) {
  require(o.annotations, "--annotations");
  require(o.gold, "--gold");
  if (!(o.grid_step > 0.0 && o.grid_step <= 1.0)) throw PreconditionError("--grid-step must lie in (0, 1]");
  const double steps_f = 1.0 / o.grid_step;
  const auto steps = static_cast<std::size_t>(std::llround(steps_f));
  if (std::abs(steps_f - static_cast<double>(steps)) > 1e-9) {
    throw PreconditionError("--grid-step must divide 1 evenly (e.g. 0.05, 0.1)");
  }
  std::vector<double> grid;
  for (std::size_t i = 0; i <= steps; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(steps));

  const auto annotations = read_annotations(o.annotations);
  std::map<std::pair<std::string, std::string>, const GoldLabel*> gold_by_pair;
  const auto gold = io::read_gold(o.gold);
  for (const auto& g : gold) gold_by_pair[{g.query_id, g.doc_id}] = &g;
  const auto policy = partial_policy(o.partial_policy);
  const auto unlabeled = unlabeled_policy(o.unlabeled);

  std::vector<double> scores;
  std::vector<bool> truth;
  for (const auto& a : annotations) {
    const auto it = gold_by_pair.find({a.query_id, a.doc_id});
    bool relevant = false;
    if (it == gold_by_pair.end()) {
      if (unlabeled == UnlabeledPolicy::skip) continue;
    } else {
      const auto b = it->second->effective_binary();
      relevant = b == BinaryLabel::relevant ||
                 (b == BinaryLabel::partial && policy == metrics::PartialPolicy::as_relevant);
    }
    scores.push_back(a.relevance_score);
    truth.push_back(relevant);
  }
  const auto points = metrics::f1_threshold_sweep(scores, truth, grid);
  emit_text(o.out, metrics::sweep_csv(points));
  return 0;
}

namespace {

using ScoreTable = std::map<std::string, std::map<std::string, double>>;

ScoreTable load_scores(const std::string& path) {
  const auto lines = jsonl::read_file(path);
  if (lines.empty()) throw SchemaError(path + ": empty file");
  if (lines.front().contains("entries")) {
    ScoreTable out;
    for (const auto& r : read_rankings(path)) {
      auto& m = out[r.query_id];
      for (const auto& e : r.entries) m[e.doc_id] = e.score;
    }
    return out;
  }
  return scores_by_query(read_annotations(path));
}

}  // namespace

int run_benchmark(const BenchmarkOptions& o) {
  require(o.a, "--a");
  require(o.b, "--b");
  const auto a = load_scores(o.a);
  const auto b = load_scores(o.b);
  ojson j;
  j["kendall_tau"] = metrics::kendall_tau_macro(a, b);
  std::size_t shared = 0;
  for (const auto& [qid, m] : a) shared += b.contains(qid) ? 1 : 0;
  j["shared_queries"] = shared;
  emit_text(o.out, j.dump(2) + "\n");
  return 0;
}

}  // namespace relann::cli
