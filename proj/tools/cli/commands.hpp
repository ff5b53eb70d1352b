// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

// Option structs bound to the command line (and, through the layering in
// cli.cpp, to config keys and RELANN_* environment variables).
namespace relann::cli {

struct EndpointOptions {
  std::string teacher_base_url = "https://api.openai.com/v1";
  std::string teacher_model;
  std::string student_base_url;  // empty: same as teacher
  std::string student_model;
  std::string embedding_base_url;  // empty: same as teacher
  std::string embedding_model = "text-embedding-3-small";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string cache_dir = ".relann-cache";
  bool no_cache = false;
  std::size_t max_in_flight = 8;
  int max_attempts = 4;
  int timeout_s = 120;
};

struct IngestOptions {
  std::string queries, documents, gold;
  std::string out_dir;
  std::size_t min_tokens = 0;
  std::string split_out;
  double query_test_fraction = 0.35;
  double report_test_fraction = 0.375;
  std::uint64_t seed = 40;
};

struct RankOptions {
  std::string queries, documents, out;
  std::string method = "dense";
  std::string initial;
  std::size_t window = 20, step = 10;
  std::size_t top_n = 0;  // 0: rerank everything
  bool with_definition = false;
};

struct SampleOptions {
  std::string rankings, out;
  std::size_t k = 10, per_side = 10;
  std::uint64_t seed = 40;
  std::string fill_policy = "strict";
  std::string split, documents;
};

struct DefineOptions {
  std::string queries, out;
  std::string improved_examples;
  bool fixed_qa = false;
  bool overwrite = false;
};

struct AnnotateOptions {
  std::string queries, documents, pairs, out;
  std::string errors;
  std::string variant = "point-ask-d";
  std::string calib = "both";
  std::string primary;
  std::string role = "teacher";
  bool renormalize_tok = false;
  std::size_t parallelism = 1;
  std::string proxy_out;
};

struct DistillOptions {
  std::string annotations, queries, documents, split, out;
  std::string variant = "point-ask-d";
  std::string source;
  std::string balance_out;
  double band_low = 0.25, band_high = 0.75;
};

struct EvaluateOptions {
  std::string annotations, gold, out;
  std::string scheme = "three_way";
  std::string partial_policy = "relevant";
  std::string confidence_source;
  std::string unlabeled = "irrelevant";
  int bins = 10;
  std::size_t k = 0;  // 0: full list
};

struct AuditOptions {
  std::string annotations, original_labels, out;
  std::size_t per_bin = 50;
  std::uint64_t seed = 40;
  std::string disagreements, verdicts, table_out;
  double cutoff = 0.95;
};

struct SweepOptions {
  std::string annotations, gold, out;
  double grid_step = 0.05;
  std::string partial_policy = "relevant";
  std::string unlabeled = "irrelevant";
};

struct BenchmarkOptions {
  std::string a, b, out;
};

int run_ingest(const IngestOptions& o);
int run_rank(const RankOptions& o, const EndpointOptions& e);
int run_sample(const SampleOptions& o);
int run_define(const DefineOptions& o, const EndpointOptions& e);
int run_annotate(const AnnotateOptions& o, const EndpointOptions& e);
int run_distill(const DistillOptions& o);
int run_evaluate(const EvaluateOptions& o);
int run_audit(const AuditOptions& o);
int run_sweep(const SweepOptions& o);
int run_benchmark(const BenchmarkOptions& o);

}  // namespace relann::cli
