// SPDX-License-Identifier: Apache-2.0
#include "relann/evaluate.hpp"

#include <set>
#include <utility>

#include "relann/corpus_io.hpp"
#include "relann/errors.hpp"
#include "relann/log.hpp"

namespace relann {

std::string_view to_string(GainSource s) {
  switch (s) {
    case GainSource::grade: return "grade";
    case GainSource::three_way: return "three_way";
    case GainSource::graded_1_3: return "graded_1_3";
    case GainSource::binary: return "binary";
  }
  return "unknown";
}

GainSource gain_source_from_string(std::string_view s) {
  for (auto g : {GainSource::grade, GainSource::three_way, GainSource::graded_1_3, GainSource::binary}) {
    if (to_string(g) == s) return g;
  }
  throw PreconditionError("unknown gain scheme \"" + std::string(s) + "\" (grade, three_way, graded_1_3, binary)");
}

namespace {

double gain_of(const GoldLabel& g, GainSource source) {
  switch (source) {
    case GainSource::grade: return g.grade;
    case GainSource::three_way:
      return metrics::gain_mapping(metrics::GainScheme::three_way)(io::to_string(g.effective_binary()));
    case GainSource::binary:
      return metrics::gain_mapping(metrics::GainScheme::binary)(io::to_string(g.effective_binary()));
    case GainSource::graded_1_3:
      return metrics::gain_mapping(metrics::GainScheme::graded_1_3)(g.label.value_or(""));
  }
  return 0.0;
}

template <class Fn>
std::optional<double> attempt(const char* name, Evaluation& e, Fn fn) {
  try {
    return fn();
  } catch (const UndefinedMetricError& err) {
    e.undefined[name] = err.what();
    log::warn("metric_undefined", {{"metric", name}, {"reason", err.what()}});
    return std::nullopt;
  }
}

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::map<std::string, std::map<std::string, double>> scores_by_query(std::span<const Annotation> annotations) {
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& a : annotations) {
    if (!out[a.query_id].emplace(a.doc_id, a.relevance_score).second) {
      throw PreconditionError("duplicate annotation for " + a.query_id + "/" + a.doc_id);
    }
  }
  return out;
}

Evaluation evaluate_annotations(std::span<const Annotation> annotations, std::span<const GoldLabel> gold,
                                const EvaluateOptions& options) {
  if (annotations.empty()) throw PreconditionError("evaluate: no annotations");
  std::map<std::pair<std::string, std::string>, const GoldLabel*> gold_by_pair;
  for (const auto& g : gold) {
    if (!gold_by_pair.emplace(std::make_pair(g.query_id, g.doc_id), &g).second) {
      throw PreconditionError("evaluate: duplicate gold row for " + g.query_id + "/" + g.doc_id);
    }
  }

  Evaluation e;
  metrics::CalibrationInput calib;
  std::vector<bool> predicted, truth, uncertain;
  std::vector<double> uncertainty_scores;
  metrics::RunAndGold run;
  std::set<std::pair<std::string, std::string>> seen;

  for (const auto& a : annotations) {
    if (!seen.emplace(a.query_id, a.doc_id).second) {
      throw PreconditionError("evaluate: duplicate annotation for " + a.query_id + "/" + a.doc_id);
    }
    const auto it = gold_by_pair.find({a.query_id, a.doc_id});
    GoldLabel label;
    if (it == gold_by_pair.end()) {
      ++e.unlabeled_pairs;
      if (options.unlabeled == UnlabeledPolicy::skip) continue;
      label.query_id = a.query_id;
      label.doc_id = a.doc_id;
      label.binary = BinaryLabel::irrelevant;
    } else {
      label = *it->second;
    }
    const auto b = label.effective_binary();
    const bool relevant =
        b == BinaryLabel::relevant ||
        (b == BinaryLabel::partial && options.partial_policy == metrics::PartialPolicy::as_relevant);
    const bool says_yes = a.guess == Guess::yes;
    const double conf = options.confidence_source ? a.confidence(*options.confidence_source) : a.confidence();

    predicted.push_back(says_yes);
    truth.push_back(relevant);
    calib.confidences.push_back(conf);
    calib.correct.push_back(says_yes == relevant);
    uncertainty_scores.push_back(1.0 - conf);
    uncertain.push_back(label.uncertain);

    auto& q = run[a.query_id];
    q.scores[a.doc_id] = a.relevance_score;
    q.gains[a.doc_id] = gain_of(label, options.gains);
  }
  e.pairs = predicted.size();
  for (const auto& [key, g] : gold_by_pair) {
    if (!seen.contains(key)) ++e.gold_without_annotation;
  }
  if (e.gold_without_annotation) {
    log::warn("gold_without_annotation", {{"count", e.gold_without_annotation}});
  }
  if (e.pairs == 0) throw PreconditionError("evaluate: no annotated pair has a gold label");

  e.sub.f1 = metrics::confusion(predicted, truth).f1();
  e.sub.ece = metrics::ece(calib, options.ece_bins);
  e.sub.brier = metrics::brier(calib);
  e.sub.auroc = attempt("auroc", e, [&] { return metrics::auroc(calib); });
  e.sub.ap = attempt("ap", e, [&] { return metrics::average_precision(uncertainty_scores, uncertain); });
  e.sub.ndcg = attempt("ndcg", e, [&] { return metrics::ndcg(run, options.k, &e.excluded_queries); });
  e.sub.map = attempt("map", e, [&] { return metrics::map(run, options.k); });

  e.bin = 100.0 * *e.sub.f1;
  if (e.sub.ap) e.unc = 100.0 * *e.sub.ap;
  if (e.sub.auroc) e.cal = metrics::calibration_dimension(*e.sub.auroc, *e.sub.ece, *e.sub.brier);
  if (e.sub.ndcg && e.sub.map) e.info = metrics::information_dimension(*e.sub.ndcg, *e.sub.map);
  if (e.unc && e.cal && e.info) e.avg = metrics::aggregate_report(e.sub).avg;
  return e;
}

nlohmann::ordered_json to_json(const Evaluation& e, const EvaluateOptions& options) {
  nlohmann::ordered_json j;
  j["unc"] = opt(e.unc);
  j["bin"] = opt(e.bin);
  j["cal"] = opt(e.cal);
  j["info"] = opt(e.info);
  j["avg"] = opt(e.avg);
  nlohmann::ordered_json sub;
  sub["ece"] = opt(e.sub.ece);
  sub["brier"] = opt(e.sub.brier);
  sub["auroc"] = opt(e.sub.auroc);
  sub["ndcg"] = opt(e.sub.ndcg);
  sub["map"] = opt(e.sub.map);
  sub["f1"] = opt(e.sub.f1);
  sub["ap"] = opt(e.sub.ap);
  j["sub_metrics"] = std::move(sub);
  nlohmann::ordered_json undefined = nlohmann::ordered_json::object();
  for (const auto& [k, v] : e.undefined) undefined[k] = v;
  j["undefined"] = std::move(undefined);
  j["excluded_queries"] = e.excluded_queries;
  j["pairs"] = e.pairs;
  j["unlabeled_pairs"] = e.unlabeled_pairs;
  j["gold_without_annotation"] = e.gold_without_annotation;
  nlohmann::ordered_json settings;
  settings["scheme"] = to_string(options.gains);
  settings["partial_policy"] =
      options.partial_policy == metrics::PartialPolicy::as_relevant ? "relevant" : "irrelevant";
  settings["confidence_source"] =
      options.confidence_source ? std::string(to_string(*options.confidence_source)) : std::string("primary");
  settings["unlabeled"] = options.unlabeled == UnlabeledPolicy::irrelevant ? "irrelevant" : "skip";
  settings["ece_bins"] = options.ece_bins;
  settings["k"] = options.k ? nlohmann::ordered_json(*options.k) : nlohmann::ordered_json(nullptr);
  j["settings"] = std::move(settings);
  return j;
}

}  // namespace relann
