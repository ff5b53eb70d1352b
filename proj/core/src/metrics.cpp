// SPDX-License-Identifier: Apache-2.0
#include "relann/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include "relann/errors.hpp"
#include "relann/log.hpp"

namespace relann::metrics {

namespace {

void check_calibration(const CalibrationInput& in, const char* op) {
  if (in.confidences.size() != in.correct.size()) {
    throw PreconditionError(std::string(op) + ": confidences and correctness differ in length");
  }
  if (in.confidences.empty()) throw PreconditionError(std::string(op) + ": empty input");
  for (const double c : in.confidences) {
    if (!(c >= 0.0 && c <= 1.0)) throw PreconditionError(std::string(op) + ": confidence outside [0, 1]");
  }
}

// 1-based average ranks of `values` (ties share the mean rank).
std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::string fmt(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Number of pairs within runs of equal adjacent keys of a sorted sequence.
template <class Eq>
std::uint64_t tied_pairs(std::size_t n, Eq equal) {
  std::uint64_t total = 0, run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Stable merge sort of `idx` by key, returning the number of inversions.
std::uint64_t sort_count_swaps(std::vector<std::size_t>& idx, std::span<const double> key) {
  std::vector<std::size_t> buf(idx.size());
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < idx.size(); width *= 2) {
    for (std::size_t lo = 0; lo < idx.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, idx.size());
      const std::size_t hi = std::min(lo + 2 * width, idx.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (key[idx[j]] < key[idx[i]]) {
          swaps += mid - i;
          buf[k++] = idx[j++];
        } else {
          buf[k++] = idx[i++];
        }
      }
      while (i < mid) buf[k++] = idx[i++];
      while (j < hi) buf[k++] = idx[j++];
    }
    std::swap(idx, buf);
  }
  return swaps;
}

template <class Fn>
double macro_over_queries(const RunAndGold& run, const char* op, std::vector<std::string>* excluded, Fn per_query) {
  double sum = 0.0;
  std::size_t used = 0;
  if (excluded) excluded->clear();
  for (const auto& [qid, q] : run) {
    for (const auto& [doc, gain] : q.gains) {
      if (!q.scores.contains(doc)) {
        throw PreconditionError(std::string(op) + ": query " + qid + " has gold doc " + doc + " without a prediction");
      }
      if (!(gain >= 0.0 && gain <= 1.0)) {
        throw PreconditionError(std::string(op) + ": gain outside [0, 1] for " + qid + "/" + doc);
      }
    }
    const auto value = per_query(q);
    if (!value) {
      log::warn("query_excluded", {{"metric", op}, {"query_id", qid}, {"reason", "no positive gold label"}});
      if (excluded) excluded->push_back(qid);
      continue;
    }
    sum += *value;
    ++used;
  }
  if (used == 0) throw UndefinedMetricError(std::string(op) + ": no query has a positive gold label");
  return sum / static_cast<double>(used);
}

}  // namespace

double ece(const CalibrationInput& input, int bins) {
  check_calibration(input, "ece");
  if (bins < 1) throw PreconditionError("ece: bins must be >= 1");
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0), correct_sum(static_cast<std::size_t>(bins), 0.0);
  const double width = static_cast<double>(bins);
  for (std::size_t i = 0; i < input.confidences.size(); ++i) {
    const double c = input.confidences[i];
    int b = std::min(bins - 1, static_cast<int>(c * width));
    // Guard against floating rounding at bin edges: b/bins <= c < (b+1)/bins.
    while (b > 0 && c < b / width) --b;
    while (b < bins - 1 && c >= (b + 1) / width) ++b;
    conf_sum[static_cast<std::size_t>(b)] += c;
    correct_sum[static_cast<std::size_t>(b)] += input.correct[i] ? 1.0 : 0.0;
  }
  double total = 0.0;
  for (std::size_t b = 0; b < conf_sum.size(); ++b) total += std::abs(correct_sum[b] - conf_sum[b]);
  return total / static_cast<double>(input.confidences.size());
}

double brier(const CalibrationInput& input) {
  check_calibration(input, "brier");
  double total = 0.0;
  for (std::size_t i = 0; i < input.confidences.size(); ++i) {
    const double d = input.confidences[i] - (input.correct[i] ? 1.0 : 0.0);
    total += d * d;
  }
  return total / static_cast<double>(input.confidences.size());
}

double auroc(const CalibrationInput& input) {
  check_calibration(input, "auroc");
  const auto ranks = average_ranks(input.confidences);
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (input.correct[i]) {
      rank_sum += ranks[i];
      ++pos;
    }
  }
  const std::size_t neg = ranks.size() - pos;
  if (pos == 0 || neg == 0) throw UndefinedMetricError("auroc: needs both correct and incorrect items");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double average_precision(std::span<const double> scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) throw PreconditionError("average_precision: length mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (positives[idx[k]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits == 0) throw UndefinedMetricError("average_precision: no positive items");
  return sum / static_cast<double>(hits);
}

double Confusion::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
double Confusion::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
double Confusion::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Confusion confusion(const std::vector<bool>& predicted, const std::vector<bool>& gold) {
  if (predicted.size() != gold.size()) throw PreconditionError("confusion: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i]) {
      (gold[i] ? c.tp : c.fp) += 1;
    } else {
      (gold[i] ? c.fn : c.tn) += 1;
    }
  }
  return c;
}

double f1_binary(const std::vector<bool>& predicted_relevant, std::span<const GoldLabel> gold, PartialPolicy policy) {
  if (predicted_relevant.size() != gold.size()) throw PreconditionError("f1_binary: length mismatch");
  std::vector<bool> truth(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto b = gold[i].effective_binary();
    truth[i] = b == BinaryLabel::relevant || (b == BinaryLabel::partial && policy == PartialPolicy::as_relevant);
  }
  return confusion(predicted_relevant, truth).f1();
}

std::vector<std::string> predicted_order(const QueryRun& run) {
  std::vector<std::pair<std::string, double>> items(run.scores.begin(), run.scores.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [id, score] : items) out.push_back(std::move(id));
  return out;
}

double ndcg(const RunAndGold& run, std::optional<std::size_t> k, std::vector<std::string>* excluded) {
  if (k && *k == 0) throw PreconditionError("ndcg: k must be positive");
  return macro_over_queries(run, "ndcg", excluded, [&](const QueryRun& q) -> std::optional<double> {
    std::vector<double> ideal;
    for (const auto& [doc, gain] : q.gains) ideal.push_back(gain);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    if (ideal.empty() || ideal.front() <= 0.0) return std::nullopt;
    const auto order = predicted_order(q);
    const std::size_t cut = k ? std::min(*k, order.size()) : order.size();
    double dcg = 0.0, idcg = 0.0;
    for (std::size_t i = 0; i < cut; ++i) {
      const auto it = q.gains.find(order[i]);
      const double g = it == q.gains.end() ? 0.0 : it->second;
      dcg += g / std::log2(static_cast<double>(i) + 2.0);
    }
    for (std::size_t i = 0; i < std::min(cut, ideal.size()); ++i) {
      idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
  });
}

double map(const RunAndGold& run, std::optional<std::size_t> k, double binarize_threshold,
           std::vector<std::string>* excluded) {
  if (k && *k == 0) throw PreconditionError("map: k must be positive");
  return macro_over_queries(run, "map", excluded, [&](const QueryRun& q) -> std::optional<double> {
    std::size_t relevant = 0;
    for (const auto& [doc, gain] : q.gains) relevant += gain > binarize_threshold ? 1 : 0;
    if (relevant == 0) return std::nullopt;
    const auto order = predicted_order(q);
    const std::size_t cut = k ? std::min(*k, order.size()) : order.size();
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < cut; ++i) {
      const auto it = q.gains.find(order[i]);
      if (it != q.gains.end() && it->second > binarize_threshold) {
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(i + 1);
      }
    }
    return sum / static_cast<double>(relevant);
  });
}

std::string_view to_string(GainScheme scheme) {
  switch (scheme) {
    case GainScheme::three_way: return "three_way";
    case GainScheme::graded_1_3: return "graded_1_3";
    case GainScheme::binary: return "binary";
  }
  return "unknown";
}

GainScheme gain_scheme_from_string(std::string_view name) {
  for (auto s : {GainScheme::three_way, GainScheme::graded_1_3, GainScheme::binary}) {
    if (to_string(s) == name) return s;
  }
  throw PreconditionError("unknown gain scheme \"" + std::string(name) + "\" (three_way, graded_1_3, binary)");
}

std::function<double(std::string_view)> gain_mapping(GainScheme scheme) {
  switch (scheme) {
    case GainScheme::three_way:
      return [](std::string_view label) {
        const auto l = lower(label);
        if (l == "relevant") return 1.0;
        if (l == "partial") return 0.5;
        if (l == "irrelevant") return 0.0;
        throw PreconditionError("three_way gain: unknown label \"" + std::string(label) + "\"");
      };
    case GainScheme::graded_1_3:
      return [](std::string_view label) {
        const auto l = lower(label);
        if (l == "3") return 1.0;
        if (l == "2") return 2.0 / 3.0;
        if (l == "1") return 1.0 / 3.0;
        if (l == "0" || l.empty() || l == "unannotated") return 0.0;
        throw PreconditionError("graded_1_3 gain: unknown label \"" + std::string(label) + "\"");
      };
    case GainScheme::binary:
      return [](std::string_view label) {
        const auto l = lower(label);
        if (l == "relevant") return 1.0;
        if (l == "partial" || l == "irrelevant") return 0.0;
        throw PreconditionError("binary gain: unknown label \"" + std::string(label) + "\"");
      };
  }
  throw PreconditionError("unknown gain scheme");
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("kendall_tau: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw PreconditionError("kendall_tau: need at least two items");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const auto x_ties = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]]; });
  const auto joint_ties = tied_pairs(
      n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]] && y[idx[a]] == y[idx[b]]; });
  const auto discordant = sort_count_swaps(idx, y);
  const auto y_ties = tied_pairs(n, [&](std::size_t a, std::size_t b) { return y[idx[a]] == y[idx[b]]; });

  const auto n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double denom = std::sqrt((n0 - static_cast<double>(x_ties)) * (n0 - static_cast<double>(y_ties)));
  if (denom == 0.0) throw UndefinedMetricError("kendall_tau: one side is constant");
  const double num = n0 - static_cast<double>(x_ties) - static_cast<double>(y_ties) + static_cast<double>(joint_ties) -
                     2.0 * static_cast<double>(discordant);
  return num / denom;
}

double kendall_tau(std::span<const std::string> rank_a, std::span<const std::string> rank_b) {
  if (rank_a.size() != rank_b.size()) throw PreconditionError("kendall_tau: rankings differ in size");
  std::map<std::string_view, std::size_t> pos_b;
  for (std::size_t i = 0; i < rank_b.size(); ++i) {
    if (!pos_b.emplace(rank_b[i], i).second) throw PreconditionError("kendall_tau: duplicate id " + rank_b[i]);
  }
  std::vector<double> x, y;
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < rank_a.size(); ++i) {
    if (!seen.insert(rank_a[i]).second) throw PreconditionError("kendall_tau: duplicate id " + rank_a[i]);
    const auto it = pos_b.find(rank_a[i]);
    if (it == pos_b.end()) throw PreconditionError("kendall_tau: id sets differ (" + rank_a[i] + ")");
    x.push_back(static_cast<double>(i));
    y.push_back(static_cast<double>(it->second));
  }
  return kendall_tau_b(x, y);
}

double kendall_tau_macro(const std::map<std::string, std::map<std::string, double>>& a,
                         const std::map<std::string, std::map<std::string, double>>& b) {
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& [qid, scores_a] : a) {
    const auto it = b.find(qid);
    if (it == b.end()) continue;
    std::vector<double> x, y;
    for (const auto& [doc, s] : scores_a) {
      if (auto jt = it->second.find(doc); jt != it->second.end()) {
        x.push_back(s);
        y.push_back(jt->second);
      }
    }
    if (x.size() < 2) {
      log::warn("query_excluded", {{"metric", "kendall_tau"}, {"query_id", qid}, {"reason", "fewer than 2 shared docs"}});
      continue;
    }
    try {
      sum += kendall_tau_b(x, y);
      ++used;
    } catch (const UndefinedMetricError&) {
      log::warn("query_excluded", {{"metric", "kendall_tau"}, {"query_id", qid}, {"reason", "constant scores"}});
    }
  }
  if (used == 0) throw UndefinedMetricError("kendall_tau: no query is comparable between the two runs");
  return sum / static_cast<double>(used);
}

double calibration_dimension(double auroc_v, double ece_v, double brier_v) {
  return 100.0 * (auroc_v + (1.0 - ece_v) + (1.0 - brier_v)) / 3.0;
}

double information_dimension(double ndcg_v, double map_v) { return 100.0 * (ndcg_v + map_v) / 2.0; }

MetricReport aggregate_report(const SubMetrics& sub) {
  const std::pair<const char*, const std::optional<double>*> required[] = {
      {"ap", &sub.ap},       {"f1", &sub.f1},     {"auroc", &sub.auroc}, {"ece", &sub.ece},
      {"brier", &sub.brier}, {"ndcg", &sub.ndcg}, {"map", &sub.map}};
  for (const auto& [name, value] : required) {
    if (!value->has_value()) throw PreconditionError(std::string("aggregate_report: missing sub-metric ") + name);
  }
  MetricReport r;
  r.raw = sub;
  r.unc = 100.0 * *sub.ap;
  r.bin = 100.0 * *sub.f1;
  r.cal = calibration_dimension(*sub.auroc, *sub.ece, *sub.brier);
  r.info = information_dimension(*sub.ndcg, *sub.map);
  r.avg = (r.unc + r.bin + r.cal + r.info) / 4.0;
  return r;
}

std::vector<SweepPoint> f1_threshold_sweep(std::span<const double> scores, const std::vector<bool>& gold_relevant,
                                           std::span<const double> grid) {
  if (scores.size() != gold_relevant.size()) throw PreconditionError("f1_threshold_sweep: length mismatch");
  std::vector<SweepPoint> out;
  out.reserve(grid.size());
  std::vector<bool> predicted(scores.size());
  for (const double theta : grid) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw PreconditionError("f1_threshold_sweep: theta outside [0, 1]");
    for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] >= theta;
    const auto c = confusion(predicted, gold_relevant);
    out.push_back({theta, c.f1(), c.precision(), c.recall()});
  }
  return out;
}

std::string sweep_csv(std::span<const SweepPoint> points) {
  std::string out = "theta,f1,precision,recall\n";
  for (const auto& p : points) {
    out += fmt(p.theta) + "," + fmt(p.f1) + "," + fmt(p.precision) + "," + fmt(p.recall) + "\n";
  }
  return out;
}

}  // namespace relann::metrics
