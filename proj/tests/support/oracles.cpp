// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace relann::oracle {

double ece(const std::vector<double>& conf, const std::vector<bool>& correct, int bins) {
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / bins;
    const double hi = static_cast<double>(b + 1) / bins;
    double c_sum = 0.0, a_sum = 0.0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
      const bool in = b == bins - 1 ? conf[i] >= lo : conf[i] >= lo && conf[i] < hi;
      if (!in) continue;
      c_sum += conf[i];
      a_sum += correct[i] ? 1.0 : 0.0;
    }
    total += std::abs(a_sum - c_sum);
  }
  return total / static_cast<double>(conf.size());
}

double brier(const std::vector<double>& conf, const std::vector<bool>& correct) {
  double s = 0.0;
  for (std::size_t i = 0; i < conf.size(); ++i) s += std::pow(conf[i] - (correct[i] ? 1.0 : 0.0), 2);
  return s / static_cast<double>(conf.size());
}

double auroc(const std::vector<double>& conf, const std::vector<bool>& correct) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < conf.size(); ++i) {
    if (!correct[i]) continue;
    for (std::size_t j = 0; j < conf.size(); ++j) {
      if (correct[j]) continue;
      pairs += 1.0;
      if (conf[i] > conf[j]) wins += 1.0;
      if (conf[i] == conf[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

double average_precision(const std::vector<double>& scores, const std::vector<bool>& positives) {
  auto rank = [&](std::size_t i) {
    std::size_t r = 1;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++r;
    }
    return r;
  };
  double sum = 0.0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positives[i]) continue;
    ++p;
    const auto ri = rank(i);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positives[j] && rank(j) <= ri) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(ri);
  }
  return sum / static_cast<double>(p);
}

namespace {

// Position (0-based) of every doc in the predicted order.
std::vector<std::pair<std::string, std::size_t>> positions(const metrics::QueryRun& q) {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& [d, s] : q.scores) {
    std::size_t pos = 0;
    for (const auto& [e, t] : q.scores) {
      if (t > s || (t == s && e < d)) ++pos;
    }
    out.emplace_back(d, pos);
  }
  return out;
}

double gain_of(const metrics::QueryRun& q, const std::string& d) {
  const auto it = q.gains.find(d);
  return it == q.gains.end() ? 0.0 : it->second;
}

template <class PerQuery>
double macro(const metrics::RunAndGold& run, PerQuery per_query) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [qid, q] : run) {
    bool any = false;
    for (const auto& [d, g] : q.gains) any = any || g > 0.0;
    if (!any) continue;
    sum += per_query(q);
    ++n;
  }
  return sum / n;
}

}  // namespace

double ndcg(const metrics::RunAndGold& run, std::optional<std::size_t> k) {
  return macro(run, [&](const metrics::QueryRun& q) {
    const std::size_t n = q.scores.size();
    const std::size_t cut = k ? std::min(*k, n) : n;
    double dcg = 0.0;
    for (const auto& [d, pos] : positions(q)) {
      if (pos < cut) dcg += gain_of(q, d) / std::log2(static_cast<double>(pos) + 2.0);
    }
    std::vector<double> g;
    for (const auto& [d, s] : q.scores) g.push_back(gain_of(q, d));
    std::sort(g.begin(), g.end());
    double idcg = 0.0;
    do {
      double v = 0.0;
      for (std::size_t i = 0; i < cut; ++i) v += g[i] / std::log2(static_cast<double>(i) + 2.0);
      idcg = std::max(idcg, v);
    } while (std::next_permutation(g.begin(), g.end()));
    return dcg / idcg;
  });
}

double map(const metrics::RunAndGold& run, std::optional<std::size_t> k) {
  return macro(run, [&](const metrics::QueryRun& q) {
    const std::size_t n = q.scores.size();
    const std::size_t cut = k ? std::min(*k, n) : n;
    const auto pos = positions(q);
    double relevant = 0.0;
    for (const auto& [d, g] : q.gains) relevant += g > 0.0 ? 1.0 : 0.0;
    double sum = 0.0;
    for (const auto& [d, p] : pos) {
      if (p >= cut || gain_of(q, d) <= 0.0) continue;
      double above = 0.0;
      for (const auto& [e, pe] : pos) above += (pe <= p && gain_of(q, e) > 0.0) ? 1.0 : 0.0;
      sum += above / static_cast<double>(p + 1);
    }
    return sum / relevant;
  });
}

double tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0, pairs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      pairs += 1;
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0) ties_x += 1;
      if (dy == 0) ties_y += 1;
      if (dx == 0 || dy == 0) continue;
      if ((dx > 0) == (dy > 0)) {
        concordant += 1;
      } else {
        discordant += 1;
      }
    }
  }
  return (concordant - discordant) / std::sqrt((pairs - ties_x) * (pairs - ties_y));
}

}  // namespace relann::oracle
