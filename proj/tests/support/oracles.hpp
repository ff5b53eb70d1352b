// SPDX-License-Identifier: Apache-2.0
#pragma once

// Slow, direct implementations of the evaluation metrics used to check the
// library versions. They share no code with core/src/metrics.cpp.

#include <optional>
#include <vector>

#include <relann/metrics.hpp>

namespace relann::oracle {

double ece(const std::vector<double>& conf, const std::vector<bool>& correct, int bins);
double brier(const std::vector<double>& conf, const std::vector<bool>& correct);
// Counts every (correct, incorrect) pair.
double auroc(const std::vector<double>& conf, const std::vector<bool>& correct);
// Rank of item i = 1 + #items with a higher score, or an equal score and a
// smaller index.
double average_precision(const std::vector<double>& scores, const std::vector<bool>& positives);
// IDCG is the maximum DCG over every permutation of the gains.
double ndcg(const metrics::RunAndGold& run, std::optional<std::size_t> k);
double map(const metrics::RunAndGold& run, std::optional<std::size_t> k);
// O(n^2) pair classification with tie corrections.
double tau_b(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace relann::oracle
