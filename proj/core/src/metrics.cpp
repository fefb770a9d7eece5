// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "probesearch/errors.hpp"

namespace probesearch {
namespace {

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("metric inputs differ in length");
}

int sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  require_same_size(scores.size(), labels.size());
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) throw UndefinedMetricError("AUC needs both classes");
  const std::vector<double> ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double f1_score(std::span<const int> predictions, std::span<const int> labels) {
  require_same_size(predictions.size(), labels.size());
  double tp = 0;
  double fp = 0;
  double fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == 1 && labels[i] == 1) ++tp;
    if (predictions[i] == 1 && labels[i] != 1) ++fp;
    if (predictions[i] != 1 && labels[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  require_same_size(predictions.size(), labels.size());
  if (labels.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double spearman(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size());
  if (a.size() < 2) throw std::invalid_argument("spearman needs at least two items");
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size());
  if (a.size() < 2) throw std::invalid_argument("kendall needs at least two items");
  double concordant_minus_discordant = 0.0;
  double ties_a = 0.0;
  double ties_b = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int sa = sign(a[i] - a[j]);
      const int sb = sign(b[i] - b[j]);
      pairs += 1.0;
      if (sa == 0) ties_a += 1.0;
      if (sb == 0) ties_b += 1.0;
      concordant_minus_discordant += sa * sb;
    }
  }
  const double denom = std::sqrt((pairs - ties_a) * (pairs - ties_b));
  return denom == 0.0 ? 0.0 : concordant_minus_discordant / denom;
}

double pairwise_violation_rate(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size());
  if (a.size() < 2) throw std::invalid_argument("violation rate needs at least two items");
  double violations = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      pairs += 1.0;
      if (sign(a[i] - a[j]) != sign(b[i] - b[j])) violations += 1.0;
    }
  }
  return violations / pairs;
}

}  // namespace probesearch
