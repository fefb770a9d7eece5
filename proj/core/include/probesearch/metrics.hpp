// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace probesearch {

// Mann-Whitney AUC: probability that a random positive outscores a random
// negative, ties counting one half. Throws UndefinedMetricError when either
// class is absent.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

// F1 of the positive class for hard predictions. 0 when there are no true
// positives.
double f1_score(std::span<const int> predictions, std::span<const int> labels);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Average (fractional) ranks, 1-based, ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation with tie-aware ranks.
double spearman(std::span<const double> a, std::span<const double> b);

// Kendall tau-b.
double kendall_tau(std::span<const double> a, std::span<const double> b);

// Fraction of item pairs ordered differently by a and b. A pair tied in one
// ordering but not the other counts as a violation.
double pairwise_violation_rate(std::span<const double> a, std::span<const double> b);

}  // namespace probesearch
