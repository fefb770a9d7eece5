// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "probesearch/answer.hpp"

namespace probesearch {

enum class BranchMetric { kFinal, kMean, kIncreaseRatio };

std::string_view to_string(BranchMetric metric);  // "final" | "mean" | "ir"
BranchMetric parse_branch_metric(std::string_view text);

// final: last score; mean: arithmetic mean; increase ratio: share of adjacent
// transitions that strictly rise. Throws std::invalid_argument on an empty
// sequence and UndefinedMetricError for the increase ratio of one score.
double branch_value(std::span<const double> scores, BranchMetric metric);

struct BranchOutcome {
  std::optional<Rational> answer;
  std::vector<double> scores;
};

struct PoolEntry {
  std::vector<int> supporters;  // branch indices
  double value = 0.0;
};

struct AnswerPool {
  std::map<Rational, PoolEntry> entries;
  int total_branches = 0;  // answered branches
  int unanswered = 0;

  bool contains(const Rational& answer) const { return entries.count(answer) != 0; }
};

// Groups answered branches by answer and sums their values. Throws
// EmptyPoolError when no branch has an answer.
AnswerPool build_answer_pool(std::span<const BranchOutcome> branches, BranchMetric metric);

// Same grouping with caller-supplied per-branch values (unanswered branches
// are skipped whatever their value).
AnswerPool build_answer_pool(std::span<const BranchOutcome> branches, std::span<const double> values);

// Highest aggregated value; ties go to more supporters, then the smaller
// answer. Throws EmptyPoolError on an empty pool.
Rational select_by_aggregation(const AnswerPool& pool);

// Answer of the single answered branch with the highest value; ties go to the
// earliest branch.
Rational select_single_branch(std::span<const BranchOutcome> branches, BranchMetric metric);

// Most frequent answer; ties go to the higher summed final score (branches
// without scores count 0), then the smaller answer.
Rational majority_vote(std::span<const BranchOutcome> branches);

}  // namespace probesearch
