// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/selection.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

#include "probesearch/errors.hpp"

namespace probesearch {

std::string_view to_string(BranchMetric metric) {
  switch (metric) {
    case BranchMetric::kFinal: return "final";
    case BranchMetric::kMean: return "mean";
    case BranchMetric::kIncreaseRatio: return "ir";
  }
  return "final";
}

BranchMetric parse_branch_metric(std::string_view text) {
  if (text == "final") return BranchMetric::kFinal;
  if (text == "mean") return BranchMetric::kMean;
  if (text == "ir" || text == "increase_ratio") return BranchMetric::kIncreaseRatio;
  throw std::invalid_argument("unknown branch metric: " + std::string(text));
}

double branch_value(std::span<const double> scores, BranchMetric metric) {
  if (scores.empty()) throw std::invalid_argument("branch value of an empty score sequence");
  switch (metric) {
    case BranchMetric::kFinal: return scores.back();
    case BranchMetric::kMean:
      return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    case BranchMetric::kIncreaseRatio: {
      if (scores.size() < 2) throw UndefinedMetricError("increase ratio needs at least two scores");
      int rises = 0;
      for (std::size_t i = 0; i + 1 < scores.size(); ++i) rises += scores[i + 1] > scores[i];
      return static_cast<double>(rises) / static_cast<double>(scores.size() - 1);
    }
  }
  return scores.back();
}

AnswerPool build_answer_pool(std::span<const BranchOutcome> branches, std::span<const double> values) {
  if (values.size() != branches.size()) throw std::invalid_argument("one value per branch required");
  AnswerPool pool;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (!branches[i].answer) {
      ++pool.unanswered;
      continue;
    }
    PoolEntry& entry = pool.entries[*branches[i].answer];
    entry.supporters.push_back(static_cast<int>(i));
    entry.value += values[i];
    ++pool.total_branches;
  }
  if (pool.entries.empty()) throw EmptyPoolError("no branch produced an answer");
  return pool;
}

AnswerPool build_answer_pool(std::span<const BranchOutcome> branches, BranchMetric metric) {
  std::vector<double> values;
  values.reserve(branches.size());
  for (const auto& b : branches) values.push_back(b.answer ? branch_value(b.scores, metric) : 0.0);
  return build_answer_pool(branches, values);
}

Rational select_by_aggregation(const AnswerPool& pool) {
  if (pool.entries.empty()) throw EmptyPoolError("empty answer pool");
  auto best = pool.entries.begin();
  for (auto it = std::next(best); it != pool.entries.end(); ++it) {
    // Entries are visited in ascending answer order, so strict comparisons
    // keep the smaller answer on a full tie.
    if (it->second.value > best->second.value ||
        (it->second.value == best->second.value && it->second.supporters.size() > best->second.supporters.size())) {
      best = it;
    }
  }
  return best->first;
}

Rational select_single_branch(std::span<const BranchOutcome> branches, BranchMetric metric) {
  std::optional<std::size_t> best;
  double best_value = 0.0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (!branches[i].answer) continue;
    const double v = branch_value(branches[i].scores, metric);
    if (!best || v > best_value) {
      best = i;
      best_value = v;
    }
  }
  if (!best) throw EmptyPoolError("no branch produced an answer");
  return *branches[*best].answer;
}

Rational majority_vote(std::span<const BranchOutcome> branches) {
  std::vector<double> finals;
  finals.reserve(branches.size());
  for (const auto& b : branches) finals.push_back(b.scores.empty() ? 0.0 : b.scores.back());
  const AnswerPool pool = build_answer_pool(branches, finals);
  auto best = pool.entries.begin();
  for (auto it = std::next(best); it != pool.entries.end(); ++it) {
    const auto count = it->second.supporters.size();
    const auto best_count = best->second.supporters.size();
    if (count > best_count || (count == best_count && it->second.value > best->second.value)) best = it;
  }
  return best->first;
}

}  // namespace probesearch
