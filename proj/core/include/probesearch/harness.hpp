// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probesearch/answer.hpp"
#include "probesearch/backend.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/questions.hpp"
#include "probesearch/search.hpp"
#include "probesearch/selection.hpp"

namespace probesearch {

// Method names accepted by run_benchmark:
//   greedy, self_consistency            unguided baselines
//   vote                                majority vote over search branches
//   single_final, single_mean, single_ir
//   agg_final, agg_mean, agg_ir
std::vector<std::string> default_methods();
bool is_pool_method(std::string_view method);

struct BenchmarkConfig {
  SearchConfig search;
  int greedy_tokens = 240;
  int sc_samples = 10;
  int sc_tokens = 240;
  // Questions evaluated concurrently; results are aggregated in input order.
  int parallelism = 1;
  // Keep search trees and branches in the reports (needed for run artifacts).
  bool keep_search = true;
};

struct QuestionReport {
  std::string qid;
  Rational gold{0};
  // Aggregated final-score value per answer.
  std::map<Rational, double> pool;
  std::map<std::string, std::optional<Rational>> chosen;
  bool covered = false;
  // Backend fault: the question is left out of every denominator.
  bool failed = false;
  std::string error;
  std::optional<SearchResult> search;
};

struct BenchmarkResult {
  std::vector<QuestionReport> reports;
  std::vector<std::string> methods;
  std::map<std::string, double> accuracy;
  double coverage_rate = 0.0;
  int evaluated = 0;
  int failed = 0;
  std::string config_snapshot;
  double wall_time_seconds = 0.0;
};

// Reads the JSON written as BenchmarkResult::config_snapshot (every field
// optional; a "search" object holds SearchConfig fields under the names used
// in run artifacts). Throws std::invalid_argument on bad values.
BenchmarkConfig parse_benchmark_config(std::string_view json_text);

// Fraction of non-failed reports whose pool holds the gold answer. Throws
// std::invalid_argument when there is nothing to count.
double coverage_rate(std::span<const QuestionReport> reports);

// Single greedy generation followed by the answer trigger.
std::optional<Rational> greedy_answer(Backend& backend, const Question& question, int max_tokens, int layer,
                                      RepKind rep_kind, int answer_tokens = 32);

// Majority vote over k Top-K-Start samples, each answered with the trigger.
std::optional<Rational> self_consistency_answer(Backend& backend, const Question& question, int k, int max_tokens,
                                                int layer, RepKind rep_kind, int answer_tokens = 32);

QuestionReport evaluate_question(Backend& backend, const LinearProbe& probe, const Question& question,
                                 const BenchmarkConfig& config, std::span<const std::string> methods);

// Throws std::invalid_argument for an unknown method name.
BenchmarkResult run_benchmark(Backend& backend, const LinearProbe& probe, std::span<const Question> questions,
                              const BenchmarkConfig& config, std::span<const std::string> methods);

struct SweepCell {
  int width = 0;
  int depth = 0;
  std::optional<double> accuracy;
  std::optional<double> coverage;
  std::string error;
};

// step_tokens = [cap / m] * m for every (n, m); agg_final accuracy per cell.
// A failing cell is recorded without an accuracy and the sweep goes on.
std::vector<SweepCell> sweep_width_depth(Backend& backend, const LinearProbe& probe,
                                         std::span<const Question> questions, std::span<const int> widths,
                                         std::span<const int> depths, int total_token_cap,
                                         const BenchmarkConfig& base = {});

std::vector<int> split_step_tokens(int total_token_cap, int depth);

// results.csv: "method,accuracy" rows then "coverage_rate,<value>".
void write_results_csv(const BenchmarkResult& result, std::ostream& out);
// sweep.csv: "width,depth,accuracy"; a missing cell has an empty accuracy.
void write_sweep_csv(std::span<const SweepCell> cells, std::ostream& out);
// One selection report per line:
// {"qid","pool":{answer:value},"chosen":{method:answer},"gold","covered"}.
void write_reports_jsonl(const BenchmarkResult& result, std::ostream& out);
// Search artifacts, one write_run_record line per question with a search.
void write_run_artifacts(const BenchmarkResult& result, const SearchConfig& config, std::ostream& out);

}  // namespace probesearch
