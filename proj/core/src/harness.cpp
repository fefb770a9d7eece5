// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <future>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "probesearch/errors.hpp"
#include "probesearch/log.hpp"

namespace probesearch {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::string_view kMethods[] = {"greedy",      "self_consistency", "vote",      "single_final", "single_mean",
                                         "single_ir",   "agg_final",        "agg_mean",  "agg_ir"};

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

ojson answer_json(const std::optional<Rational>& answer) {
  if (!answer) return nullptr;
  if (answer->denominator() == 1) return answer->numerator();
  return to_double(*answer);
}

std::optional<Rational> ask_answer(Backend& backend, const std::string& text, int layer, RepKind rep_kind,
                                   int answer_tokens) {
  GenerationRequest request;
  request.prompt_text = text + " " + std::string(kAnswerTrigger);
  request.k = 1;
  request.max_new_tokens = answer_tokens;
  request.mode = DecodeMode::kGreedy;
  request.layer = layer;
  request.rep_kind = rep_kind;
  request.capture = Capture::kLastToken;
  GenerationResult result = backend.generate(request);
  return extract_answer(std::string(kAnswerTrigger) + result.candidates.at(0).text);
}

void check_methods(std::span<const std::string> methods) {
  for (const auto& m : methods) {
    if (std::find(std::begin(kMethods), std::end(kMethods), m) == std::end(kMethods)) {
      throw std::invalid_argument("unknown selection method: " + m);
    }
  }
}

std::optional<Rational> pool_method(std::string_view method, std::span<const BranchOutcome> outcomes) {
  try {
    if (method == "vote") return majority_vote(outcomes);
    if (method.rfind("single_", 0) == 0) {
      return select_single_branch(outcomes, parse_branch_metric(method.substr(7)));
    }
    if (method.rfind("agg_", 0) == 0) {
      return select_by_aggregation(build_answer_pool(outcomes, parse_branch_metric(method.substr(4))));
    }
  } catch (const EmptyPoolError&) {
    return std::nullopt;
  } catch (const UndefinedMetricError&) {
    return std::nullopt;
  }
  return std::nullopt;
}

ojson snapshot(const BenchmarkConfig& config, std::span<const std::string> methods) {
  return ojson{{"search", ojson::parse(config_json(config.search))},
               {"greedy_tokens", config.greedy_tokens},
               {"sc_samples", config.sc_samples},
               {"sc_tokens", config.sc_tokens},
               {"methods", std::vector<std::string>(methods.begin(), methods.end())}};
}

}  // namespace

BenchmarkConfig parse_benchmark_config(std::string_view json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("benchmark config is not a JSON object");
  BenchmarkConfig c;
  try {
    c.greedy_tokens = j.value("greedy_tokens", c.greedy_tokens);
    c.sc_samples = j.value("sc_samples", c.sc_samples);
    c.sc_tokens = j.value("sc_tokens", c.sc_tokens);
    c.parallelism = j.value("parallelism", c.parallelism);
    if (auto it = j.find("search"); it != j.end()) {
      const nlohmann::json& s = *it;
      SearchConfig& sc = c.search;
      sc.depth = s.value("depth", sc.depth);
      sc.beam_width = s.value("beam_width", sc.beam_width);
      sc.fan_out = s.value("k", sc.fan_out);
      sc.step_tokens = s.value("step_tokens", sc.step_tokens);
      if (!s.contains("step_tokens") && s.contains("depth")) sc.step_tokens = split_step_tokens(240, sc.depth);
      sc.completion_steps = s.value("completion_steps", sc.completion_steps);
      sc.completion_tokens = s.value("completion_tokens", sc.completion_tokens);
      if (s.contains("prune_scope")) sc.prune_scope = parse_prune_scope(s.at("prune_scope").get<std::string>());
      sc.layer = s.value("layer", sc.layer);
      if (s.contains("rep_kind") && !s.at("rep_kind").is_null()) {
        sc.rep_kind = parse_rep_kind(s.at("rep_kind").get<std::string>());
      }
      sc.answer_tokens = s.value("answer_tokens", sc.answer_tokens);
      if (s.contains("retention")) {
        const auto r = s.at("retention").get<std::string>();
        if (r != "probe" && r != "random") throw std::invalid_argument("retention must be probe or random");
        sc.retention = r == "random" ? Retention::kRandom : Retention::kProbeScore;
      }
      sc.retention_seed = s.value("retention_seed", sc.retention_seed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad benchmark config: ") + e.what());
  }
  c.search.validate();
  return c;
}

std::vector<std::string> default_methods() { return {std::begin(kMethods), std::end(kMethods)}; }

bool is_pool_method(std::string_view method) { return method != "greedy" && method != "self_consistency"; }

double coverage_rate(std::span<const QuestionReport> reports) {
  int counted = 0;
  int covered = 0;
  for (const auto& r : reports) {
    if (r.failed) continue;
    ++counted;
    covered += r.covered;
  }
  if (counted == 0) throw std::invalid_argument("coverage rate of an empty report set");
  return static_cast<double>(covered) / counted;
}

std::optional<Rational> greedy_answer(Backend& backend, const Question& question, int max_tokens, int layer,
                                      RepKind rep_kind, int answer_tokens) {
  GenerationRequest request;
  request.prompt_text = format_prompt(question.text);
  request.k = 1;
  request.max_new_tokens = max_tokens;
  request.mode = DecodeMode::kGreedy;
  request.layer = layer;
  request.rep_kind = rep_kind;
  request.capture = Capture::kLastToken;
  GenerationResult result = backend.generate(request);
  return ask_answer(backend, request.prompt_text + result.candidates.at(0).text, layer, rep_kind, answer_tokens);
}

std::optional<Rational> self_consistency_answer(Backend& backend, const Question& question, int k, int max_tokens,
                                                int layer, RepKind rep_kind, int answer_tokens) {
  GenerationRequest request;
  request.prompt_text = format_prompt(question.text);
  request.k = k;
  request.max_new_tokens = max_tokens;
  request.mode = DecodeMode::kTopKStart;
  request.layer = layer;
  request.rep_kind = rep_kind;
  request.capture = Capture::kLastToken;
  GenerationResult result = backend.generate(request);
  std::vector<BranchOutcome> outcomes;
  for (const auto& c : result.candidates) {
    outcomes.push_back({ask_answer(backend, request.prompt_text + c.text, layer, rep_kind, answer_tokens), {}});
  }
  try {
    return majority_vote(outcomes);
  } catch (const EmptyPoolError&) {
    return std::nullopt;
  }
}

QuestionReport evaluate_question(Backend& backend, const LinearProbe& probe, const Question& question,
                                 const BenchmarkConfig& config, std::span<const std::string> methods) {
  check_methods(methods);
  QuestionReport report;
  report.qid = question.id;
  report.gold = question.gold;
  const int layer = search_layer(config.search, probe);
  const RepKind rep_kind = search_rep_kind(config.search, probe);
  try {
    SearchResult search = probe_search(backend, probe, question, config.search);
    std::vector<BranchOutcome> outcomes;
    for (const auto& b : search.branches) outcomes.push_back({b.answer, b.score_sequence});
    try {
      for (const auto& [answer, entry] : build_answer_pool(outcomes, BranchMetric::kFinal).entries) {
        report.pool[answer] = entry.value;
      }
    } catch (const EmptyPoolError&) {
      // Nothing answered: the question counts, every pool method misses.
    }
    report.covered = report.pool.count(question.gold) != 0;
    for (const auto& m : methods) {
      if (m == "greedy") {
        report.chosen[m] = greedy_answer(backend, question, config.greedy_tokens, layer, rep_kind,
                                         config.search.answer_tokens);
      } else if (m == "self_consistency") {
        report.chosen[m] = self_consistency_answer(backend, question, config.sc_samples, config.sc_tokens, layer,
                                                   rep_kind, config.search.answer_tokens);
      } else {
        report.chosen[m] = pool_method(m, outcomes);
      }
    }
    if (config.keep_search) report.search = std::move(search);
  } catch (const Error& e) {
    report.failed = true;
    report.error = e.what();
    report.chosen.clear();
    report.pool.clear();
    report.covered = false;
    log_warning("question " + question.id + " failed: " + e.what());
  }
  return report;
}

BenchmarkResult run_benchmark(Backend& backend, const LinearProbe& probe, std::span<const Question> questions,
                              const BenchmarkConfig& config, std::span<const std::string> methods) {
  config.search.validate();
  check_methods(methods);
  if (config.parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  BenchmarkResult result;
  result.methods.assign(methods.begin(), methods.end());
  result.reports.resize(questions.size());
  const int workers = std::min<int>(config.parallelism, static_cast<int>(std::max<std::size_t>(1, questions.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < questions.size(); ++i) {
      result.reports[i] = evaluate_question(backend, probe, questions[i], config, methods);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    for (int w = 0; w < workers; ++w) {
      pool.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < questions.size(); i = next++) {
          result.reports[i] = evaluate_question(backend, probe, questions[i], config, methods);
        }
      }));
    }
    for (auto& f : pool) f.get();
  }

  for (const auto& r : result.reports) {
    if (r.failed) {
      ++result.failed;
    } else {
      ++result.evaluated;
    }
  }
  for (const auto& m : result.methods) {
    int hits = 0;
    for (const auto& r : result.reports) {
      if (r.failed) continue;
      auto it = r.chosen.find(m);
      if (it != r.chosen.end() && it->second && *it->second == r.gold) ++hits;
    }
    result.accuracy[m] = result.evaluated > 0 ? static_cast<double>(hits) / result.evaluated : 0.0;
  }
  if (result.evaluated > 0) {
    result.coverage_rate = coverage_rate(result.reports);
  } else {
    log_warning("every question failed; coverage rate reported as 0");
  }
  result.config_snapshot = snapshot(config, methods).dump();
  result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<int> split_step_tokens(int total_token_cap, int depth) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (total_token_cap < depth) throw std::invalid_argument("token cap must be at least the depth");
  return std::vector<int>(static_cast<std::size_t>(depth), total_token_cap / depth);
}

std::vector<SweepCell> sweep_width_depth(Backend& backend, const LinearProbe& probe,
                                         std::span<const Question> questions, std::span<const int> widths,
                                         std::span<const int> depths, int total_token_cap,
                                         const BenchmarkConfig& base) {
  if (widths.empty() || depths.empty()) throw std::invalid_argument("widths and depths must be nonempty");
  if (total_token_cap < *std::max_element(depths.begin(), depths.end())) {
    throw std::invalid_argument("token cap must be at least the largest depth");
  }
  const std::vector<std::string> methods{"agg_final"};
  std::vector<SweepCell> cells;
  for (int n : widths) {
    for (int m : depths) {
      SweepCell cell{n, m, std::nullopt, std::nullopt, {}};
      try {
        BenchmarkConfig config = base;
        config.keep_search = false;
        config.search.beam_width = n;
        config.search.depth = m;
        config.search.step_tokens = split_step_tokens(total_token_cap, m);
        BenchmarkResult r = run_benchmark(backend, probe, questions, config, methods);
        if (r.evaluated == 0) throw SearchError("every question failed");
        cell.accuracy = r.accuracy.at("agg_final");
        cell.coverage = r.coverage_rate;
      } catch (const std::exception& e) {
        cell.error = e.what();
        log_warning("sweep cell n=" + std::to_string(n) + " m=" + std::to_string(m) + " missing: " + e.what());
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void write_results_csv(const BenchmarkResult& result, std::ostream& out) {
  out << "method,accuracy\n";
  for (const auto& m : result.methods) out << m << ',' << fmt_double(result.accuracy.at(m)) << '\n';
  out << "coverage_rate," << fmt_double(result.coverage_rate) << '\n';
}

void write_sweep_csv(std::span<const SweepCell> cells, std::ostream& out) {
  out << "width,depth,accuracy\n";
  for (const auto& c : cells) {
    out << c.width << ',' << c.depth << ',' << (c.accuracy ? fmt_double(*c.accuracy) : "") << '\n';
  }
}

void write_reports_jsonl(const BenchmarkResult& result, std::ostream& out) {
  for (const auto& r : result.reports) {
    ojson pool = ojson::object();
    for (const auto& [answer, value] : r.pool) pool[format_rational(answer)] = value;
    ojson chosen = ojson::object();
    for (const auto& m : result.methods) {
      auto it = r.chosen.find(m);
      chosen[m] = it == r.chosen.end() ? ojson(nullptr) : answer_json(it->second);
    }
    ojson line{{"qid", r.qid}, {"pool", std::move(pool)}, {"chosen", std::move(chosen)},
               {"gold", answer_json(r.gold)}, {"covered", r.covered}};
    if (r.failed) line["error"] = r.error;
    out << line.dump() << '\n';
  }
}

void write_run_artifacts(const BenchmarkResult& result, const SearchConfig& config, std::ostream& out) {
  for (const auto& r : result.reports) {
    if (r.search) write_run_record(out, r.qid, *r.search, config);
  }
}

}  // namespace probesearch
