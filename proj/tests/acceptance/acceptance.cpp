// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite on the toy backend. Prints one PASS/FAIL line per
// criterion and exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "probesearch/dataset.hpp"
#include "probesearch/harness.hpp"
#include "probesearch/layer_selection.hpp"
#include "probesearch/log.hpp"
#include "probesearch/order_preservation.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/protocol.hpp"
#include "probesearch/search.hpp"
#include "probesearch/toy_backend.hpp"

namespace fs = std::filesystem;
using namespace probesearch;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// Shared between criteria so expensive artifacts are built once.
struct Context {
  ToyBackend toy;
  std::vector<Question> train_questions;  // first 100
  std::vector<Question> eval_questions;   // next 200, never used for training
  std::optional<LinearProbe> probe;
  std::optional<BenchmarkResult> guided;

  Context() {
    const auto all = to_questions(toy.make_questions(300));
    train_questions.assign(all.begin(), all.begin() + 100);
    eval_questions.assign(all.begin() + 100, all.end());
  }

  const LinearProbe& top_probe() {
    if (!probe) {
      const ProbeDataset data = build_probe_dataset(toy, train_questions, 3, RepKind::kHidden);
      probe = train_logistic_regression(split_dataset(data, 0.8, 0).first);
    }
    return *probe;
  }
};

Outcome probe_quality(Context& ctx, double& seconds_limit) {
  seconds_limit = 30.0;
  const ProbeDataset data = build_probe_dataset(ctx.toy, ctx.train_questions, 3, RepKind::kHidden);
  auto [train, test] = split_dataset(data, 0.8, 0);
  LinearProbe probe = train_logistic_regression(train);
  const ProbeMetrics m = evaluate_classifier(probe, test);
  ctx.probe = std::move(probe);
  const bool pass = m.auc() >= 0.99 && m.f1 >= 0.95;
  return {pass, "AUC " + fixed(m.auc(), 4) + " F1 " + fixed(m.f1, 4) + " on " + std::to_string(test.size()) +
                    " held-out tokens"};
}

Outcome order_preservation(Context&, double& seconds_limit) {
  seconds_limit = 20.0;
  const auto bt = verify_order_preservation(OrderPreservationConfig{});
  OrderPreservationConfig det;
  det.deterministic = true;
  const auto hard = verify_order_preservation(det);
  const bool pass = bt.spearman >= 0.9 && hard.pairwise_violation_rate <= 0.01;
  return {pass, "spearman " + fixed(bt.spearman, 4) + ", deterministic violation rate " +
                    fixed(hard.pairwise_violation_rate, 4)};
}

Outcome gradient_check(Context&, double& seconds_limit) {
  seconds_limit = 5.0;
  std::mt19937_64 rng(20261016);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> rows_dist(5, 60);
  std::uniform_int_distribution<std::size_t> cols_dist(1, 16);
  const double h = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = rows_dist(rng);
    const std::size_t cols = cols_dist(rng);
    std::vector<double> x(rows * cols);
    for (auto& v : x) v = normal(rng);
    std::vector<int> y(rows);
    for (auto& v : y) v = static_cast<int>(rng() & 1);
    std::vector<double> w(cols);
    for (auto& v : w) v = normal(rng);
    const double b = normal(rng);
    const LinearObjective obj(x, rows, cols, y, 1e-4);
    const auto g = obj.bce_gradient(w, b);

    auto rel = [](double a, double c) { return std::abs(a - c) / std::max({std::abs(a), std::abs(c), 1e-3}); };
    for (std::size_t j = 0; j <= cols; ++j) {
      std::vector<double> up = w;
      std::vector<double> down = w;
      double bu = b;
      double bd = b;
      if (j < cols) {
        up[j] += h;
        down[j] -= h;
      } else {
        bu += h;
        bd -= h;
      }
      const double numeric = (obj.bce_loss(up, bu) - obj.bce_loss(down, bd)) / (2.0 * h);
      worst = std::max(worst, rel(j < cols ? g.weights[j] : g.bias, numeric));
    }
  }
  return {worst <= 1e-5, "max relative error " + sci(worst) + " over 100 instances"};
}

// Independent oracle: enumerate the full k-ary tree with raw backend calls,
// then complete every leaf greedily.
void enumerate_leaves(Backend& backend, const SearchConfig& c, const std::string& text, bool finished, int level,
                      std::multiset<std::string>& leaves) {
  if (finished || level == c.depth) {
    std::string full = text;
    bool done = finished;
    for (int s = 0; s < c.completion_steps && !done; ++s) {
      GenerationRequest g;
      g.prompt_text = full;
      g.k = 1;
      g.max_new_tokens = c.completion_tokens;
      g.mode = DecodeMode::kGreedy;
      g.layer = 3;
      const auto r = backend.generate(g).candidates.at(0);
      full += r.text;
      done = r.finished || r.finish_reason == FinishReason::kStopToken || r.token_count == 0;
    }
    leaves.insert(full);
    return;
  }
  GenerationRequest g;
  g.prompt_text = text;
  g.k = c.fan_out;
  g.max_new_tokens = c.step_tokens[static_cast<std::size_t>(level)];
  g.mode = DecodeMode::kTopKStart;
  g.layer = 3;
  for (const auto& cand : backend.generate(g).candidates) {
    enumerate_leaves(backend, c, text + cand.text, cand.finished, level + 1, leaves);
  }
}

Outcome oracle_equivalence(Context& ctx, double& seconds_limit) {
  seconds_limit = 30.0;
  SearchConfig c;
  c.beam_width = c.fan_out;
  c.prune_scope = PruneScope::kPerNode;
  c.retention_seed = 7;
  int matched = 0;
  std::size_t leaves_total = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const Question& q = ctx.eval_questions[i];
    const SearchResult r = probe_search(ctx.toy, ctx.top_probe(), q, c);
    std::multiset<std::string> got;
    for (const auto& b : r.branches) got.insert(b.full_text);
    std::multiset<std::string> expected;
    enumerate_leaves(ctx.toy, c, format_prompt(q.text), false, 0, expected);
    matched += got == expected;
    leaves_total += expected.size();
  }
  return {matched == 20, std::to_string(matched) + "/20 questions match, " + std::to_string(leaves_total) +
                             " leaves enumerated (k=n=10, m=3)"};
}

Outcome guidance_lift(Context& ctx, double& seconds_limit) {
  seconds_limit = 120.0;
  const auto methods = default_methods();
  ctx.guided = run_benchmark(ctx.toy, ctx.top_probe(), ctx.eval_questions, BenchmarkConfig{}, methods);
  BenchmarkConfig ablation;
  ablation.search.retention = Retention::kRandom;
  ablation.search.retention_seed = 1;
  const std::vector<std::string> agg{"agg_final"};
  const BenchmarkResult random = run_benchmark(ctx.toy, ctx.top_probe(), ctx.eval_questions, ablation, agg);
  const double a = ctx.guided->accuracy.at("agg_final");
  const double g = ctx.guided->accuracy.at("greedy");
  const double r = random.accuracy.at("agg_final");
  const bool pass = ctx.guided->evaluated == 200 && a - g >= 0.10 && a - r >= 0.10;
  return {pass, "agg_final " + fixed(a) + ", greedy " + fixed(g) + ", random-prune " + fixed(r)};
}

Outcome marginalization(Context& ctx, double& seconds_limit) {
  seconds_limit = 0.0;
  if (!ctx.guided) return {false, "no benchmark run available"};
  const auto& acc = ctx.guided->accuracy;
  bool bound = true;
  std::string over;
  for (const auto& [m, v] : acc) {
    if (v > ctx.guided->coverage_rate) {
      bound = false;
      over += " " + m;
    }
  }
  const bool pass = acc.at("agg_final") >= acc.at("single_final") && acc.at("agg_final") >= acc.at("vote") && bound;
  std::string detail = "agg_final " + fixed(acc.at("agg_final")) + ", single_final " + fixed(acc.at("single_final")) +
                       ", vote " + fixed(acc.at("vote")) + ", coverage " + fixed(ctx.guided->coverage_rate);
  if (!bound) detail += ", above coverage:" + over;
  return {pass, detail};
}

Outcome sweep_direction(Context& ctx, double& seconds_limit) {
  seconds_limit = 180.0;
  const std::vector<int> widths{1, 2, 3, 4, 5, 6};
  const std::vector<int> depths{1, 2, 3, 4, 5, 6};
  const std::vector<Question> subset(ctx.eval_questions.begin(), ctx.eval_questions.begin() + 100);
  const auto cells = sweep_width_depth(ctx.toy, ctx.top_probe(), subset, widths, depths, 240);

  const fs::path csv = fs::temp_directory_path() / "probesearch_acceptance_sweep.csv";
  {
    std::ofstream out(csv);
    write_sweep_csv(cells, out);
  }
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::set<std::pair<int, int>> seen;
  std::map<std::pair<int, int>, double> acc;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string n;
    std::string m;
    std::string a;
    std::getline(row, n, ',');
    std::getline(row, m, ',');
    std::getline(row, a);
    seen.insert({std::stoi(n), std::stoi(m)});
    if (!a.empty()) acc[{std::stoi(n), std::stoi(m)}] = std::stod(a);
  }
  fs::remove(csv);
  const bool complete = line.empty() && seen.size() == widths.size() * depths.size() && acc.size() == seen.size();
  const bool have = acc.count({3, 3}) && acc.count({1, 1});
  const bool pass = complete && have && acc[{3, 3}] >= acc[{1, 1}];
  return {pass, "acc(3,3) " + (have ? fixed(acc[{3, 3}]) : std::string("missing")) + ", acc(1,1) " +
                    (have ? fixed(acc[{1, 1}]) : std::string("missing")) + ", " + std::to_string(acc.size()) + "/" +
                    std::to_string(widths.size() * depths.size()) + " cells"};
}

Outcome layer_selection(Context& ctx, double& seconds_limit) {
  seconds_limit = 0.0;
  const int num_layers = ctx.toy.info().num_layers;
  const LayerRanking ranking = select_best_layers(ctx.toy, ctx.train_questions, RepKind::kHidden, 3);
  if (static_cast<int>(ranking.ranked.size()) != num_layers) return {false, "some layers failed to train"};

  // Guided accuracy per layer, each searched with its own probe.
  const std::vector<Question> subset(ctx.eval_questions.begin(), ctx.eval_questions.begin() + 100);
  const std::vector<std::string> agg{"agg_final"};
  std::map<int, double> acc;
  for (const auto& s : ranking.ranked) {
    acc[s.layer] = run_benchmark(ctx.toy, s.probe, subset, BenchmarkConfig{}, agg).accuracy.at("agg_final");
  }
  double top = 0.0;
  double bottom = 0.0;
  for (int i = 0; i < 3; ++i) {
    top += acc[ranking.ranked[static_cast<std::size_t>(i)].layer] / 3.0;
    bottom += acc[ranking.ranked[static_cast<std::size_t>(num_layers - 3 + i)].layer] / 3.0;
  }
  std::string order;
  for (const auto& s : ranking.ranked) order += std::to_string(s.layer) + "(F1 " + fixed(s.metrics.f1) + ") ";
  const bool pass = ranking.ranked.front().layer == num_layers - 1 && top >= bottom;
  return {pass, "ranking " + order + "| top-3 accuracy " + fixed(top) + ", bottom-3 accuracy " + fixed(bottom)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes the dataset, probe and run artifacts of a fresh seeded pipeline.
void write_pipeline(const fs::path& dir) {
  fs::create_directories(dir);
  ToyConfig config;
  config.seed = 11;
  ToyBackend toy(config);
  const auto qs = to_questions(toy.make_questions(30));
  const std::vector<Question> train(qs.begin(), qs.begin() + 20);
  const std::vector<Question> eval(qs.begin() + 20, qs.end());
  const ProbeDataset data = build_probe_dataset(toy, train, 3, RepKind::kHidden);
  {
    std::ofstream out(dir / "dataset.jsonl", std::ios::binary);
    write_dataset(data, out);
  }
  const LinearProbe probe = train_logistic_regression(split_dataset(data, 0.8, 0).first);
  save_probe_file(probe, (dir / "probe.json").string());
  BenchmarkConfig bc;
  bc.search.retention_seed = 5;
  const BenchmarkResult r = run_benchmark(toy, load_probe_file((dir / "probe.json").string()), eval, bc,
                                          default_methods());
  std::ofstream runs(dir / "runs.jsonl", std::ios::binary);
  write_run_artifacts(r, bc.search, runs);
  std::ofstream reports(dir / "reports.jsonl", std::ios::binary);
  write_reports_jsonl(r, reports);
}

std::string random_text(std::mt19937_64& rng) {
  static const std::string alphabet = "aZ 09,.:;\"\\\n\t/{}[]\x01";
  std::string s(rng() % 30, ' ');
  for (auto& c : s) c = alphabet[rng() % alphabet.size()];
  return s;
}

Activation random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> normal(0.0f, 10.0f);
  Activation a(dim);
  for (auto& v : a) v = normal(rng);
  return a;
}

bool codec_round_trip(int messages) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < messages; ++i) {
    GenerationRequest g;
    g.id = random_text(rng);
    g.prompt_text = random_text(rng);
    g.k = 1 + static_cast<int>(rng() % 50);
    g.max_new_tokens = 1 + static_cast<int>(rng() % 400);
    g.mode = rng() & 1 ? DecodeMode::kGreedy : DecodeMode::kTopKStart;
    g.layer = static_cast<int>(rng() % 40);
    g.rep_kind = static_cast<RepKind>(rng() % 3);
    g.capture = rng() & 1 ? Capture::kAllTokens : Capture::kLastToken;
    const Request req = rng() & 1 ? Request{g} : Request{InfoRequest{random_text(rng)}};
    if (!(wire::decode_request(wire::encode(req)) == req)) return false;

    Reply rep;
    rep.id = random_text(rng);
    switch (rng() % 3) {
      case 0:
        rep.body = BackendInfo{random_text(rng), static_cast<int>(1 + rng() % 80), static_cast<int>(1 + rng() % 8192),
                               static_cast<int>(1 + rng() % 100000)};
        break;
      case 1: {
        GenerationResult r;
        const std::size_t dim = 1 + rng() % 32;
        for (std::size_t c = rng() % 5; c > 0; --c) {
          CandidateContinuation cc;
          cc.text = random_text(rng);
          cc.token_count = static_cast<int>(rng() % 300);
          cc.activation = random_vector(rng, dim);
          for (std::size_t t = rng() % 3; t > 0; --t) cc.activations.push_back(random_vector(rng, dim));
          cc.finished = rng() & 1;
          cc.finish_reason = static_cast<FinishReason>(rng() % 3);
          r.candidates.push_back(std::move(cc));
        }
        if (rng() & 1) r.warning = random_text(rng);
        rep.body = std::move(r);
        break;
      }
      default:
        rep.body = ErrorReply{random_text(rng)};
    }
    if (!(wire::decode_reply(wire::encode(rep)) == rep)) return false;
  }
  return true;
}

Outcome determinism(Context&, double& seconds_limit) {
  seconds_limit = 0.0;
  const fs::path root = fs::temp_directory_path() / "probesearch_acceptance_determinism";
  fs::remove_all(root);
  write_pipeline(root / "a");
  write_pipeline(root / "b");
  std::string differing;
  for (const char* name : {"dataset.jsonl", "probe.json", "runs.jsonl", "reports.jsonl"}) {
    const std::string a = slurp(root / "a" / name);
    const std::string b = slurp(root / "b" / name);
    if (a.empty() || a != b) differing += std::string(" ") + name;
  }
  fs::remove_all(root);
  const bool codec = codec_round_trip(1000);
  return {differing.empty() && codec, (differing.empty() ? std::string("artifacts byte-identical")
                                                         : "differing or empty:" + differing) +
                                          (codec ? ", codec round trip 1000/1000" : ", codec round trip FAILED")};
}

}  // namespace

int main() {
  set_log_level(LogLevel::kError);
  Context ctx;
  using Criterion = std::function<Outcome(Context&, double&)>;
  const std::vector<std::pair<std::string, Criterion>> criteria{
      {"probe quality", probe_quality},
      {"order preservation", order_preservation},
      {"gradient check", gradient_check},
      {"search oracle equivalence", oracle_equivalence},
      {"guidance lift", guidance_lift},
      {"marginalization ordering", marginalization},
      {"sweep direction", sweep_direction},
      {"layer selection", layer_selection},
      {"determinism and formats", determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    double limit = 0.0;
    Outcome o;
    try {
      o = criteria[i].second(ctx, limit);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fixed(seconds, 2) + "s";
    if (limit > 0.0) {
      timing += " (limit " + fixed(limit, 0) + "s)";
      if (seconds >= limit) {
        o.pass = false;
        o.detail += ", over the time limit";
      }
    }
    failures += !o.pass;
    std::printf("criterion %zu %-26s %s  %s  [%s]\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
