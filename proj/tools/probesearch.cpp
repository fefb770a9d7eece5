// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

// probesearch: command-line front end.
//
//   probesearch serve-toy [--listen stdio|PORT]
//   probesearch questions generate --count N --out FILE
//   probesearch probe train --layer L --rep hidden --out probe.json
//   probesearch probe layers --top 3
//   probesearch verify order-preservation
//   probesearch bench run --probe probe.json --out DIR
//   probesearch bench sweep --probe probe.json --widths 1,2,3 --depths 1,2,3 --cap 240 --out DIR
//
// --backend toy (default) runs the toy model in-process; any other value is a
// server command line or tcp://host:port.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "probesearch/client.hpp"
#include "probesearch/dataset.hpp"
#include "probesearch/errors.hpp"
#include "probesearch/harness.hpp"
#include "probesearch/layer_selection.hpp"
#include "probesearch/order_preservation.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/questions.hpp"
#include "probesearch/toy_backend.hpp"
#include "serve.hpp"

namespace ps = probesearch;
namespace fs = std::filesystem;

namespace {

struct ToyOptions {
  std::uint64_t seed = 0;
  int dim = 16;
  int layers = 4;
  double noise = 0.5;
  double p_thoughtful = 0.5;

  ps::ToyConfig config() const {
    ps::ToyConfig c;
    c.seed = seed;
    c.activation_dim = dim;
    c.num_layers = layers;
    c.noise_sigma = noise;
    c.p_thoughtful_step = p_thoughtful;
    return c;
  }
};

struct Common {
  std::string backend = "toy";
  std::string questions_file;
  int toy_questions = 100;
  int timeout_ms = 120000;
  ToyOptions toy;
};

void add_toy_options(CLI::App* cmd, ToyOptions& toy) {
  cmd->add_option("--toy-seed", toy.seed, "toy model seed");
  cmd->add_option("--toy-dim", toy.dim, "toy activation dimension");
  cmd->add_option("--toy-layers", toy.layers, "toy layer count");
  cmd->add_option("--toy-noise", toy.noise, "toy activation noise sigma");
  cmd->add_option("--toy-p-thoughtful", toy.p_thoughtful, "probability that a toy branch opener is thoughtful");
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--backend", common.backend, "toy, a server command, or tcp://host:port");
  cmd->add_option("--questions", common.questions_file, "question file (JSONL)");
  cmd->add_option("--toy-questions", common.toy_questions, "generated toy questions when --questions is absent");
  cmd->add_option("--timeout-ms", common.timeout_ms, "per-request timeout for remote backends");
  add_toy_options(cmd, common.toy);
}

struct Session {
  std::unique_ptr<ps::Backend> backend;
  std::vector<ps::Question> questions;
};

Session open_session(const Common& common) {
  Session s;
  if (common.backend == "toy") {
    auto toy = std::make_unique<ps::ToyBackend>(common.toy.config());
    if (common.questions_file.empty()) s.questions = ps::to_questions(toy->make_questions(common.toy_questions));
    s.backend = std::move(toy);
  } else {
    ps::ClientOptions options;
    options.timeout = std::chrono::milliseconds(common.timeout_ms);
    s.backend = ps::connect_backend(common.backend, options);
    if (common.questions_file.empty()) throw std::invalid_argument("--questions is required with a remote backend");
  }
  if (!common.questions_file.empty()) s.questions = ps::read_questions_file(common.questions_file);
  return s;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_metrics(int layer, const ps::ProbeMetrics& m) {
  std::cout << "layer " << layer << "  accuracy " << std::fixed << std::setprecision(4) << m.accuracy << "  f1 "
            << m.f1 << "  auc " << (m.auc_roc ? std::to_string(*m.auc_roc) : std::string("n/a")) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probe-guided tree search for multi-step reasoning"};
  app.require_subcommand(1);

  // serve-toy
  ToyOptions serve_toy;
  std::string listen = "stdio";
  auto* serve = app.add_subcommand("serve-toy", "serve the toy model over the line protocol");
  add_toy_options(serve, serve_toy);
  serve->add_option("--listen", listen, "stdio or a TCP port on 127.0.0.1");

  // questions generate
  auto* questions = app.add_subcommand("questions", "question files");
  questions->require_subcommand(1);
  auto* qgen = questions->add_subcommand("generate", "write toy questions as JSONL");
  ToyOptions qtoy;
  int qcount = 200;
  std::string qout;
  add_toy_options(qgen, qtoy);
  qgen->add_option("--count", qcount, "number of questions");
  qgen->add_option("--out", qout, "output file")->required();

  // probe train / probe layers
  auto* probe = app.add_subcommand("probe", "train and rank probes");
  probe->require_subcommand(1);
  Common train_common;
  int train_layer = -1;
  std::string train_rep = "hidden";
  std::string train_kind = "lr";
  std::string train_out = "probe.json";
  std::string dataset_out;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
  auto* train = probe->add_subcommand("train", "build a dataset and train one probe");
  add_common(train, train_common);
  train->add_option("--layer", train_layer, "layer (default: top layer)");
  train->add_option("--rep", train_rep, "hidden|attn|mlp");
  train->add_option("--kind", train_kind, "lr|svm");
  train->add_option("--out", train_out, "probe file");
  train->add_option("--dataset-out", dataset_out, "also write the full dataset");
  train->add_option("--train-fraction", train_fraction, "question-grouped train share");
  train->add_option("--split-seed", split_seed, "split shuffle seed");

  Common layers_common;
  int top_m = 3;
  std::string layers_rep = "hidden";
  auto* layers = probe->add_subcommand("layers", "rank layers by probe test F1");
  add_common(layers, layers_common);
  layers->add_option("--top", top_m, "size of the top and bottom lists");
  layers->add_option("--rep", layers_rep, "hidden|attn|mlp");

  // verify order-preservation
  auto* verify = app.add_subcommand("verify", "numerical checks");
  verify->require_subcommand(1);
  ps::OrderPreservationConfig op;
  auto* order = verify->add_subcommand("order-preservation", "probe logits vs a planted pairwise reward");
  order->add_option("--dim", op.dim);
  order->add_option("--items", op.n_items);
  order->add_option("--pairs", op.n_pairs);
  order->add_option("--seed", op.seed);
  order->add_flag("--deterministic", op.deterministic, "winner is always the higher-reward item");

  // bench run / bench sweep
  auto* bench = app.add_subcommand("bench", "benchmarks");
  bench->require_subcommand(1);
  Common run_common;
  run_common.toy_questions = 200;
  std::string run_probe;
  std::string run_config;
  std::string run_out = "out";
  std::vector<std::string> run_methods = ps::default_methods();
  int run_parallel = 1;
  bool run_ablation = false;
  auto* run = bench->add_subcommand("run", "guided search plus baselines on a question set");
  add_common(run, run_common);
  run->add_option("--probe", run_probe, "probe file")->required();
  run->add_option("--config", run_config, "benchmark config JSON");
  run->add_option("--out", run_out, "output directory");
  run->add_option("--methods", run_methods, "selection methods")->delimiter(',');
  run->add_option("--parallel", run_parallel, "questions in flight");
  run->add_flag("--random-prune", run_ablation, "ablation: retain a random subset instead of the top scores");

  Common sweep_common;
  std::string sweep_probe;
  std::string sweep_config;
  std::string sweep_out = "out";
  std::vector<int> widths{1, 2, 3, 4, 5, 6};
  std::vector<int> depths{1, 2, 3, 4, 5, 6};
  int cap = 240;
  auto* sweep = bench->add_subcommand("sweep", "width x depth accuracy grid");
  add_common(sweep, sweep_common);
  sweep->add_option("--probe", sweep_probe, "probe file")->required();
  sweep->add_option("--config", sweep_config, "benchmark config JSON");
  sweep->add_option("--widths", widths)->delimiter(',');
  sweep->add_option("--depths", depths)->delimiter(',');
  sweep->add_option("--cap", cap, "total branching tokens per branch");
  sweep->add_option("--out", sweep_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) {
      ps::ToyBackend backend(serve_toy.config());
      if (listen == "stdio") {
        std::ios::sync_with_stdio(false);
        ps::serve_lines(backend, std::cin, std::cout);
        return 0;
      }
      return ps::tools::serve_tcp(backend, std::stoi(listen));
    }

    if (qgen->parsed()) {
      auto out = open_out(qout);
      ps::ToyConfig config = qtoy.config();
      ps::write_questions(ps::to_questions(ps::generate_questions(config, qcount)), out);
      return 0;
    }

    if (train->parsed()) {
      Session s = open_session(train_common);
      const int layer = train_layer >= 0 ? train_layer : s.backend->info().num_layers - 1;
      const ps::RepKind rep = ps::parse_rep_kind(train_rep);
      ps::ProbeDataset data = ps::build_probe_dataset(*s.backend, s.questions, layer, rep);
      if (!dataset_out.empty()) {
        auto out = open_out(dataset_out);
        ps::write_dataset(data, out);
      }
      auto [train_set, test_set] = ps::split_dataset(data, train_fraction, split_seed);
      ps::LinearProbe p = ps::train_probe(ps::parse_probe_kind(train_kind), train_set);
      std::cout << "examples " << data.size() << " (train " << train_set.size() << ", test " << test_set.size()
                << ")\n";
      print_metrics(layer, ps::evaluate_classifier(p, test_set));
      auto out = open_out(train_out);
      ps::save_probe(p, out);
      return 0;
    }

    if (layers->parsed()) {
      Session s = open_session(layers_common);
      ps::LayerRanking r = ps::select_best_layers(*s.backend, s.questions, ps::parse_rep_kind(layers_rep), top_m);
      for (const auto& score : r.ranked) print_metrics(score.layer, score.metrics);
      std::cout << "top:";
      for (int l : r.top) std::cout << ' ' << l;
      std::cout << "\nbottom:";
      for (int l : r.bottom) std::cout << ' ' << l;
      std::cout << '\n';
      return 0;
    }

    if (order->parsed()) {
      ps::OrderPreservationReport r = ps::verify_order_preservation(op);
      std::cout << "items " << r.n_items << "  spearman " << r.spearman << "  kendall " << r.kendall
                << "  violation_rate " << r.pairwise_violation_rate << '\n';
      return 0;
    }

    if (run->parsed()) {
      Session s = open_session(run_common);
      ps::LinearProbe p = ps::load_probe_file(run_probe);
      ps::BenchmarkConfig config = run_config.empty() ? ps::BenchmarkConfig{} : ps::parse_benchmark_config(read_file(run_config));
      config.parallelism = std::max(config.parallelism, run_parallel);
      if (run_ablation) config.search.retention = ps::Retention::kRandom;
      ps::BenchmarkResult result = ps::run_benchmark(*s.backend, p, s.questions, config, run_methods);
      const fs::path dir(run_out);
      {
        auto out = open_out(dir / "results.csv");
        ps::write_results_csv(result, out);
      }
      {
        auto out = open_out(dir / "reports.jsonl");
        ps::write_reports_jsonl(result, out);
      }
      {
        auto out = open_out(dir / "runs.jsonl");
        ps::write_run_artifacts(result, config.search, out);
      }
      ps::write_results_csv(result, std::cout);
      std::cout << "evaluated " << result.evaluated << ", failed " << result.failed << ", "
                << result.wall_time_seconds << " s\n";
      return 0;
    }

    if (sweep->parsed()) {
      Session s = open_session(sweep_common);
      ps::LinearProbe p = ps::load_probe_file(sweep_probe);
      ps::BenchmarkConfig config =
          sweep_config.empty() ? ps::BenchmarkConfig{} : ps::parse_benchmark_config(read_file(sweep_config));
      auto cells = ps::sweep_width_depth(*s.backend, p, s.questions, widths, depths, cap, config);
      auto out = open_out(fs::path(sweep_out) / "sweep.csv");
      ps::write_sweep_csv(cells, out);
      ps::write_sweep_csv(cells, std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
