// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "probesearch/errors.hpp"
#include "probesearch/metrics.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/toy_backend.hpp"

using namespace probesearch;

namespace {

ProbeDataset separable_2d() { return testing::repeated_dataset({{{1.0f, 0.0f}, 1}, {{-1.0f, 0.0f}, 0}}, 50); }

double train_accuracy(const LinearProbe& p, const ProbeDataset& d) { return evaluate_classifier(p, d).accuracy; }

double rel_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); }

struct Instance {
  std::vector<double> x;
  std::vector<int> y;
  std::vector<double> w;
  double b;
  std::size_t rows;
  std::size_t cols;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> rows(5, 40);
  std::uniform_int_distribution<std::size_t> cols(1, 8);
  std::normal_distribution<double> normal(0.0, 1.0);
  Instance in;
  in.rows = rows(rng);
  in.cols = cols(rng);
  for (std::size_t i = 0; i < in.rows * in.cols; ++i) in.x.push_back(normal(rng));
  for (std::size_t i = 0; i < in.rows; ++i) in.y.push_back(static_cast<int>(rng() & 1));
  for (std::size_t j = 0; j < in.cols; ++j) in.w.push_back(normal(rng));
  in.b = normal(rng);
  return in;
}

// Central differences of f over (w, b).
template <class F>
std::vector<double> numeric_gradient(F f, std::vector<double> w, double b, double h) {
  std::vector<double> g;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double saved = w[j];
    w[j] = saved + h;
    const double up = f(w, b);
    w[j] = saved - h;
    const double down = f(w, b);
    w[j] = saved;
    g.push_back((up - down) / (2.0 * h));
  }
  g.push_back((f(w, b + h) - f(w, b - h)) / (2.0 * h));
  return g;
}

}  // namespace

TEST_CASE("separable set is fit exactly by both trainers") {
  const ProbeDataset d = separable_2d();
  const LinearProbe lr = train_logistic_regression(d);
  const LinearProbe svm = train_linear_svm(d);
  CHECK(train_accuracy(lr, d) == 1.0);
  CHECK(train_accuracy(svm, d) == 1.0);
  for (const auto& e : d.examples) {
    if (e.label == 1) CHECK(svm.logit(e.features) > 0.0);
    else CHECK(svm.logit(e.features) < 0.0);
  }
  CHECK(lr.kind == ProbeKind::kLogisticRegression);
  CHECK(svm.kind == ProbeKind::kLinearSvm);
  CHECK(lr.train_meta.epochs >= 1);
  CHECK(lr.train_meta.learning_rate == 0.1);
}

TEST_CASE("training is deterministic") {
  const ProbeDataset d = testing::gaussian_dataset(400, 5, 0.7, 3);
  const LinearProbe a = train_logistic_regression(d);
  const LinearProbe b = train_logistic_regression(d);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
}

TEST_CASE("balanced all-zero features give a flat probe") {
  const ProbeDataset d = testing::repeated_dataset({{{0.0f, 0.0f, 0.0f}, 1}, {{0.0f, 0.0f, 0.0f}, 0}}, 20);
  const LinearProbe p = train_logistic_regression(d);
  for (double w : p.weights) CHECK(std::abs(w) < 1e-12);
  CHECK(p.probability(d.examples[0].features) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(p.feat_std == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("missing label is a dataset error") {
  const ProbeDataset d = testing::repeated_dataset({{{1.0f}, 1}}, 5);
  CHECK_THROWS_AS(train_logistic_regression(d), DatasetError);
  CHECK_THROWS_AS(train_linear_svm(d), DatasetError);
}

TEST_CASE("non-finite loss reports the epoch") {
  const ProbeDataset d = testing::repeated_dataset({{{1e10f}, 1}, {{2e10f}, 0}}, 3);
  TrainHyper h;
  h.standardize = false;
  h.learning_rate = 1e300;
  try {
    train_logistic_regression(d, h);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 1);
  }
}

TEST_CASE("logit and probability closed forms") {
  LinearProbe p;
  p.weights = {1.0, -1.0};
  p.bias = 0.5;
  const std::vector<double> x{2.0, 1.0};
  CHECK(p.logit(std::span<const double>(x)) == doctest::Approx(1.5));
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1.5) == doctest::Approx(1.0 / (1.0 + std::exp(-1.5))));
  CHECK(sigmoid(1.5) == doctest::Approx(0.81757).epsilon(1e-5));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(p.logit(std::span<const double>(bad)), std::invalid_argument);
}

TEST_CASE("probability is monotone in the logit") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = normal(rng);
    const double b = normal(rng);
    if (a > b) CHECK(sigmoid(a) >= sigmoid(b));
  }
  // Strict where double precision allows.
  CHECK(sigmoid(1.0) > sigmoid(0.999));
}

TEST_CASE("BCE gradient matches central differences") {
  std::mt19937_64 rng(2026);
  for (int t = 0; t < 100; ++t) {
    Instance in = random_instance(rng);
    LinearObjective obj(in.x, in.rows, in.cols, in.y, 1e-4);
    auto g = obj.bce_gradient(in.w, in.b);
    auto num = numeric_gradient([&](const std::vector<double>& w, double b) { return obj.bce_loss(w, b); }, in.w,
                                in.b, 1e-5);
    for (std::size_t j = 0; j < in.cols; ++j) CHECK(rel_error(g.weights[j], num[j]) < 1e-5);
    CHECK(rel_error(g.bias, num.back()) < 1e-5);
  }
}

TEST_CASE("hinge subgradient matches central differences away from kinks") {
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    Instance in = random_instance(rng);
    // Skip instances with a margin near 1, where the loss has a kink.
    bool near_kink = false;
    for (std::size_t i = 0; i < in.rows; ++i) {
      double f = in.b;
      for (std::size_t j = 0; j < in.cols; ++j) f += in.x[i * in.cols + j] * in.w[j];
      const double y = in.y[i] == 1 ? 1.0 : -1.0;
      if (std::abs(1.0 - y * f) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;
    ++checked;
    LinearObjective obj(in.x, in.rows, in.cols, in.y, 1e-4);
    auto g = obj.hinge_subgradient(in.w, in.b);
    auto num = numeric_gradient([&](const std::vector<double>& w, double b) { return obj.hinge_loss(w, b); }, in.w,
                                in.b, 1e-5);
    for (std::size_t j = 0; j < in.cols; ++j) CHECK(rel_error(g.weights[j], num[j]) < 1e-5);
    CHECK(rel_error(g.bias, num.back()) < 1e-5);
  }
  CHECK(checked > 50);
}

TEST_CASE("loss at zero weights is log 2") {
  LinearObjective obj({1.0, 2.0, 3.0, 4.0}, 2, 2, {0, 1}, 0.5);
  CHECK(obj.bce_loss(std::vector<double>{0.0, 0.0}, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(obj.hinge_loss(std::vector<double>{0.0, 0.0}, 0.0) == doctest::Approx(1.0));
  // L2 term only touches the weights.
  CHECK(obj.bce_loss(std::vector<double>{0.0, 0.0}, 3.0) >= std::log(2.0));
  CHECK_THROWS_AS(LinearObjective({1.0}, 1, 2, {0}, 0.0), std::invalid_argument);
}

TEST_CASE("evaluation metrics") {
  SUBCASE("perfect ranking") {
    LinearProbe p;
    p.weights = {1.0};
    ProbeDataset d = testing::repeated_dataset({{{2.0f}, 1}, {{-2.0f}, 0}}, 5);
    auto m = evaluate_classifier(p, d);
    CHECK(m.auc() == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.accuracy == 1.0);
  }
  SUBCASE("constant scores") {
    LinearProbe p;
    p.weights = {0.0};
    ProbeDataset d = testing::repeated_dataset({{{2.0f}, 1}, {{-2.0f}, 0}}, 5);
    CHECK(evaluate_classifier(p, d).auc() == 0.5);
  }
  SUBCASE("single class has no AUC") {
    LinearProbe p;
    p.weights = {1.0};
    ProbeDataset d = testing::repeated_dataset({{{2.0f}, 1}}, 5);
    auto m = evaluate_classifier(p, d);
    CHECK_FALSE(m.auc_roc.has_value());
    CHECK_THROWS_AS(m.auc(), UndefinedMetricError);
    CHECK(m.accuracy == 1.0);
  }
}

TEST_CASE("random scores give AUC near one half") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 2000; ++i) {
    scores.push_back(u(rng));
    labels.push_back(i % 2);
  }
  CHECK(std::abs(auc_roc(scores, labels) - 0.5) <= 0.05);
}

TEST_CASE("AUC is invariant under increasing transforms") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 300; ++i) {
    y.push_back(static_cast<int>(rng() & 1));
    s.push_back(normal(rng) + y.back());
  }
  std::vector<double> t;
  for (double v : s) t.push_back(std::exp(3.0 * v) + 7.0);
  CHECK(auc_roc(s, y) == auc_roc(t, y));
}

TEST_CASE("AUC by brute-force pair counting") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      s.push_back(level(rng));
      y.push_back(i < 20 ? 1 : static_cast<int>(rng() & 1));
    }
    y[39] = 0;
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1.0;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
      }
    }
    CHECK(auc_roc(s, y) == doctest::Approx(wins / pairs).epsilon(1e-12));
  }
}

TEST_CASE("F1 and accuracy") {
  const std::vector<int> pred{1, 1, 0, 0, 1};
  const std::vector<int> gold{1, 0, 0, 1, 1};
  // tp=2 fp=1 fn=1
  CHECK(f1_score(pred, gold) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy(pred, gold) == doctest::Approx(0.6));
  CHECK(f1_score(std::vector<int>{0, 0}, std::vector<int>{1, 0}) == 0.0);
}

TEST_CASE("persisted probes give identical logits") {
  const ProbeDataset d = testing::gaussian_dataset(300, 6, 0.5, 12);
  for (ProbeKind kind : {ProbeKind::kLogisticRegression, ProbeKind::kLinearSvm}) {
    LinearProbe p = train_probe(kind, d);
    p.layer = 2;
    p.rep_kind = RepKind::kAttn;
    std::stringstream buf;
    save_probe(p, buf);
    const std::string text = buf.str();
    const LinearProbe q = load_probe(buf);
    CHECK(q.kind == kind);
    CHECK(q.layer == 2);
    CHECK(q.rep_kind == RepKind::kAttn);
    CHECK(q.train_meta.epochs == p.train_meta.epochs);
    for (const auto& e : d.examples) CHECK(std::abs(q.logit(e.features) - p.logit(e.features)) <= 1e-9);
    std::ostringstream again;
    save_probe(q, again);
    CHECK(again.str() == text);
    CHECK(text.rfind(R"({"version":1,"kind":")", 0) == 0);
  }
}

TEST_CASE("probe reader rejects bad files") {
  auto load = [](const std::string& s) {
    std::istringstream in(s);
    return load_probe(in);
  };
  CHECK_THROWS_AS(load("[]"), DatasetError);
  CHECK_THROWS_AS(load(R"({"version":2})"), DatasetError);
  CHECK_THROWS_AS(load(R"({"version":1,"kind":"tree","layer":0,"rep_kind":"hidden","dim":1,"w":[1],"b":0})"),
                  DatasetError);
  CHECK_THROWS_AS(load(R"({"version":1,"kind":"lr","layer":0,"rep_kind":"hidden","dim":2,"w":[1],"b":0})"),
                  DatasetError);
  CHECK(load(R"({"version":1,"kind":"lr","layer":0,"rep_kind":"hidden","dim":1,"w":[1],"b":0})").dim() == 1);
}

TEST_CASE("standardization uses training statistics only") {
  ProbeDataset d = testing::repeated_dataset({{{10.0f, 4.0f}, 1}, {{20.0f, 4.0f}, 0}}, 4);
  const LinearProbe p = train_logistic_regression(d);
  CHECK(p.feat_mean[0] == doctest::Approx(15.0));
  CHECK(p.feat_std[0] == doctest::Approx(5.0));
  CHECK(p.feat_std[1] == 1.0);
}

TEST_CASE("toy probes: LR and SVM agree, thoughtful tokens score higher") {
  ToyBackend toy;
  const auto qs = to_questions(toy.make_questions(30));
  const ProbeDataset ds = build_probe_dataset(toy, qs, 3, RepKind::kHidden);
  auto [train, test] = split_dataset(ds, 0.8, 1);
  const LinearProbe lr = train_logistic_regression(train);
  const LinearProbe svm = train_linear_svm(train);
  const double acc_lr = evaluate_classifier(lr, test).accuracy;
  const double acc_svm = evaluate_classifier(svm, test).accuracy;
  CHECK(std::abs(acc_lr - acc_svm) <= 0.05);

  // Mean logit per token index, by label.
  std::map<int, std::pair<double, int>> pos;
  std::map<int, std::pair<double, int>> neg;
  for (const auto& e : ds.examples) {
    auto& slot = (e.label == 1 ? pos : neg)[e.token_index];
    slot.first += lr.logit(e.features);
    ++slot.second;
  }
  for (const auto& [t, n] : neg) {
    if (t < 5 || !pos.count(t)) continue;
    CHECK(pos[t].first / pos[t].second > n.first / n.second);
  }

  // Long responses that turn intuitive late: their intuitive tokens still
  // score below thoughtful tokens at the same index.
  int planted = 0;
  for (const auto& q : qs) {
    const std::string prompt = format_prompt(q.text);
    GenerationRequest g;
    g.prompt_text = prompt;
    g.k = 10;
    g.max_new_tokens = 35;
    g.mode = DecodeMode::kTopKStart;
    g.layer = 3;
    g.capture = Capture::kAllTokens;
    const auto first = toy.generate(g);
    for (const auto& c : first.candidates) {
      if (c.token_count < 35 || toy.model().trace(prompt + c.text).last_style != ToyStyle::kThoughtful) continue;
      GenerationRequest more = g;
      more.prompt_text = prompt + c.text;
      more.max_new_tokens = 240;
      for (const auto& tail : toy.generate(more).candidates) {
        if (toy.model().trace(more.prompt_text + tail.text).intuitive_steps == 0) continue;
        CHECK_FALSE(toy.ground_truth(q.id, c.text + tail.text).is_correct);
        for (int i = 0; i < tail.token_count; ++i) {
          const int t = 35 + i;
          if (!pos.count(t)) continue;
          CHECK(pos[t].first / pos[t].second > lr.logit(tail.activations[static_cast<std::size_t>(i)]));
        }
        ++planted;
      }
      break;
    }
  }
  CHECK(planted > 0);
}
