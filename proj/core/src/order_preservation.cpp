// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/order_preservation.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "probesearch/metrics.hpp"
#include "probesearch/seeding.hpp"

namespace probesearch {
namespace {

std::vector<std::vector<float>> draw_items(std::mt19937_64& rng, int n, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<float>> items(static_cast<std::size_t>(n), std::vector<float>(static_cast<std::size_t>(dim)));
  for (auto& item : items) {
    for (auto& v : item) v = static_cast<float>(normal(rng));
  }
  return items;
}

double reward(std::span<const double> w, std::span<const float> x) {
  double r = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) r += w[j] * x[j];
  return r;
}

}  // namespace

OrderPreservationReport rank_agreement(std::span<const double> reward_values, std::span<const double> score) {
  OrderPreservationReport report;
  report.spearman = spearman(reward_values, score);
  report.kendall = kendall_tau(reward_values, score);
  report.pairwise_violation_rate = pairwise_violation_rate(reward_values, score);
  report.n_items = static_cast<int>(reward_values.size());
  return report;
}

OrderPreservationReport verify_order_preservation(const OrderPreservationConfig& config) {
  if (config.dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (config.n_items < 10) throw std::invalid_argument("n_items must be >= 10");
  if (config.n_pairs < config.n_items) throw std::invalid_argument("n_pairs must be >= n_items");

  std::mt19937_64 rng(seeding::derive(config.seed, "order-preservation"));
  std::vector<double> w = config.true_weights;
  if (w.empty()) {
    std::normal_distribution<double> normal(0.0, 1.0);
    w.resize(static_cast<std::size_t>(config.dim));
    for (double& v : w) v = normal(rng);
  }
  if (w.size() != static_cast<std::size_t>(config.dim)) throw std::invalid_argument("true_weights length must equal dim");
  double norm = 0.0;
  for (double v : w) norm += v * v;
  if (!(norm > 0.0)) throw std::invalid_argument("reward direction is zero");

  const auto items = draw_items(rng, config.n_items, config.dim);
  std::vector<double> r;
  r.reserve(items.size());
  for (const auto& x : items) r.push_back(reward(w, x));

  ProbeDataset data;
  data.activation_dim = config.dim;
  data.examples.reserve(2 * static_cast<std::size_t>(config.n_pairs));
  std::uniform_int_distribution<int> pick(0, config.n_items - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int p = 0; p < config.n_pairs; ++p) {
    const int i = pick(rng);
    int j = pick(rng);
    while (j == i) j = pick(rng);
    const double ri = r[static_cast<std::size_t>(i)];
    const double rj = r[static_cast<std::size_t>(j)];
    bool i_wins;
    if (config.deterministic) {
      i_wins = ri > rj || (ri == rj && i < j);
    } else {
      // exp(ri)/(exp(ri)+exp(rj)) written as a sigmoid of the difference.
      i_wins = coin(rng) < sigmoid(ri - rj);
    }
    const int winner = i_wins ? i : j;
    const int loser = i_wins ? j : i;
    data.examples.push_back(ProbeExample{items[static_cast<std::size_t>(winner)], 1, "pair", p, 0});
    data.examples.push_back(ProbeExample{items[static_cast<std::size_t>(loser)], 0, "pair", p, 1});
  }

  const LinearProbe probe = train_logistic_regression(data, config.hyper);

  const auto fresh = draw_items(rng, config.n_items, config.dim);
  std::vector<double> fresh_reward;
  std::vector<double> fresh_logit;
  for (const auto& x : fresh) {
    fresh_reward.push_back(reward(w, x));
    fresh_logit.push_back(probe.logit(std::span<const float>(x)));
  }
  return rank_agreement(fresh_reward, fresh_logit);
}

}  // namespace probesearch
