// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Numerical check that a logistic-regression probe trained on pairwise
// preferences ranks items the same way as the reward that generated them.

#include <cstdint>
#include <span>
#include <vector>

#include "probesearch/probe.hpp"

namespace probesearch {

struct OrderPreservationConfig {
  int dim = 4;
  int n_items = 500;
  int n_pairs = 5000;
  std::uint64_t seed = 0;
  // Winner is always the item with the higher reward instead of a
  // Bradley-Terry draw.
  bool deterministic = false;
  // Reward direction; left empty, a seeded Gaussian vector is drawn.
  std::vector<double> true_weights;
  TrainHyper hyper;
};

struct OrderPreservationReport {
  double spearman = 0.0;
  double kendall = 0.0;
  double pairwise_violation_rate = 0.0;
  int n_items = 0;
};

// Rank agreement between a reference reward and a score over the same items.
OrderPreservationReport rank_agreement(std::span<const double> reward, std::span<const double> score);

// Items x ~ N(0, I); reward r(x) = w*.x; preference pairs become two
// classification examples (winner 1, loser 0); the trained probe's logits are
// compared with r on n_items fresh items. Throws std::invalid_argument when
// n_items < 10, n_pairs < n_items, or w* is zero.
OrderPreservationReport verify_order_preservation(const OrderPreservationConfig& config);

}  // namespace probesearch
