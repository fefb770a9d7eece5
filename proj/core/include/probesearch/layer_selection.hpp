// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "probesearch/backend.hpp"
#include "probesearch/dataset.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/questions.hpp"

namespace probesearch {

struct LayerSelectionConfig {
  DatasetConfig dataset;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
  ProbeKind kind = ProbeKind::kLogisticRegression;
  TrainHyper hyper;
};

struct LayerScore {
  int layer = 0;
  ProbeMetrics metrics;
  LinearProbe probe;
};

struct LayerRanking {
  // Every layer that trained, by test F1 descending; ties go to the lower
  // layer index.
  std::vector<LayerScore> ranked;
  std::vector<int> top;
  // The worst min(top_m, trained - top_m) layers, worst last, disjoint from
  // `top`.
  std::vector<int> bottom;
  std::vector<int> failed_layers;
};

// Orders layer scores by the ranking rule above.
void rank_layers(std::vector<LayerScore>& scores);

// One probe per layer on a question-grouped split. A layer whose dataset or
// training fails is skipped with a warning. Throws std::invalid_argument when
// top_m is outside [1, num_layers] and DatasetError when no layer trains.
LayerRanking select_best_layers(Backend& backend, std::span<const Question> questions, RepKind rep_kind,
                                int top_m, const LayerSelectionConfig& config = {});

}  // namespace probesearch
