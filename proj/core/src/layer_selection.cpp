// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/layer_selection.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "probesearch/errors.hpp"
#include "probesearch/log.hpp"

namespace probesearch {

void rank_layers(std::vector<LayerScore>& scores) {
  std::sort(scores.begin(), scores.end(), [](const LayerScore& a, const LayerScore& b) {
    if (a.metrics.f1 != b.metrics.f1) return a.metrics.f1 > b.metrics.f1;
    return a.layer < b.layer;
  });
}

LayerRanking select_best_layers(Backend& backend, std::span<const Question> questions, RepKind rep_kind, int top_m,
                                const LayerSelectionConfig& config) {
  const int num_layers = backend.info().num_layers;
  if (top_m < 1 || top_m > num_layers) {
    throw std::invalid_argument("top_m must lie in [1, " + std::to_string(num_layers) + "]");
  }
  LayerRanking ranking;
  for (int layer = 0; layer < num_layers; ++layer) {
    try {
      ProbeDataset data = build_probe_dataset(backend, questions, layer, rep_kind, config.dataset);
      auto [train, test] = split_dataset(data, config.train_fraction, config.split_seed);
      LinearProbe probe = train_probe(config.kind, train, config.hyper);
      ProbeMetrics metrics = evaluate_classifier(probe, test);
      ranking.ranked.push_back(LayerScore{layer, metrics, std::move(probe)});
    } catch (const Error& e) {
      ranking.failed_layers.push_back(layer);
      log_warning("layer " + std::to_string(layer) + " excluded: " + e.what());
    }
  }
  if (ranking.ranked.empty()) throw DatasetError("no layer produced a usable probe");
  rank_layers(ranking.ranked);

  const int trained = static_cast<int>(ranking.ranked.size());
  const int top = std::min(top_m, trained);
  const int bottom = std::min(top_m, trained - top);
  for (int i = 0; i < top; ++i) ranking.top.push_back(ranking.ranked[static_cast<std::size_t>(i)].layer);
  for (int i = trained - bottom; i < trained; ++i) {
    ranking.bottom.push_back(ranking.ranked[static_cast<std::size_t>(i)].layer);
  }
  return ranking;
}

}  // namespace probesearch
