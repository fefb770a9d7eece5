// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "probesearch/errors.hpp"
#include "probesearch/layer_selection.hpp"
#include "probesearch/toy_backend.hpp"

using namespace probesearch;

TEST_CASE("deepest toy layer ranks first") {
  ToyBackend toy;
  const auto qs = to_questions(toy.make_questions(30));
  const LayerRanking r = select_best_layers(toy, qs, RepKind::kHidden, 2);
  REQUIRE(r.ranked.size() == 4);
  CHECK(r.ranked.front().layer == 3);
  CHECK(r.top == std::vector<int>{r.ranked[0].layer, r.ranked[1].layer});
  CHECK(r.bottom == std::vector<int>{r.ranked[2].layer, r.ranked[3].layer});
  CHECK(r.failed_layers.empty());
  for (std::size_t i = 1; i < r.ranked.size(); ++i) CHECK(r.ranked[i - 1].metrics.f1 >= r.ranked[i].metrics.f1);
  for (const auto& s : r.ranked) CHECK(s.probe.layer == s.layer);
}

TEST_CASE("top_m equal to the layer count partitions the layers") {
  ToyBackend toy;
  const auto qs = to_questions(toy.make_questions(20));
  const LayerRanking r = select_best_layers(toy, qs, RepKind::kMlp, 4);
  std::set<int> all(r.top.begin(), r.top.end());
  for (int l : r.bottom) CHECK(all.insert(l).second);
  CHECK(all == std::set<int>{0, 1, 2, 3});
  CHECK_THROWS_AS(select_best_layers(toy, qs, RepKind::kHidden, 0), std::invalid_argument);
  CHECK_THROWS_AS(select_best_layers(toy, qs, RepKind::kHidden, 5), std::invalid_argument);
}

TEST_CASE("equal F1 ranks the lower layer first") {
  std::vector<LayerScore> s(3);
  s[0].layer = 2;
  s[0].metrics.f1 = 0.8;
  s[1].layer = 0;
  s[1].metrics.f1 = 0.8;
  s[2].layer = 1;
  s[2].metrics.f1 = 0.9;
  rank_layers(s);
  CHECK(s[0].layer == 1);
  CHECK(s[1].layer == 0);
  CHECK(s[2].layer == 2);
}

TEST_CASE("a failing layer is excluded") {
  ToyBackend toy;
  const auto qs = to_questions(toy.make_questions(20));
  testing::FlakyBackend flaky(toy, [](const GenerationRequest& r) { return r.layer == 1; });
  const LayerRanking r = select_best_layers(flaky, qs, RepKind::kHidden, 1);
  CHECK(r.failed_layers == std::vector<int>{1});
  CHECK(r.ranked.size() == 3);
  CHECK(std::none_of(r.ranked.begin(), r.ranked.end(), [](const LayerScore& s) { return s.layer == 1; }));

  testing::FlakyBackend dead(toy, [](const GenerationRequest&) { return true; });
  CHECK_THROWS_AS(select_best_layers(dead, qs, RepKind::kHidden, 1), DatasetError);
}
