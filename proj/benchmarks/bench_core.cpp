// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "probesearch/dataset.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/protocol.hpp"
#include "probesearch/search.hpp"
#include "probesearch/toy_backend.hpp"

using namespace probesearch;

namespace {

const ProbeDataset& toy_dataset() {
  static const ProbeDataset data = [] {
    ToyBackend toy;
    const auto qs = to_questions(toy.make_questions(20));
    return build_probe_dataset(toy, qs, 3, RepKind::kHidden);
  }();
  return data;
}

void BM_TrainLogistic(benchmark::State& state) {
  const ProbeDataset& data = toy_dataset();
  for (auto _ : state) benchmark::DoNotOptimize(train_logistic_regression(data));
  state.counters["examples"] = static_cast<double>(data.size());
}
BENCHMARK(BM_TrainLogistic)->Unit(benchmark::kMillisecond);

void BM_PruneBeam(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<ScoredCandidate> pool;
  for (int i = 0; i < state.range(0); ++i) pool.push_back({i / 10, i % 10, normal(rng)});
  for (auto _ : state) benchmark::DoNotOptimize(prune_beam(pool, 3));
}
BENCHMARK(BM_PruneBeam)->Arg(30)->Arg(300);

void BM_ToyGenerate(benchmark::State& state) {
  ToyBackend toy;
  const auto q = toy.make_questions(1).at(0).to_question();
  GenerationRequest r;
  r.prompt_text = format_prompt(q.text);
  r.k = static_cast<int>(state.range(0));
  r.max_new_tokens = 20;
  r.mode = DecodeMode::kTopKStart;
  r.layer = 3;
  for (auto _ : state) benchmark::DoNotOptimize(toy.generate(r));
}
BENCHMARK(BM_ToyGenerate)->Arg(1)->Arg(10);

void BM_CodecRoundTrip(benchmark::State& state) {
  GenerationResult g;
  for (int c = 0; c < 10; ++c) {
    CandidateContinuation cc;
    cc.text = " Then we take 12 and add 7 to get 19 .";
    cc.token_count = 11;
    cc.activation.assign(static_cast<std::size_t>(state.range(0)), 0.25f);
    g.candidates.push_back(cc);
  }
  const Reply reply{"r1", g};
  for (auto _ : state) benchmark::DoNotOptimize(wire::decode_reply(wire::encode(reply)));
}
BENCHMARK(BM_CodecRoundTrip)->Arg(16)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
