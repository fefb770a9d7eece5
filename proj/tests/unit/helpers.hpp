// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "probesearch/backend.hpp"
#include "probesearch/dataset.hpp"
#include "probesearch/errors.hpp"
#include "probesearch/probe.hpp"

namespace probesearch::testing {

// Forwards to another backend; requests matching `fail_if` are rejected.
class FlakyBackend : public Backend {
 public:
  FlakyBackend(Backend& inner, std::function<bool(const GenerationRequest&)> fail_if)
      : inner_(inner), fail_if_(std::move(fail_if)) {}

  BackendInfo info() override { return inner_.info(); }
  GenerationResult generate(const GenerationRequest& request) override {
    ++calls;
    if (fail_if_(request)) throw RequestRejected("injected failure");
    return inner_.generate(request);
  }

  std::atomic<int> calls{0};

 private:
  Backend& inner_;
  std::function<bool(const GenerationRequest&)> fail_if_;
};

// Records every request it forwards.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}

  BackendInfo info() override { return inner_.info(); }
  GenerationResult generate(const GenerationRequest& request) override {
    GenerationResult r = inner_.generate(request);
    std::lock_guard<std::mutex> lock(mu_);
    requests.push_back(request);
    results.push_back(r);
    return r;
  }

  std::vector<GenerationRequest> requests;
  std::vector<GenerationResult> results;

 private:
  Backend& inner_;
  std::mutex mu_;
};

// Dataset of `n` copies of each given (features, label) pair.
inline ProbeDataset repeated_dataset(const std::vector<std::pair<std::vector<float>, int>>& rows, int n) {
  ProbeDataset d;
  d.activation_dim = static_cast<int>(rows.front().first.size());
  for (int i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      d.examples.push_back(ProbeExample{rows[r].first, rows[r].second, "q" + std::to_string(i), static_cast<int>(r), 0});
    }
  }
  return d;
}

// Two Gaussian clouds at +/- shift along the first axis.
inline ProbeDataset gaussian_dataset(int n, int dim, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProbeDataset d;
  d.activation_dim = dim;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    std::vector<float> x(static_cast<std::size_t>(dim));
    for (auto& v : x) v = static_cast<float>(normal(rng));
    x[0] += static_cast<float>(label == 1 ? shift : -shift);
    d.examples.push_back(ProbeExample{std::move(x), label, "q" + std::to_string(i / 10), i, 0});
  }
  return d;
}

}  // namespace probesearch::testing
