// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "probesearch/metrics.hpp"
#include "probesearch/order_preservation.hpp"

using namespace probesearch;

namespace {

// O(n^2) reference for Kendall tau-b.
double kendall_reference(const std::vector<double>& a, const std::vector<double>& b) {
  double concordant = 0.0;
  double discordant = 0.0;
  double ties_a = 0.0;
  double ties_b = 0.0;
  double n0 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      n0 += 1.0;
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0) ties_a += 1.0;
      if (db == 0.0) ties_b += 1.0;
      if (da * db > 0) concordant += 1.0;
      if (da * db < 0) discordant += 1.0;
    }
  }
  return (concordant - discordant) / std::sqrt((n0 - ties_a) * (n0 - ties_b));
}

// Pearson correlation of tie-averaged ranks, ranks computed by counting.
double spearman_reference(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r;
    for (double x : v) {
      double less = 0.0;
      double equal = 0.0;
      for (double y : v) {
        less += y < x;
        equal += y == x;
      }
      r.push_back(less + (equal + 1.0) / 2.0);
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("rank statistics agree with brute-force references") {
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> level(0, 6);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> a;
    std::vector<double> b;
    for (int i = 0; i < 30; ++i) {
      a.push_back(level(rng));
      b.push_back(level(rng) + 0.5 * a.back());
    }
    CHECK(spearman(a, b) == doctest::Approx(spearman_reference(a, b)).epsilon(1e-12));
    CHECK(kendall_tau(a, b) == doctest::Approx(kendall_reference(a, b)).epsilon(1e-12));
  }
  CHECK(average_ranks(std::vector<double>{3.0, 1.0, 3.0}) == std::vector<double>{2.5, 1.0, 2.5});
}

TEST_CASE("violation rate counts disagreeing pairs") {
  const std::vector<double> r{1.0, 2.0, 3.0, 4.0};
  CHECK(pairwise_violation_rate(r, r) == 0.0);
  const std::vector<double> rev{4.0, 3.0, 2.0, 1.0};
  CHECK(pairwise_violation_rate(r, rev) == 1.0);
  const std::vector<double> one_swap{1.0, 3.0, 2.0, 4.0};
  CHECK(pairwise_violation_rate(r, one_swap) == doctest::Approx(1.0 / 6.0));
  // A tie on one side only is a violation.
  const std::vector<double> tied{1.0, 1.0, 3.0, 4.0};
  CHECK(pairwise_violation_rate(r, tied) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("rank agreement is shift invariant") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> r;
  std::vector<double> l;
  for (int i = 0; i < 200; ++i) {
    r.push_back(normal(rng));
    l.push_back(r.back() + 0.3 * normal(rng));
  }
  for (double c : {-5.0, 0.25, 100.0}) {
    std::vector<double> shifted;
    for (double v : l) shifted.push_back(v + c);
    const auto a = rank_agreement(r, l);
    const auto b = rank_agreement(r, shifted);
    CHECK(a.spearman == b.spearman);
    CHECK(a.kendall == b.kendall);
    CHECK(a.pairwise_violation_rate == b.pairwise_violation_rate);
  }
}

TEST_CASE("Bradley-Terry preferences preserve the reward order") {
  const auto report = verify_order_preservation(OrderPreservationConfig{});
  CHECK(report.spearman >= 0.9);
  CHECK(report.kendall > 0.7);
  CHECK(report.n_items == 500);
}

TEST_CASE("deterministic preferences leave almost no violations") {
  OrderPreservationConfig c;
  c.deterministic = true;
  const auto report = verify_order_preservation(c);
  CHECK(report.pairwise_violation_rate <= 0.01);
}

TEST_CASE("explicit reward weights and seeds") {
  OrderPreservationConfig c;
  c.true_weights = {0.0, 2.0, 0.0, -1.0};
  c.seed = 3;
  CHECK(verify_order_preservation(c).spearman >= 0.9);
  // Same seed, same report.
  const auto a = verify_order_preservation(c);
  const auto b = verify_order_preservation(c);
  CHECK(a.spearman == b.spearman);
}

TEST_CASE("preconditions") {
  OrderPreservationConfig c;
  c.n_items = 9;
  CHECK_THROWS_AS(verify_order_preservation(c), std::invalid_argument);
  c = {};
  c.n_pairs = 499;
  CHECK_THROWS_AS(verify_order_preservation(c), std::invalid_argument);
  c = {};
  c.true_weights = {0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(verify_order_preservation(c), std::invalid_argument);
}
