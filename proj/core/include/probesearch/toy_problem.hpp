// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace probesearch {

enum class ToyOp { kAdd, kSubtract, kMultiply };

// A left-to-right arithmetic word problem: start from operands[0], then apply
// ops[i] with operands[i + 1].
struct ToyProblem {
  std::vector<std::int64_t> operands;
  std::vector<ToyOp> ops;

  int num_steps() const { return static_cast<int>(ops.size()); }
  // Intermediate value after the first `steps` operations.
  std::int64_t value_after(int steps) const;
  std::int64_t gold() const { return value_after(num_steps()); }
  // The answer an intuitive guess lands on: the plain sum of every operand,
  // nudged off the gold answer when the two coincide.
  std::int64_t trap() const;
};

std::int64_t apply(ToyOp op, std::int64_t lhs, std::int64_t rhs);

// Renders a problem as English text using template variant `template_id`.
std::string render_toy_problem(const ToyProblem& problem, int template_id);

// Inverse of render_toy_problem. Returns nullopt for text not produced by
// the templates.
std::optional<ToyProblem> parse_toy_problem(std::string_view text);

}  // namespace probesearch
