// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/toy_problem.hpp"

#include <array>
#include <regex>

namespace probesearch {
namespace {

constexpr std::array<std::string_view, 12> kNames = {"Ava",  "Ben",  "Chloe", "Dan",  "Emma", "Finn",
                                                     "Grace", "Hugo", "Isla", "Jack", "Kira", "Liam"};
constexpr std::array<std::string_view, 8> kObjects = {"marbles", "apples", "stickers", "coins",
                                                      "books",   "cookies", "shells",  "pencils"};

constexpr std::array<std::string_view, 3> kAddVerbs = {"gets", "finds", "buys"};
constexpr std::array<std::string_view, 3> kSubtractVerbs = {"gives away", "loses", "sells"};

}  // namespace

std::int64_t apply(ToyOp op, std::int64_t lhs, std::int64_t rhs) {
  switch (op) {
    case ToyOp::kAdd: return lhs + rhs;
    case ToyOp::kSubtract: return lhs - rhs;
    case ToyOp::kMultiply: return lhs * rhs;
  }
  return lhs;
}

std::int64_t ToyProblem::value_after(int steps) const {
  if (operands.empty()) return 0;
  std::int64_t value = operands[0];
  for (int i = 0; i < steps && i < num_steps(); ++i) {
    value = apply(ops[static_cast<std::size_t>(i)], value, operands[static_cast<std::size_t>(i) + 1]);
  }
  return value;
}

std::int64_t ToyProblem::trap() const {
  std::int64_t sum = 0;
  for (std::int64_t a : operands) sum += a;
  std::int64_t g = gold();
  if (sum != g) return sum;
  return g + (operands.empty() || operands[0] == 0 ? 1 : operands[0]);
}

std::string render_toy_problem(const ToyProblem& problem, int template_id) {
  const auto t = static_cast<std::size_t>(template_id < 0 ? -template_id : template_id);
  const std::string name(kNames[t % kNames.size()]);
  const std::string object(kObjects[(t / kNames.size() + t) % kObjects.size()]);
  const std::size_t variant = t % 3;

  std::string text = name + " has " + std::to_string(problem.operands.at(0)) + " " + object + ".";
  for (int i = 0; i < problem.num_steps(); ++i) {
    const std::string a = std::to_string(problem.operands[static_cast<std::size_t>(i) + 1]);
    switch (problem.ops[static_cast<std::size_t>(i)]) {
      case ToyOp::kAdd:
        text += " Then " + name + " " + std::string(kAddVerbs[variant]) + " " + a + " more " + object + ".";
        break;
      case ToyOp::kSubtract:
        text += " Then " + name + " " + std::string(kSubtractVerbs[variant]) + " " + a + " " + object + ".";
        break;
      case ToyOp::kMultiply:
        text += " Then " + name + " ends up with " + a + " times as many " + object + ".";
        break;
    }
  }
  text += " How many " + object + " does " + name + " have now?";
  return text;
}

std::optional<ToyProblem> parse_toy_problem(std::string_view text) {
  static const std::regex intro(R"(^\s*[A-Z][a-z]+ has (\d+) [a-z]+\.)");
  static const std::regex step(R"(Then [A-Z][a-z]+ (gets|finds|buys|gives away|loses|sells|ends up with) (\d+) (more |times as many )?[a-z]+\.)");

  const std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, intro)) return std::nullopt;
  ToyProblem problem;
  try {
    problem.operands.push_back(std::stoll(m.str(1)));
    for (auto it = std::sregex_iterator(s.begin(), s.end(), step); it != std::sregex_iterator(); ++it) {
      const std::string verb = (*it)[1].str();
      const std::string suffix = (*it)[3].str();
      ToyOp op;
      if (verb == "ends up with" && suffix == "times as many ") {
        op = ToyOp::kMultiply;
      } else if ((verb == "gets" || verb == "finds" || verb == "buys") && suffix == "more ") {
        op = ToyOp::kAdd;
      } else if ((verb == "gives away" || verb == "loses" || verb == "sells") && suffix.empty()) {
        op = ToyOp::kSubtract;
      } else {
        return std::nullopt;
      }
      problem.ops.push_back(op);
      problem.operands.push_back(std::stoll((*it)[2].str()));
    }
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
  return problem;
}

}  // namespace probesearch
