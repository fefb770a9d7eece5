// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/answer.hpp"

#include <cctype>
#include <limits>
#include <regex>

namespace probesearch {
namespace {

constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

bool mul_add(std::int64_t& acc, std::int64_t mul, std::int64_t add) {
  if (acc > (kMax - add) / mul) return false;
  acc = acc * mul + add;
  return true;
}

std::optional<std::int64_t> parse_digits(std::string_view digits, std::int64_t& scale) {
  std::int64_t value = 0;
  scale = 1;
  for (char c : digits) {
    if (!mul_add(value, 10, c - '0')) return std::nullopt;
    if (!mul_add(scale, 10, 0)) return std::nullopt;
  }
  return value;
}

// Literal grammar used by extract_answer. Group 1 is the numeric body.
const std::regex& literal_regex() {
  static const std::regex re(
      R"((-?[$€£]?-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:/\d+)?))");
  return re;
}

}  // namespace

std::optional<Rational> parse_number(std::string_view literal) {
  std::string text;
  bool negative = false;
  for (std::size_t i = 0; i < literal.size(); ++i) {
    char c = literal[i];
    if (c == '-' && text.empty()) {
      negative = !negative;
    } else if (c == '+' && text.empty()) {
      continue;
    } else if (c == ',') {
      continue;
    } else if (c == '$') {
      continue;
    } else if (static_cast<unsigned char>(c) >= 0x80) {
      continue;  // multibyte currency symbols
    } else {
      text.push_back(c);
    }
  }
  while (!text.empty() && text.back() == '.') text.pop_back();
  if (text.empty()) return std::nullopt;

  std::string_view body = text;
  std::int64_t denominator = 1;
  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    std::string_view den = body.substr(slash + 1);
    if (den.empty() || den.find_first_not_of("0123456789") != std::string_view::npos) return std::nullopt;
    std::int64_t unused = 0;
    auto d = parse_digits(den, unused);
    if (!d || *d == 0) return std::nullopt;
    denominator = *d;
    body = body.substr(0, slash);
  }
  std::string_view whole = body;
  std::string_view frac;
  if (auto dot = body.find('.'); dot != std::string_view::npos) {
    whole = body.substr(0, dot);
    frac = body.substr(dot + 1);
  }
  if (whole.empty() && frac.empty()) return std::nullopt;
  for (std::string_view part : {whole, frac}) {
    if (part.find_first_not_of("0123456789") != std::string_view::npos) return std::nullopt;
  }
  std::int64_t unused = 0;
  std::int64_t frac_scale = 1;
  auto w = whole.empty() ? std::optional<std::int64_t>(0) : parse_digits(whole, unused);
  auto f = frac.empty() ? std::optional<std::int64_t>(0) : parse_digits(frac, frac_scale);
  if (!w || !f) return std::nullopt;
  std::int64_t numerator = *w;
  if (!mul_add(numerator, frac_scale, *f)) return std::nullopt;
  if (denominator > kMax / frac_scale) return std::nullopt;
  Rational value(numerator, frac_scale * denominator);
  return negative ? -value : value;
}

std::optional<Rational> extract_answer(std::string_view text) {
  if (auto pos = text.rfind(kAnswerTrigger); pos != std::string_view::npos) {
    text.remove_prefix(pos + kAnswerTrigger.size());
  }
  std::string haystack(text);
  std::optional<Rational> last;
  for (auto it = std::sregex_iterator(haystack.begin(), haystack.end(), literal_regex());
       it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    // Digits glued to letters ("x2", "3rd") are not numeric answers.
    auto end = static_cast<std::size_t>(m.position(0) + m.length(0));
    if (end < haystack.size() && std::isalpha(static_cast<unsigned char>(haystack[end]))) continue;
    if (m.position(0) > 0 && std::isalpha(static_cast<unsigned char>(haystack[m.position(0) - 1]))) continue;
    if (auto v = parse_number(m.str(1))) last = v;
  }
  return last;
}

std::string format_rational(const Rational& value) {
  std::int64_t num = value.numerator();
  std::int64_t den = value.denominator();
  if (den == 1) return std::to_string(num);
  // Terminating decimal iff the reduced denominator has only factors 2 and 5.
  std::int64_t rest = den;
  int twos = 0;
  int fives = 0;
  while (rest % 2 == 0) rest /= 2, ++twos;
  while (rest % 5 == 0) rest /= 5, ++fives;
  if (rest != 1) return std::to_string(num) + "/" + std::to_string(den);

  int digits = std::max(twos, fives);
  std::uint64_t magnitude = num < 0 ? static_cast<std::uint64_t>(-(num + 1)) + 1 : static_cast<std::uint64_t>(num);
  std::uint64_t whole = magnitude / static_cast<std::uint64_t>(den);
  std::uint64_t remainder = magnitude % static_cast<std::uint64_t>(den);
  std::string frac;
  for (int i = 0; i < digits; ++i) {
    remainder *= 10;
    frac.push_back(static_cast<char>('0' + remainder / static_cast<std::uint64_t>(den)));
    remainder %= static_cast<std::uint64_t>(den);
  }
  return (num < 0 ? "-" : "") + std::to_string(whole) + "." + frac;
}

double to_double(const Rational& value) {
  return static_cast<double>(value.numerator()) / static_cast<double>(value.denominator());
}

}  // namespace probesearch
