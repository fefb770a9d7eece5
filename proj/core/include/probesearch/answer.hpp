// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace probesearch {

// Numeric answers are compared exactly; "3.50", "7/2" and "3.5" are the same
// answer.
using Rational = boost::rational<std::int64_t>;

inline constexpr std::string_view kAnswerTrigger = "Therefore, the answer is";

// Parses a single numeric literal: optional sign, optional currency symbol,
// digits with optional thousands separators, optional decimal fraction, or
// a p/q fraction. Returns nullopt when the literal does not fit in 64 bits.
std::optional<Rational> parse_number(std::string_view literal);

// Finds the last numeric literal after the last occurrence of the answer
// trigger (or anywhere, when the trigger is absent). Currency symbols,
// thousands separators and trailing periods are ignored.
std::optional<Rational> extract_answer(std::string_view text);

// "42", "-3.5", "1/3": a terminating decimal when one exists, else p/q.
std::string format_rational(const Rational& value);

double to_double(const Rational& value);

}  // namespace probesearch
