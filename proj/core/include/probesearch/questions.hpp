// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "probesearch/answer.hpp"

namespace probesearch {

struct Question {
  std::string id;
  std::string text;
  Rational gold{0};
};

// The fixed search prompt: "Question:[question]\nAnswer:".
std::string format_prompt(const std::string& question_text);

// Question files are newline-delimited JSON records
//   {"id":str,"question":str,"answer":num|str}
// where a string answer may be any literal accepted by parse_number
// (e.g. "1,200", "7/2"). Blank lines are skipped. Throws DatasetError.
std::vector<Question> read_questions(std::istream& in);
std::vector<Question> read_questions_file(const std::string& path);
void write_questions(const std::vector<Question>& questions, std::ostream& out);

}  // namespace probesearch
