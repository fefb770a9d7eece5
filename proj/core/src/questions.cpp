// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/questions.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "probesearch/errors.hpp"

namespace probesearch {

std::string format_prompt(const std::string& question_text) {
  return "Question:" + question_text + "\nAnswer:";
}

std::vector<Question> read_questions(std::istream& in) {
  std::vector<Question> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    auto fail = [&](const std::string& why) {
      return DatasetError("questions line " + std::to_string(line_no) + ": " + why);
    };
    if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
    if (!j.contains("question") || !j["question"].is_string()) throw fail("missing \"question\"");
    if (!j.contains("answer")) throw fail("missing \"answer\"");

    Question q;
    q.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                  : "q" + std::to_string(out.size());
    q.text = j["question"].get<std::string>();
    const auto& a = j["answer"];
    std::optional<Rational> gold;
    if (a.is_number_integer()) {
      gold = Rational(a.get<std::int64_t>());
    } else if (a.is_number()) {
      gold = parse_number(a.dump());
    } else if (a.is_string()) {
      gold = parse_number(a.get<std::string>());
    }
    if (!gold) throw fail("answer is not a number");
    q.gold = *gold;
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Question> read_questions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open questions file " + path);
  return read_questions(in);
}

void write_questions(const std::vector<Question>& questions, std::ostream& out) {
  for (const auto& q : questions) {
    nlohmann::json j{{"id", q.id}, {"question", q.text}};
    if (q.gold.denominator() == 1) {
      j["answer"] = q.gold.numerator();
    } else {
      j["answer"] = format_rational(q.gold);
    }
    out << j.dump() << '\n';
  }
}

}  // namespace probesearch
