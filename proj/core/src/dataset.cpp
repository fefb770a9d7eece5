// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "probesearch/errors.hpp"

namespace probesearch {
namespace {

struct Word {
  std::size_t begin;  // byte offset in the original text
  std::string lower;
};

std::vector<Word> words_of(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t start = i;
    std::string lower;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
      lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
      ++i;
    }
    words.push_back({start, std::move(lower)});
  }
  return words;
}

// Number of leading question words that match words[at...].
std::size_t match_length(const std::vector<Word>& words, std::size_t at, const std::vector<Word>& question) {
  std::size_t n = 0;
  while (at + n < words.size() && n < question.size() && words[at + n].lower == question[n].lower) ++n;
  return n;
}

[[noreturn]] void rethrow_with_context(const std::string& question_id) {
  const std::string prefix = "question " + question_id + ": ";
  try {
    throw;
  } catch (const RequestRejected& e) {
    throw RequestRejected(prefix + e.what());
  } catch (const TimeoutError& e) {
    throw TimeoutError(prefix + e.what());
  } catch (const ConnectionError& e) {
    throw ConnectionError(prefix + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(prefix + e.what());
  }
}

}  // namespace

bool ProbeDataset::has_both_labels() const {
  bool pos = false;
  bool neg = false;
  for (const auto& e : examples) (e.label == 1 ? pos : neg) = true;
  return pos && neg;
}

std::vector<ResponseRecord> sample_responses(Backend& backend, const Question& question, int layer,
                                             RepKind rep_kind, int samples_per_question, int max_tokens) {
  if (samples_per_question < 1) throw std::invalid_argument("samples_per_question must be >= 1");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");

  GenerationRequest request;
  request.prompt_text = format_prompt(question.text);
  request.k = samples_per_question;
  request.max_new_tokens = max_tokens;
  request.mode = DecodeMode::kTopKStart;
  request.layer = layer;
  request.rep_kind = rep_kind;
  request.capture = Capture::kAllTokens;

  GenerationResult result;
  try {
    result = backend.generate(request);
  } catch (const Error&) {
    rethrow_with_context(question.id);
  }

  std::vector<ResponseRecord> records;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    auto& c = result.candidates[i];
    if (c.activations.size() != static_cast<std::size_t>(c.token_count)) {
      throw ProtocolError("question " + question.id + ": candidate carries " + std::to_string(c.activations.size()) +
                          " activations for " + std::to_string(c.token_count) + " tokens");
    }
    ResponseRecord r;
    r.question_id = question.id;
    r.response_id = static_cast<int>(i);
    r.text = std::move(c.text);
    r.token_count = c.token_count;
    r.per_token_activations = std::move(c.activations);
    r.layer = layer;
    r.rep_kind = rep_kind;
    records.push_back(std::move(r));
  }
  return records;
}

ResponseRecord filter_question_restatement(ResponseRecord record, std::string_view question_text) {
  const std::vector<Word> words = words_of(record.text);
  std::vector<Word> question = words_of(question_text);
  if (question.empty() || words.empty()) return record;

  // A marker restatement must echo this many leading question words, or run
  // to the end of the response.
  const std::size_t marker_min = std::min<std::size_t>(3, question.size());

  std::optional<std::size_t> cut;
  for (std::size_t p = 0; p < words.size() && !cut; ++p) {
    const std::string& w = words[p].lower;
    if (w.rfind("question:", 0) == 0) {
      std::size_t after = p + 1;
      std::size_t matched = 0;
      if (w.size() > 9) {
        // "Question:Tom" glues the marker to the first word.
        if (w.substr(9) != question[0].lower) continue;
        matched = 1 + [&] {
          std::size_t n = 0;
          while (after + n < words.size() && 1 + n < question.size() &&
                 words[after + n].lower == question[1 + n].lower) {
            ++n;
          }
          return n;
        }();
        after += matched - 1;
      } else {
        matched = match_length(words, after, question);
        after += matched;
      }
      if (matched >= marker_min || (matched > 0 && after == words.size()) || after == words.size()) cut = p;
    } else if (match_length(words, p, question) == question.size()) {
      cut = p;
    }
  }
  if (!cut) return record;

  const std::size_t keep_words = *cut;
  std::size_t keep_tokens = keep_words;
  if (static_cast<std::size_t>(record.token_count) != words.size()) {
    keep_tokens = static_cast<std::size_t>(std::llround(static_cast<double>(keep_words) * record.token_count /
                                                        static_cast<double>(words.size())));
  }
  keep_tokens = std::min(keep_tokens, static_cast<std::size_t>(record.token_count));

  record.text = keep_words == 0 ? std::string() : record.text.substr(0, words[keep_words].begin);
  while (!record.text.empty() && std::isspace(static_cast<unsigned char>(record.text.back()))) record.text.pop_back();
  record.token_count = static_cast<int>(keep_tokens);
  if (record.per_token_activations.size() > keep_tokens) record.per_token_activations.resize(keep_tokens);
  if (keep_tokens == 0) record.discard = true;
  return record;
}

std::optional<int> label_response(const ResponseRecord& record, const Rational& gold, int min_thoughtful_tokens) {
  if (record.discard) return std::nullopt;
  const bool correct = record.is_correct.value_or(record.extracted_answer && *record.extracted_answer == gold);
  if (correct && record.token_count > min_thoughtful_tokens) return 1;
  if (!correct && record.token_count < min_thoughtful_tokens) return 0;
  return std::nullopt;
}

void resolve_record_answer(Backend& backend, const Question& question, ResponseRecord& record, int answer_tokens) {
  GenerationRequest request;
  request.prompt_text = format_prompt(question.text) + record.text + " " + std::string(kAnswerTrigger);
  request.k = 1;
  request.max_new_tokens = answer_tokens;
  request.mode = DecodeMode::kGreedy;
  request.layer = record.layer;
  request.rep_kind = record.rep_kind;
  GenerationResult result;
  try {
    result = backend.generate(request);
  } catch (const Error&) {
    rethrow_with_context(question.id);
  }
  record.extracted_answer = extract_answer(std::string(kAnswerTrigger) + result.candidates.at(0).text);
  record.is_correct = record.extracted_answer && *record.extracted_answer == question.gold;
}

ProbeDataset build_probe_dataset(Backend& backend, std::span<const Question> questions, int layer,
                                 RepKind rep_kind, const DatasetConfig& config) {
  if (questions.empty()) throw DatasetError("no questions to build a probe dataset from");
  ProbeDataset dataset;
  dataset.layer = layer;
  dataset.rep_kind = rep_kind;
  dataset.activation_dim = backend.info().activation_dim;

  for (const Question& q : questions) {
    auto records = sample_responses(backend, q, layer, rep_kind, config.samples_per_question, config.max_tokens);
    for (auto& raw : records) {
      ResponseRecord record = filter_question_restatement(std::move(raw), q.text);
      if (record.discard) continue;
      resolve_record_answer(backend, q, record, config.answer_tokens);
      std::optional<int> label = label_response(record, q.gold, config.min_thoughtful_tokens);
      if (!label) continue;
      for (int t = 0; t < record.token_count; ++t) {
        ProbeExample e;
        e.features = std::move(record.per_token_activations[static_cast<std::size_t>(t)]);
        if (static_cast<int>(e.features.size()) != dataset.activation_dim) {
          throw ProtocolError("activation of length " + std::to_string(e.features.size()) + ", expected " +
                              std::to_string(dataset.activation_dim));
        }
        e.label = *label;
        e.question_id = q.id;
        e.response_id = record.response_id;
        e.token_index = t;
        dataset.examples.push_back(std::move(e));
      }
    }
  }
  if (!dataset.has_both_labels()) {
    throw DatasetError("probe dataset needs both thoughtful and intuitive examples; collected " +
                       std::to_string(dataset.size()) + " examples of a single label");
  }
  return dataset;
}

std::pair<ProbeDataset, ProbeDataset> split_dataset(const ProbeDataset& dataset, double train_fraction,
                                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& e : dataset.examples) {
    if (seen.insert(e.question_id).second) ids.push_back(e.question_id);
  }
  if (ids.size() < 2) throw DatasetError("a grouped split needs at least two questions");

  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
  const std::set<std::string> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

  ProbeDataset train{{}, dataset.layer, dataset.rep_kind, dataset.activation_dim};
  ProbeDataset test{{}, dataset.layer, dataset.rep_kind, dataset.activation_dim};
  for (const auto& e : dataset.examples) (train_ids.count(e.question_id) ? train : test).examples.push_back(e);
  if (!train.has_both_labels() || !test.has_both_labels()) {
    throw DatasetError("split with seed " + std::to_string(seed) +
                       " leaves a side without both labels; choose a different seed");
  }
  return {std::move(train), std::move(test)};
}

void write_dataset(const ProbeDataset& dataset, std::ostream& out) {
  using ojson = nlohmann::ordered_json;
  out << ojson{{"layer", dataset.layer},
               {"rep_kind", to_string(dataset.rep_kind)},
               {"dim", dataset.activation_dim},
               {"version", 1}}
             .dump()
      << '\n';
  for (const auto& e : dataset.examples) {
    ojson x = ojson::array();
    for (float v : e.features) x.push_back(static_cast<double>(v));
    out << ojson{{"q", e.question_id}, {"r", e.response_id}, {"t", e.token_index}, {"label", e.label}, {"x", x}}.dump()
        << '\n';
  }
}

ProbeDataset read_dataset(std::istream& in) {
  using nlohmann::json;
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("empty dataset file");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("version", 0) != 1) {
    throw DatasetError("dataset header missing or unsupported version");
  }
  ProbeDataset dataset;
  try {
    dataset.layer = header.at("layer").get<int>();
    dataset.rep_kind = parse_rep_kind(header.at("rep_kind").get<std::string>());
    dataset.activation_dim = header.at("dim").get<int>();
  } catch (const std::exception& e) {
    throw DatasetError(std::string("bad dataset header: ") + e.what());
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw DatasetError("malformed JSON");
      ProbeExample e;
      e.question_id = j.at("q").get<std::string>();
      e.response_id = j.at("r").get<int>();
      e.token_index = j.at("t").get<int>();
      e.label = j.at("label").get<int>();
      if (e.label != 0 && e.label != 1) throw DatasetError("label must be 0 or 1");
      for (const auto& v : j.at("x")) e.features.push_back(static_cast<float>(v.get<double>()));
      if (static_cast<int>(e.features.size()) != dataset.activation_dim) throw DatasetError("feature dimension mismatch");
      for (float v : e.features) {
        if (!std::isfinite(v)) throw DatasetError("non-finite feature");
      }
      dataset.examples.push_back(std::move(e));
    } catch (const DatasetError& e) {
      throw DatasetError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw DatasetError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dataset;
}

}  // namespace probesearch
