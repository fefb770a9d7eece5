// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "probesearch/answer.hpp"
#include "probesearch/backend.hpp"
#include "probesearch/protocol.hpp"
#include "probesearch/questions.hpp"

namespace probesearch {

struct ResponseRecord {
  std::string question_id;
  int response_id = 0;
  std::string text;
  int token_count = 0;
  std::optional<Rational> extracted_answer;
  std::optional<bool> is_correct;
  std::vector<Activation> per_token_activations;
  int layer = 0;
  RepKind rep_kind = RepKind::kHidden;
  // Set when filtering leaves nothing usable.
  bool discard = false;
};

struct ProbeExample {
  Activation features;
  int label = 0;
  std::string question_id;
  int response_id = 0;
  int token_index = 0;
};

struct ProbeDataset {
  std::vector<ProbeExample> examples;
  int layer = 0;
  RepKind rep_kind = RepKind::kHidden;
  int activation_dim = 0;

  std::size_t size() const { return examples.size(); }
  bool has_both_labels() const;
};

struct DatasetConfig {
  int samples_per_question = 10;
  int max_tokens = 240;
  int min_thoughtful_tokens = 30;
  // Greedy tokens requested after the answer trigger.
  int answer_tokens = 32;
};

// Samples `samples_per_question` Top-K-Start responses with per-token
// activation capture. Backend errors are rethrown with the question id.
std::vector<ResponseRecord> sample_responses(Backend& backend, const Question& question, int layer,
                                             RepKind rep_kind, int samples_per_question = 10,
                                             int max_tokens = 240);

// Cuts a restatement of the question (optionally introduced by "Question:")
// and everything after it. Matching is case-insensitive over
// whitespace-separated words; the word index of the cut is used as the token
// index for the activation tail. A cut at word 0 empties the record and sets
// `discard`.
ResponseRecord filter_question_restatement(ResponseRecord record, std::string_view question_text);

// 1 when correct and longer than min_thoughtful_tokens, 0 when incorrect and
// shorter, nullopt otherwise (including unanswered records).
std::optional<int> label_response(const ResponseRecord& record, const Rational& gold,
                                  int min_thoughtful_tokens = 30);

// Appends the answer trigger to the response and asks the backend for a
// short greedy completion; fills extracted_answer and is_correct.
void resolve_record_answer(Backend& backend, const Question& question, ResponseRecord& record,
                           int answer_tokens = 32);

// Sample, filter, resolve answers, label and flatten to one example per kept
// (response, token). Throws DatasetError on empty input or when fewer than two
// labels survive.
ProbeDataset build_probe_dataset(Backend& backend, std::span<const Question> questions, int layer,
                                 RepKind rep_kind, const DatasetConfig& config = {});

// Question-grouped split: every example of a question lands on one side.
// Throws DatasetError when either side misses a label.
std::pair<ProbeDataset, ProbeDataset> split_dataset(const ProbeDataset& dataset, double train_fraction,
                                                    std::uint64_t seed);

// Header line {"layer","rep_kind","dim","version":1} then one
// {"q","r","t","label","x"} record per example.
void write_dataset(const ProbeDataset& dataset, std::ostream& out);
ProbeDataset read_dataset(std::istream& in);

}  // namespace probesearch
