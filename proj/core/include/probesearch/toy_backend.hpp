// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic synthetic language model with planted linear structure.
//
// Responses are whitespace-token sequences built from "steps". A step starts
// with an opener word whose style is either thoughtful or intuitive:
//
//   thoughtful  "First , let us read the question carefully ... ."
//               "Then we take 12 and add 5 to get 17 ."
//               "So the final answer is 17 ."
//   intuitive   "Maybe the answer is just 40 ."
//
// Thoughtful steps carry out the next operation of the problem correctly;
// a single intuitive step commits the branch to the problem's trap answer.
// Every emitted token's activation is
//
//   mu(style) * layer_scale(layer) * R(rep_kind) * thought_direction + noise
//
// where layer_scale grows linearly from 0.25 (layer 0) to 1.0 (top layer) and
// R is a fixed rotation per representation kind (identity for hidden).
//
// The model is stateless across requests: every request replays the response
// part of its prompt through the token state machine, and every random
// choice is seeded by a hash of (seed, token prefix, rank). Output is a pure
// function of the configuration and the request itself.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probesearch/answer.hpp"
#include "probesearch/backend.hpp"
#include "probesearch/questions.hpp"
#include "probesearch/toy_problem.hpp"

namespace probesearch {

struct ToyConfig {
  std::uint64_t seed = 0;
  int activation_dim = 16;
  int num_layers = 4;
  int vocab_size = 64;
  // Unit vector of length activation_dim. Left empty, a seeded random unit
  // vector is drawn.
  std::vector<double> thought_direction;
  double mu_thoughtful = 2.0;
  double mu_intuitive = -2.0;
  double noise_sigma = 0.5;
  double p_thoughtful_step = 0.5;
  int num_templates = 8;
  // Number of first tokens with nonzero probability at a branching point.
  int branch_support = 20;
  std::string model_name = "toy-lm";

  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct ToyQuestion {
  std::string id;
  std::string text;
  Rational gold_answer{0};
  int template_id = 0;

  Question to_question() const { return Question{id, text, gold_answer}; }
};

// Deterministic for a fixed seed; the i-th question depends only on
// (seed, i), so a longer list extends a shorter one.
std::vector<ToyQuestion> generate_questions(const ToyConfig& config, int count);
std::vector<Question> to_questions(std::span<const ToyQuestion> questions);

enum class ToyStyle { kNone, kThoughtful, kIntuitive };

// Hidden state recovered by replaying a prompt.
struct ToyTrace {
  bool recognized = false;  // prompt matched the question templates
  ToyProblem problem;
  int ops_done = 0;
  bool tainted = false;     // some intuitive step occurred
  bool finished = false;    // end marker reached
  int thoughtful_steps = 0;
  int intuitive_steps = 0;
  int response_tokens = 0;
  ToyStyle last_style = ToyStyle::kNone;

  // The value the model reports when asked for its answer now.
  std::int64_t answer() const;
};

struct ToyGroundTruth {
  bool is_correct = false;
  int thoughtful_steps = 0;
};

class ToyLanguageModel {
 public:
  explicit ToyLanguageModel(ToyConfig config);

  const ToyConfig& config() const { return config_; }
  BackendInfo info() const;

  // Assumes the request passed validate_request.
  GenerationResult generate(const GenerationRequest& request) const;

  ToyTrace trace(std::string_view prompt_text) const;

  // Unit direction along which rep_kind activations carry the planted signal.
  const std::vector<double>& direction(RepKind rep_kind) const;
  double layer_scale(int layer) const;

 private:
  ToyConfig config_;
  std::vector<double> hidden_dir_;
  std::vector<double> attn_dir_;
  std::vector<double> mlp_dir_;
};

class ToyBackend : public Backend {
 public:
  explicit ToyBackend(ToyConfig config = {});

  BackendInfo info() override;
  GenerationResult generate(const GenerationRequest& request) override;

  const ToyLanguageModel& model() const { return model_; }

  // Generates questions and remembers them for ground_truth lookups.
  std::vector<ToyQuestion> make_questions(int count);
  void register_questions(std::span<const ToyQuestion> questions);

  // Test oracle only; the engine never consults it. `branch_text` is either
  // the full prompt+response or just the response. Throws LookupError for an
  // unknown question id.
  ToyGroundTruth ground_truth(std::string_view question_id, std::string_view branch_text) const;

 private:
  ToyLanguageModel model_;
  mutable std::mutex mu_;
  std::map<std::string, ToyQuestion, std::less<>> questions_;
};

}  // namespace probesearch
