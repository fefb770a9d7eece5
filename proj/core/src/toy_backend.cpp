// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/toy_backend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "probesearch/errors.hpp"
#include "probesearch/seeding.hpp"

namespace probesearch {
namespace {

constexpr std::array<std::string_view, 10> kThoughtfulOpeners = {
    "First", "Okay", "Alright", "Well", "Now", "Initially", "Begin", "Reasoning", "Thinking", "Methodically"};
constexpr std::array<std::string_view, 10> kIntuitiveOpeners = {
    "Maybe", "Probably", "Clearly", "Obviously", "Guess", "Quickly", "Honestly", "Surely", "Roughly", "Instinctively"};
constexpr std::array<std::string_view, 4> kTriggerTokens = {"Therefore,", "the", "answer", "is"};
constexpr std::array<std::string_view, 16> kPreamble = {",",   "let",     "us",  "read", "the", "question",
                                                        "carefully", "and", "work", "through", "it", "one",
                                                        "step", "at",  "a",    "time"};
constexpr std::string_view kAnswerMarker = "\nAnswer:";
constexpr int kOpenerCount = static_cast<int>(kThoughtfulOpeners.size() + kIntuitiveOpeners.size());

ToyStyle opener_style(std::string_view token) {
  if (std::find(kThoughtfulOpeners.begin(), kThoughtfulOpeners.end(), token) != kThoughtfulOpeners.end()) {
    return ToyStyle::kThoughtful;
  }
  if (std::find(kIntuitiveOpeners.begin(), kIntuitiveOpeners.end(), token) != kIntuitiveOpeners.end()) {
    return ToyStyle::kIntuitive;
  }
  return ToyStyle::kNone;
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

enum class Effect { kNone, kCompleteOp, kFinish };

struct Planned {
  std::string token;
  Effect effect = Effect::kNone;
};

// Token-level state machine shared by replay and generation.
class Machine {
 public:
  Machine(const ToyProblem& problem, std::uint64_t prefix_hash) : problem_(problem), hash_(prefix_hash) {
    value_ = problem_.value_after(0);
  }

  bool finished() const { return finished_; }
  bool fresh() const { return style_ == ToyStyle::kNone && !finished_ && queue_.empty(); }
  bool awaiting_answer() const { return awaiting_answer_; }
  ToyStyle style() const { return style_; }
  std::uint64_t hash() const { return hash_; }

  // Next greedy token, or nullopt at a fresh branching point or after the end.
  std::optional<std::string> greedy_token() {
    refill();
    if (queue_.empty()) return std::nullopt;
    return queue_.front().token;
  }

  // Consumes one token, whether greedy, a forced opener, or foreign text.
  void emit(std::string_view token) {
    refill();
    if (!queue_.empty() && queue_.front().token == token) {
      Effect effect = queue_.front().effect;
      queue_.pop_front();
      apply(effect);
    } else if (ToyStyle s = opener_style(token); s != ToyStyle::kNone && !finished_) {
      open_step(s);
    }
    hash_ = seeding::combine(hash_, token);
    ++response_tokens_;
  }

  // Called after replaying a prompt that ends with the answer trigger.
  void begin_answer() {
    awaiting_answer_ = true;
    finished_ = false;
    queue_.clear();
    queue_.push_back({std::to_string(answer()), Effect::kNone});
    queue_.push_back({".", Effect::kFinish});
  }

  std::int64_t answer() const {
    if (tainted_) return problem_.trap();
    if (ops_done_ == problem_.num_steps()) return problem_.gold();
    return value_;
  }

  ToyTrace trace(bool recognized) const {
    ToyTrace t;
    t.recognized = recognized;
    t.problem = problem_;
    t.ops_done = ops_done_;
    t.tainted = tainted_;
    t.finished = finished_;
    t.thoughtful_steps = thoughtful_steps_;
    t.intuitive_steps = intuitive_steps_;
    t.response_tokens = response_tokens_;
    t.last_style = style_;
    return t;
  }

 private:
  void apply(Effect effect) {
    if (effect == Effect::kCompleteOp) {
      ++ops_done_;
      value_ = problem_.value_after(ops_done_);
    } else if (effect == Effect::kFinish) {
      finished_ = true;
    }
  }

  void refill() {
    if (!queue_.empty() || finished_ || style_ == ToyStyle::kNone) return;
    if (style_ == ToyStyle::kThoughtful && ops_done_ < problem_.num_steps()) {
      queue_.push_back({"Then"});
      push_operation();
    } else {
      push_conclusion("So");
    }
  }

  void open_step(ToyStyle style) {
    const bool at_start = response_tokens_ == 0;
    queue_.clear();
    style_ = style;
    if (style == ToyStyle::kIntuitive) {
      ++intuitive_steps_;
      tainted_ = true;
      for (std::string_view w : {"the", "answer", "is", "just"}) queue_.push_back({std::string(w)});
      queue_.push_back({std::to_string(problem_.trap())});
      queue_.push_back({".", Effect::kFinish});
      return;
    }
    ++thoughtful_steps_;
    if (at_start) {
      for (std::string_view w : kPreamble) queue_.push_back({std::string(w)});
      queue_.push_back({"."});
    } else if (ops_done_ < problem_.num_steps()) {
      queue_.push_back({","});
      push_operation();
    } else {
      queue_.push_back({","});
      push_conclusion("so");
    }
  }

  void push_operation() {
    const auto i = static_cast<std::size_t>(ops_done_);
    const std::int64_t operand = problem_.operands[i + 1];
    const std::int64_t next = apply_op(problem_.ops[i], value_, operand);
    for (std::string_view w : {"we", "take"}) queue_.push_back({std::string(w)});
    queue_.push_back({std::to_string(value_)});
    queue_.push_back({"and"});
    switch (problem_.ops[i]) {
      case ToyOp::kAdd: queue_.push_back({"add"}); break;
      case ToyOp::kSubtract: queue_.push_back({"subtract"}); break;
      case ToyOp::kMultiply:
        queue_.push_back({"multiply"});
        queue_.push_back({"by"});
        break;
    }
    queue_.push_back({std::to_string(operand)});
    for (std::string_view w : {"to", "get"}) queue_.push_back({std::string(w)});
    queue_.push_back({std::to_string(next)});
    queue_.push_back({".", Effect::kCompleteOp});
  }

  void push_conclusion(std::string_view lead) {
    queue_.push_back({std::string(lead)});
    for (std::string_view w : {"the", "final", "answer", "is"}) queue_.push_back({std::string(w)});
    queue_.push_back({std::to_string(answer())});
    queue_.push_back({".", Effect::kFinish});
  }

  static std::int64_t apply_op(ToyOp op, std::int64_t lhs, std::int64_t rhs) { return probesearch::apply(op, lhs, rhs); }

  ToyProblem problem_;
  std::uint64_t hash_;
  std::int64_t value_ = 0;
  int ops_done_ = 0;
  bool tainted_ = false;
  bool finished_ = false;
  bool awaiting_answer_ = false;
  ToyStyle style_ = ToyStyle::kNone;
  std::deque<Planned> queue_;
  int thoughtful_steps_ = 0;
  int intuitive_steps_ = 0;
  int response_tokens_ = 0;
};

struct Replayed {
  Machine machine;
  bool recognized;
};

Replayed replay(const ToyConfig& config, std::string_view prompt) {
  std::string_view question_part = prompt;
  std::string_view response;
  if (auto pos = prompt.find(kAnswerMarker); pos != std::string_view::npos) {
    question_part = prompt.substr(0, pos + kAnswerMarker.size());
    response = prompt.substr(pos + kAnswerMarker.size());
  }
  std::string_view question_text = question_part;
  if (question_text.rfind("Question:", 0) == 0) question_text.remove_prefix(9);
  if (question_text.size() >= kAnswerMarker.size() &&
      question_text.substr(question_text.size() - kAnswerMarker.size()) == kAnswerMarker) {
    question_text.remove_suffix(kAnswerMarker.size());
  }

  std::optional<ToyProblem> parsed = parse_toy_problem(question_text);
  ToyProblem problem = parsed ? *parsed : ToyProblem{{0}, {}};
  Machine machine(problem, seeding::derive(config.seed, question_part));

  std::vector<std::string> tokens = split_tokens(response);
  bool trigger = tokens.size() >= kTriggerTokens.size() &&
                 std::equal(kTriggerTokens.begin(), kTriggerTokens.end(), tokens.end() - kTriggerTokens.size());
  const std::size_t body = trigger ? tokens.size() - kTriggerTokens.size() : tokens.size();
  for (std::size_t i = 0; i < body; ++i) machine.emit(tokens[i]);
  if (trigger) {
    for (std::size_t i = body; i < tokens.size(); ++i) machine.emit(tokens[i]);
    machine.begin_answer();
  }
  return {std::move(machine), parsed.has_value()};
}

std::vector<double> rotate_pairs(const std::vector<double>& v, double angle) {
  std::vector<double> out = v;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
    out[i] = c * v[i] - s * v[i + 1];
    out[i + 1] = s * v[i] + c * v[i + 1];
  }
  return out;
}

std::string format_tokens(const std::vector<std::string>& tokens) {
  std::string text;
  for (const auto& t : tokens) {
    text.push_back(' ');
    text += t;
  }
  return text;
}

}  // namespace

void ToyConfig::validate() const {
  if (activation_dim < 1) throw std::invalid_argument("activation_dim must be >= 1");
  if (num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  if (!(noise_sigma > 0.0)) throw std::invalid_argument("noise_sigma must be > 0");
  if (!(p_thoughtful_step > 0.0 && p_thoughtful_step < 1.0)) {
    throw std::invalid_argument("p_thoughtful_step must lie in (0, 1)");
  }
  if (num_templates < 1) throw std::invalid_argument("num_templates must be >= 1");
  if (branch_support < 1) throw std::invalid_argument("branch_support must be >= 1");
  if (!thought_direction.empty()) {
    if (static_cast<int>(thought_direction.size()) != activation_dim) {
      throw std::invalid_argument("thought_direction length must equal activation_dim");
    }
    double norm2 = 0.0;
    for (double x : thought_direction) norm2 += x * x;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9) throw std::invalid_argument("thought_direction must be a unit vector");
  }
}

std::int64_t ToyTrace::answer() const {
  if (tainted) return problem.trap();
  if (ops_done == problem.num_steps()) return problem.gold();
  return problem.value_after(ops_done);
}

std::vector<ToyQuestion> generate_questions(const ToyConfig& config, int count) {
  std::vector<ToyQuestion> out;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(seeding::derive(config.seed, "question", static_cast<std::uint64_t>(i)));
    auto uniform = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    ToyProblem problem;
    const int operands = uniform(2, 4);
    problem.operands.push_back(uniform(2, 50));
    std::int64_t value = problem.operands[0];
    for (int j = 1; j < operands; ++j) {
      auto op = static_cast<ToyOp>(uniform(0, 2));
      if (op == ToyOp::kSubtract && value < 2) op = ToyOp::kAdd;
      std::int64_t a = op == ToyOp::kSubtract ? uniform(2, static_cast<int>(std::min<std::int64_t>(50, value)))
                                              : uniform(2, 50);
      problem.ops.push_back(op);
      problem.operands.push_back(a);
      value = apply(op, value, a);
    }

    ToyQuestion q;
    q.id = "toy-" + std::to_string(config.seed) + "-" + std::to_string(i);
    q.template_id = uniform(0, config.num_templates - 1);
    q.text = render_toy_problem(problem, q.template_id);
    q.gold_answer = Rational(problem.gold());
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Question> to_questions(std::span<const ToyQuestion> questions) {
  std::vector<Question> out;
  out.reserve(questions.size());
  for (const auto& q : questions) out.push_back(q.to_question());
  return out;
}

ToyLanguageModel::ToyLanguageModel(ToyConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.thought_direction.empty()) {
    std::mt19937_64 rng(seeding::derive(config_.seed, "direction"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> d(static_cast<std::size_t>(config_.activation_dim));
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& x : d) {
        x = normal(rng);
        norm2 += x * x;
      }
    } while (norm2 == 0.0);
    for (double& x : d) x /= std::sqrt(norm2);
    config_.thought_direction = d;
  }
  hidden_dir_ = config_.thought_direction;
  attn_dir_ = rotate_pairs(hidden_dir_, std::numbers::pi / 3.0);
  mlp_dir_ = rotate_pairs(hidden_dir_, 2.0 * std::numbers::pi / 3.0);
}

BackendInfo ToyLanguageModel::info() const {
  return BackendInfo{config_.model_name, config_.num_layers, config_.activation_dim, config_.vocab_size};
}

const std::vector<double>& ToyLanguageModel::direction(RepKind rep_kind) const {
  switch (rep_kind) {
    case RepKind::kAttn: return attn_dir_;
    case RepKind::kMlp: return mlp_dir_;
    case RepKind::kHidden: break;
  }
  return hidden_dir_;
}

double ToyLanguageModel::layer_scale(int layer) const {
  if (config_.num_layers <= 1) return 1.0;
  return 0.25 + 0.75 * static_cast<double>(layer) / static_cast<double>(config_.num_layers - 1);
}

ToyTrace ToyLanguageModel::trace(std::string_view prompt_text) const {
  Replayed r = replay(config_, prompt_text);
  return r.machine.trace(r.recognized);
}

GenerationResult ToyLanguageModel::generate(const GenerationRequest& request) const {
  const Machine start = replay(config_, request.prompt_text).machine;

  auto activation = [&](std::uint64_t token_hash, ToyStyle style) {
    const double mu = style == ToyStyle::kThoughtful  ? config_.mu_thoughtful
                      : style == ToyStyle::kIntuitive ? config_.mu_intuitive
                                                      : 0.0;
    const double scale = mu * layer_scale(request.layer);
    const std::vector<double>& dir = direction(request.rep_kind);
    std::mt19937_64 rng(seeding::derive(config_.seed, token_hash, static_cast<std::uint64_t>(request.layer),
                                        static_cast<std::uint64_t>(request.rep_kind)));
    std::normal_distribution<double> noise(0.0, config_.noise_sigma);
    Activation a(dir.size());
    for (std::size_t i = 0; i < dir.size(); ++i) a[i] = static_cast<float>(scale * dir[i] + noise(rng));
    return a;
  };

  int available = 1;
  if (!start.finished() && !start.awaiting_answer()) {
    available = std::min({config_.branch_support, config_.vocab_size, kOpenerCount});
  }
  const int wanted = request.mode == DecodeMode::kGreedy ? 1 : request.k;
  const int count = std::min(wanted, available);

  GenerationResult result;
  if (request.mode == DecodeMode::kTopKStart && request.k > available) {
    result.warning = "k=" + std::to_string(request.k) + " exceeds the " + std::to_string(available) +
                     " first tokens with nonzero probability; clamped";
  }

  // Openers for every rank that branches off the greedy path.
  const bool fresh = start.fresh();
  std::vector<std::string_view> openers(static_cast<std::size_t>(count));
  {
    std::vector<std::string_view> thoughtful(kThoughtfulOpeners.begin(), kThoughtfulOpeners.end());
    std::vector<std::string_view> intuitive(kIntuitiveOpeners.begin(), kIntuitiveOpeners.end());
    std::mt19937_64 rng(seeding::derive(config_.seed, start.hash(), "pools"));
    std::shuffle(thoughtful.begin(), thoughtful.end(), rng);
    std::shuffle(intuitive.begin(), intuitive.end(), rng);
    std::size_t next_t = 0;
    std::size_t next_i = 0;
    for (int r = fresh ? 0 : 1; r < count; ++r) {
      const double u = seeding::unit_interval(seeding::derive(config_.seed, start.hash(), "flag",
                                                               static_cast<std::uint64_t>(r)));
      bool want_thoughtful = u < config_.p_thoughtful_step;
      if (want_thoughtful && next_t == thoughtful.size()) want_thoughtful = false;
      if (!want_thoughtful && next_i == intuitive.size()) want_thoughtful = true;
      openers[static_cast<std::size_t>(r)] = want_thoughtful ? thoughtful[next_t++] : intuitive[next_i++];
    }
  }

  for (int r = 0; r < count; ++r) {
    Machine m = start;
    std::vector<std::string> tokens;
    CandidateContinuation c;
    auto push = [&](const std::string& token) {
      m.emit(token);
      tokens.push_back(token);
      if (request.capture == Capture::kAllTokens) c.activations.push_back(activation(m.hash(), m.style()));
    };

    if (!m.finished()) {
      if (r == 0 && !fresh) {
        if (auto g = m.greedy_token()) push(*g);
      } else {
        push(std::string(openers[static_cast<std::size_t>(r)]));
      }
    }
    while (static_cast<int>(tokens.size()) < request.max_new_tokens && !m.finished()) {
      auto g = m.greedy_token();
      if (!g) break;
      push(*g);
    }

    c.text = format_tokens(tokens);
    c.token_count = static_cast<int>(tokens.size());
    c.activation = c.activations.empty() ? activation(m.hash(), m.style()) : c.activations.back();
    c.finished = m.finished();
    c.finish_reason = m.finished() ? FinishReason::kStopToken
                      : c.token_count >= request.max_new_tokens ? FinishReason::kLength
                                                                : FinishReason::kNone;
    result.candidates.push_back(std::move(c));
  }
  return result;
}

ToyBackend::ToyBackend(ToyConfig config) : model_(std::move(config)) {}

BackendInfo ToyBackend::info() { return model_.info(); }

GenerationResult ToyBackend::generate(const GenerationRequest& request) {
  validate_request(request, model_.info());
  return model_.generate(request);
}

std::vector<ToyQuestion> ToyBackend::make_questions(int count) {
  std::vector<ToyQuestion> questions = generate_questions(model_.config(), count);
  register_questions(questions);
  return questions;
}

void ToyBackend::register_questions(std::span<const ToyQuestion> questions) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& q : questions) questions_[q.id] = q;
}

ToyGroundTruth ToyBackend::ground_truth(std::string_view question_id, std::string_view branch_text) const {
  std::string prompt;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = questions_.find(question_id);
    if (it == questions_.end()) throw LookupError("unknown toy question id: " + std::string(question_id));
    prompt = format_prompt(it->second.text);
  }
  std::string full = branch_text.rfind("Question:", 0) == 0 ? std::string(branch_text) : prompt + std::string(branch_text);
  ToyTrace t = model_.trace(full);
  return ToyGroundTruth{!t.tainted && t.ops_done == t.problem.num_steps(), t.thoughtful_steps};
}

}  // namespace probesearch
