// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "probesearch/log.hpp"
#include "probesearch/seeding.hpp"

namespace probesearch {
namespace {

using ojson = nlohmann::ordered_json;

struct Child {
  int node_id;
  int rank;
};

// Expands one node and returns its children in backend rank order.
std::vector<Child> expand_ranked(Backend& backend, const LinearProbe& probe, ReasoningTree& tree, int node_id,
                                 int k, int step_tokens, SearchStats* stats) {
  if (tree.nodes.at(static_cast<std::size_t>(node_id)).finished) {
    throw std::invalid_argument("cannot expand a finished node");
  }
  GenerationRequest request;
  request.prompt_text = tree.text_of(node_id);
  request.k = k;
  request.max_new_tokens = step_tokens;
  request.mode = DecodeMode::kTopKStart;
  request.layer = tree.layer;
  request.rep_kind = tree.rep_kind;
  request.capture = Capture::kLastToken;

  std::vector<CandidateContinuation> candidates;
  std::vector<double> scores;
  try {
    if (stats) ++stats->generate_calls;
    GenerationResult result = backend.generate(request);
    for (const auto& c : result.candidates) {
      const double s = probe.logit(std::span<const float>(c.activation));
      if (!std::isfinite(s)) throw SearchError("non-finite probe score");
      scores.push_back(s);
      if (stats) stats->generated_tokens += c.token_count;
    }
    candidates = std::move(result.candidates);
  } catch (const std::exception& e) {
    tree.nodes[static_cast<std::size_t>(node_id)].failed = true;
    if (stats) ++stats->failed_expansions;
    log_warning("expansion of node " + std::to_string(node_id) + " failed: " + e.what());
    return {};
  }

  const int depth = tree.nodes[static_cast<std::size_t>(node_id)].depth + 1;
  std::vector<Child> children;
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    ReasoningNode node;
    node.id = static_cast<int>(tree.nodes.size());
    node.parent_id = node_id;
    node.segment_text = std::move(candidates[r].text);
    node.depth = depth;
    node.score = scores[r];
    node.finished = candidates[r].finished;
    node.token_count = candidates[r].token_count;
    node.rank = static_cast<int>(r);
    node.activation = std::move(candidates[r].activation);
    children.push_back(Child{node.id, node.rank});
    tree.nodes.push_back(std::move(node));
  }
  return children;
}

std::vector<std::size_t> retain(const SearchConfig& config, std::span<const ScoredCandidate> pool,
                                std::uint64_t seed) {
  if (config.retention == Retention::kRandom) return random_retain(pool.size(), config.beam_width, seed);
  return prune_beam(pool, config.beam_width);
}

ojson answer_json(const std::optional<Rational>& answer) {
  if (!answer) return nullptr;
  if (answer->denominator() == 1) return answer->numerator();
  return to_double(*answer);
}

ojson config_object(const SearchConfig& c) {
  ojson j{{"depth", c.depth},
          {"beam_width", c.beam_width},
          {"k", c.fan_out},
          {"step_tokens", c.step_tokens},
          {"completion_steps", c.completion_steps},
          {"completion_tokens", c.completion_tokens},
          {"prune_scope", to_string(c.prune_scope)},
          {"layer", c.layer},
          {"rep_kind", c.rep_kind ? ojson(to_string(*c.rep_kind)) : ojson(nullptr)},
          {"answer_tokens", c.answer_tokens},
          {"retention", c.retention == Retention::kRandom ? "random" : "probe"}};
  if (c.retention == Retention::kRandom) j["retention_seed"] = c.retention_seed;
  return j;
}

}  // namespace

std::string_view to_string(PruneScope scope) { return scope == PruneScope::kPerNode ? "per_node" : "per_level"; }

PruneScope parse_prune_scope(std::string_view text) {
  if (text == "per_level") return PruneScope::kPerLevel;
  if (text == "per_node") return PruneScope::kPerNode;
  throw std::invalid_argument("unknown prune scope: " + std::string(text));
}

void SearchConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
  if (fan_out < 1) throw std::invalid_argument("k must be >= 1");
  if (static_cast<int>(step_tokens.size()) != depth) throw std::invalid_argument("step_tokens must have depth entries");
  for (int t : step_tokens) {
    if (t < 1) throw std::invalid_argument("step_tokens entries must be >= 1");
  }
  if (completion_steps < 0) throw std::invalid_argument("completion_steps must be >= 0");
  if (completion_tokens < 1) throw std::invalid_argument("completion_tokens must be >= 1");
  if (answer_tokens < 1) throw std::invalid_argument("answer_tokens must be >= 1");
  if (prune_scope == PruneScope::kPerNode && beam_width > fan_out) {
    throw std::invalid_argument("beam_width must not exceed k with per_node pruning");
  }
}

std::vector<int> ReasoningTree::path_to(int node_id) const {
  std::vector<int> path;
  std::optional<int> cur = node_id;
  while (cur) {
    path.push_back(*cur);
    cur = nodes.at(static_cast<std::size_t>(*cur)).parent_id;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::string ReasoningTree::text_of(int node_id) const {
  std::string text = prompt;
  for (int id : path_to(node_id)) text += nodes[static_cast<std::size_t>(id)].segment_text;
  return text;
}

std::vector<std::size_t> prune_beam(std::span<const ScoredCandidate> candidates, int n) {
  if (n < 1) throw std::invalid_argument("beam width must be >= 1");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = candidates[a];
    const auto& y = candidates[b];
    if (x.score != y.score) return x.score > y.score;
    if (x.parent_order != y.parent_order) return x.parent_order < y.parent_order;
    return x.candidate_index < y.candidate_index;
  });
  if (order.size() > static_cast<std::size_t>(n)) order.resize(static_cast<std::size_t>(n));
  return order;
}

std::vector<std::size_t> random_retain(std::size_t pool_size, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("beam width must be >= 1");
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (order.size() > static_cast<std::size_t>(n)) order.resize(static_cast<std::size_t>(n));
  std::sort(order.begin(), order.end());
  return order;
}

int search_layer(const SearchConfig& config, const LinearProbe& probe) {
  return config.layer >= 0 ? config.layer : probe.layer;
}

RepKind search_rep_kind(const SearchConfig& config, const LinearProbe& probe) {
  return config.rep_kind.value_or(probe.rep_kind);
}

std::vector<int> expand_node(Backend& backend, const LinearProbe& probe, ReasoningTree& tree, int node_id, int k,
                             int step_tokens, SearchStats* stats) {
  std::vector<Child> children = expand_ranked(backend, probe, tree, node_id, k, step_tokens, stats);
  std::vector<ScoredCandidate> scored;
  for (const auto& c : children) scored.push_back({0, c.rank, *tree.nodes[static_cast<std::size_t>(c.node_id)].score});
  std::vector<int> out;
  for (std::size_t i : prune_beam(scored, std::max<int>(1, static_cast<int>(scored.size())))) {
    out.push_back(children[i].node_id);
  }
  return out;
}

ReasoningTree run_branching_phase(Backend& backend, const LinearProbe& probe, const Question& question,
                                  const SearchConfig& config, SearchStats* stats) {
  config.validate();
  ReasoningTree tree;
  tree.prompt = format_prompt(question.text);
  tree.layer = search_layer(config, probe);
  tree.rep_kind = search_rep_kind(config, probe);
  tree.nodes.push_back(ReasoningNode{});
  tree.frontier = {0};
  const std::uint64_t question_hash = seeding::hash_string(tree.prompt);

  for (int level = 0; level < config.depth; ++level) {
    const int tokens = config.step_tokens[static_cast<std::size_t>(level)];
    const std::uint64_t level_seed = seeding::derive(config.retention_seed, question_hash,
                                                     static_cast<std::uint64_t>(level));
    int expanded = 0;
    int produced = 0;
    std::vector<int> next;

    if (config.prune_scope == PruneScope::kPerLevel) {
      std::vector<ScoredCandidate> pool;
      std::vector<int> pool_ids;
      for (std::size_t p = 0; p < tree.frontier.size(); ++p) {
        const int id = tree.frontier[p];
        const ReasoningNode& node = tree.nodes[static_cast<std::size_t>(id)];
        if (node.finished) {
          // Finished leaves keep competing with their existing score.
          pool.push_back({static_cast<int>(p), -1, node.score.value_or(0.0)});
          pool_ids.push_back(id);
          continue;
        }
        ++expanded;
        for (const Child& c : expand_ranked(backend, probe, tree, id, config.fan_out, tokens, stats)) {
          ++produced;
          pool.push_back({static_cast<int>(p), c.rank, *tree.nodes[static_cast<std::size_t>(c.node_id)].score});
          pool_ids.push_back(c.node_id);
        }
      }
      for (std::size_t i : retain(config, pool, level_seed)) next.push_back(pool_ids[i]);
    } else {
      for (std::size_t p = 0; p < tree.frontier.size(); ++p) {
        const int id = tree.frontier[p];
        if (tree.nodes[static_cast<std::size_t>(id)].finished) {
          next.push_back(id);
          continue;
        }
        ++expanded;
        std::vector<Child> children = expand_ranked(backend, probe, tree, id, config.fan_out, tokens, stats);
        produced += static_cast<int>(children.size());
        std::vector<ScoredCandidate> pool;
        for (const Child& c : children) {
          pool.push_back({0, c.rank, *tree.nodes[static_cast<std::size_t>(c.node_id)].score});
        }
        for (std::size_t i : retain(config, pool, seeding::combine(level_seed, static_cast<std::uint64_t>(id)))) {
          next.push_back(children[i].node_id);
        }
      }
    }

    if (expanded > 0 && produced == 0) {
      throw SearchAbort("every expansion failed at level " + std::to_string(level + 1), std::move(tree));
    }
    tree.frontier = std::move(next);
    if (stats) stats->frontier_sizes.push_back(static_cast<int>(tree.frontier.size()));
  }
  return tree;
}

std::vector<Branch> run_completion_phase(Backend& backend, const ReasoningTree& tree, const SearchConfig& config,
                                         SearchStats* stats) {
  std::vector<Branch> branches;
  for (int leaf : tree.frontier) {
    Branch branch;
    branch.node_ids = tree.path_to(leaf);
    for (int id : branch.node_ids) {
      const auto& node = tree.nodes[static_cast<std::size_t>(id)];
      if (node.score) branch.score_sequence.push_back(*node.score);
    }
    branch.full_text = tree.text_of(leaf);
    bool finished = tree.nodes[static_cast<std::size_t>(leaf)].finished;
    try {
      for (int step = 0; step < config.completion_steps && !finished; ++step) {
        GenerationRequest request;
        request.prompt_text = branch.full_text;
        request.k = 1;
        request.max_new_tokens = config.completion_tokens;
        request.mode = DecodeMode::kGreedy;
        request.layer = tree.layer;
        request.rep_kind = tree.rep_kind;
        request.capture = Capture::kLastToken;
        if (stats) ++stats->generate_calls;
        GenerationResult result = backend.generate(request);
        const CandidateContinuation& c = result.candidates.at(0);
        branch.full_text += c.text;
        branch.completion_tokens += c.token_count;
        if (stats) stats->generated_tokens += c.token_count;
        finished = c.finished || c.finish_reason == FinishReason::kStopToken || c.token_count == 0;
      }
    } catch (const std::exception& e) {
      if (stats) ++stats->dropped_branches;
      log_warning("completion of leaf " + std::to_string(leaf) + " failed, branch dropped: " + e.what());
      continue;
    }
    branches.push_back(std::move(branch));
  }
  if (branches.empty() && !tree.frontier.empty()) throw SearchAbort("every branch failed to complete", tree);
  return branches;
}

void resolve_answers(Backend& backend, std::vector<Branch>& branches, const SearchConfig& config, int layer,
                     RepKind rep_kind, SearchStats* stats) {
  for (Branch& branch : branches) {
    GenerationRequest request;
    request.prompt_text = branch.full_text + " " + std::string(kAnswerTrigger);
    request.k = 1;
    request.max_new_tokens = config.answer_tokens;
    request.mode = DecodeMode::kGreedy;
    request.layer = layer;
    request.rep_kind = rep_kind;
    request.capture = Capture::kLastToken;
    try {
      if (stats) ++stats->generate_calls;
      GenerationResult result = backend.generate(request);
      const CandidateContinuation& c = result.candidates.at(0);
      if (stats) stats->answer_tokens += c.token_count;
      branch.answer_reply = c.text;
      branch.answer = extract_answer(std::string(kAnswerTrigger) + c.text);
    } catch (const std::exception& e) {
      log_warning(std::string("answer request failed: ") + e.what());
      branch.answer.reset();
    }
  }
}

SearchResult probe_search(Backend& backend, const LinearProbe& probe, const Question& question,
                          const SearchConfig& config) {
  SearchResult result;
  result.tree = run_branching_phase(backend, probe, question, config, &result.stats);
  result.branches = run_completion_phase(backend, result.tree, config, &result.stats);
  resolve_answers(backend, result.branches, config, result.tree.layer, result.tree.rep_kind, &result.stats);
  const long long budget = token_budget(config, result.stats.frontier_sizes, result.tree.frontier.size());
  if (result.stats.generated_tokens > budget) {
    throw SearchError("generated " + std::to_string(result.stats.generated_tokens) + " tokens, over the budget of " +
                      std::to_string(budget));
  }
  return result;
}

long long token_budget(const SearchConfig& config, std::span<const int> frontier_sizes, std::size_t leaves) {
  long long total = 0;
  long long width = 1;
  for (std::size_t i = 0; i < config.step_tokens.size(); ++i) {
    total += static_cast<long long>(config.fan_out) * config.step_tokens[i] * width;
    if (i < frontier_sizes.size()) width = frontier_sizes[i];
  }
  return total + static_cast<long long>(leaves) * config.completion_steps * config.completion_tokens;
}

std::string config_json(const SearchConfig& config) { return config_object(config).dump(); }

void write_run_record(std::ostream& out, const std::string& question_id, const SearchResult& result,
                      const SearchConfig& config) {
  ojson branches = ojson::array();
  for (const Branch& b : result.branches) {
    branches.push_back(ojson{{"text", b.full_text}, {"scores", b.score_sequence}, {"answer", answer_json(b.answer)}});
  }
  ojson record{{"qid", question_id}, {"branches", std::move(branches)}, {"config", config_object(config)}};
  out << record.dump() << '\n';
}

}  // namespace probesearch
