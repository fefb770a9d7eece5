// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Probe-guided tree search. The branching phase expands every frontier node
// into k Top-K-Start continuations, scores each by the probe logit of its last
// token, and keeps the best n. The completion phase extends surviving leaves
// greedily; each leaf is then asked for its answer with the trigger phrase.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probesearch/answer.hpp"
#include "probesearch/backend.hpp"
#include "probesearch/errors.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/protocol.hpp"
#include "probesearch/questions.hpp"

namespace probesearch {

enum class PruneScope { kPerLevel, kPerNode };

std::string_view to_string(PruneScope scope);  // "per_level" | "per_node"
PruneScope parse_prune_scope(std::string_view text);

// How survivors are chosen from a candidate pool. kRandom keeps a seeded
// uniform subset and exists only as the unguided ablation.
enum class Retention { kProbeScore, kRandom };

struct SearchConfig {
  int depth = 3;
  int beam_width = 3;
  int fan_out = 10;
  std::vector<int> step_tokens{1, 20, 20};
  int completion_steps = 2;
  int completion_tokens = 100;
  PruneScope prune_scope = PruneScope::kPerLevel;
  // Negative means "use the probe's own layer / rep kind".
  int layer = -1;
  std::optional<RepKind> rep_kind;
  int answer_tokens = 32;
  Retention retention = Retention::kProbeScore;
  std::uint64_t retention_seed = 0;

  // Throws std::invalid_argument.
  void validate() const;
};

struct ReasoningNode {
  int id = 0;
  std::optional<int> parent_id;
  std::string segment_text;
  int depth = 0;
  // Probe logit at the segment's last token; absent for the root.
  std::optional<double> score;
  bool finished = false;
  // Expansion of this node was attempted and the backend failed.
  bool failed = false;
  int token_count = 0;
  int rank = 0;  // candidate index within the parent's expansion
  Activation activation;
};

struct ReasoningTree {
  std::string prompt;
  int layer = 0;
  RepKind rep_kind = RepKind::kHidden;
  std::vector<ReasoningNode> nodes;  // nodes[i].id == i; nodes[0] is the root
  std::vector<int> frontier;

  const ReasoningNode& root() const { return nodes.front(); }
  std::vector<int> path_to(int node_id) const;  // root first
  std::string text_of(int node_id) const;       // prompt + segments on the path
};

struct Branch {
  std::vector<int> node_ids;
  std::string full_text;  // prompt, branching segments and completion
  std::vector<double> score_sequence;
  std::optional<Rational> answer;
  std::string answer_reply;
  int completion_tokens = 0;
};

struct SearchStats {
  int generate_calls = 0;
  long long generated_tokens = 0;  // branching and completion phases
  long long answer_tokens = 0;     // trigger replies
  int failed_expansions = 0;
  int dropped_branches = 0;
  std::vector<int> frontier_sizes;
};

struct SearchResult {
  ReasoningTree tree;
  std::vector<Branch> branches;
  SearchStats stats;
};

// Carries the tree built so far.
class SearchAbort : public SearchError {
 public:
  SearchAbort(const std::string& what, ReasoningTree partial) : SearchError(what), partial_(std::move(partial)) {}
  const ReasoningTree& partial_tree() const { return partial_; }

 private:
  ReasoningTree partial_;
};

struct ScoredCandidate {
  int parent_order = 0;     // position of the parent in the frontier
  int candidate_index = 0;  // rank returned by the backend
  double score = 0.0;
};

// Indices into `candidates` of the top-n by score; ties go to the lower
// (parent_order, candidate_index). Returns everything when fewer than n.
std::vector<std::size_t> prune_beam(std::span<const ScoredCandidate> candidates, int n);

// Seeded uniform choice of n indices, returned in ascending order.
std::vector<std::size_t> random_retain(std::size_t pool_size, int n, std::uint64_t seed);

// Effective layer / rep kind for a search with this probe.
int search_layer(const SearchConfig& config, const LinearProbe& probe);
RepKind search_rep_kind(const SearchConfig& config, const LinearProbe& probe);

// Children of `node_id` appended to the tree, ordered by score descending.
// Throws std::invalid_argument on a finished node; backend failures mark the
// node failed and return no children.
std::vector<int> expand_node(Backend& backend, const LinearProbe& probe, ReasoningTree& tree, int node_id,
                             int k, int step_tokens, SearchStats* stats = nullptr);

ReasoningTree run_branching_phase(Backend& backend, const LinearProbe& probe, const Question& question,
                                  const SearchConfig& config, SearchStats* stats = nullptr);

std::vector<Branch> run_completion_phase(Backend& backend, const ReasoningTree& tree, const SearchConfig& config,
                                         SearchStats* stats = nullptr);

// Issues one greedy request per branch on text + " " + trigger and extracts
// the answer. A failed request leaves the answer empty.
void resolve_answers(Backend& backend, std::vector<Branch>& branches, const SearchConfig& config,
                     int layer, RepKind rep_kind, SearchStats* stats = nullptr);

SearchResult probe_search(Backend& backend, const LinearProbe& probe, const Question& question,
                          const SearchConfig& config);

// Upper bound on generated tokens for one search, used as a run-time check.
long long token_budget(const SearchConfig& config, std::span<const int> frontier_sizes, std::size_t leaves);

// One artifact line {"qid","branches":[{"text","scores","answer"}],"config":{...}}.
void write_run_record(std::ostream& out, const std::string& question_id, const SearchResult& result,
                      const SearchConfig& config);
std::string config_json(const SearchConfig& config);

}  // namespace probesearch
