#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "wepo/dom.hpp"

namespace wepo {

enum class PruneMode { Training, Inference };

// k is the number of candidate elements surviving the prune; max_descendants
// caps the node count of a per-candidate snippet and max_depth_up caps the
// ancestor walk that grows it.
struct PruneConfig {
    int k = 50;
    int max_descendants = 60;
    int max_depth_up = 5;
    PruneMode mode = PruneMode::Training;
};

// External ranking logits keyed by candidate_id (one TSV line per candidate
// in the scores file). Higher is better.
struct CandidateScores {
    std::map<int, double> scores;
};

// Walks upward from center while the enclosing subtree stays within the node
// budget and the walk within max_depth_up, then returns that subtree as a new
// tree. Always contains center, even when center alone exceeds the budget.
DomTree isolate_snippet(const DomTree& tree, int center, const PruneConfig& cfg);

// Keeps the top-k candidates by score (ties to the lower candidate_id). In
// training mode the ground-truth candidate is force-included, displacing the
// lowest-ranked selection. The kept candidates' snippets are merged, together
// with their ancestor chains, into one tree in document order; only kept
// candidates retain their candidate_id markers.
DomTree prune_to_k(const DomTree& tree, const CandidateScores& scores,
                   std::optional<int> truth, const PruneConfig& cfg);

// Reads a `candidate_id<TAB>logit` file. Throws ParseError with the offending
// line number, DuplicateIdError on repeated ids.
CandidateScores load_scores(const std::string& path);

// Intent-overlap ranking used when no external scores are available: counts
// distinct intent tokens occurring in a candidate's text and attribute values.
CandidateScores fallback_scores(const DomTree& tree, const std::string& intent);

}  // namespace wepo
