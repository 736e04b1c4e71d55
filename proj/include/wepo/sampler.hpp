#pragma once

#include <cstdint>
#include <vector>

#include "wepo/action.hpp"
#include "wepo/dom.hpp"
#include "wepo/rng.hpp"

namespace wepo {

enum class SampleStrategy { Distance, Random };

struct SampleConfig {
    int n = 3;                       // negatives per positive
    SampleStrategy strategy = SampleStrategy::Distance;
    double replace_threshold = 0.33; // CLICK replacement probability for non-CLICK truths
    std::uint64_t seed = 0;
};

// A negative action plus the tree distance between its element and the truth
// element, recorded for provenance and diagnostics.
struct NegativeSample {
    Action action;
    int distance = 0;
};

// Picks min(n, candidates-1) distinct elements, never the truth element.
// Distance strategy: nearest by step_distance to the truth, candidate_id
// ascending on ties, no randomness. Random strategy: uniform without
// replacement from the seeded generator.
std::vector<int> sample_negative_elements(const DomTree& tree, int truth,
                                          const SampleConfig& cfg);

// Operation replacement rule: a CLICK truth keeps CLICK; otherwise the
// negative operation becomes CLICK when epsilon falls below the threshold and
// keeps the truth operation otherwise.
OpKind f_op(OpKind truth_op, double epsilon, const SampleConfig& cfg);

// Full negative construction for one step: sampled elements paired with f_op
// draws, value strings copied from the truth when the negative keeps a
// TYPE/SELECT operation. One epsilon is drawn per negative, in output order.
std::vector<NegativeSample> build_negative_actions(const DomTree& tree,
                                                   const Action& truth_action,
                                                   const SampleConfig& cfg);

// Variants that draw from an external generator; the seeded overloads above
// are thin wrappers constructing Rng(cfg.seed).
std::vector<int> sample_negative_elements(const DomTree& tree, int truth,
                                          const SampleConfig& cfg, Rng& rng);
std::vector<NegativeSample> build_negative_actions(const DomTree& tree,
                                                   const Action& truth_action,
                                                   const SampleConfig& cfg, Rng& rng);

}  // namespace wepo
