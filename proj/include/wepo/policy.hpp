#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wepo/action.hpp"
#include "wepo/pairgen.hpp"

namespace wepo {

// Hashed-feature linear policy over a finite candidate-action set.
// Scores are weights . phi(prompt, action); probabilities come from a softmax
// over the candidate scores, so exp(logprob) sums to 1 by construction.

inline constexpr std::uint32_t kDefaultFeatureDim = 1u << 16;
inline constexpr std::size_t kMaxCandidates = 256;

struct PolicyTable {
    std::uint32_t feature_dim = kDefaultFeatureDim;
    std::uint64_t hash_seed = 0;
    std::vector<double> weights;
};

// Frozen reference copy (pi_ref); never mutated after train() snapshots it.
using ReferencePolicy = PolicyTable;

struct DpoConfig {
    double beta = 0.95;
    double learning_rate = 1e-4;
    double warmup_fraction = 0.1;
    int epochs = 1;
    std::uint64_t seed = 0;
};

enum class Objective { Dpo, Sft };

// Sparse feature indices into [0, feature_dim); duplicates act as counts.
using FeatureVec = std::vector<std::uint32_t>;

PolicyTable make_policy(std::uint32_t feature_dim = kDefaultFeatureDim,
                        std::uint64_t hash_seed = 0);

// Per-prompt feature context, computed once and shared across the candidate
// set: prompt token 3-gram hashes, word hashes from each element_id marker's
// local markup (opening-tag attributes plus immediate text), and word hashes
// of the prompt's Task line.
struct PromptContext {
    std::vector<std::uint64_t> gram_hashes;
    std::unordered_map<int, std::vector<std::uint64_t>> element_words;
    std::unordered_set<std::uint64_t> intent_words;
};

PromptContext build_prompt_context(const std::string& prompt, std::uint64_t hash_seed);

// (prompt 3-gram x action token) conjunctions, action-only tokens, and overlap
// features for words shared between the action's target element and the Task
// line. The overlap features are what let a trained policy carry over to pages
// whose element ids it has never seen.
FeatureVec featurize(const PromptContext& ctx, const std::string& action,
                     std::uint32_t feature_dim, std::uint64_t hash_seed);
FeatureVec featurize(const PolicyTable& policy, const std::string& prompt,
                     const std::string& action);

double dot_features(const PolicyTable& policy, const FeatureVec& features);

// log pi(action | prompt) under the candidate softmax; requires action to be
// one of the distinct, non-empty candidates.
double action_logprob(const PolicyTable& policy, const std::string& prompt,
                      const std::string& action, const std::vector<std::string>& candidates);

double dpo_loss_from_logprobs(double policy_chosen, double policy_rejected, double ref_chosen,
                              double ref_rejected, double beta);

double dpo_loss(const PolicyTable& policy, const ReferencePolicy& ref, const PreferencePair& pair,
                const std::vector<std::string>& candidates, double beta);

using SparseGrad = std::unordered_map<std::uint32_t, double>;

SparseGrad dpo_grad(const PolicyTable& policy, const ReferencePolicy& ref,
                    const PreferencePair& pair, const std::vector<std::string>& candidates,
                    double beta);

double sft_loss(const PolicyTable& policy, const std::string& prompt,
                const std::string& truth_action, const std::vector<std::string>& candidates);

SparseGrad sft_grad(const PolicyTable& policy, const std::string& prompt,
                    const std::string& truth_action, const std::vector<std::string>& candidates);

// Candidate softmax support for a pair: chosen and rejected first, then each
// pair op pattern applied to every element id visible in the prompt, capped.
std::vector<std::string> build_candidate_set(const std::string& prompt, const std::string& chosen,
                                             const std::string& rejected);

// One op/value pattern over every element id in the prompt (evaluation pools).
std::vector<std::string> element_candidates(const std::string& prompt, const Action& pattern);

// 1-based step; linear warmup to the peak rate, then cosine decay to zero.
double learning_rate_at(long step, long total_steps, double base_rate, double warmup_fraction);

PolicyTable train(const std::vector<PreferencePair>& pairs, const DpoConfig& cfg,
                  Objective objective, std::uint32_t feature_dim = kDefaultFeatureDim,
                  std::uint64_t hash_seed = 0);

// Argmax candidate under the policy; first wins on ties.
std::string predict(const PolicyTable& policy, const std::string& prompt,
                    const std::vector<std::string>& candidates);

// Mean of log pi(chosen) - log pi(rejected) over the dataset.
double mean_margin(const PolicyTable& policy, const std::vector<PreferencePair>& pairs);

void save_policy(const PolicyTable& policy, const std::string& path);
PolicyTable load_policy(const std::string& path);

}  // namespace wepo
