#include "wepo/policy.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string_view>
#include <unordered_set>

#include "wepo/error.hpp"
#include "wepo/hash.hpp"
#include "wepo/rng.hpp"

namespace wepo {

namespace {

constexpr std::uint64_t kGramSalt = 0x67726d73616c7431ull;
constexpr std::uint64_t kActionSalt = 0x616374736c743176ull;
constexpr std::uint64_t kOverlapSalt = 0x6f766c70736c7431ull;
constexpr std::uint64_t kOverlapCountSalt = 0x6f766c70636e7431ull;
// Longest stretch of markup read after an element_id marker when collecting
// element words; generous for one opening tag plus its immediate text.
constexpr std::size_t kElementWindow = 240;
constexpr char kCheckpointMagic[8] = {'W', 'E', 'P', 'O', 'P', 'O', 'L', 'Y'};
constexpr unsigned char kCheckpointVersion = 1;

std::vector<std::string_view> split_tokens(const std::string& s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.emplace_back(s.data() + start, i - start);
    }
    return out;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double logsumexp(const std::vector<double>& scores) {
    double m = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - m);
    return m + std::log(sum);
}

// Hashes of lowercased alphanumeric runs in text, appended to out.
void hash_word_runs(std::string_view text, std::vector<std::uint64_t>& out) {
    std::string word;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
        word.clear();
        while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
            ++i;
        }
        if (!word.empty()) out.push_back(fnv1a64(word));
    }
}

std::vector<std::uint64_t> gram_hashes_of(const std::string& prompt, std::uint64_t hash_seed) {
    std::vector<std::string_view> tokens = split_tokens(prompt);
    std::vector<std::uint64_t> out;
    if (tokens.empty()) return out;
    std::size_t window = std::min<std::size_t>(3, tokens.size());
    out.reserve(tokens.size() - window + 1);
    for (std::size_t i = 0; i + window <= tokens.size(); ++i) {
        std::uint64_t h = splitmix64(hash_seed ^ kGramSalt);
        for (std::size_t j = 0; j < window; ++j) {
            h = fnv1a64(tokens[i + j], h);
            h = fnv1a64("\x1f", h);
        }
        out.push_back(h);
    }
    return out;
}

std::size_t candidate_index(const std::vector<std::string>& candidates,
                            const std::string& action, const char* who) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i] == action) return i;
    }
    throw ActionNotCandidateError(std::string(who) + ": action '" + action +
                                  "' is not in the candidate set");
}

struct SoftmaxView {
    std::vector<FeatureVec> feats;
    std::vector<double> scores;
    double lse = 0.0;
};

SoftmaxView score_candidates(const PolicyTable& policy, const std::string& prompt,
                             const std::vector<std::string>& candidates) {
    if (candidates.empty()) throw EmptyCandidatesError("score_candidates: no candidates");
    PromptContext ctx = build_prompt_context(prompt, policy.hash_seed);
    SoftmaxView view;
    view.feats.reserve(candidates.size());
    view.scores.reserve(candidates.size());
    for (const std::string& c : candidates) {
        view.feats.push_back(featurize(ctx, c, policy.feature_dim, policy.hash_seed));
        view.scores.push_back(dot_features(policy, view.feats.back()));
    }
    view.lse = logsumexp(view.scores);
    return view;
}

}  // namespace

PolicyTable make_policy(std::uint32_t feature_dim, std::uint64_t hash_seed) {
    if (feature_dim == 0 || (feature_dim & (feature_dim - 1)) != 0) {
        throw Error("make_policy: feature_dim must be a power of two");
    }
    PolicyTable p;
    p.feature_dim = feature_dim;
    p.hash_seed = hash_seed;
    p.weights.assign(feature_dim, 0.0);
    return p;
}

PromptContext build_prompt_context(const std::string& prompt, std::uint64_t hash_seed) {
    PromptContext ctx;
    ctx.gram_hashes = gram_hashes_of(prompt, hash_seed);

    static const std::string marker = "element_id=\"";
    std::size_t pos = 0;
    while ((pos = prompt.find(marker, pos)) != std::string::npos) {
        std::size_t p = pos + marker.size();
        int id = 0;
        std::size_t digits = p;
        while (p < prompt.size() && prompt[p] >= '0' && prompt[p] <= '9') {
            id = id * 10 + (prompt[p] - '0');
            ++p;
        }
        pos = p;
        if (p == digits || p >= prompt.size() || prompt[p] != '"') continue;
        ++p;
        // The marker sits first in its opening tag, so the stretch up to the
        // next '<' is the tag's remaining attributes plus its immediate text.
        std::size_t limit = std::min(prompt.size(), p + kElementWindow);
        std::size_t end = p;
        while (end < limit && prompt[end] != '<') ++end;
        hash_word_runs(std::string_view(prompt).substr(p, end - p), ctx.element_words[id]);
    }

    static const std::string task_label = "\nTask: ";
    std::size_t task = prompt.rfind(task_label);
    if (task != std::string::npos) {
        std::size_t start = task + task_label.size();
        std::size_t end = prompt.find('\n', start);
        if (end == std::string::npos) end = prompt.size();
        std::vector<std::uint64_t> words;
        hash_word_runs(std::string_view(prompt).substr(start, end - start), words);
        ctx.intent_words.insert(words.begin(), words.end());
    }
    return ctx;
}

FeatureVec featurize(const PromptContext& ctx, const std::string& action,
                     std::uint32_t feature_dim, std::uint64_t hash_seed) {
    std::uint32_t mask = feature_dim - 1;
    std::uint64_t action_salt = splitmix64(hash_seed ^ kActionSalt);
    std::vector<std::string_view> tokens = split_tokens(action);
    FeatureVec out;
    out.reserve(tokens.size() * (ctx.gram_hashes.size() + 1));
    for (std::string_view t : tokens) {
        std::uint64_t th = fnv1a64(t);
        out.push_back(static_cast<std::uint32_t>(mix_u64(action_salt, th)) & mask);
        for (std::uint64_t g : ctx.gram_hashes) {
            out.push_back(static_cast<std::uint32_t>(mix_u64(g, th)) & mask);
        }
    }
    if (!ctx.intent_words.empty()) {
        if (auto a = parse_action(action)) {
            auto it = ctx.element_words.find(a->element);
            if (it != ctx.element_words.end()) {
                std::uint64_t overlap_salt = splitmix64(hash_seed ^ kOverlapSalt);
                std::uint32_t count_feature =
                    static_cast<std::uint32_t>(splitmix64(hash_seed ^ kOverlapCountSalt)) & mask;
                for (std::uint64_t wh : it->second) {
                    if (!ctx.intent_words.contains(wh)) continue;
                    out.push_back(static_cast<std::uint32_t>(mix_u64(overlap_salt, wh)) & mask);
                    out.push_back(count_feature);
                }
            }
        }
    }
    return out;
}

FeatureVec featurize(const PolicyTable& policy, const std::string& prompt,
                     const std::string& action) {
    return featurize(build_prompt_context(prompt, policy.hash_seed), action, policy.feature_dim,
                     policy.hash_seed);
}

double dot_features(const PolicyTable& policy, const FeatureVec& features) {
    double sum = 0.0;
    for (std::uint32_t f : features) sum += policy.weights[f];
    return sum;
}

double action_logprob(const PolicyTable& policy, const std::string& prompt,
                      const std::string& action, const std::vector<std::string>& candidates) {
    SoftmaxView view = score_candidates(policy, prompt, candidates);
    std::size_t idx = candidate_index(candidates, action, "action_logprob");
    return view.scores[idx] - view.lse;
}

double dpo_loss_from_logprobs(double policy_chosen, double policy_rejected, double ref_chosen,
                              double ref_rejected, double beta) {
    double margin = beta * ((policy_chosen - ref_chosen) - (policy_rejected - ref_rejected));
    return softplus(-margin);
}

double dpo_loss(const PolicyTable& policy, const ReferencePolicy& ref, const PreferencePair& pair,
                const std::vector<std::string>& candidates, double beta) {
    return dpo_loss_from_logprobs(
        action_logprob(policy, pair.prompt, pair.chosen, candidates),
        action_logprob(policy, pair.prompt, pair.rejected, candidates),
        action_logprob(ref, pair.prompt, pair.chosen, candidates),
        action_logprob(ref, pair.prompt, pair.rejected, candidates), beta);
}

SparseGrad dpo_grad(const PolicyTable& policy, const ReferencePolicy& ref,
                    const PreferencePair& pair, const std::vector<std::string>& candidates,
                    double beta) {
    if (ref.feature_dim != policy.feature_dim || ref.hash_seed != policy.hash_seed) {
        throw Error("dpo_grad: reference policy has a different feature space");
    }
    SoftmaxView view = score_candidates(policy, pair.prompt, candidates);
    std::size_t chosen = candidate_index(candidates, pair.chosen, "dpo_grad");
    std::size_t rejected = candidate_index(candidates, pair.rejected, "dpo_grad");

    std::vector<double> ref_scores(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        ref_scores[i] = dot_features(ref, view.feats[i]);
    }
    double ref_lse = logsumexp(ref_scores);

    double margin = beta * ((view.scores[chosen] - view.lse) - (ref_scores[chosen] - ref_lse) -
                            (view.scores[rejected] - view.lse) +
                            (ref_scores[rejected] - ref_lse));
    // d/dm of -ln sigmoid(m) is -sigmoid(-m); the softmax-expectation terms of
    // the two logprob gradients cancel because chosen and rejected share one
    // candidate set, leaving coeff * (phi_chosen - phi_rejected).
    double coeff = -stable_sigmoid(-margin) * beta;

    SparseGrad grad;
    for (std::uint32_t f : view.feats[chosen]) grad[f] += coeff;
    for (std::uint32_t f : view.feats[rejected]) grad[f] -= coeff;
    return grad;
}

double sft_loss(const PolicyTable& policy, const std::string& prompt,
                const std::string& truth_action, const std::vector<std::string>& candidates) {
    return -action_logprob(policy, prompt, truth_action, candidates);
}

SparseGrad sft_grad(const PolicyTable& policy, const std::string& prompt,
                    const std::string& truth_action, const std::vector<std::string>& candidates) {
    SoftmaxView view = score_candidates(policy, prompt, candidates);
    std::size_t truth = candidate_index(candidates, truth_action, "sft_grad");
    SparseGrad grad;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double p = std::exp(view.scores[i] - view.lse);
        for (std::uint32_t f : view.feats[i]) grad[f] += p;
    }
    for (std::uint32_t f : view.feats[truth]) grad[f] -= 1.0;
    return grad;
}

std::vector<std::string> build_candidate_set(const std::string& prompt, const std::string& chosen,
                                             const std::string& rejected) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    auto push = [&](const std::string& s) {
        if (out.size() < kMaxCandidates && seen.insert(s).second) out.push_back(s);
    };
    push(chosen);
    push(rejected);

    std::vector<Action> patterns;
    for (const std::string* s : {&chosen, &rejected}) {
        if (auto a = parse_action(*s)) {
            bool dup = false;
            for (const Action& p : patterns) {
                if (p.op == a->op && p.value == a->value) dup = true;
            }
            if (!dup) patterns.push_back(*a);
        }
    }
    std::vector<int> ids = extract_element_ids(prompt);
    for (const Action& pattern : patterns) {
        for (int id : ids) {
            Action a = pattern;
            a.element = id;
            push(serialize_action(a));
        }
    }
    return out;
}

std::vector<std::string> element_candidates(const std::string& prompt, const Action& pattern) {
    std::vector<std::string> out;
    for (int id : extract_element_ids(prompt)) {
        if (out.size() >= kMaxCandidates) break;
        Action a = pattern;
        a.element = id;
        out.push_back(serialize_action(a));
    }
    return out;
}

double learning_rate_at(long step, long total_steps, double base_rate, double warmup_fraction) {
    if (total_steps <= 0) return 0.0;
    step = std::clamp(step, 1L, total_steps);
    long warmup = std::clamp(std::lround(warmup_fraction * static_cast<double>(total_steps)), 0L,
                             total_steps);
    if (step <= warmup) {
        return base_rate * static_cast<double>(step) / static_cast<double>(warmup);
    }
    long remaining = total_steps - warmup;
    if (remaining == 0) return base_rate;
    double progress = static_cast<double>(step - warmup) / static_cast<double>(remaining);
    return base_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

PolicyTable train(const std::vector<PreferencePair>& pairs, const DpoConfig& cfg,
                  Objective objective, std::uint32_t feature_dim, std::uint64_t hash_seed) {
    if (pairs.empty()) throw EmptyDatasetError("train: empty pair dataset");
    PolicyTable policy = make_policy(feature_dim, hash_seed);
    ReferencePolicy ref = policy;

    long total_steps = static_cast<long>(pairs.size()) * std::max(cfg.epochs, 0);
    long step = 0;
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.bounded(i)]);
        }
        for (std::size_t idx : order) {
            const PreferencePair& pair = pairs[idx];
            std::vector<std::string> candidates =
                build_candidate_set(pair.prompt, pair.chosen, pair.rejected);
            SparseGrad grad =
                objective == Objective::Dpo
                    ? dpo_grad(policy, ref, pair, candidates, cfg.beta)
                    : sft_grad(policy, pair.prompt, pair.chosen, candidates);
            ++step;
            double lr = learning_rate_at(step, total_steps, cfg.learning_rate,
                                         cfg.warmup_fraction);
            for (const auto& [f, g] : grad) policy.weights[f] -= lr * g;
        }
    }
    return policy;
}

std::string predict(const PolicyTable& policy, const std::string& prompt,
                    const std::vector<std::string>& candidates) {
    SoftmaxView view = score_candidates(policy, prompt, candidates);
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (view.scores[i] > view.scores[best]) best = i;
    }
    return candidates[best];
}

double mean_margin(const PolicyTable& policy, const std::vector<PreferencePair>& pairs) {
    if (pairs.empty()) throw EmptyDatasetError("mean_margin: empty pair dataset");
    double sum = 0.0;
    for (const PreferencePair& pair : pairs) {
        PromptContext ctx = build_prompt_context(pair.prompt, policy.hash_seed);
        // Shared softmax normalizer cancels in the difference of logprobs.
        sum += dot_features(policy, featurize(ctx, pair.chosen, policy.feature_dim,
                                              policy.hash_seed)) -
               dot_features(policy, featurize(ctx, pair.rejected, policy.feature_dim,
                                              policy.hash_seed));
    }
    return sum / static_cast<double>(pairs.size());
}

namespace {

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const std::string& data, std::size_t offset) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[offset + i])) << (8 * i);
    }
    return v;
}

}  // namespace

void save_policy(const PolicyTable& policy, const std::string& path) {
    std::string blob;
    blob.reserve(17 + 16 + policy.weights.size() * 8);
    blob.append(kCheckpointMagic, sizeof(kCheckpointMagic));
    blob.push_back(static_cast<char>(kCheckpointVersion));
    put_u64_le(blob, policy.feature_dim);
    put_u64_le(blob, policy.hash_seed);
    for (double w : policy.weights) put_u64_le(blob, std::bit_cast<std::uint64_t>(w));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_policy: cannot open " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("save_policy: write failed for " + path);
}

PolicyTable load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_policy: cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    constexpr std::size_t header = sizeof(kCheckpointMagic) + 1 + 16;
    if (data.size() < header ||
        std::memcmp(data.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
        throw Error("load_policy: " + path + " is not a policy checkpoint");
    }
    if (static_cast<unsigned char>(data[sizeof(kCheckpointMagic)]) != kCheckpointVersion) {
        throw Error("load_policy: unsupported checkpoint version in " + path);
    }
    std::uint64_t dim = get_u64_le(data, sizeof(kCheckpointMagic) + 1);
    std::uint64_t seed = get_u64_le(data, sizeof(kCheckpointMagic) + 9);
    if (dim == 0 || dim > (1u << 24) || data.size() != header + dim * 8) {
        throw Error("load_policy: truncated or corrupt checkpoint " + path);
    }
    PolicyTable policy = make_policy(static_cast<std::uint32_t>(dim), seed);
    for (std::uint64_t i = 0; i < dim; ++i) {
        policy.weights[i] = std::bit_cast<double>(get_u64_le(data, header + i * 8));
    }
    return policy;
}

}  // namespace wepo
