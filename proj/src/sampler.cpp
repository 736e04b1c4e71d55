#include "wepo/sampler.hpp"

#include <algorithm>
#include <map>

#include "wepo/error.hpp"

namespace wepo {

std::vector<int> sample_negative_elements(const DomTree& tree, int truth,
                                          const SampleConfig& cfg, Rng& rng) {
    auto candidates = candidate_nodes(tree);
    std::optional<int> truth_node;
    std::vector<std::pair<int, int>> others;  // (cid, node_id)
    others.reserve(candidates.size());
    for (const auto& [cid, node] : candidates) {
        if (cid == truth) {
            truth_node = node;
        } else {
            others.emplace_back(cid, node);
        }
    }
    if (!truth_node.has_value()) {
        throw MissingTruthError("sample_negative_elements: truth candidate " +
                                std::to_string(truth) + " not in tree");
    }
    if (others.empty()) {
        throw NoCandidatesError("sample_negative_elements: truth is the only candidate");
    }

    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(cfg.n), others.size());
    std::vector<int> out;
    out.reserve(take);

    if (cfg.strategy == SampleStrategy::Distance) {
        struct Scored {
            int cid;
            int dist;
        };
        std::vector<Scored> scored;
        scored.reserve(others.size());
        for (const auto& [cid, node] : others) {
            scored.push_back({cid, step_distance(tree, node, *truth_node)});
        }
        std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            if (a.dist != b.dist) return a.dist < b.dist;
            return a.cid < b.cid;
        });
        for (std::size_t i = 0; i < take; ++i) out.push_back(scored[i].cid);
    } else {
        // Partial Fisher-Yates over candidate_id order.
        std::vector<int> pool;
        pool.reserve(others.size());
        for (const auto& [cid, _] : others) pool.push_back(cid);
        for (std::size_t i = 0; i < take; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.bounded(pool.size() - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    }
    return out;
}

std::vector<int> sample_negative_elements(const DomTree& tree, int truth,
                                          const SampleConfig& cfg) {
    Rng rng(cfg.seed);
    return sample_negative_elements(tree, truth, cfg, rng);
}

OpKind f_op(OpKind truth_op, double epsilon, const SampleConfig& cfg) {
    if (truth_op == OpKind::Click) return OpKind::Click;
    return epsilon < cfg.replace_threshold ? OpKind::Click : truth_op;
}

std::vector<NegativeSample> build_negative_actions(const DomTree& tree,
                                                   const Action& truth_action,
                                                   const SampleConfig& cfg, Rng& rng) {
    std::vector<int> elements = sample_negative_elements(tree, truth_action.element, cfg, rng);

    auto truth_node = find_candidate(tree, truth_action.element);
    std::vector<NegativeSample> out;
    out.reserve(elements.size());
    for (int cid : elements) {
        double epsilon = rng.uniform_double();
        OpKind op = f_op(truth_action.op, epsilon, cfg);
        NegativeSample sample;
        sample.action.op = op;
        sample.action.element = cid;
        if (op != OpKind::Click) {
            // Negative values reuse the truth value; the contrast lives in the
            // element choice.
            sample.action.value = truth_action.value.value_or("");
        }
        auto node = find_candidate(tree, cid);
        sample.distance = step_distance(tree, *node, *truth_node);
        out.push_back(std::move(sample));
    }
    return out;
}

std::vector<NegativeSample> build_negative_actions(const DomTree& tree,
                                                   const Action& truth_action,
                                                   const SampleConfig& cfg) {
    Rng rng(cfg.seed);
    return build_negative_actions(tree, truth_action, cfg, rng);
}

}  // namespace wepo
