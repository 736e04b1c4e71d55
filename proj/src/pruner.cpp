#include "wepo/pruner.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "wepo/error.hpp"
#include "wepo/hash.hpp"

namespace wepo {

namespace {

// Highest ancestor of center reachable under the snippet constraints.
int snippet_root(const DomTree& tree, int center, const PruneConfig& cfg,
                 const std::vector<int>& sizes) {
    int node = center;
    int steps = 0;
    while (steps < cfg.max_depth_up) {
        const auto& parent = tree.node(node).parent;
        if (!parent.has_value()) break;
        if (sizes[static_cast<std::size_t>(*parent)] > cfg.max_descendants) break;
        node = *parent;
        ++steps;
    }
    return node;
}

// keep states: 0 = drop, kKeepSubtree = node with its whole subtree marked,
// kKeepNode = bare connector on a path to the root. A connector can later be
// upgraded when a snippet rooted at it must bring its children along.
constexpr char kKeepSubtree = 1;
constexpr char kKeepNode = 2;

void mark_subtree(const DomTree& tree, int root, std::vector<char>& keep) {
    std::vector<int> walk{root};
    while (!walk.empty()) {
        int id = walk.back();
        walk.pop_back();
        if (keep[static_cast<std::size_t>(id)] == kKeepSubtree) continue;
        keep[static_cast<std::size_t>(id)] = kKeepSubtree;
        for (int child : tree.node(id).children) walk.push_back(child);
    }
}

// Copies the induced subtree of kept nodes rooted at new_root, preserving
// document order and re-assigning dense pre-order ids. Candidate markers
// survive only where keep_candidate allows.
DomTree extract(const DomTree& tree, int new_root, const std::vector<char>& keep,
                const std::set<int>& kept_candidates, bool restrict_candidates) {
    DomTree out;
    struct Frame {
        int src;
        int parent_new;
    };
    std::vector<Frame> walk{{new_root, -1}};
    while (!walk.empty()) {
        Frame f = walk.back();
        walk.pop_back();
        const DomNode& src = tree.node(f.src);
        int new_id = static_cast<int>(out.nodes.size());
        DomNode copy;
        copy.node_id = new_id;
        copy.tag = src.tag;
        copy.attributes = src.attributes;
        copy.text = src.text;
        copy.candidate_id = src.candidate_id;
        if (restrict_candidates && copy.candidate_id.has_value() &&
            kept_candidates.count(*copy.candidate_id) == 0) {
            copy.candidate_id.reset();
        }
        if (f.parent_new >= 0) {
            copy.parent = f.parent_new;
            out.nodes[static_cast<std::size_t>(f.parent_new)].children.push_back(new_id);
        }
        out.nodes.push_back(std::move(copy));
        const auto& kids = src.children;
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
            if (keep[static_cast<std::size_t>(*it)]) walk.push_back({*it, new_id});
        }
    }
    out.root = 0;
    out.source_digest = digest_hex(serialize(out));
    return out;
}

std::vector<std::string> lower_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

DomTree isolate_snippet(const DomTree& tree, int center, const PruneConfig& cfg) {
    tree.node(center);  // validates the id
    std::vector<int> sizes = subtree_sizes(tree);
    int root = snippet_root(tree, center, cfg, sizes);
    std::vector<char> keep(tree.nodes.size(), 0);
    mark_subtree(tree, root, keep);
    return extract(tree, root, keep, {}, false);
}

DomTree prune_to_k(const DomTree& tree, const CandidateScores& scores,
                   std::optional<int> truth, const PruneConfig& cfg) {
    auto candidates = candidate_nodes(tree);
    if (candidates.empty()) {
        throw EmptyCandidatesError("prune_to_k: tree has no candidate elements");
    }
    for (const auto& [cid, _] : scores.scores) {
        if (!find_candidate(tree, cid).has_value()) {
            throw UnknownNodeError("prune_to_k: scored candidate " + std::to_string(cid) +
                                   " not in tree");
        }
    }
    std::optional<int> truth_node;
    if (cfg.mode == PruneMode::Training) {
        if (!truth.has_value()) {
            throw MissingTruthError("prune_to_k: training mode requires a ground-truth candidate");
        }
        truth_node = find_candidate(tree, *truth);
        if (!truth_node.has_value()) {
            throw MissingTruthError("prune_to_k: ground-truth candidate " +
                                    std::to_string(*truth) + " not in tree");
        }
    }

    // Rank by descending score, candidate_id ascending on ties; candidates
    // absent from the score map sort below all scored ones.
    struct Ranked {
        int cid;
        int node;
        double score;
        bool scored;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(candidates.size());
    for (const auto& [cid, node] : candidates) {
        auto it = scores.scores.find(cid);
        bool scored = it != scores.scores.end();
        ranked.push_back({cid, node, scored ? it->second : 0.0, scored});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.scored != b.scored) return a.scored;
        if (a.scored && a.score != b.score) return a.score > b.score;
        return a.cid < b.cid;
    });

    std::size_t keep_count = std::min<std::size_t>(static_cast<std::size_t>(cfg.k), ranked.size());
    std::vector<Ranked> kept(ranked.begin(), ranked.begin() + static_cast<long>(keep_count));

    if (cfg.mode == PruneMode::Training) {
        bool present = std::any_of(kept.begin(), kept.end(),
                                   [&](const Ranked& r) { return r.cid == *truth; });
        if (!present) {
            kept.back() = {*truth, *truth_node, 0.0, false};
        }
    }

    std::set<int> kept_cids;
    for (const Ranked& r : kept) kept_cids.insert(r.cid);

    std::vector<int> sizes = subtree_sizes(tree);
    std::vector<char> keep(tree.nodes.size(), 0);
    for (const Ranked& r : kept) {
        int root = snippet_root(tree, r.node, cfg, sizes);
        mark_subtree(tree, root, keep);
        // Connect the snippet to the document root so the merge stays a tree.
        int walk = root;
        while (tree.node(walk).parent.has_value()) {
            walk = *tree.node(walk).parent;
            if (keep[static_cast<std::size_t>(walk)] == 0) {
                keep[static_cast<std::size_t>(walk)] = kKeepNode;
            }
        }
    }
    return extract(tree, tree.root, keep, kept_cids, true);
}

CandidateScores load_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_scores: cannot open " + path);
    CandidateScores out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("expected candidate_id<TAB>logit", line_no);
        }
        int cid = 0;
        double logit = 0.0;
        try {
            std::size_t used = 0;
            cid = std::stoi(line.substr(0, tab), &used);
            if (used != tab) throw std::invalid_argument("trailing");
            std::string rest = line.substr(tab + 1);
            logit = std::stod(rest, &used);
            if (used != rest.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("malformed score entry", line_no);
        }
        if (out.scores.count(cid) > 0) {
            throw DuplicateIdError("load_scores: duplicate candidate id " + std::to_string(cid) +
                                   " at line " + std::to_string(line_no));
        }
        out.scores[cid] = logit;
    }
    return out;
}

CandidateScores fallback_scores(const DomTree& tree, const std::string& intent) {
    auto intent_tokens = lower_tokens(intent);
    std::set<std::string> wanted(intent_tokens.begin(), intent_tokens.end());
    CandidateScores out;
    for (const auto& [cid, node_id] : candidate_nodes(tree)) {
        const DomNode& node = tree.node(node_id);
        std::string blob = node.text;
        for (const auto& [_, value] : node.attributes) {
            blob.push_back(' ');
            blob += value;
        }
        std::set<std::string> have;
        for (auto& tok : lower_tokens(blob)) have.insert(std::move(tok));
        int overlap = 0;
        for (const auto& tok : wanted) {
            if (have.count(tok) > 0) ++overlap;
        }
        out.scores[cid] = static_cast<double>(overlap);
    }
    return out;
}

}  // namespace wepo
