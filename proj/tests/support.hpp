#pragma once

// Shared helpers for the test suites: fixture loading, random tree generation,
// an independent BFS distance oracle, a synthetic step corpus generator, and a
// small process-spawning wrapper for CLI tests.

#include <array>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef _WIN32
#include <sys/wait.h>
#include <unistd.h>
#endif

#include "wepo/action.hpp"
#include "wepo/dom.hpp"
#include "wepo/pairgen.hpp"
#include "wepo/rng.hpp"

namespace testsup {

inline std::string test_data_dir() {
    const char* p = std::getenv("WEPO_TEST_DATA");
    return (p != nullptr && *p != '\0') ? std::string(p) : std::string("tests/data");
}

inline std::string cli_path() {
    const char* p = std::getenv("WEPO_CLI");
    return (p != nullptr) ? std::string(p) : std::string();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline std::filesystem::path make_temp_dir(const std::string& tag) {
    static int counter = 0;
    std::filesystem::path dir = std::filesystem::temp_directory_path() /
                                ("wepo_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                 std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

// Random nested-div page with exactly `target` candidate buttons.
inline void random_subtree(wepo::Rng& rng, int depth, int& budget, std::string& html) {
    if (budget <= 0) return;
    if (depth >= 6 || rng.uniform_double() < 0.4) {
        html += "<button>b" + std::to_string(budget) + "</button>";
        --budget;
        return;
    }
    html += "<div>";
    int children = 1 + static_cast<int>(rng.bounded(3));
    for (int i = 0; i < children && budget > 0; ++i) {
        random_subtree(rng, depth + 1, budget, html);
    }
    html += "</div>";
}

inline std::string random_tree_html(wepo::Rng& rng, int target_candidates) {
    std::string html = "<html><body>";
    int budget = target_candidates;
    while (budget > 0) random_subtree(rng, 0, budget, html);
    html += "</body></html>";
    return html;
}

// Edge-count path length by plain BFS over the parent/children adjacency;
// independent of the LCA arithmetic under test.
inline int bfs_distance(const wepo::DomTree& tree, int from, int to) {
    if (from == to) return 0;
    std::vector<int> dist(tree.nodes.size(), -1);
    std::deque<int> queue{from};
    dist[static_cast<std::size_t>(from)] = 0;
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        std::vector<int> next = tree.nodes[static_cast<std::size_t>(cur)].children;
        if (tree.nodes[static_cast<std::size_t>(cur)].parent.has_value()) {
            next.push_back(*tree.nodes[static_cast<std::size_t>(cur)].parent);
        }
        for (int n : next) {
            if (dist[static_cast<std::size_t>(n)] < 0) {
                dist[static_cast<std::size_t>(n)] = dist[static_cast<std::size_t>(cur)] + 1;
                if (n == to) return dist[static_cast<std::size_t>(n)];
                queue.push_back(n);
            }
        }
    }
    return -1;
}

// Synthetic shop-like corpus: intents name the target element's two content
// words; one distractor may share the first word; op mix is 8:1:1, so the
// CLICK-to-other ratio is 4.
inline const std::array<const char*, 40>& corpus_vocab() {
    static const std::array<const char*, 40> vocab = {
        "flight",  "hotel",   "laptop",  "camera",  "shoes",   "jacket",  "pizza",
        "sushi",   "museum",  "ticket",  "train",   "rental",  "budget",  "premium",
        "red",     "blue",    "large",   "small",   "toronto", "osaka",   "berlin",
        "lisbon",  "friday",  "monday",  "morning", "evening", "window",  "aisle",
        "refund",  "receipt", "invoice", "profile", "settings","search",  "filter",
        "checkout","wishlist","coupon",  "review",  "rating"};
    return vocab;
}

struct SynthPage {
    std::string html;
    std::string intent;
    wepo::Action truth;
};

inline SynthPage make_synthetic_page(std::uint64_t seed) {
    using wepo::Rng;
    Rng rng(seed);
    const auto& vocab = corpus_vocab();
    static const std::array<const char*, 6> verbs = {"click", "open",  "choose",
                                                     "pick",  "show", "locate"};

    int candidates = 5 + static_cast<int>(rng.bounded(6));
    int sections = 2 + static_cast<int>(rng.bounded(3));
    int truth_index = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(candidates)));

    double op_draw = rng.uniform_double();
    wepo::OpKind op = op_draw < 0.8   ? wepo::OpKind::Click
                      : op_draw < 0.9 ? wepo::OpKind::Type
                                      : wepo::OpKind::Select;

    std::size_t w1 = rng.bounded(vocab.size());
    std::size_t w2 = rng.bounded(vocab.size());
    while (w2 == w1) w2 = rng.bounded(vocab.size());
    int confusable_index = rng.uniform_double() < 0.5
                               ? static_cast<int>(rng.bounded(static_cast<std::uint64_t>(candidates)))
                               : -1;
    if (confusable_index == truth_index) confusable_index = -1;

    SynthPage page;
    page.intent = std::string(verbs[rng.bounded(verbs.size())]) + " " + vocab[w1] + " " +
                  vocab[w2];

    std::string body;
    int placed = 0;
    for (int s = 0; s < sections; ++s) {
        body += "<section><h2>Area " + std::to_string(s) + "</h2>";
        int here = (candidates - placed) / (sections - s);
        if (here < 1) here = 1;
        if (s == sections - 1) here = candidates - placed;
        for (int c = 0; c < here && placed < candidates; ++c, ++placed) {
            bool is_truth = placed == truth_index;
            std::size_t a = w1, b = w2;
            if (!is_truth) {
                do {
                    a = rng.bounded(vocab.size());
                    b = rng.bounded(vocab.size());
                } while (a == b || (a == w1 && b == w2) || (a == w2 && b == w1));
                if (placed == confusable_index) a = w1;
            }
            std::string words = std::string(vocab[a]) + " " + vocab[b];
            int wrap = static_cast<int>(rng.bounded(3));
            for (int d = 0; d < wrap; ++d) body += "<div class=\"wrap\">";
            if (is_truth && op == wepo::OpKind::Type) {
                body += "<input name=\"field" + std::to_string(placed) + "\" placeholder=\"" +
                        words + "\">";
            } else if (is_truth && op == wepo::OpKind::Select) {
                body += "<select name=\"field" + std::to_string(placed) + "\" title=\"" + words +
                        "\"></select>";
            } else if (placed % 2 == 0) {
                body += "<button>" + words + "</button>";
            } else {
                body += "<a href=\"#go" + std::to_string(placed) + "\">" + words + "</a>";
            }
            for (int d = 0; d < wrap; ++d) body += "</div>";
        }
        body += "</section>";
    }

    page.html = "<html><head><title>demo</title></head><body><header><h1>demo store</h1>"
                "</header>" + body + "</body></html>";

    // Resolve the truth candidate id through the real pipeline: the target is
    // the unique candidate carrying both intent words.
    wepo::DomTree tree =
        wepo::assign_candidate_ids(wepo::clean(wepo::parse_html(page.html)));
    int truth_cid = -1;
    for (const auto& [cid, node_id] : wepo::candidate_nodes(tree)) {
        const wepo::DomNode& node = tree.node(node_id);
        std::string hay = node.text;
        for (const auto& [name, value] : node.attributes) {
            hay += " ";
            hay += value;
        }
        if (hay.find(vocab[w1]) != std::string::npos &&
            hay.find(vocab[w2]) != std::string::npos) {
            truth_cid = cid;
            break;
        }
    }

    page.truth.op = op;
    page.truth.element = truth_cid;
    if (op == wepo::OpKind::Type) page.truth.value = std::string(vocab[w2]);
    if (op == wepo::OpKind::Select) page.truth.value = std::string(vocab[w1]);
    return page;
}

inline std::vector<wepo::StepRecord> make_synthetic_corpus(int pages, std::uint64_t seed,
                                                           wepo::Split split = wepo::Split::Train) {
    std::vector<wepo::StepRecord> corpus;
    corpus.reserve(static_cast<std::size_t>(pages));
    for (int p = 0; p < pages; ++p) {
        SynthPage page = make_synthetic_page(wepo::derive_seed(seed, static_cast<std::uint64_t>(p)));
        wepo::StepRecord step;
        step.intent = page.intent;
        step.raw_html = page.html;
        step.truth = page.truth;
        step.split = split;
        wepo::Rng rng(wepo::derive_seed(seed ^ 0x7261776aull, static_cast<std::uint64_t>(p)));
        int history = static_cast<int>(rng.bounded(3));
        for (int h = 0; h < history; ++h) {
            step.trajectory.push_back(
                wepo::make_click(static_cast<int>(rng.bounded(5))));
        }
        corpus.push_back(std::move(step));
    }
    return corpus;
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

// Runs the CLI with stdout/stderr captured to a file in `dir`. `env` is an
// optional shell prefix such as "WEPO_SEED=9".
inline CliResult run_cli(const std::string& cli, const std::string& args,
                         const std::filesystem::path& dir, const std::string& tag,
                         const std::string& env = "") {
    static int counter = 0;
    std::filesystem::path log = dir / ("cli_" + tag + "_" + std::to_string(counter++) + ".log");
    std::string cmd = (env.empty() ? "" : env + " ") + "\"" + cli + "\" " + args + " > \"" +
                      log.string() + "\" 2>&1";
    int raw = std::system(cmd.c_str());
    CliResult result;
    result.output = read_file(log.string());
    if (raw == -1) return result;
#ifdef _WIN32
    result.exit_code = raw;
#else
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
#endif
    return result;
}

}  // namespace testsup
