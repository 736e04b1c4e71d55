#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wepo {

// One element of the parsed page. Text nodes are folded into the owning
// element's `text` field; comments and markup declarations are discarded at
// parse time.
struct DomNode {
    int node_id = 0;                // dense, pre-order document position
    std::string tag;                // lowercased element name
    std::vector<std::pair<std::string, std::string>> attributes;  // document order
    std::string text;               // direct text, whitespace-collapsed
    std::optional<int> parent;
    std::vector<int> children;      // document order
    std::optional<int> candidate_id;  // set only on interactable elements
};

// Ordered rooted element tree. Immutable by convention: every operation below
// returns a fresh tree and never mutates its input.
struct DomTree {
    std::vector<DomNode> nodes;
    int root = 0;
    std::string source_digest;  // hash of the canonical serialization

    const DomNode& node(int id) const;
    std::size_t size() const { return nodes.size(); }
};

// Attribute lookup by name; nullopt when absent.
std::optional<std::string_view> attr_value(const DomNode& node, std::string_view name);

// Error-recovery tag-soup parse of raw HTML into an element tree. Multi-rooted
// or element-free input is wrapped in a synthetic <html> root so the result is
// always a single tree. Throws EmptyInputError when raw is blank.
DomTree parse_html(const std::string& raw);

// Attribute names kept by clean() when no explicit set is given. Values are
// capped at 100 characters; class keeps its first 3 whitespace tokens.
const std::set<std::string>& default_keep_attrs();

// Drops script/style/meta/link/noscript subtrees, filters attributes down to
// keep_attrs, collapses text whitespace and re-assigns dense pre-order ids.
// Idempotent and order-preserving on surviving nodes.
DomTree clean(const DomTree& tree, const std::set<std::string>& keep_attrs = default_keep_attrs());

// Canonical serialization: lowercased tags, attributes in stored order as
// name="value", explicit close tags for non-void elements, text before
// children. parse_html(serialize(t)) reproduces t node for node.
std::string serialize(const DomTree& tree);

// Prompt-facing serialization: identical to serialize() except elements that
// carry a candidate_id gain a leading element_id="N" marker attribute.
std::string serialize_with_markers(const DomTree& tree);

int depth(const DomTree& tree, int id);

// Deepest ancestor-or-self shared by a and b.
int lca(const DomTree& tree, int a, int b);

// Edge steps from a up to lca(a,b) plus from b up to the same node. Equals the
// undirected shortest-path length between the two nodes.
int step_distance(const DomTree& tree, int a, int b);

// Nodes in the subtree rooted at each id, the root itself included.
std::vector<int> subtree_sizes(const DomTree& tree);

const std::set<std::string>& default_interactable_tags();

// Tags interactable by default plus any element whose role attribute names a
// clickable widget. Candidate ids are assigned 0..C-1 in document order.
DomTree assign_candidate_ids(const DomTree& tree,
                             const std::set<std::string>& interactable_tags = default_interactable_tags());

// (candidate_id, node_id) pairs sorted by candidate_id.
std::vector<std::pair<int, int>> candidate_nodes(const DomTree& tree);

// Node carrying the given candidate_id, or nullopt.
std::optional<int> find_candidate(const DomTree& tree, int candidate_id);

// Collapses runs of ASCII whitespace to single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

}  // namespace wepo
