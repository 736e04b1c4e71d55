#include "wepo/dom.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

#include "wepo/error.hpp"
#include "wepo/hash.hpp"

namespace wepo {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const std::unordered_set<std::string>& void_tags() {
    static const std::unordered_set<std::string> tags = {
        "area", "base", "br", "col", "embed", "hr", "img", "input",
        "link", "meta", "param", "source", "track", "wbr"};
    return tags;
}

// Elements whose content is raw text up to the matching close tag.
const std::unordered_set<std::string>& raw_text_tags() {
    static const std::unordered_set<std::string> tags = {"script", "style", "textarea", "title"};
    return tags;
}

// Tags that implicitly close an open sibling of the same name.
const std::unordered_set<std::string>& self_closing_siblings() {
    static const std::unordered_set<std::string> tags = {"p", "li", "option", "tr", "td", "th", "dt", "dd"};
    return tags;
}

void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

// Decodes the handful of entities that matter for round-tripping; unknown
// names are kept literal.
std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        std::size_t semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back(s[i++]);
            continue;
        }
        std::string_view name = s.substr(i + 1, semi - i - 1);
        if (name == "amp") {
            out.push_back('&');
        } else if (name == "lt") {
            out.push_back('<');
        } else if (name == "gt") {
            out.push_back('>');
        } else if (name == "quot") {
            out.push_back('"');
        } else if (name == "apos") {
            out.push_back('\'');
        } else if (name == "nbsp") {
            out.push_back(' ');
        } else if (!name.empty() && name[0] == '#') {
            unsigned long cp = 0;
            bool ok = false;
            try {
                if (name.size() > 1 && (name[1] == 'x' || name[1] == 'X')) {
                    cp = std::stoul(std::string(name.substr(2)), nullptr, 16);
                } else {
                    cp = std::stoul(std::string(name.substr(1)), nullptr, 10);
                }
                ok = cp > 0 && cp <= 0x10ffff;
            } catch (...) {
                ok = false;
            }
            if (!ok) {
                out.push_back(s[i++]);
                continue;
            }
            append_utf8(out, cp);
        } else {
            out.push_back(s[i++]);
            continue;
        }
        i = semi + 1;
    }
    return out;
}

void escape_text(std::string_view s, std::string& out) {
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
}

void escape_attr(std::string_view s, std::string& out) {
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
}

struct RawNode {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::string text;
    int parent = -1;
    std::vector<int> children;
};

void add_text(std::vector<RawNode>& nodes, int target, std::string_view chunk) {
    if (target < 0) return;
    std::string collapsed = collapse_whitespace(decode_entities(chunk));
    if (collapsed.empty()) return;
    std::string& text = nodes[static_cast<std::size_t>(target)].text;
    if (!text.empty()) text.push_back(' ');
    text += collapsed;
}

}  // namespace

const DomNode& DomTree::node(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes.size())) {
        throw UnknownNodeError("node id " + std::to_string(id) + " out of range");
    }
    return nodes[static_cast<std::size_t>(id)];
}

std::optional<std::string_view> attr_value(const DomNode& node, std::string_view name) {
    for (const auto& [attr_name, value] : node.attributes) {
        if (attr_name == name) return std::string_view(value);
    }
    return std::nullopt;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

DomTree parse_html(const std::string& raw) {
    bool blank = std::all_of(raw.begin(), raw.end(), is_space);
    if (raw.empty() || blank) {
        throw EmptyInputError("parse_html: input is blank");
    }

    std::vector<RawNode> nodes;
    std::vector<int> stack;  // open element indices
    std::string orphan_text;  // text seen while no element is open
    std::string lower = to_lower(raw);
    std::size_t i = 0;
    const std::size_t n = raw.size();

    auto current = [&]() -> int { return stack.empty() ? -1 : stack.back(); };

    while (i < n) {
        if (raw[i] != '<') {
            std::size_t start = i;
            while (i < n && raw[i] != '<') ++i;
            std::string_view chunk = std::string_view(raw).substr(start, i - start);
            if (current() < 0) {
                orphan_text.append(chunk);
            } else {
                add_text(nodes, current(), chunk);
            }
            continue;
        }
        // Comment.
        if (raw.compare(i, 4, "<!--") == 0) {
            std::size_t end = raw.find("-->", i + 4);
            i = (end == std::string::npos) ? n : end + 3;
            continue;
        }
        // Doctype / CDATA / other markup declarations.
        if (i + 1 < n && (raw[i + 1] == '!' || raw[i + 1] == '?')) {
            std::size_t end = raw.find('>', i + 1);
            i = (end == std::string::npos) ? n : end + 1;
            continue;
        }
        // End tag.
        if (i + 1 < n && raw[i + 1] == '/') {
            i += 2;
            std::string tag;
            while (i < n && is_name_char(raw[i])) tag.push_back(raw[i++]);
            std::size_t end = raw.find('>', i);
            i = (end == std::string::npos) ? n : end + 1;
            tag = to_lower(tag);
            // Pop to the matching open element; stray end tags are ignored.
            for (std::size_t d = stack.size(); d > 0; --d) {
                if (nodes[static_cast<std::size_t>(stack[d - 1])].tag == tag) {
                    stack.resize(d - 1);
                    break;
                }
            }
            continue;
        }
        // Start tag.
        std::size_t tag_start = i;
        ++i;
        std::string tag;
        while (i < n && is_name_char(raw[i])) tag.push_back(raw[i++]);
        if (tag.empty()) {
            // Literal '<' in text.
            if (current() < 0) {
                orphan_text.push_back('<');
            } else {
                add_text(nodes, current(), "<");
            }
            i = tag_start + 1;
            continue;
        }
        tag = to_lower(tag);

        if (!stack.empty() && self_closing_siblings().count(tag) > 0 &&
            nodes[static_cast<std::size_t>(stack.back())].tag == tag) {
            stack.pop_back();
        }

        RawNode node;
        node.tag = tag;
        node.parent = current();

        bool self_close = false;
        while (i < n) {
            while (i < n && is_space(raw[i])) ++i;
            if (i >= n) break;
            if (raw[i] == '>') {
                ++i;
                break;
            }
            if (raw[i] == '/') {
                ++i;
                while (i < n && raw[i] != '>') ++i;
                if (i < n) ++i;
                self_close = true;
                break;
            }
            std::string name;
            while (i < n && is_name_char(raw[i])) name.push_back(raw[i++]);
            if (name.empty()) {
                ++i;
                continue;
            }
            name = to_lower(name);
            std::string value;
            while (i < n && is_space(raw[i])) ++i;
            if (i < n && raw[i] == '=') {
                ++i;
                while (i < n && is_space(raw[i])) ++i;
                if (i < n && (raw[i] == '"' || raw[i] == '\'')) {
                    char quote = raw[i++];
                    std::size_t vstart = i;
                    while (i < n && raw[i] != quote) ++i;
                    value = decode_entities(std::string_view(raw).substr(vstart, i - vstart));
                    if (i < n) ++i;
                } else {
                    std::size_t vstart = i;
                    while (i < n && !is_space(raw[i]) && raw[i] != '>' && raw[i] != '/') ++i;
                    value = decode_entities(std::string_view(raw).substr(vstart, i - vstart));
                }
            }
            // First occurrence of a duplicated attribute wins.
            bool seen = false;
            for (const auto& [existing, _] : node.attributes) {
                if (existing == name) {
                    seen = true;
                    break;
                }
            }
            if (!seen) node.attributes.emplace_back(name, value);
        }

        int id = static_cast<int>(nodes.size());
        nodes.push_back(std::move(node));
        if (nodes[static_cast<std::size_t>(id)].parent >= 0) {
            nodes[static_cast<std::size_t>(nodes[static_cast<std::size_t>(id)].parent)]
                .children.push_back(id);
        }

        bool is_void = void_tags().count(tag) > 0;
        if (self_close || is_void) continue;

        if (raw_text_tags().count(tag) > 0) {
            std::string close = "</" + tag;
            std::size_t close_pos = lower.find(close, i);
            std::size_t content_end = (close_pos == std::string::npos) ? n : close_pos;
            add_text(nodes, id, std::string_view(raw).substr(i, content_end - i));
            if (close_pos == std::string::npos) {
                i = n;
            } else {
                std::size_t gt = raw.find('>', close_pos);
                i = (gt == std::string::npos) ? n : gt + 1;
            }
            continue;
        }
        stack.push_back(id);
    }

    // Collect top-level elements; wrap when the document is not single-rooted.
    std::vector<int> roots;
    for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
        if (nodes[idx].parent < 0) roots.push_back(static_cast<int>(idx));
    }
    if (roots.size() != 1) {
        RawNode wrapper;
        wrapper.tag = "html";
        wrapper.children = roots;
        int wrapper_id = static_cast<int>(nodes.size());
        nodes.push_back(std::move(wrapper));
        for (int r : roots) nodes[static_cast<std::size_t>(r)].parent = wrapper_id;
        roots = {wrapper_id};
    }
    // Text outside every element (dropped while parsing because there was no
    // open target) is folded into the document root.
    if (!orphan_text.empty()) {
        add_text(nodes, roots[0], orphan_text);
    }

    // Re-index into dense pre-order.
    DomTree tree;
    tree.nodes.reserve(nodes.size());
    std::vector<int> order;
    order.reserve(nodes.size());
    std::vector<int> walk{roots[0]};
    while (!walk.empty()) {
        int id = walk.back();
        walk.pop_back();
        order.push_back(id);
        const auto& kids = nodes[static_cast<std::size_t>(id)].children;
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) walk.push_back(*it);
    }
    std::vector<int> new_id(nodes.size(), -1);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        new_id[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos);
    }
    for (int old_id : order) {
        const RawNode& src = nodes[static_cast<std::size_t>(old_id)];
        DomNode out;
        out.node_id = new_id[static_cast<std::size_t>(old_id)];
        out.tag = src.tag;
        out.attributes = src.attributes;
        out.text = src.text;
        if (src.parent >= 0) out.parent = new_id[static_cast<std::size_t>(src.parent)];
        out.children.reserve(src.children.size());
        for (int c : src.children) out.children.push_back(new_id[static_cast<std::size_t>(c)]);
        tree.nodes.push_back(std::move(out));
    }
    tree.root = 0;
    tree.source_digest = digest_hex(serialize(tree));
    return tree;
}

const std::set<std::string>& default_keep_attrs() {
    static const std::set<std::string> attrs = {
        "id", "class", "name", "title", "alt", "type", "value",
        "role", "aria-label", "placeholder", "href"};
    return attrs;
}

namespace {

constexpr std::size_t kMaxAttrValueLen = 100;
constexpr int kMaxClassTokens = 3;

const std::unordered_set<std::string>& dropped_tags() {
    static const std::unordered_set<std::string> tags = {
        "script", "style", "meta", "link", "noscript"};
    return tags;
}

std::string clean_attr_value(const std::string& name, const std::string& value) {
    std::string v = collapse_whitespace(value);
    if (name == "class") {
        std::string kept;
        int tokens = 0;
        std::size_t pos = 0;
        while (pos < v.size() && tokens < kMaxClassTokens) {
            std::size_t space = v.find(' ', pos);
            std::string_view tok = (space == std::string::npos)
                                       ? std::string_view(v).substr(pos)
                                       : std::string_view(v).substr(pos, space - pos);
            if (!kept.empty()) kept.push_back(' ');
            kept += tok;
            ++tokens;
            if (space == std::string::npos) break;
            pos = space + 1;
        }
        v = kept;
    }
    if (v.size() > kMaxAttrValueLen) v.resize(kMaxAttrValueLen);
    return v;
}

void copy_cleaned(const DomTree& src, int src_id, int parent_new_id,
                  const std::set<std::string>& keep_attrs, DomTree& out) {
    const DomNode& node = src.node(src_id);
    if (dropped_tags().count(node.tag) > 0) return;

    int new_id = static_cast<int>(out.nodes.size());
    out.nodes.emplace_back();
    {
        DomNode& copy = out.nodes.back();
        copy.node_id = new_id;
        copy.tag = node.tag;
        for (const auto& [name, value] : node.attributes) {
            if (keep_attrs.count(name) > 0) {
                copy.attributes.emplace_back(name, clean_attr_value(name, value));
            }
        }
        copy.text = collapse_whitespace(node.text);
        copy.candidate_id = node.candidate_id;
        if (parent_new_id >= 0) copy.parent = parent_new_id;
    }
    if (parent_new_id >= 0) {
        out.nodes[static_cast<std::size_t>(parent_new_id)].children.push_back(new_id);
    }
    for (int child : node.children) {
        copy_cleaned(src, child, new_id, keep_attrs, out);
    }
}

}  // namespace

DomTree clean(const DomTree& tree, const std::set<std::string>& keep_attrs) {
    DomTree out;
    out.nodes.reserve(tree.nodes.size());
    copy_cleaned(tree, tree.root, -1, keep_attrs, out);
    if (out.nodes.empty()) {
        // Degenerate page whose root itself was droppable; keep an empty html shell.
        DomNode shell;
        shell.node_id = 0;
        shell.tag = "html";
        out.nodes.push_back(std::move(shell));
    }
    out.root = 0;
    out.source_digest = digest_hex(serialize(out));
    return out;
}

namespace {

void serialize_node(const DomTree& tree, int id, bool markers, std::string& out) {
    const DomNode& node = tree.node(id);
    out.push_back('<');
    out += node.tag;
    if (markers && node.candidate_id.has_value()) {
        out += " element_id=\"" + std::to_string(*node.candidate_id) + "\"";
    }
    for (const auto& [name, value] : node.attributes) {
        out.push_back(' ');
        out += name;
        out += "=\"";
        escape_attr(value, out);
        out.push_back('"');
    }
    out.push_back('>');
    if (void_tags().count(node.tag) > 0) return;
    escape_text(node.text, out);
    for (int child : node.children) serialize_node(tree, child, markers, out);
    out += "</";
    out += node.tag;
    out.push_back('>');
}

}  // namespace

std::string serialize(const DomTree& tree) {
    std::string out;
    if (!tree.nodes.empty()) serialize_node(tree, tree.root, false, out);
    return out;
}

std::string serialize_with_markers(const DomTree& tree) {
    std::string out;
    if (!tree.nodes.empty()) serialize_node(tree, tree.root, true, out);
    return out;
}

int depth(const DomTree& tree, int id) {
    int d = 0;
    const DomNode* node = &tree.node(id);
    while (node->parent.has_value()) {
        ++d;
        node = &tree.node(*node->parent);
    }
    return d;
}

int lca(const DomTree& tree, int a, int b) {
    int da = depth(tree, a);
    int db = depth(tree, b);
    while (da > db) {
        a = *tree.node(a).parent;
        --da;
    }
    while (db > da) {
        b = *tree.node(b).parent;
        --db;
    }
    while (a != b) {
        a = *tree.node(a).parent;
        b = *tree.node(b).parent;
    }
    return a;
}

int step_distance(const DomTree& tree, int a, int b) {
    int anc = lca(tree, a, b);
    return depth(tree, a) + depth(tree, b) - 2 * depth(tree, anc);
}

std::vector<int> subtree_sizes(const DomTree& tree) {
    std::vector<int> sizes(tree.nodes.size(), 1);
    // node_ids are pre-order, so children always come after their parent.
    for (std::size_t idx = tree.nodes.size(); idx > 0; --idx) {
        const DomNode& node = tree.nodes[idx - 1];
        if (node.parent.has_value()) {
            sizes[static_cast<std::size_t>(*node.parent)] += sizes[idx - 1];
        }
    }
    return sizes;
}

const std::set<std::string>& default_interactable_tags() {
    static const std::set<std::string> tags = {"a", "button", "input", "select", "option", "textarea"};
    return tags;
}

namespace {

const std::unordered_set<std::string>& clickable_roles() {
    static const std::unordered_set<std::string> roles = {
        "button", "link", "checkbox", "radio", "menuitem", "menuitemcheckbox",
        "menuitemradio", "option", "tab", "switch", "textbox", "searchbox",
        "combobox", "slider", "spinbutton"};
    return roles;
}

bool is_interactable(const DomNode& node, const std::set<std::string>& tags) {
    if (tags.count(node.tag) > 0) return true;
    if (auto role = attr_value(node, "role"); role.has_value()) {
        if (clickable_roles().count(std::string(*role)) > 0) return true;
    }
    return attr_value(node, "onclick").has_value();
}

}  // namespace

DomTree assign_candidate_ids(const DomTree& tree, const std::set<std::string>& interactable_tags) {
    DomTree out = tree;
    int next = 0;
    for (DomNode& node : out.nodes) {
        if (is_interactable(node, interactable_tags)) {
            node.candidate_id = next++;
        } else {
            node.candidate_id.reset();
        }
    }
    return out;
}

std::vector<std::pair<int, int>> candidate_nodes(const DomTree& tree) {
    std::vector<std::pair<int, int>> out;
    for (const DomNode& node : tree.nodes) {
        if (node.candidate_id.has_value()) out.emplace_back(*node.candidate_id, node.node_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<int> find_candidate(const DomTree& tree, int candidate_id) {
    for (const DomNode& node : tree.nodes) {
        if (node.candidate_id.has_value() && *node.candidate_id == candidate_id) {
            return node.node_id;
        }
    }
    return std::nullopt;
}

}  // namespace wepo
