#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "wepo/dom.hpp"
#include "wepo/error.hpp"
#include "wepo/rng.hpp"

#include "support.hpp"

using namespace wepo;

namespace {

const DomNode* find_by_tag(const DomTree& tree, const std::string& tag) {
    for (const DomNode& node : tree.nodes) {
        if (node.tag == tag) return &node;
    }
    return nullptr;
}

int count_subtree(const DomTree& tree, int id) {
    int total = 1;
    for (int child : tree.node(id).children) total += count_subtree(tree, child);
    return total;
}

}  // namespace

TEST_CASE("parse_html builds the expected element tree") {
    DomTree tree = parse_html(
        "<html><body><div id=\"top\" class=\"a b\">hello <b>world</b></div></body></html>");
    REQUIRE(tree.size() == 4);  // html, body, div, b
    const DomNode& root = tree.node(tree.root);
    CHECK(root.tag == "html");
    CHECK_FALSE(root.parent.has_value());

    const DomNode* div = find_by_tag(tree, "div");
    REQUIRE(div != nullptr);
    CHECK(div->text == "hello");
    CHECK(attr_value(*div, "id") == "top");
    CHECK(attr_value(*div, "class") == "a b");
    CHECK(attr_value(*div, "missing") == std::nullopt);
    REQUIRE(div->children.size() == 1);
    CHECK(tree.node(div->children[0]).tag == "b");
    CHECK(tree.node(div->children[0]).text == "world");
}

TEST_CASE("parse_html assigns dense pre-order node ids") {
    DomTree tree = parse_html("<html><body><section><p>a</p><p>b</p></section><footer></footer></body></html>");
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        CHECK(tree.nodes[i].node_id == static_cast<int>(i));
    }
    // Pre-order: parent id always below child ids, siblings ascend.
    for (const DomNode& node : tree.nodes) {
        int last = node.node_id;
        for (int child : node.children) {
            CHECK(child > last);
            last = child;
        }
    }
}

TEST_CASE("parse_html recovers from tag soup") {
    SUBCASE("implied end tags for list items and paragraphs") {
        DomTree tree = parse_html("<ul><li>one<li>two<li>three</ul>");
        const DomNode* ul = find_by_tag(tree, "ul");
        REQUIRE(ul != nullptr);
        CHECK(ul->children.size() == 3);
        for (int child : ul->children) CHECK(tree.node(child).tag == "li");
    }
    SUBCASE("stray close tags are ignored") {
        DomTree tree = parse_html("<div>a</span></p>b</div>");
        const DomNode* div = find_by_tag(tree, "div");
        REQUIRE(div != nullptr);
        CHECK(div->text == "a b");
    }
    SUBCASE("unclosed elements are closed at end of input") {
        DomTree tree = parse_html("<div><span>deep");
        CHECK(find_by_tag(tree, "span") != nullptr);
        CHECK(find_by_tag(tree, "span")->text == "deep");
    }
    SUBCASE("mismatched close unwinds to the matching open") {
        DomTree tree = parse_html("<div><b><i>x</b>tail</div>");
        const DomNode* div = find_by_tag(tree, "div");
        REQUIRE(div != nullptr);
        // </b> closes both i and b; "tail" belongs to div.
        CHECK(div->text == "tail");
    }
}

TEST_CASE("void and raw-text elements") {
    DomTree tree = parse_html(
        "<div><br><img src=\"x.png\" alt=\"pic\"><script>if (a < b) { x(\"<div>\"); }</script></div>");
    const DomNode* br = find_by_tag(tree, "br");
    REQUIRE(br != nullptr);
    CHECK(br->children.empty());
    const DomNode* script = find_by_tag(tree, "script");
    REQUIRE(script != nullptr);
    CHECK(script->children.empty());  // script body is text, not markup
    CHECK(script->text.find("<div>") != std::string::npos);
    CHECK(find_by_tag(tree, "img") != nullptr);
}

TEST_CASE("character references are decoded") {
    DomTree tree = parse_html("<p title=\"a &amp; b\">&lt;tag&gt; &#65;&#x42; &quot;q&quot; &nbsp;end</p>");
    const DomNode* p = find_by_tag(tree, "p");
    REQUIRE(p != nullptr);
    CHECK(attr_value(*p, "title") == "a & b");
    CHECK(p->text.find("<tag>") != std::string::npos);
    CHECK(p->text.find("AB") != std::string::npos);
    CHECK(p->text.find("\"q\"") != std::string::npos);
}

TEST_CASE("multi-root and element-free input is wrapped") {
    DomTree tree = parse_html("<div>a</div><div>b</div>");
    CHECK(tree.node(tree.root).tag == "html");
    CHECK(tree.node(tree.root).children.size() == 2);

    DomTree bare = parse_html("just text");
    CHECK(bare.node(bare.root).tag == "html");
    CHECK(bare.node(bare.root).text == "just text");
}

TEST_CASE("blank input throws EmptyInputError") {
    CHECK_THROWS_AS(parse_html(""), EmptyInputError);
    CHECK_THROWS_AS(parse_html("   \n\t "), EmptyInputError);
}

TEST_CASE("node lookup validates ids") {
    DomTree tree = parse_html("<div></div>");
    CHECK_THROWS_AS(tree.node(99), UnknownNodeError);
    CHECK_THROWS_AS(tree.node(-1), UnknownNodeError);
}

TEST_CASE("fixture page parses to 200 elements") {
    DomTree tree = parse_html(testsup::read_file(testsup::test_data_dir() + "/fixture_200.html"));
    CHECK(tree.size() == 200);
}

TEST_CASE("serialization round-trips byte for byte") {
    std::vector<std::string> inputs = {
        "<html><body><div id=\"a\">x<b>y</b>z tail</div></body></html>",
        "<ul><li>one<li>two</ul><p>loose",
        "<div title=\"a &amp; b\"><br><img src=\"i.png\">text</div>",
        testsup::read_file(testsup::test_data_dir() + "/fixture_200.html"),
    };
    for (const std::string& raw : inputs) {
        DomTree first = parse_html(raw);
        std::string once = serialize(first);
        DomTree second = parse_html(once);
        CHECK(serialize(second) == once);
        CHECK(second.source_digest == first.source_digest);
        CHECK(second.size() == first.size());
    }
}

TEST_CASE("serialize escapes markup-significant characters") {
    DomTree tree = parse_html("<p title='a\"<>&amp;'>x &lt; y &amp; z</p>");
    std::string out = serialize(tree);
    DomTree again = parse_html(out);
    const DomNode* p = find_by_tag(again, "p");
    REQUIRE(p != nullptr);
    CHECK(attr_value(*p, "title") == "a\"<>&");
    CHECK(p->text == "x < y & z");
}

TEST_CASE("clean strips noise subtrees and junk attributes") {
    DomTree tree = clean(parse_html(
        "<html><head><meta charset=\"utf-8\"><link rel=\"x\" href=\"y\"><title>t</title>"
        "<style>.a{}</style><script>bad()</script></head>"
        "<body><noscript><p>js off</p></noscript>"
        "<div data-tracking=\"zzz\" id=\"keep\" style=\"color:red\">ok</div></body></html>"));
    CHECK(find_by_tag(tree, "script") == nullptr);
    CHECK(find_by_tag(tree, "style") == nullptr);
    CHECK(find_by_tag(tree, "meta") == nullptr);
    CHECK(find_by_tag(tree, "link") == nullptr);
    CHECK(find_by_tag(tree, "noscript") == nullptr);
    CHECK(find_by_tag(tree, "p") == nullptr);  // nested under noscript
    const DomNode* div = find_by_tag(tree, "div");
    REQUIRE(div != nullptr);
    CHECK(attr_value(*div, "id") == "keep");
    CHECK_FALSE(attr_value(*div, "data-tracking").has_value());
    CHECK_FALSE(attr_value(*div, "style").has_value());
}

TEST_CASE("clean truncates attribute values and class token lists") {
    std::string long_title(150, 'x');
    DomTree tree = clean(parse_html("<div title=\"" + long_title +
                                    "\" class=\"one two three four five\">t</div>"));
    const DomNode* div = find_by_tag(tree, "div");
    REQUIRE(div != nullptr);
    CHECK(attr_value(*div, "title")->size() == 100);
    CHECK(attr_value(*div, "class") == "one two three");
}

TEST_CASE("clean is idempotent") {
    DomTree once = clean(parse_html(testsup::read_file(testsup::test_data_dir() + "/fixture_200.html")));
    DomTree twice = clean(once);
    CHECK(serialize(twice) == serialize(once));
}

TEST_CASE("depth, lca and step_distance on a hand-built tree") {
    //  html > body > (section > (p > b), p2), footer
    DomTree tree = parse_html(
        "<html><body><section><p><b>x</b></p><p>y</p></section><footer>f</footer></body></html>");
    const DomNode* b = find_by_tag(tree, "b");
    const DomNode* footer = find_by_tag(tree, "footer");
    const DomNode* section = find_by_tag(tree, "section");
    REQUIRE(b != nullptr);
    REQUIRE(footer != nullptr);
    REQUIRE(section != nullptr);
    int p1 = *b->parent;
    int p2 = section->children[1];

    CHECK(depth(tree, tree.root) == 0);
    CHECK(depth(tree, b->node_id) == 4);
    CHECK(lca(tree, p1, p2) == section->node_id);
    CHECK(lca(tree, b->node_id, b->node_id) == b->node_id);

    CHECK(step_distance(tree, p1, p1) == 0);
    CHECK(step_distance(tree, p1, p2) == 2);                    // siblings
    CHECK(step_distance(tree, b->node_id, p1) == 1);            // child-parent
    // b -> p -> section -> body (3 up) meets footer -> body (1 up).
    CHECK(step_distance(tree, b->node_id, footer->node_id) == 4);
    CHECK(step_distance(tree, footer->node_id, b->node_id) == 4);  // symmetric
}

TEST_CASE("step_distance equals the BFS oracle on random trees") {
    for (std::uint64_t t = 0; t < 30; ++t) {
        Rng rng(derive_seed(424242, t));
        DomTree tree = parse_html(testsup::random_tree_html(rng, 20 + static_cast<int>(rng.bounded(60))));
        int n = static_cast<int>(tree.size());
        for (int i = 0; i < 50; ++i) {
            int a = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
            int b = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
            CHECK(step_distance(tree, a, b) == testsup::bfs_distance(tree, a, b));
        }
    }
}

TEST_CASE("subtree_sizes counts every node under each root") {
    Rng rng(7);
    DomTree tree = parse_html(testsup::random_tree_html(rng, 40));
    std::vector<int> sizes = subtree_sizes(tree);
    REQUIRE(sizes.size() == tree.size());
    for (const DomNode& node : tree.nodes) {
        CHECK(sizes[static_cast<std::size_t>(node.node_id)] == count_subtree(tree, node.node_id));
    }
    CHECK(sizes[static_cast<std::size_t>(tree.root)] == static_cast<int>(tree.size()));
}

TEST_CASE("assign_candidate_ids numbers interactable elements in document order") {
    DomTree tree = assign_candidate_ids(parse_html(
        "<html><body><a href=\"#\">l</a><div>plain</div><button>b</button>"
        "<div role=\"button\">rb</div><div onclick=\"go()\">oc</div>"
        "<input type=\"text\"><div role=\"presentation\">np</div></body></html>"));
    auto candidates = candidate_nodes(tree);
    REQUIRE(candidates.size() == 5);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        CHECK(candidates[i].first == static_cast<int>(i));
        if (i > 0) CHECK(candidates[i].second > candidates[i - 1].second);
    }
    CHECK(tree.node(candidates[0].second).tag == "a");
    CHECK(tree.node(candidates[3].second).tag == "div");  // role="button"

    CHECK(find_candidate(tree, 2).has_value());
    CHECK_FALSE(find_candidate(tree, 99).has_value());
}

TEST_CASE("collapse_whitespace trims and squeezes") {
    CHECK(collapse_whitespace("  a \t b\n\nc  ") == "a b c");
    CHECK(collapse_whitespace("") == "");
    CHECK(collapse_whitespace(" \n ") == "");
}
