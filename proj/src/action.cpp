#include "wepo/action.hpp"

#include <algorithm>

namespace wepo {

std::string_view op_name(OpKind op) {
    switch (op) {
        case OpKind::Click: return "CLICK";
        case OpKind::Type: return "TYPE";
        case OpKind::Select: return "SELECT";
    }
    return "CLICK";
}

std::optional<OpKind> op_from_name(std::string_view name) {
    if (name == "CLICK") return OpKind::Click;
    if (name == "TYPE") return OpKind::Type;
    if (name == "SELECT") return OpKind::Select;
    return std::nullopt;
}

Action make_click(int element) { return Action{OpKind::Click, element, std::nullopt}; }

Action make_type(int element, std::string value) {
    return Action{OpKind::Type, element, std::move(value)};
}

Action make_select(int element, std::string value) {
    return Action{OpKind::Select, element, std::move(value)};
}

std::string serialize_action(const Action& a) {
    std::string out(op_name(a.op));
    out += " [" + std::to_string(a.element) + "]";
    if (a.op != OpKind::Click) {
        std::string value = a.value.value_or("");
        std::replace(value.begin(), value.end(), '\n', ' ');
        std::replace(value.begin(), value.end(), '\r', ' ');
        out += " [" + value + "]";
    }
    return out;
}

std::optional<Action> parse_action(std::string_view s) {
    std::size_t space = s.find(' ');
    if (space == std::string_view::npos) return std::nullopt;
    auto op = op_from_name(s.substr(0, space));
    if (!op.has_value()) return std::nullopt;

    std::string_view rest = s.substr(space + 1);
    if (rest.size() < 3 || rest[0] != '[') return std::nullopt;
    std::size_t close = rest.find(']');
    if (close == std::string_view::npos || close < 2) return std::nullopt;
    std::string_view id_part = rest.substr(1, close - 1);
    if (!std::all_of(id_part.begin(), id_part.end(),
                     [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    int element = 0;
    for (char c : id_part) {
        if (element > 214748363) return std::nullopt;
        element = element * 10 + (c - '0');
    }

    std::string_view tail = rest.substr(close + 1);
    if (*op == OpKind::Click) {
        if (!tail.empty()) return std::nullopt;
        return make_click(element);
    }
    // Value group: " [...]" where the value may itself contain ']'; match to
    // the final closing bracket.
    if (tail.size() < 3 || tail[0] != ' ' || tail[1] != '[' || tail.back() != ']') {
        return std::nullopt;
    }
    std::string value(tail.substr(2, tail.size() - 3));
    return Action{*op, element, std::move(value)};
}

}  // namespace wepo
