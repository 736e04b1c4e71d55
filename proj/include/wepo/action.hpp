#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace wepo {

enum class OpKind { Click, Type, Select };

std::string_view op_name(OpKind op);
std::optional<OpKind> op_from_name(std::string_view name);

// One web operation: CLICK needs only an element, TYPE and SELECT also carry
// the text value typed or chosen.
struct Action {
    OpKind op = OpKind::Click;
    int element = 0;  // candidate_id of the target element
    std::optional<std::string> value;

    bool operator==(const Action& other) const = default;
};

Action make_click(int element);
Action make_type(int element, std::string value);
Action make_select(int element, std::string value);

// Canonical single-line form: `CLICK [7]`, `TYPE [3] [M2 Mac Air]`,
// `SELECT [2] [Blue]`. Newlines inside values are flattened to spaces so the
// line stays single-line; parse_action inverts the result exactly.
std::string serialize_action(const Action& a);

// Inverse of serialize_action. Returns nullopt for anything that does not
// match the schema (the UNPARSEABLE case of downstream evaluation).
std::optional<Action> parse_action(std::string_view s);

}  // namespace wepo
