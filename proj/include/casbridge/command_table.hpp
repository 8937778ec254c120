#pragma once

// The closed set of LaTeX commands the formula parser understands, with their
// semantic class and presentation glyph. Anything outside this table goes
// through the unknown-command policy (operator-name Symbol plus a warning).

#include <casbridge/formula.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace casbridge::formula {

enum class CommandCategory {
    structure,     // frac, sqrt, left, right, begin, end
    symbol,        // greek letters and named symbols
    blackboard,    // mathbb{X}
    operator_,     // wedge, neq, ...
    function,      // sin, log, ...
    big_operator,  // int, sum, prod
    ellipsis,      // cdots
    style,         // text, mathrm, mathbf
    absorbed,      // displaystyle, textstyle
    spacing,       // \, \; \: \! \  \quad
};

inline std::string_view to_string(CommandCategory c) {
    switch (c) {
        case CommandCategory::structure: return "structure";
        case CommandCategory::symbol: return "symbol";
        case CommandCategory::blackboard: return "blackboard";
        case CommandCategory::operator_: return "operator";
        case CommandCategory::function: return "function";
        case CommandCategory::big_operator: return "big_operator";
        case CommandCategory::ellipsis: return "ellipsis";
        case CommandCategory::style: return "style";
        case CommandCategory::absorbed: return "absorbed";
        case CommandCategory::spacing: return "spacing";
    }
    return "structure";
}

struct CommandInfo {
    CommandCategory category = CommandCategory::structure;
    // Leaf node the command denotes (symbol, operator, function, ellipsis,
    // spacing), or nullopt for commands that take arguments.
    std::optional<Node> node;
    std::optional<BigOpKind> big_op;
    std::optional<TextStyle> text_style;
};

namespace detail {

inline std::map<std::string, CommandInfo, std::less<>> build_command_table() {
    std::map<std::string, CommandInfo, std::less<>> t;
    const auto add = [&](std::string name, CommandCategory c, std::optional<Node> node = std::nullopt) {
        t.emplace(std::move(name), CommandInfo{c, std::move(node), std::nullopt, std::nullopt});
    };
    for (const char* s : {"frac", "sqrt", "left", "right", "begin", "end"}) add(s, CommandCategory::structure);

    const std::pair<const char*, const char*> greek[] = {
        {"alpha", "α"}, {"beta", "β"},   {"gamma", "γ"},   {"delta", "δ"},   {"epsilon", "ε"},
        {"zeta", "ζ"},  {"eta", "η"},    {"theta", "θ"},   {"iota", "ι"},    {"kappa", "κ"},
        {"lambda", "λ"}, {"mu", "μ"},    {"nu", "ν"},      {"xi", "ξ"},      {"pi", "π"},
        {"rho", "ρ"},   {"sigma", "σ"},  {"tau", "τ"},     {"upsilon", "υ"}, {"phi", "φ"},
        {"chi", "χ"},   {"psi", "ψ"},    {"omega", "ω"},   {"Gamma", "Γ"},   {"Delta", "Δ"},
        {"Theta", "Θ"}, {"Lambda", "Λ"}, {"Xi", "Ξ"},      {"Pi", "Π"},      {"Sigma", "Σ"},
        {"Phi", "Φ"},   {"Psi", "Ψ"},    {"Omega", "Ω"},   {"partial", "∂"}, {"infty", "∞"},
    };
    for (auto [name, glyph] : greek) add(name, CommandCategory::symbol, sym(glyph, SymbolClass::greek));
    add("mathbb", CommandCategory::blackboard);

    const std::tuple<const char*, const char*, OperatorClass> ops[] = {
        {"wedge", "∧", OperatorClass::binary},     {"vee", "∨", OperatorClass::binary},
        {"cdot", "⋅", OperatorClass::binary},      {"times", "×", OperatorClass::binary},
        {"pm", "±", OperatorClass::binary},        {"neq", "≠", OperatorClass::relation},
        {"geq", "≥", OperatorClass::relation},     {"leq", "≤", OperatorClass::relation},
        {"approx", "≈", OperatorClass::relation},  {"in", "∈", OperatorClass::relation},
        {"to", "→", OperatorClass::arrow},         {"mapsto", "↦", OperatorClass::arrow},
        {"{", "{", OperatorClass::punctuation},    {"}", "}", OperatorClass::punctuation},
    };
    for (auto [name, glyph, cls] : ops) add(name, CommandCategory::operator_, op(glyph, cls));

    for (const char* f : {"sin", "cos", "tan", "cot", "sec", "csc", "sinh", "cosh", "tanh", "arcsin",
                          "arccos", "arctan", "log", "ln", "exp", "det", "lim", "max", "min"}) {
        add(f, CommandCategory::function, sym(f, SymbolClass::operator_name));
    }

    t.emplace("int", CommandInfo{CommandCategory::big_operator, std::nullopt, BigOpKind::integral, std::nullopt});
    t.emplace("sum", CommandInfo{CommandCategory::big_operator, std::nullopt, BigOpKind::sum, std::nullopt});
    t.emplace("prod", CommandInfo{CommandCategory::big_operator, std::nullopt, BigOpKind::product, std::nullopt});

    add("cdots", CommandCategory::ellipsis, Ellipsis{});

    t.emplace("text", CommandInfo{CommandCategory::style, std::nullopt, std::nullopt, TextStyle::plain});
    t.emplace("mbox", CommandInfo{CommandCategory::style, std::nullopt, std::nullopt, TextStyle::plain});
    t.emplace("mathrm", CommandInfo{CommandCategory::style, std::nullopt, std::nullopt, TextStyle::roman});
    t.emplace("mathbf", CommandInfo{CommandCategory::style, std::nullopt, std::nullopt, TextStyle::bold});
    add("displaystyle", CommandCategory::absorbed);
    add("textstyle", CommandCategory::absorbed);

    const std::pair<const char*, SpacingClass> spaces[] = {
        {",", SpacingClass::thin},    {":", SpacingClass::medium}, {";", SpacingClass::thick},
        {"!", SpacingClass::negthin}, {" ", SpacingClass::space},  {"quad", SpacingClass::quad},
    };
    for (auto [name, width] : spaces) add(name, CommandCategory::spacing, Spacing{width});
    return t;
}

}  // namespace detail

inline const std::map<std::string, CommandInfo, std::less<>>& command_table() {
    static const auto table = detail::build_command_table();
    return table;
}

inline const CommandInfo* lookup_command(std::string_view name) {
    const auto& t = command_table();
    const auto it = t.find(name);
    return it == t.end() ? nullptr : &it->second;
}

/// LaTeX spelling (without backslash) for a leaf node, if the table has one.
inline std::optional<std::string> command_for(const Node& leaf) {
    static const auto reverse = [] {
        std::vector<std::pair<Node, std::string>> r;
        for (const auto& [name, info] : command_table()) {
            if (info.node) r.emplace_back(*info.node, name);
        }
        return r;
    }();
    for (const auto& [node, name] : reverse) {
        if (node == leaf) return name;
    }
    return std::nullopt;
}

/// Classifies a glyph appearing literally in math source.
inline std::optional<Node> classify_math_char(std::string_view ch) {
    static const std::pair<std::string_view, Node> kChars[] = {
        {"+", op("+", OperatorClass::binary)},       {"-", op("−", OperatorClass::binary)},
        {"*", op("∗", OperatorClass::binary)},       {"/", op("/", OperatorClass::binary)},
        {"=", op("=", OperatorClass::relation)},     {"<", op("<", OperatorClass::relation)},
        {">", op(">", OperatorClass::relation)},     {":", op(":", OperatorClass::relation)},
        {",", op(",", OperatorClass::punctuation)},  {";", op(";", OperatorClass::punctuation)},
        {".", op(".", OperatorClass::punctuation)},  {"!", op("!", OperatorClass::punctuation)},
        {"(", op("(", OperatorClass::punctuation)},  {")", op(")", OperatorClass::punctuation)},
        {"[", op("[", OperatorClass::punctuation)},  {"]", op("]", OperatorClass::punctuation)},
        {"|", op("|", OperatorClass::punctuation)},
    };
    for (const auto& [c, n] : kChars) {
        if (c == ch) return n;
    }
    return std::nullopt;
}

/// Source spelling for an Operator glyph produced by classify_math_char.
inline std::optional<std::string> char_for_operator(const Operator& o) {
    for (const char* c : {"+", "-", "*", "/", "=", "<", ">", ":", ",", ";", ".", "!", "(", ")", "[", "]", "|"}) {
        if (const auto n = classify_math_char(c); n && n->as<Operator>() == o) return std::string(c);
    }
    return std::nullopt;
}

}  // namespace casbridge::formula
