#pragma once

// Formula AST produced by the LaTeX math parser and consumed by the
// renderers. Nodes are values: copying a node deep-copies its subtree and
// operator== is structural equality.
//
// Glyph-bearing nodes (Symbol, Operator) store the presentation glyph, e.g.
// Symbol{"α", greek} or Operator{"−", binary}; the command table maps between
// glyphs and LaTeX spellings.

#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace casbridge::formula {

/// Owning pointer with value semantics.
template <class T>
class Boxed {
public:
    Boxed(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(implicit)
    Boxed(const Boxed& o) : ptr_(std::make_unique<T>(*o.ptr_)) {}
    Boxed(Boxed&&) noexcept = default;
    Boxed& operator=(const Boxed& o) {
        if (this != &o) ptr_ = std::make_unique<T>(*o.ptr_);
        return *this;
    }
    Boxed& operator=(Boxed&&) noexcept = default;
    ~Boxed() = default;

    T& operator*() { return *ptr_; }
    const T& operator*() const { return *ptr_; }
    T* operator->() { return ptr_.get(); }
    const T* operator->() const { return ptr_.get(); }

    friend bool operator==(const Boxed& a, const Boxed& b) { return *a.ptr_ == *b.ptr_; }

private:
    std::unique_ptr<T> ptr_;
};

struct Node;

enum class SymbolClass { latin, greek, blackboard, operator_name };
enum class OperatorClass { binary, relation, arrow, punctuation };
enum class BigOpKind { integral, sum, product };
enum class TextStyle { plain, roman, bold };
enum class SpacingClass { thin, medium, thick, negthin, space, quad };

struct Symbol {
    std::string name;
    SymbolClass cls = SymbolClass::latin;
    friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Number {
    std::string text;
    friend bool operator==(const Number&, const Number&) = default;
};

struct Operator {
    std::string glyph;
    OperatorClass cls = OperatorClass::binary;
    friend bool operator==(const Operator&, const Operator&) = default;
};

struct Row {
    std::vector<Node> children;
    friend bool operator==(const Row&, const Row&) = default;
};

struct Fraction {
    Boxed<Node> numerator;
    Boxed<Node> denominator;
    friend bool operator==(const Fraction&, const Fraction&) = default;
};

struct Root {
    Boxed<Node> radicand;
    std::optional<Boxed<Node>> index;
    friend bool operator==(const Root&, const Root&) = default;
};

struct Script {
    Boxed<Node> base;
    std::optional<Boxed<Node>> sub;
    std::optional<Boxed<Node>> sup;
    friend bool operator==(const Script&, const Script&) = default;
};

/// Delimiters are the LaTeX delimiter characters "(", ")", "[", "]", "{",
/// "}", "|"; an empty string means none ("\left." / "\right.").
struct Delimited {
    std::string left;
    std::string right;
    Boxed<Node> body;
    friend bool operator==(const Delimited&, const Delimited&) = default;
};

struct Matrix {
    std::string colspec;
    std::vector<std::vector<Node>> rows;
    friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct BigOp {
    BigOpKind op = BigOpKind::integral;
    std::optional<Boxed<Node>> lower;
    std::optional<Boxed<Node>> upper;
    std::optional<Boxed<Node>> body;
    friend bool operator==(const BigOp&, const BigOp&) = default;
};

struct TextRun {
    std::string text;
    TextStyle style = TextStyle::plain;
    friend bool operator==(const TextRun&, const TextRun&) = default;
};

struct Spacing {
    SpacingClass width = SpacingClass::thin;
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

struct Ellipsis {
    friend bool operator==(const Ellipsis&, const Ellipsis&) = default;
};

struct BigO {
    Boxed<Node> arg;
    friend bool operator==(const BigO&, const BigO&) = default;
};

using NodeVariant = std::variant<Symbol, Number, Operator, Row, Fraction, Root, Script, Delimited,
                                 Matrix, BigOp, TextRun, Spacing, Ellipsis, BigO>;

inline constexpr std::size_t kVariantCount = std::variant_size_v<NodeVariant>;

template <class T, class V>
inline constexpr bool is_alternative_v = false;
template <class T, class... Ts>
inline constexpr bool is_alternative_v<T, std::variant<Ts...>> = (std::is_same_v<T, Ts> || ...);

struct Node {
    NodeVariant v;

    template <class T>
        requires is_alternative_v<std::decay_t<T>, NodeVariant>
    Node(T&& value) : v(std::forward<T>(value)) {}  // NOLINT(implicit)

    template <class T>
    bool is() const { return std::holds_alternative<T>(v); }
    template <class T>
    const T& as() const { return std::get<T>(v); }
    template <class T>
    T& as() { return std::get<T>(v); }

    friend bool operator==(const Node&, const Node&) = default;
};

inline std::string_view variant_name(std::size_t index) {
    static constexpr std::string_view kNames[] = {"Symbol",    "Number",  "Operator", "Row",
                                                  "Fraction",  "Root",    "Script",   "Delimited",
                                                  "Matrix",    "BigOp",   "TextRun",  "Spacing",
                                                  "Ellipsis",  "BigO"};
    return index < kVariantCount ? kNames[index] : "?";
}

inline std::string_view variant_name(const Node& n) { return variant_name(n.v.index()); }

/// Calls `f` on each direct child of `n`, in reading order.
template <class F>
void for_each_child(const Node& n, F&& f) {
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Row>) {
                for (const auto& c : x.children) f(c);
            } else if constexpr (std::is_same_v<T, Fraction>) {
                f(*x.numerator);
                f(*x.denominator);
            } else if constexpr (std::is_same_v<T, Root>) {
                if (x.index) f(**x.index);
                f(*x.radicand);
            } else if constexpr (std::is_same_v<T, Script>) {
                f(*x.base);
                if (x.sub) f(**x.sub);
                if (x.sup) f(**x.sup);
            } else if constexpr (std::is_same_v<T, Delimited>) {
                f(*x.body);
            } else if constexpr (std::is_same_v<T, Matrix>) {
                for (const auto& r : x.rows) {
                    for (const auto& c : r) f(c);
                }
            } else if constexpr (std::is_same_v<T, BigOp>) {
                if (x.lower) f(**x.lower);
                if (x.upper) f(**x.upper);
                if (x.body) f(**x.body);
            } else if constexpr (std::is_same_v<T, BigO>) {
                f(*x.arg);
            }
        },
        n.v);
}

inline std::string_view to_string(SymbolClass c) {
    switch (c) {
        case SymbolClass::latin: return "latin";
        case SymbolClass::greek: return "greek";
        case SymbolClass::blackboard: return "blackboard";
        case SymbolClass::operator_name: return "operator-name";
    }
    return "latin";
}

inline std::string_view to_string(OperatorClass c) {
    switch (c) {
        case OperatorClass::binary: return "binary";
        case OperatorClass::relation: return "relation";
        case OperatorClass::arrow: return "arrow";
        case OperatorClass::punctuation: return "punctuation";
    }
    return "binary";
}

inline std::string_view to_string(BigOpKind k) {
    switch (k) {
        case BigOpKind::integral: return "integral";
        case BigOpKind::sum: return "sum";
        case BigOpKind::product: return "product";
    }
    return "integral";
}

inline std::string_view to_string(TextStyle s) {
    switch (s) {
        case TextStyle::plain: return "plain";
        case TextStyle::roman: return "roman";
        case TextStyle::bold: return "bold";
    }
    return "plain";
}

inline std::string_view to_string(SpacingClass s) {
    switch (s) {
        case SpacingClass::thin: return "thin";
        case SpacingClass::medium: return "medium";
        case SpacingClass::thick: return "thick";
        case SpacingClass::negthin: return "negthin";
        case SpacingClass::space: return "space";
        case SpacingClass::quad: return "quad";
    }
    return "thin";
}

// Convenience constructors, mostly for tests and generators.

inline Node sym(std::string name, SymbolClass c = SymbolClass::latin) { return Symbol{std::move(name), c}; }
inline Node num(std::string text) { return Number{std::move(text)}; }
inline Node op(std::string glyph, OperatorClass c = OperatorClass::binary) {
    return Operator{std::move(glyph), c};
}
inline Node row(std::vector<Node> children) { return Row{std::move(children)}; }
inline Node frac(Node n, Node d) { return Fraction{std::move(n), std::move(d)}; }
inline Node sup(Node base, Node s) { return Script{std::move(base), std::nullopt, Boxed<Node>(std::move(s))}; }
inline Node sub(Node base, Node s) { return Script{std::move(base), Boxed<Node>(std::move(s)), std::nullopt}; }

/// Pre-order visit of every node in the tree.
template <class F>
void walk(const Node& n, F&& f) {
    f(n);
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Row>) {
                for (const auto& c : x.children) walk(c, f);
            } else if constexpr (std::is_same_v<T, Fraction>) {
                walk(*x.numerator, f);
                walk(*x.denominator, f);
            } else if constexpr (std::is_same_v<T, Root>) {
                walk(*x.radicand, f);
                if (x.index) walk(**x.index, f);
            } else if constexpr (std::is_same_v<T, Script>) {
                walk(*x.base, f);
                if (x.sub) walk(**x.sub, f);
                if (x.sup) walk(**x.sup, f);
            } else if constexpr (std::is_same_v<T, Delimited>) {
                walk(*x.body, f);
            } else if constexpr (std::is_same_v<T, Matrix>) {
                for (const auto& r : x.rows)
                    for (const auto& c : r) walk(c, f);
            } else if constexpr (std::is_same_v<T, BigOp>) {
                if (x.lower) walk(**x.lower, f);
                if (x.upper) walk(**x.upper, f);
                if (x.body) walk(**x.body, f);
            } else if constexpr (std::is_same_v<T, BigO>) {
                walk(*x.arg, f);
            }
        },
        n.v);
}

}  // namespace casbridge::formula
