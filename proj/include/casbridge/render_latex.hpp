#pragma once

// Canonical LaTeX emitter and a structured AST dump.
//
// Canonical form: every argument braced (x_{a}^{b}, \frac{a}{b}), row items
// joined by single spaces, command spellings taken from the command table.
// parse(to_canonical_latex(n)) == n for every well-formed n.

#include <casbridge/command_table.hpp>
#include <casbridge/formula.hpp>

#include <sstream>
#include <string>
#include <string_view>

namespace casbridge::formula {

namespace detail {

inline bool all_letters(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'))) return false;
    }
    return true;
}

inline std::string latex_delimiter(const std::string& d) {
    if (d.empty()) return ".";
    if (d == "{" || d == "}") return "\\" + d;
    return d;
}

class LatexEmitter {
public:
    std::string operator()(const Node& n) const { return emit(n); }

    std::string emit(const Node& n) const {
        return std::visit([&](const auto& x) { return emit(x); }, n.v);
    }

private:
    std::string braced(const Node& n) const {
        if (n.is<Row>()) return "{" + row_body(n.as<Row>()) + "}";
        return "{" + emit(n) + "}";
    }

    std::string row_body(const Row& r) const {
        std::string out;
        for (const auto& c : r.children) {
            if (!out.empty()) out += ' ';
            out += emit(c);
        }
        return out;
    }

    std::string emit(const Symbol& s) const {
        switch (s.cls) {
            case SymbolClass::blackboard: return "\\mathbb{" + s.name + "}";
            case SymbolClass::greek:
                if (auto c = command_for(s)) return "\\" + *c;
                return s.name;
            case SymbolClass::operator_name:
                if (all_letters(s.name)) return "\\" + s.name;
                return s.name;
            case SymbolClass::latin: break;
        }
        return s.name;
    }

    std::string emit(const Number& n) const { return n.text; }

    std::string emit(const Operator& o) const {
        if (auto c = command_for(o)) return "\\" + *c;
        if (auto c = char_for_operator(o)) return *c;
        return o.glyph;
    }

    std::string emit(const Row& r) const {
        if (r.children.empty()) return "{}";
        return row_body(r);
    }

    std::string emit(const Fraction& f) const {
        return "\\frac" + braced(*f.numerator) + braced(*f.denominator);
    }

    std::string emit(const Root& r) const {
        std::string out = "\\sqrt";
        if (r.index) {
            const Node& i = **r.index;
            out += "[" + (i.is<Row>() ? row_body(i.as<Row>()) : emit(i)) + "]";
        }
        return out + braced(*r.radicand);
    }

    std::string emit(const Script& s) const {
        const Node& b = *s.base;
        std::string out;
        if (b.is<Row>() || b.is<Script>() || b.is<BigOp>()) {
            out = braced(b);
        } else {
            out = emit(b);
        }
        if (s.sub) out += "_" + braced(**s.sub);
        if (s.sup) out += "^" + braced(**s.sup);
        return out;
    }

    std::string emit(const Delimited& d) const {
        return "\\left" + latex_delimiter(d.left) + " " + emit(*d.body) + " \\right" + latex_delimiter(d.right);
    }

    std::string emit(const Matrix& m) const {
        std::string out = "\\begin{array}{" + m.colspec + "} ";
        for (std::size_t i = 0; i < m.rows.size(); ++i) {
            if (i > 0) out += " \\\\ ";
            for (std::size_t j = 0; j < m.rows[i].size(); ++j) {
                if (j > 0) out += " & ";
                out += emit(m.rows[i][j]);
            }
        }
        return out + " \\end{array}";
    }

    std::string emit(const BigOp& b) const {
        std::string out = b.op == BigOpKind::integral ? "\\int" : b.op == BigOpKind::sum ? "\\sum" : "\\prod";
        if (b.lower) out += "_" + braced(**b.lower);
        if (b.upper) out += "^" + braced(**b.upper);
        if (b.body) out += " " + braced(**b.body);
        return out;
    }

    std::string emit(const TextRun& t) const {
        const char* cmd = t.style == TextStyle::roman ? "\\mathrm" : t.style == TextStyle::bold ? "\\mathbf" : "\\text";
        return std::string(cmd) + "{" + t.text + "}";
    }

    std::string emit(const Spacing& s) const {
        if (auto c = command_for(s)) return "\\" + *c;
        return "\\,";
    }

    std::string emit(const Ellipsis&) const { return "\\cdots"; }

    std::string emit(const BigO& b) const { return "O \\left( " + emit(*b.arg) + " \\right)"; }
};

inline void quote(std::ostream& os, std::string_view s) {
    os << '"';
    for (char c : s) {
        if (c == '"' || c == '\\') os << '\\';
        os << c;
    }
    os << '"';
}

inline void dump(std::ostream& os, const Node& n, int depth) {
    os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << variant_name(n);
    const auto child = [&](std::string_view role, const Node& c) {
        os << std::string(static_cast<std::size_t>(depth + 1) * 2, ' ') << role << ":\n";
        dump(os, c, depth + 2);
    };
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Symbol>) {
                os << ' ';
                quote(os, x.name);
                os << ' ' << to_string(x.cls) << '\n';
            } else if constexpr (std::is_same_v<T, Number>) {
                os << ' ';
                quote(os, x.text);
                os << '\n';
            } else if constexpr (std::is_same_v<T, Operator>) {
                os << ' ';
                quote(os, x.glyph);
                os << ' ' << to_string(x.cls) << '\n';
            } else if constexpr (std::is_same_v<T, Row>) {
                os << '\n';
                for (const auto& c : x.children) dump(os, c, depth + 1);
            } else if constexpr (std::is_same_v<T, Fraction>) {
                os << '\n';
                child("numerator", *x.numerator);
                child("denominator", *x.denominator);
            } else if constexpr (std::is_same_v<T, Root>) {
                os << '\n';
                child("radicand", *x.radicand);
                if (x.index) child("index", **x.index);
            } else if constexpr (std::is_same_v<T, Script>) {
                os << '\n';
                child("base", *x.base);
                if (x.sub) child("sub", **x.sub);
                if (x.sup) child("sup", **x.sup);
            } else if constexpr (std::is_same_v<T, Delimited>) {
                os << ' ';
                quote(os, x.left);
                os << ' ';
                quote(os, x.right);
                os << '\n';
                dump(os, *x.body, depth + 1);
            } else if constexpr (std::is_same_v<T, Matrix>) {
                os << ' ';
                quote(os, x.colspec);
                os << '\n';
                for (std::size_t i = 0; i < x.rows.size(); ++i) {
                    os << std::string(static_cast<std::size_t>(depth + 1) * 2, ' ') << "row " << i << ":\n";
                    for (const auto& c : x.rows[i]) dump(os, c, depth + 2);
                }
            } else if constexpr (std::is_same_v<T, BigOp>) {
                os << ' ' << to_string(x.op) << '\n';
                if (x.lower) child("lower", **x.lower);
                if (x.upper) child("upper", **x.upper);
                if (x.body) child("body", **x.body);
            } else if constexpr (std::is_same_v<T, TextRun>) {
                os << ' ';
                quote(os, x.text);
                os << ' ' << to_string(x.style) << '\n';
            } else if constexpr (std::is_same_v<T, Spacing>) {
                os << ' ' << to_string(x.width) << '\n';
            } else if constexpr (std::is_same_v<T, Ellipsis>) {
                os << '\n';
            } else if constexpr (std::is_same_v<T, BigO>) {
                os << '\n';
                dump(os, *x.arg, depth + 1);
            }
        },
        n.v);
}

}  // namespace detail

inline std::string to_canonical_latex(const Node& n) { return detail::LatexEmitter{}(n); }

/// Indented tree, one node per line: `Kind [attributes]`, children nested
/// two spaces deeper; optional children are introduced by a role line.
inline std::string dump_ast(const Node& n) {
    std::ostringstream os;
    detail::dump(os, n, 0);
    return os.str();
}

}  // namespace casbridge::formula
