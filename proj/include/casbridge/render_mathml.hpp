#pragma once

// Presentation MathML for a formula AST. Element mapping:
//
//   Symbol -> mi           Number -> mn          Operator -> mo
//   Row -> mrow            Fraction -> mfrac     Root -> msqrt | mroot
//   Script -> msub | msup | msubsup
//   Delimited -> mrow(mo left, body, mo right); a missing delimiter is omitted
//   Matrix -> mtable/mtr/mtd
//   BigOp -> integral: msub/msup/msubsup over mo; sum, product: munder/mover/munderover;
//            with a body the pair is wrapped in mrow
//   TextRun -> mtext       Spacing -> mspace     Ellipsis -> mo(⋯)
//   BigO -> mrow(mi O, mo "(", arg, mo ")")

#include <casbridge/formula.hpp>

#include <string>
#include <string_view>

namespace casbridge::formula {

inline constexpr std::string_view kMathmlNamespace = "http://www.w3.org/1998/Math/MathML";

inline std::string_view mathml_space_width(SpacingClass s) {
    switch (s) {
        case SpacingClass::thin: return "0.167em";
        case SpacingClass::medium: return "0.222em";
        case SpacingClass::thick: return "0.278em";
        case SpacingClass::negthin: return "-0.167em";
        case SpacingClass::space: return "0.333em";
        case SpacingClass::quad: return "1em";
    }
    return "0.167em";
}

inline std::string_view big_op_glyph(BigOpKind k) {
    switch (k) {
        case BigOpKind::integral: return "∫";
        case BigOpKind::sum: return "∑";
        case BigOpKind::product: return "∏";
    }
    return "∫";
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

class MathmlEmitter {
public:
    std::string emit(const Node& n) const {
        return std::visit([&](const auto& x) { return emit(x); }, n.v);
    }

private:
    static std::string el(std::string_view tag, const std::string& body, std::string_view attrs = {}) {
        std::string out = "<" + std::string(tag);
        if (!attrs.empty()) out += " " + std::string(attrs);
        return out + ">" + body + "</" + std::string(tag) + ">";
    }

    static std::string mo(std::string_view glyph) { return el("mo", xml_escape(glyph)); }

    std::string emit(const Symbol& s) const {
        switch (s.cls) {
            case SymbolClass::blackboard: return el("mi", xml_escape(s.name), "mathvariant=\"double-struck\"");
            case SymbolClass::operator_name: return el("mi", xml_escape(s.name), "mathvariant=\"normal\"");
            default: return el("mi", xml_escape(s.name));
        }
    }

    std::string emit(const Number& n) const { return el("mn", xml_escape(n.text)); }
    std::string emit(const Operator& o) const { return mo(o.glyph); }

    std::string emit(const Row& r) const {
        std::string body;
        for (const auto& c : r.children) body += emit(c);
        return el("mrow", body);
    }

    std::string emit(const Fraction& f) const { return el("mfrac", emit(*f.numerator) + emit(*f.denominator)); }

    std::string emit(const Root& r) const {
        if (r.index) return el("mroot", emit(*r.radicand) + emit(**r.index));
        return el("msqrt", emit(*r.radicand));
    }

    std::string emit(const Script& s) const {
        const std::string base = emit(*s.base);
        if (s.sub && s.sup) return el("msubsup", base + emit(**s.sub) + emit(**s.sup));
        if (s.sub) return el("msub", base + emit(**s.sub));
        return el("msup", base + emit(**s.sup));
    }

    std::string emit(const Delimited& d) const {
        std::string body;
        if (!d.left.empty()) body += el("mo", xml_escape(d.left), "fence=\"true\"");
        body += emit(*d.body);
        if (!d.right.empty()) body += el("mo", xml_escape(d.right), "fence=\"true\"");
        return el("mrow", body);
    }

    std::string emit(const Matrix& m) const {
        std::string align;
        for (char c : m.colspec) {
            const char* a = c == 'l' ? "left" : c == 'r' ? "right" : c == 'c' ? "center" : nullptr;
            if (a == nullptr) continue;
            if (!align.empty()) align += ' ';
            align += a;
        }
        std::string rows;
        for (const auto& r : m.rows) {
            std::string cells;
            for (const auto& c : r) cells += el("mtd", emit(c));
            rows += el("mtr", cells);
        }
        return el("mtable", rows, "columnalign=\"" + align + "\"");
    }

    std::string emit(const BigOp& b) const {
        const std::string op = mo(big_op_glyph(b.op));
        const bool integral = b.op == BigOpKind::integral;
        std::string head;
        if (b.lower && b.upper) {
            head = el(integral ? "msubsup" : "munderover", op + emit(**b.lower) + emit(**b.upper));
        } else if (b.lower) {
            head = el(integral ? "msub" : "munder", op + emit(**b.lower));
        } else if (b.upper) {
            head = el(integral ? "msup" : "mover", op + emit(**b.upper));
        } else {
            head = op;
        }
        if (!b.body) return head;
        return el("mrow", head + emit(**b.body));
    }

    std::string emit(const TextRun& t) const {
        switch (t.style) {
            case TextStyle::roman: return el("mtext", xml_escape(t.text), "mathvariant=\"normal\"");
            case TextStyle::bold: return el("mtext", xml_escape(t.text), "mathvariant=\"bold\"");
            case TextStyle::plain: break;
        }
        return el("mtext", xml_escape(t.text));
    }

    std::string emit(const Spacing& s) const {
        return "<mspace width=\"" + std::string(mathml_space_width(s.width)) + "\"/>";
    }

    std::string emit(const Ellipsis&) const { return mo("⋯"); }

    std::string emit(const BigO& b) const {
        return el("mrow", el("mi", "O") + mo("(") + emit(*b.arg) + mo(")"));
    }
};

}  // namespace detail

inline std::string to_mathml(const Node& n) {
    return "<math xmlns=\"" + std::string(kMathmlNamespace) + "\">" + detail::MathmlEmitter{}.emit(n) + "</math>";
}

}  // namespace casbridge::formula
