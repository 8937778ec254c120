#include <casbridge/latex_parser.hpp>
#include <casbridge/render_latex.hpp>
#include <casbridge/render_mathml.hpp>
#include <casbridge/render_unicode.hpp>
#include <casbridge/text.hpp>

#include "support/ast_gen.hpp"
#include "support/corpus_math.hpp"
#include "support/layout_check.hpp"
#include "support/mini_xml.hpp"
#include "support/golden.hpp"
#include "support/testdata.hpp"

#include <gtest/gtest.h>

using namespace casbridge::formula;
namespace cbt = casbridge::testing;
using casbridge::text::display_width;

namespace {

Node parsed(std::string_view latex) {
    auto r = parse(latex);
    if (!r.formula) throw std::runtime_error("parse failed: " + r.error->to_string());
    return *r.formula;
}

const cbt::CorpusFormula& corpus_formula(const std::string& corpus, const std::string& label) {
    for (const auto& f : cbt::corpus_formulas()) {
        if (f.corpus == corpus && f.label == label) return f;
    }
    throw std::runtime_error("no formula " + label + " in " + corpus);
}

// The solve output of the MuPAD corpus: the one payload that is a case brace.
const cbt::CorpusFormula& mupad_cases() {
    for (const auto& f : cbt::corpus_formulas()) {
        if (f.corpus != "corpus2") continue;
        const auto n = parsed(f.latex);
        if (n.is<Delimited>() && n.as<Delimited>().left == "{" && n.as<Delimited>().body->is<Matrix>()) return f;
    }
    throw std::runtime_error("no case construct in corpus2");
}

// ---------------------------------------------------------------------------
// Layout invariants

::testing::AssertionResult layout_ok(const Node& n, GlyphMode mode) {
    if (auto why = cbt::layout_violation(n, mode)) return ::testing::AssertionFailure() << *why;
    return ::testing::AssertionSuccess();
}

// ---------------------------------------------------------------------------
// MathML structure, walked in lockstep with the AST

::testing::AssertionResult mathml_matches(const cbt::XmlElement& e, const Node& n);

::testing::AssertionResult expect_tag(const cbt::XmlElement& e, std::string_view tag, std::size_t children) {
    if (e.name != tag) return ::testing::AssertionFailure() << "expected <" << tag << ">, found <" << e.name << ">";
    if (e.children.size() != children) {
        return ::testing::AssertionFailure() << "<" << tag << "> has " << e.children.size() << " children, expected "
                                             << children;
    }
    return ::testing::AssertionSuccess();
}

::testing::AssertionResult leaf(const cbt::XmlElement& e, std::string_view tag, const std::string& text) {
    if (auto r = expect_tag(e, tag, 0); !r) return r;
    if (e.text != text) return ::testing::AssertionFailure() << "<" << tag << "> text \"" << e.text << "\" != \"" << text << "\"";
    return ::testing::AssertionSuccess();
}

::testing::AssertionResult all_match(const cbt::XmlElement& e, const std::vector<const Node*>& nodes,
                                     std::size_t from = 0) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (auto r = mathml_matches(e.children[from + i], *nodes[i]); !r) return r;
    }
    return ::testing::AssertionSuccess();
}

::testing::AssertionResult mathml_matches(const cbt::XmlElement& e, const Node& n) {
    return std::visit(
        [&](const auto& x) -> ::testing::AssertionResult {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Symbol>) {
                if (auto r = leaf(e, "mi", x.name); !r) return r;
                const auto it = e.attrs.find("mathvariant");
                const std::string variant = it == e.attrs.end() ? "" : it->second;
                const std::string want = x.cls == SymbolClass::blackboard      ? "double-struck"
                                         : x.cls == SymbolClass::operator_name ? "normal"
                                                                               : "";
                if (variant != want) return ::testing::AssertionFailure() << "mathvariant " << variant;
                return ::testing::AssertionSuccess();
            } else if constexpr (std::is_same_v<T, Number>) {
                return leaf(e, "mn", x.text);
            } else if constexpr (std::is_same_v<T, Operator>) {
                return leaf(e, "mo", x.glyph);
            } else if constexpr (std::is_same_v<T, Row>) {
                if (auto r = expect_tag(e, "mrow", x.children.size()); !r) return r;
                std::vector<const Node*> kids;
                for (const auto& c : x.children) kids.push_back(&c);
                return all_match(e, kids);
            } else if constexpr (std::is_same_v<T, Fraction>) {
                if (auto r = expect_tag(e, "mfrac", 2); !r) return r;
                return all_match(e, {&*x.numerator, &*x.denominator});
            } else if constexpr (std::is_same_v<T, Root>) {
                if (x.index) {
                    if (auto r = expect_tag(e, "mroot", 2); !r) return r;
                    return all_match(e, {&*x.radicand, &**x.index});
                }
                if (auto r = expect_tag(e, "msqrt", 1); !r) return r;
                return all_match(e, {&*x.radicand});
            } else if constexpr (std::is_same_v<T, Script>) {
                std::vector<const Node*> kids{&*x.base};
                if (x.sub) kids.push_back(&**x.sub);
                if (x.sup) kids.push_back(&**x.sup);
                const char* tag = x.sub && x.sup ? "msubsup" : x.sub ? "msub" : "msup";
                if (auto r = expect_tag(e, tag, kids.size()); !r) return r;
                return all_match(e, kids);
            } else if constexpr (std::is_same_v<T, Delimited>) {
                const std::size_t fences = (x.left.empty() ? 0 : 1) + (x.right.empty() ? 0 : 1);
                if (auto r = expect_tag(e, "mrow", fences + 1); !r) return r;
                std::size_t i = 0;
                if (!x.left.empty()) {
                    if (auto r = leaf(e.children[i++], "mo", x.left); !r) return r;
                }
                if (auto r = mathml_matches(e.children[i++], *x.body); !r) return r;
                if (!x.right.empty()) return leaf(e.children[i], "mo", x.right);
                return ::testing::AssertionSuccess();
            } else if constexpr (std::is_same_v<T, Matrix>) {
                if (auto r = expect_tag(e, "mtable", x.rows.size()); !r) return r;
                for (std::size_t i = 0; i < x.rows.size(); ++i) {
                    const auto& tr = e.children[i];
                    if (auto r = expect_tag(tr, "mtr", x.rows[i].size()); !r) return r;
                    for (std::size_t j = 0; j < x.rows[i].size(); ++j) {
                        if (auto r = expect_tag(tr.children[j], "mtd", 1); !r) return r;
                        if (auto r = mathml_matches(tr.children[j].children[0], x.rows[i][j]); !r) return r;
                    }
                }
                return ::testing::AssertionSuccess();
            } else if constexpr (std::is_same_v<T, BigOp>) {
                const cbt::XmlElement* head = &e;
                if (x.body) {
                    if (auto r = expect_tag(e, "mrow", 2); !r) return r;
                    head = &e.children[0];
                    if (auto r = mathml_matches(e.children[1], **x.body); !r) return r;
                }
                const bool integral = x.op == BigOpKind::integral;
                const std::string glyph(big_op_glyph(x.op));
                if (!x.lower && !x.upper) return leaf(*head, "mo", glyph);
                std::vector<const Node*> limits;
                if (x.lower) limits.push_back(&**x.lower);
                if (x.upper) limits.push_back(&**x.upper);
                const char* tag = x.lower && x.upper ? (integral ? "msubsup" : "munderover")
                                  : x.lower          ? (integral ? "msub" : "munder")
                                                     : (integral ? "msup" : "mover");
                if (auto r = expect_tag(*head, tag, limits.size() + 1); !r) return r;
                if (auto r = leaf(head->children[0], "mo", glyph); !r) return r;
                return all_match(*head, limits, 1);
            } else if constexpr (std::is_same_v<T, TextRun>) {
                return leaf(e, "mtext", x.text);
            } else if constexpr (std::is_same_v<T, Spacing>) {
                if (auto r = expect_tag(e, "mspace", 0); !r) return r;
                if (!e.attrs.count("width")) return ::testing::AssertionFailure() << "mspace without width";
                return ::testing::AssertionSuccess();
            } else if constexpr (std::is_same_v<T, Ellipsis>) {
                return leaf(e, "mo", "⋯");
            } else {
                if (auto r = expect_tag(e, "mrow", 4); !r) return r;
                if (auto r = leaf(e.children[0], "mi", "O"); !r) return r;
                if (auto r = leaf(e.children[1], "mo", "("); !r) return r;
                if (auto r = mathml_matches(e.children[2], *x.arg); !r) return r;
                return leaf(e.children[3], "mo", ")");
            }
        },
        n.v);
}

::testing::AssertionResult mathml_ok(const Node& n) {
    const auto xml = to_mathml(n);
    cbt::XmlElement root;
    try {
        root = cbt::parse_xml(xml);
    } catch (const std::exception& e) {
        return ::testing::AssertionFailure() << e.what() << "\n" << xml;
    }
    if (root.name != "math" || root.attrs["xmlns"] != std::string(kMathmlNamespace) || root.children.size() != 1) {
        return ::testing::AssertionFailure() << "bad <math> root\n" << xml;
    }
    auto r = mathml_matches(root.children[0], n);
    if (!r) r << "\n" << xml;
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Canonical LaTeX

TEST(CanonicalLatex, MatrixForm) {
    EXPECT_EQ(to_canonical_latex(parsed("\\left( \\begin{array}{cc} a & b\\\\ c & d\\\\ \\end{array} \\right)")),
              "\\left( \\begin{array}{cc} a & b \\\\ c & d \\end{array} \\right)");
}

TEST(CanonicalLatex, Simple) {
    EXPECT_EQ(to_canonical_latex(parsed("x^2")), "x^{2}");
    EXPECT_EQ(to_canonical_latex(parsed("\\frac{a}{b}")), "\\frac{a}{b}");
    EXPECT_EQ(to_canonical_latex(parsed("\\sqrt{b^2 - 4 a c}")), "\\sqrt{b^{2} - 4 a c}");
}

TEST(CanonicalLatex, CorpusRoundTrip) {
    for (const auto& f : cbt::corpus_formulas()) {
        const auto n = parsed(f.latex);
        const auto canon = to_canonical_latex(n);
        const auto again = parse(canon);
        ASSERT_TRUE(again.formula) << f.label << ": " << canon << "\n" << again.error->to_string();
        EXPECT_EQ(*again.formula, n) << f.label << ": " << canon;
        EXPECT_EQ(to_canonical_latex(*again.formula), canon) << f.label;
    }
}

TEST(CanonicalLatex, RandomRoundTrip) {
    cbt::AstGen gen(1234);
    for (int i = 0; i < 2000; ++i) {
        const Node n = gen.formula(5);
        ASSERT_LE(cbt::depth_of(n), 5) << dump_ast(n);
        const auto canon = to_canonical_latex(n);
        const auto r = parse(canon);
        ASSERT_TRUE(r.formula) << "case " << i << ": " << canon << "\n" << r.error->to_string() << "\n" << dump_ast(n);
        ASSERT_EQ(*r.formula, n) << "case " << i << ": " << canon << "\n"
                                 << dump_ast(n) << "---\n"
                                 << dump_ast(*r.formula);
        ASSERT_EQ(to_canonical_latex(*r.formula), canon);
    }
}

// ---------------------------------------------------------------------------
// Unicode layout

TEST(UnicodeLayout, Fraction) {
    const auto b = to_unicode(parsed("\\frac{a}{b}"));
    EXPECT_EQ(b.lines, (std::vector<std::string>{" a ", "───", " b "}));
    EXPECT_EQ(b.baseline, 1u);
    const auto a = to_unicode(parsed("\\frac{a}{b}"), GlyphMode::ascii);
    EXPECT_EQ(a.lines, (std::vector<std::string>{" a ", "---", " b "}));
}

TEST(UnicodeLayout, FractionRulePadsWiderPart) {
    const auto b = to_unicode(parsed("\\frac{x+1}{y}"));
    EXPECT_EQ(b.lines, (std::vector<std::string>{" x + 1 ", "───────", "   y   "}));
    EXPECT_EQ(b.width, 7u);
    EXPECT_EQ(b.baseline, 1u);
}

TEST(UnicodeLayout, Superscript) {
    const auto b = to_unicode(parsed("x^2"));
    EXPECT_EQ(b.lines, (std::vector<std::string>{" 2", "x "}));
    EXPECT_EQ(b.baseline, 1u);
}

TEST(UnicodeLayout, AsciiHasNoWideGlyphs) {
    for (const auto& f : cbt::corpus_formulas()) {
        const auto s = to_unicode(parsed(f.latex), GlyphMode::ascii).str();
        for (unsigned char c : s) ASSERT_LT(c, 0x80) << f.label << "\n" << s;
    }
}

TEST(UnicodeLayout, CorpusInvariants) {
    for (const auto& f : cbt::corpus_formulas()) {
        const auto n = parsed(f.latex);
        EXPECT_TRUE(layout_ok(n, GlyphMode::unicode)) << f.label;
        EXPECT_TRUE(layout_ok(n, GlyphMode::ascii)) << f.label;
    }
}

TEST(UnicodeLayout, RandomInvariants) {
    cbt::AstGen gen(99);
    for (int i = 0; i < 1500; ++i) {
        const Node n = gen.formula(5);
        ASSERT_TRUE(layout_ok(n, GlyphMode::unicode)) << "case " << i;
        ASSERT_TRUE(layout_ok(n, GlyphMode::ascii)) << "case " << i;
    }
}

TEST(UnicodeLayout, EmptyRow) {
    const auto b = to_unicode(Row{});
    EXPECT_EQ(b.width, 0u);
    EXPECT_EQ(b.height(), 1u);
    EXPECT_TRUE(layout_well_formed(b));
}

namespace {

struct GoldenCase {
    const char* name;
    std::string latex;
};

std::vector<GoldenCase> golden_cases() {
    return {
        {"maxima_D1", corpus_formula("corpus1", "D1").latex},
        {"maxima_D3", corpus_formula("corpus1", "D3").latex},
        {"maxima_D11", corpus_formula("corpus1", "D11").latex},
        {"maxima_D12", corpus_formula("corpus1", "D12").latex},
        {"mupad_cases", mupad_cases().latex},
    };
}

}  // namespace

TEST(UnicodeLayout, Goldens) {
    for (const auto& g : golden_cases()) {
        const auto n = parsed(g.latex);
        EXPECT_TRUE(cbt::matches_golden(std::string(g.name) + ".unicode.txt", to_unicode(n).str()));
        EXPECT_TRUE(cbt::matches_golden(std::string(g.name) + ".ascii.txt", to_unicode(n, GlyphMode::ascii).str()));
    }
}

TEST(UnicodeLayout, CaseConstructShape) {
    const auto n = parsed(mupad_cases().latex);
    const auto& d = n.as<Delimited>();
    EXPECT_EQ(d.right, "");
    EXPECT_EQ(d.body->as<Matrix>().rows.size(), 4u);
    const auto b = to_unicode(n);
    EXPECT_EQ(b.lines.front().substr(0, std::string("⎧").size()), "⎧");
    EXPECT_EQ(b.lines.back().substr(0, std::string("⎩").size()), "⎩");
}

// ---------------------------------------------------------------------------
// MathML

TEST(Mathml, Simple) {
    EXPECT_EQ(to_mathml(parsed("\\frac{a}{2}")),
              "<math xmlns=\"http://www.w3.org/1998/Math/MathML\"><mfrac><mi>a</mi><mn>2</mn></mfrac></math>");
    EXPECT_EQ(to_mathml(parsed("a < b")),
              "<math xmlns=\"http://www.w3.org/1998/Math/MathML\"><mrow><mi>a</mi><mo>&lt;</mo><mi>b</mi></mrow></math>");
}

TEST(Mathml, CorpusStructure) {
    for (const auto& f : cbt::corpus_formulas()) EXPECT_TRUE(mathml_ok(parsed(f.latex))) << f.label;
}

TEST(Mathml, RandomStructure) {
    cbt::AstGen gen(555);
    for (int i = 0; i < 1000; ++i) ASSERT_TRUE(mathml_ok(gen.formula(5))) << "case " << i;
}
