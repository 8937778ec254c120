#include <casbridge/latex_parser.hpp>
#include <casbridge/render_latex.hpp>

#include "support/corpus_math.hpp"
#include "support/testdata.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace casbridge::formula;
namespace cbt = casbridge::testing;

namespace {

Node parsed(std::string_view latex) {
    auto r = parse(latex);
    if (!r.formula) throw std::runtime_error("parse failed: " + r.error->to_string());
    return *r.formula;
}

std::vector<TokenKind> kinds(std::string_view latex) {
    const auto r = tokenize(latex);
    std::vector<TokenKind> out;
    for (const auto& t : std::get<std::vector<Token>>(r)) out.push_back(t.kind);
    return out;
}

Node sq(Node base) { return sup(std::move(base), num("2")); }

// No Row directly inside a Row, no one-item rows, scripts carry a script,
// matrix rows have the declared width (a trailing empty row is dropped).
void check_shape(const Node& n, bool row_parent = false) {
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Row>) {
                EXPECT_FALSE(row_parent) << "nested row";
                EXPECT_NE(x.children.size(), 1u) << "one-item row";
                for (const auto& c : x.children) check_shape(c, true);
            } else if constexpr (std::is_same_v<T, Fraction>) {
                check_shape(*x.numerator);
                check_shape(*x.denominator);
            } else if constexpr (std::is_same_v<T, Root>) {
                check_shape(*x.radicand);
                if (x.index) check_shape(**x.index);
            } else if constexpr (std::is_same_v<T, Script>) {
                EXPECT_TRUE(x.sub || x.sup);
                check_shape(*x.base);
                if (x.sub) check_shape(**x.sub);
                if (x.sup) check_shape(**x.sup);
            } else if constexpr (std::is_same_v<T, Delimited>) {
                check_shape(*x.body);
            } else if constexpr (std::is_same_v<T, Matrix>) {
                for (const auto& r : x.rows) {
                    EXPECT_EQ(r.size(), casbridge::formula::detail::column_count(x.colspec));
                    for (const auto& c : r) check_shape(c);
                }
            } else if constexpr (std::is_same_v<T, BigOp>) {
                if (x.lower) check_shape(**x.lower);
                if (x.upper) check_shape(**x.upper);
                if (x.body) check_shape(**x.body);
            } else if constexpr (std::is_same_v<T, BigO>) {
                check_shape(*x.arg);
            }
        },
        n.v);
}

void collect_variants(const Node& n, std::set<std::size_t>& seen) {
    seen.insert(n.v.index());
    for_each_child(n, [&](const Node& c) { collect_variants(c, seen); });
}

}  // namespace

TEST(Tokenizer, Fraction) {
    EXPECT_EQ(kinds("\\frac{a}{b}"),
              (std::vector<TokenKind>{TokenKind::command, TokenKind::group_open, TokenKind::symbol,
                                      TokenKind::group_close, TokenKind::group_open, TokenKind::symbol,
                                      TokenKind::group_close}));
}

TEST(Tokenizer, ArrayEnvironment) {
    const auto toks = std::get<std::vector<Token>>(tokenize("\\begin{array}{cc} a & b\\\\ c & d\\\\ \\end{array}"));
    ASSERT_FALSE(toks.empty());
    EXPECT_EQ(toks.front().kind, TokenKind::env_begin);
    EXPECT_EQ(toks.front().text, "array");
    EXPECT_EQ(toks.front().arg, "cc");
    EXPECT_EQ(toks.back().kind, TokenKind::env_end);
    EXPECT_EQ(toks.back().text, "array");
    EXPECT_EQ(std::count_if(toks.begin(), toks.end(), [](const Token& t) { return t.kind == TokenKind::ampersand; }), 2);
    EXPECT_EQ(std::count_if(toks.begin(), toks.end(), [](const Token& t) { return t.kind == TokenKind::row_break; }), 2);
}

TEST(Tokenizer, Sqrt) {
    const auto k = kinds("\\sqrt{b^2 - 4 a c}");
    ASSERT_GE(k.size(), 5u);
    EXPECT_EQ((std::vector<TokenKind>(k.begin(), k.begin() + 5)),
              (std::vector<TokenKind>{TokenKind::command, TokenKind::group_open, TokenKind::symbol,
                                      TokenKind::superscript, TokenKind::digit_run}));
}

TEST(Tokenizer, OffsetsIncrease) {
    for (const auto& f : cbt::corpus_formulas()) {
        const auto toks = std::get<std::vector<Token>>(tokenize(f.latex));
        for (std::size_t i = 1; i < toks.size(); ++i) ASSERT_LT(toks[i - 1].offset, toks[i].offset) << f.latex;
    }
}

TEST(Tokenizer, AbsorbedMarkers) {
    EXPECT_EQ(kinds("$$\\displaystyle x$$"), (std::vector<TokenKind>{TokenKind::symbol}));
    EXPECT_EQ(kinds("$x$"), kinds("x"));
}

TEST(Tokenizer, UnterminatedEnvironmentName) {
    const auto r = tokenize("x \\begin{arr");
    ASSERT_TRUE(std::holds_alternative<ParseError>(r));
    EXPECT_EQ(std::get<ParseError>(r).offset, 8u);
}

TEST(Tokenizer, UnknownCommandToken) {
    const auto toks = std::get<std::vector<Token>>(tokenize("\\frobnicate"));
    ASSERT_EQ(toks.size(), 1u);
    EXPECT_EQ(toks[0].kind, TokenKind::command);
    EXPECT_EQ(toks[0].text, "frobnicate");
}

TEST(Parser, SingleSymbol) { EXPECT_EQ(parsed("x"), sym("x")); }

TEST(Parser, D1) {
    const Node expected = row({
        frac(row({sq(sym("x")), op("−"), sq(sym("y"))}), row({sq(sym("y")), op("+"), sq(sym("x"))})),
        op("+"),
        sq(sym("sin", SymbolClass::operator_name)),
        sym("α", SymbolClass::greek),
    });
    EXPECT_EQ(parsed("\\frac{x^2 - y^2}{y^2 + x^2} + \\sin^2 \\alpha"), expected);
}

TEST(Parser, MatrixInParens) {
    Matrix m;
    m.colspec = "cc";
    m.rows = {{sym("a"), sym("b")}, {sym("c"), sym("d")}};
    const Node expected = Delimited{"(", ")", Node(m)};
    EXPECT_EQ(parsed("\\left( \\begin{array}{cc} a & b\\\\ c & d\\\\ \\end{array} \\right)"), expected);
}

TEST(Parser, Integral) {
    BigOp b;
    b.op = BigOpKind::integral;
    b.lower = num("0");
    b.upper = sym("π", SymbolClass::greek);
    const Node expected = row({
        b,
        sup(sym("e"), row({sym("sin", SymbolClass::operator_name), sym("x")})),
        Spacing{SpacingClass::thick},
        sym("d"),
        sym("x"),
    });
    EXPECT_EQ(parsed("\\int_0^{\\pi} e^{\\sin x}\\; d x"), expected);
}

TEST(Parser, CasesWithoutRightDelimiter) {
    const auto n = parsed("\\left\\{ a \\right.");
    ASSERT_TRUE(n.is<Delimited>());
    EXPECT_EQ(n.as<Delimited>().left, "{");
    EXPECT_EQ(n.as<Delimited>().right, "");
}

TEST(Parser, DecimalNumber) { EXPECT_EQ(parsed("6.208758036"), num("6.208758036")); }

TEST(Parser, BigO) {
    const auto n = parsed("1 + O \\left( x^4 \\right)");
    ASSERT_TRUE(n.is<Row>());
    EXPECT_EQ(n.as<Row>().children.back(), Node(BigO{sup(sym("x"), num("4"))}));
}

TEST(Parser, TextPreservesSpaces) {
    EXPECT_EQ(parsed("\\text{ if  a}"), Node(TextRun{" if  a", TextStyle::plain}));
    EXPECT_EQ(parsed("\\mathrm{ln}"), Node(TextRun{"ln", TextStyle::roman}));
}

TEST(Parser, WhitespaceInsignificant) { EXPECT_EQ(parsed("a+b"), parsed("  a \n+\tb ")); }

TEST(Parser, UnknownCommandWarns) {
    const auto r = parse("\\frobnicate x");
    ASSERT_TRUE(r.formula);
    EXPECT_EQ(r.formula->as<Row>().children.front(), sym("frobnicate", SymbolClass::operator_name));
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_EQ(r.warnings[0].offset, 0u);
}

TEST(Parser, Errors) {
    struct Case {
        const char* latex;
        std::size_t offset;
    };
    for (const auto& c : std::vector<Case>{
             {"\\frac{a}", 8},
             {"\\left( a", 8},
             {"a \\right)", 2},
             {"\\begin{array}{cc} a \\end{matrix}", 20},
             {"{a", 0},
             {"a}", 1},
             {"x^", 2},
             {"x^2^3", 3},
         }) {
        const auto r = parse(c.latex);
        ASSERT_FALSE(r.formula) << c.latex;
        EXPECT_EQ(r.error->offset, c.offset) << c.latex << ": " << r.error->to_string();
        EXPECT_FALSE(r.error->message.empty());
        EXPECT_FALSE(r.error->found.empty());
    }
}

TEST(Parser, ErrorOffsetInsideInput) {
    for (const auto* s : {"\\frac", "\\sqrt[", "\\left(", "\\begin{array}{c", "&", "\\\\", "_", "\\mathbb{"}) {
        const auto r = parse(s);
        ASSERT_FALSE(r.formula) << s;
        EXPECT_LE(r.error->offset, std::string_view(s).size()) << s;
    }
}

TEST(CommandTable, Examples) {
    EXPECT_EQ(*lookup_command("wedge")->node, op("∧", OperatorClass::binary));
    EXPECT_EQ(*lookup_command("Gamma")->node, sym("Γ", SymbolClass::greek));
    EXPECT_EQ(lookup_command("frobnicate"), nullptr);
    for (const auto* name : {"frac", "sqrt", "left", "right", "begin", "end", "alpha", "gamma", "pi", "zeta",
                             "mathbb", "wedge", "neq", "cdots", "partial", "sin", "log", "ln", "exp", "mathrm",
                             "mathbf", "text", "displaystyle", ",", ";", " ", "!"}) {
        EXPECT_NE(lookup_command(name), nullptr) << name;
    }
}

TEST(Corpus, EveryPayloadParses) {
    const auto& all = cbt::corpus_formulas();
    EXPECT_EQ(all.size(), cbt::kCorpusMathPayloads);
    for (const auto& f : all) {
        const auto r = parse(f.latex);
        ASSERT_TRUE(r.formula) << f.corpus << " " << f.label << ": " << r.error->to_string() << "\n" << f.latex;
        EXPECT_TRUE(r.warnings.empty()) << f.corpus << " " << f.label << ": " << r.warnings[0].message;
        check_shape(*r.formula);
    }
}

TEST(Corpus, EveryVariantInstantiated) {
    std::set<std::size_t> seen;
    for (const auto& f : cbt::corpus_formulas()) collect_variants(parsed(f.latex), seen);
    for (std::size_t i = 0; i < kVariantCount; ++i) EXPECT_TRUE(seen.count(i)) << variant_name(i) << " never parsed";
}

TEST(Corpus, Deterministic) {
    for (const auto& f : cbt::corpus_formulas()) {
        EXPECT_EQ(dump_ast(parsed(f.latex)), dump_ast(parsed(f.latex)));
    }
}

TEST(Parser, ErrorLocality) {
    // Damage corpus payloads at random, then check that cutting a failing
    // input at its error offset does not move the error earlier.
    std::mt19937 rng(42);
    const std::string noise = "{}^_&\\$()[]a1 ";
    std::size_t failures = 0;
    for (const auto& f : cbt::corpus_formulas()) {
        for (int i = 0; i < 40; ++i) {
            std::string s = f.latex;
            const int edits = 1 + static_cast<int>(rng() % 3);
            for (int e = 0; e < edits && !s.empty(); ++e) {
                const auto pos = rng() % s.size();
                switch (rng() % 3) {
                    case 0: s.erase(pos, 1); break;
                    case 1: s.insert(pos, 1, noise[rng() % noise.size()]); break;
                    default: s = s.substr(0, pos); break;
                }
            }
            const auto r = parse(s);
            if (r.formula) continue;
            ++failures;
            ASSERT_LE(r.error->offset, s.size()) << s;
            const auto cut = parse(std::string_view(s).substr(0, r.error->offset));
            if (!cut.formula) EXPECT_LE(cut.error->offset, r.error->offset) << s;
        }
    }
    EXPECT_GT(failures, 100u);
}
