#pragma once

// Recursive-descent parser from LaTeX math to the formula AST.
//
//   formula  := row EOF
//   row      := item*                       (stops at } & \\ \right \end EOF)
//   item     := atom scripts?
//   scripts  := ('^' arg | '_' arg)+        (at most one of each)
//   atom     := symbol | number | group | command | \left d row \right d
//             | \begin{array}{spec} cells \end{array} | spacing
//   group    := '{' row '}'
//   arg      := group | atom
//
// Rows are flattened: a group inside a row contributes its items directly.
// A one-item row collapses to the item. \int, \sum and \prod take their
// limits as scripts and an optional braced body. "O" followed by
// \left( ... \right) is the big-O construct. Unknown commands become
// operator-name symbols and are reported as warnings.

#include <casbridge/command_table.hpp>
#include <casbridge/formula.hpp>
#include <casbridge/latex_lexer.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace casbridge::formula {

struct ParseWarning {
    std::size_t offset = 0;
    std::string message;
    friend bool operator==(const ParseWarning&, const ParseWarning&) = default;
};

struct ParseResult {
    std::optional<Node> formula;
    std::optional<ParseError> error;
    std::vector<ParseWarning> warnings;

    explicit operator bool() const { return formula.has_value(); }
    const Node& value() const { return *formula; }
};

namespace detail {

/// Columns declared by an array column spec ("cc", "l|r", ...).
inline std::size_t column_count(std::string_view spec) {
    std::size_t n = 0;
    for (char c : spec) {
        if (c == 'l' || c == 'c' || c == 'r') ++n;
    }
    return n;
}

class ParseFailure {
public:
    explicit ParseFailure(ParseError e) : error(std::move(e)) {}
    ParseError error;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, std::size_t input_size)
        : toks_(std::move(tokens)), size_(input_size) {}

    ParseResult run() {
        ParseResult result;
        try {
            Node n = parse_row();
            if (!at_end()) {
                fail({"end of input"}, "unexpected " + describe(peek()));
            }
            result.formula = std::move(n);
        } catch (const ParseFailure& f) {
            result.error = f.error;
        }
        result.warnings = std::move(warnings_);
        return result;
    }

private:
    bool at_end() const { return pos_ >= toks_.size(); }
    const Token& peek() const { return toks_[pos_]; }
    bool peek_is(TokenKind k) const { return !at_end() && peek().kind == k; }
    bool peek_symbol(std::string_view s) const { return peek_is(TokenKind::symbol) && peek().text == s; }
    std::size_t here() const { return at_end() ? size_ : peek().offset; }
    std::string found() const { return at_end() ? "end of input" : describe(peek()); }

    [[noreturn]] void fail(std::vector<std::string> expected, std::string message) const {
        throw ParseFailure(ParseError{here(), std::move(expected), found(), std::move(message)});
    }

    void expect(TokenKind k, const char* what) {
        if (!peek_is(k)) fail({what}, std::string("expected ") + what);
        ++pos_;
    }

    bool at_row_end() const {
        if (at_end()) return true;
        switch (peek().kind) {
            case TokenKind::group_close:
            case TokenKind::right_delim:
            case TokenKind::ampersand:
            case TokenKind::row_break:
            case TokenKind::env_end: return true;
            default: break;
        }
        return index_depth_ > 0 && peek_symbol("]");
    }

    static Node make_row(std::vector<Node> items) {
        if (items.size() == 1) return std::move(items.front());
        return Row{std::move(items)};
    }

    static void append_flat(std::vector<Node>& items, Node n) {
        if (n.is<Row>()) {
            for (auto& c : n.as<Row>().children) items.push_back(std::move(c));
        } else {
            items.push_back(std::move(n));
        }
    }

    Node parse_row() {
        std::vector<Node> items;
        while (!at_row_end()) append_flat(items, parse_item());
        return make_row(std::move(items));
    }

    Node parse_item() {
        Node base = parse_atom(true);
        if (!peek_is(TokenKind::superscript) && !peek_is(TokenKind::subscript)) return base;
        Script s{std::move(base), std::nullopt, std::nullopt};
        parse_scripts(s.sub, s.sup);
        return s;
    }

    void parse_scripts(std::optional<Boxed<Node>>& lower, std::optional<Boxed<Node>>& upper) {
        while (peek_is(TokenKind::superscript) || peek_is(TokenKind::subscript)) {
            const bool is_sup = peek().kind == TokenKind::superscript;
            auto& slot = is_sup ? upper : lower;
            if (slot) fail({}, is_sup ? "double superscript" : "double subscript");
            ++pos_;
            slot = parse_arg(is_sup ? "superscript argument" : "subscript argument");
        }
    }

    Node parse_arg(const char* what) {
        if (peek_is(TokenKind::group_open)) return parse_group();
        if (at_row_end() || peek_is(TokenKind::superscript) || peek_is(TokenKind::subscript)) {
            fail({what}, std::string("missing ") + what);
        }
        return parse_atom(false);
    }

    Node parse_group() {
        expect(TokenKind::group_open, "'{'");
        Node body = parse_row();
        expect(TokenKind::group_close, "'}'");
        return body;
    }

    Node parse_atom(bool in_row) {
        if (at_end()) fail({"expression"}, "unexpected end of input");
        const Token& t = peek();
        switch (t.kind) {
            case TokenKind::symbol: {
                ++pos_;
                if (t.text == "O" && in_row && peek_is(TokenKind::left_delim) && peek().text == "(") {
                    Node d = parse_delimited();
                    auto& del = d.as<Delimited>();
                    if (del.right == ")") return BigO{std::move(*del.body)};
                    Row r;
                    r.children.push_back(Symbol{"O", SymbolClass::latin});
                    r.children.push_back(std::move(d));
                    return r;
                }
                return classify_symbol(t);
            }
            case TokenKind::digit_run: ++pos_; return Number{t.text};
            case TokenKind::group_open: return parse_group();
            case TokenKind::spacing: {
                ++pos_;
                for (auto w : {SpacingClass::thin, SpacingClass::medium, SpacingClass::thick,
                               SpacingClass::negthin, SpacingClass::space, SpacingClass::quad}) {
                    if (to_string(w) == t.text) return Spacing{w};
                }
                return Spacing{};
            }
            case TokenKind::left_delim: return parse_delimited();
            case TokenKind::env_begin: return parse_environment();
            case TokenKind::command: return parse_command();
            case TokenKind::superscript:
            case TokenKind::subscript:
                // Script with an empty base, as in "{}^2".
                return Row{};
            case TokenKind::right_delim: fail({"\\left"}, "\\right without matching \\left");
            case TokenKind::env_end: fail({}, "\\end{" + t.text + "} without matching \\begin");
            default: fail({"expression"}, "unexpected " + describe(t));
        }
    }

    Node classify_symbol(const Token& t) {
        if (t.text.size() == 1 && is_letter(t.text[0])) return Symbol{t.text, SymbolClass::latin};
        if (auto n = classify_math_char(t.text)) return *n;
        // Literal Unicode glyphs that the table knows (e.g. "α").
        for (const auto& [name, info] : command_table()) {
            if (info.node && info.node->is<Symbol>() && info.node->as<Symbol>().name == t.text) return *info.node;
        }
        if (t.text.size() > 1) return Symbol{t.text, SymbolClass::latin};
        warnings_.push_back({t.offset, "unsupported character '" + t.text + "'"});
        return Symbol{t.text, SymbolClass::operator_name};
    }

    Node parse_command() {
        const Token& t = peek();
        const std::size_t at = t.offset;
        const std::string name = t.text;
        ++pos_;
        const CommandInfo* info = lookup_command(name);
        if (info == nullptr) {
            warnings_.push_back({at, "unknown command \\" + name});
            return Symbol{name, SymbolClass::operator_name};
        }
        switch (info->category) {
            case CommandCategory::structure:
                if (name == "frac") {
                    Node n = parse_arg("numerator");
                    Node d = parse_arg("denominator");
                    return Fraction{std::move(n), std::move(d)};
                }
                if (name == "sqrt") {
                    std::optional<Boxed<Node>> index;
                    if (peek_symbol("[")) {
                        ++pos_;
                        ++index_depth_;
                        Node idx = parse_row();
                        --index_depth_;
                        if (!peek_symbol("]")) fail({"']'"}, "unterminated root index");
                        ++pos_;
                        index = std::move(idx);
                    }
                    return Root{parse_arg("radicand"), std::move(index)};
                }
                fail({}, "misplaced \\" + name);
            case CommandCategory::symbol:
            case CommandCategory::operator_:
            case CommandCategory::function:
            case CommandCategory::ellipsis:
            case CommandCategory::spacing: return *info->node;
            case CommandCategory::blackboard: {
                Node arg = parse_arg("letter");
                if (!arg.is<Symbol>() || arg.as<Symbol>().cls != SymbolClass::latin) {
                    throw ParseFailure(ParseError{at, {"single letter"}, "\\mathbb argument",
                                                  "\\mathbb expects a single letter"});
                }
                return Symbol{arg.as<Symbol>().name, SymbolClass::blackboard};
            }
            case CommandCategory::big_operator: {
                BigOp b;
                b.op = *info->big_op;
                parse_scripts(b.lower, b.upper);
                if (peek_is(TokenKind::group_open)) b.body = parse_group();
                return b;
            }
            case CommandCategory::style: return parse_text(*info->text_style);
            case CommandCategory::absorbed: return Row{};
        }
        fail({}, "unhandled command \\" + name);
    }

    Node parse_text(TextStyle style) {
        if (!peek_is(TokenKind::group_open)) fail({"'{'"}, "expected '{' after text command");
        const std::size_t open = peek().offset;
        ++pos_;
        std::string out;
        int depth = 1;
        while (!at_end()) {
            const Token& t = peek();
            ++pos_;
            switch (t.kind) {
                case TokenKind::group_open: ++depth; out += '{'; break;
                case TokenKind::group_close:
                    if (--depth == 0) return TextRun{std::move(out), style};
                    out += '}';
                    break;
                case TokenKind::command:
                    warnings_.push_back({t.offset, "command \\" + t.text + " inside text kept literally"});
                    out += "\\" + t.text;
                    break;
                default: out += t.text; break;
            }
        }
        throw ParseFailure(ParseError{open, {"'}'"}, "end of input", "unterminated text group"});
    }

    Node parse_delimited() {
        const Token& l = peek();
        const std::string left = l.text == "." ? "" : l.text;
        ++pos_;
        Node body = parse_row();
        if (!peek_is(TokenKind::right_delim)) fail({"\\right"}, "\\left" + l.text + " without matching \\right");
        const std::string right = peek().text == "." ? "" : peek().text;
        ++pos_;
        return Delimited{left, right, std::move(body)};
    }

    Node parse_environment() {
        const Token& b = peek();
        const std::string name = b.text;
        const std::string spec = b.arg;
        if (name != "array") fail({"\\begin{array}"}, "unsupported environment '" + name + "'");
        if (column_count(spec) == 0) fail({"column spec"}, "array needs a column spec");
        ++pos_;
        Matrix m;
        m.colspec = spec;
        std::vector<Node> cells;
        std::vector<std::size_t> row_offsets{here()};
        for (;;) {
            cells.push_back(parse_row());
            if (peek_is(TokenKind::ampersand)) {
                ++pos_;
                continue;
            }
            if (peek_is(TokenKind::row_break)) {
                ++pos_;
                m.rows.push_back(std::move(cells));
                cells.clear();
                row_offsets.push_back(here());
                continue;
            }
            if (peek_is(TokenKind::env_end)) break;
            fail({"'&'", "'\\\\'", "\\end{array}"}, "unterminated array");
        }
        const bool trailing_empty = cells.size() == 1 && cells.front() == Node(Row{});
        if (!trailing_empty || m.rows.empty()) m.rows.push_back(std::move(cells));
        if (peek().text != name) fail({"\\end{" + name + "}"}, "mismatched environment");
        const std::size_t end_offset = peek().offset;
        ++pos_;
        const std::size_t cols = column_count(spec);
        for (std::size_t i = 0; i < m.rows.size(); ++i) {
            if (m.rows[i].size() != cols) {
                throw ParseFailure(ParseError{
                    i < row_offsets.size() ? row_offsets[i] : end_offset,
                    {std::to_string(cols) + " cells"},
                    std::to_string(m.rows[i].size()) + " cells",
                    "array row " + std::to_string(i + 1) + " does not match column spec '" + spec + "'"});
            }
        }
        return m;
    }

    std::vector<Token> toks_;
    std::size_t size_;
    std::size_t pos_ = 0;
    int index_depth_ = 0;
    std::vector<ParseWarning> warnings_;
};

}  // namespace detail

inline ParseResult parse(std::string_view latex) {
    auto tokens = tokenize(latex);
    if (auto* err = std::get_if<ParseError>(&tokens)) {
        ParseResult r;
        r.error = std::move(*err);
        return r;
    }
    return detail::Parser(std::move(std::get<std::vector<Token>>(tokens)), latex.size()).run();
}

}  // namespace casbridge::formula
