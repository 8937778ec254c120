#pragma once

// Tokenizer for the LaTeX math subset.
//
// Absorbed without producing tokens: whitespace (outside text groups), `$`,
// `$$`, \displaystyle and \textstyle. The argument group of \text, \mbox,
// \mathrm and \mathbf is read in text mode, where every character, spaces
// included, becomes a symbol token.

#include <casbridge/command_table.hpp>
#include <casbridge/text.hpp>

#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace casbridge::formula {

enum class TokenKind {
    command,
    symbol,
    digit_run,
    group_open,
    group_close,
    superscript,
    subscript,
    ampersand,
    row_break,
    left_delim,
    right_delim,
    env_begin,
    env_end,
    spacing,
};

struct Token {
    TokenKind kind;
    // command: name; symbol: one code point; digit_run: digits; left/right
    // delimiter: "(" ... or "." for none; env: name; spacing: class name.
    std::string text;
    // env_begin: column spec.
    std::string arg;
    std::size_t offset = 0;

    friend bool operator==(const Token&, const Token&) = default;
};

inline std::string describe(const Token& t) {
    switch (t.kind) {
        case TokenKind::command: return "\\" + t.text;
        case TokenKind::symbol: return "'" + t.text + "'";
        case TokenKind::digit_run: return "number " + t.text;
        case TokenKind::group_open: return "'{'";
        case TokenKind::group_close: return "'}'";
        case TokenKind::superscript: return "'^'";
        case TokenKind::subscript: return "'_'";
        case TokenKind::ampersand: return "'&'";
        case TokenKind::row_break: return "'\\\\'";
        case TokenKind::left_delim: return "\\left" + t.text;
        case TokenKind::right_delim: return "\\right" + t.text;
        case TokenKind::env_begin: return "\\begin{" + t.text + "}";
        case TokenKind::env_end: return "\\end{" + t.text + "}";
        case TokenKind::spacing: return "spacing " + t.text;
    }
    return "?";
}

struct ParseError {
    std::size_t offset = 0;
    std::vector<std::string> expected;
    std::string found;
    std::string message;

    std::string to_string() const {
        std::ostringstream os;
        os << "offset " << offset << ": " << message;
        if (!expected.empty()) {
            os << " (expected ";
            for (std::size_t i = 0; i < expected.size(); ++i) os << (i ? " or " : "") << expected[i];
            os << ", found " << found << ")";
        }
        return os.str();
    }

    friend bool operator==(const ParseError&, const ParseError&) = default;
};

using TokenizeResult = std::variant<std::vector<Token>, ParseError>;

namespace detail {

inline bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    TokenizeResult run() {
        while (pos_ < src_.size()) {
            if (auto err = step()) return *err;
        }
        if (!groups_.empty()) {
            return ParseError{groups_.back(), {"'}'"}, "end of input", "unterminated group"};
        }
        return std::move(tokens_);
    }

private:
    std::optional<ParseError> step() {
        const char c = src_[pos_];
        if (is_space(c) || c == '$') {
            ++pos_;
            return std::nullopt;
        }
        const std::size_t start = pos_;
        switch (c) {
            case '{':
                groups_.push_back(start);
                push(TokenKind::group_open, "{", start);
                ++pos_;
                return std::nullopt;
            case '}':
                if (groups_.empty()) return ParseError{start, {}, "'}'", "unbalanced '}'"};
                groups_.pop_back();
                push(TokenKind::group_close, "}", start);
                ++pos_;
                return std::nullopt;
            case '^': push(TokenKind::superscript, "^", start); ++pos_; return std::nullopt;
            case '_': push(TokenKind::subscript, "_", start); ++pos_; return std::nullopt;
            case '&': push(TokenKind::ampersand, "&", start); ++pos_; return std::nullopt;
            case '\\': return command();
            default: break;
        }
        if (is_digit(c)) {
            const bool script_arg = !tokens_.empty() && (tokens_.back().kind == TokenKind::superscript ||
                                                         tokens_.back().kind == TokenKind::subscript);
            std::size_t end = pos_ + 1;
            if (!script_arg) {
                while (end < src_.size()) {
                    if (is_digit(src_[end])) {
                        ++end;
                    } else if (src_[end] == '.' && end + 1 < src_.size() && is_digit(src_[end + 1])) {
                        end += 2;
                    } else {
                        break;
                    }
                }
            }
            push(TokenKind::digit_run, std::string(src_.substr(pos_, end - pos_)), start);
            pos_ = end;
            return std::nullopt;
        }
        push(TokenKind::symbol, next_code_point(), start);
        return std::nullopt;
    }

    std::string next_code_point() {
        auto n = text::detail::utf8_sequence_length(src_, pos_);
        if (n == 0) n = 1;
        std::string cp(src_.substr(pos_, n));
        pos_ += n;
        return cp;
    }

    void skip_space() {
        while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
    }

    std::string read_name() {
        const std::size_t b = pos_;
        while (pos_ < src_.size() && is_letter(src_[pos_])) ++pos_;
        return std::string(src_.substr(b, pos_ - b));
    }

    // Reads "{...}" with no nesting; used for environment names and specs.
    std::optional<ParseError> read_braced(std::string& out, const char* what) {
        skip_space();
        const std::size_t open = pos_;
        if (pos_ >= src_.size() || src_[pos_] != '{') {
            return ParseError{pos_, {"'{'"}, found_here(), std::string("expected ") + what};
        }
        const auto close = src_.find('}', pos_ + 1);
        if (close == std::string_view::npos) {
            return ParseError{open, {"'}'"}, "end of input", std::string("unterminated ") + what};
        }
        out = std::string(text::trim(src_.substr(pos_ + 1, close - pos_ - 1)));
        pos_ = close + 1;
        return std::nullopt;
    }

    std::string found_here() const {
        if (pos_ >= src_.size()) return "end of input";
        return "'" + std::string(1, src_[pos_]) + "'";
    }

    std::optional<ParseError> command() {
        const std::size_t start = pos_;
        ++pos_;
        if (pos_ >= src_.size()) return ParseError{start, {"command name"}, "end of input", "lone backslash"};
        const char c = src_[pos_];
        if (c == '\\') {
            ++pos_;
            push(TokenKind::row_break, "\\\\", start);
            return std::nullopt;
        }
        if (!is_letter(c)) {
            ++pos_;
            const std::string name(1, c);
            if (const auto* info = lookup_command(name); info && info->category == CommandCategory::spacing) {
                push(TokenKind::spacing, std::string(to_string(info->node->as<Spacing>().width)), start);
            } else {
                push(TokenKind::command, name, start);
            }
            return std::nullopt;
        }
        const std::string name = read_name();
        if (name == "left" || name == "right") return delimiter(name == "left", start);
        if (name == "begin" || name == "end") {
            std::string env;
            if (auto err = read_braced(env, "environment name")) return err;
            if (name == "end") {
                push(TokenKind::env_end, env, start);
                return std::nullopt;
            }
            Token t{TokenKind::env_begin, env, {}, start};
            const std::size_t save = pos_;
            skip_space();
            if (pos_ < src_.size() && src_[pos_] == '{') {
                if (auto err = read_braced(t.arg, "column spec")) return err;
            } else {
                pos_ = save;
            }
            tokens_.push_back(std::move(t));
            return std::nullopt;
        }
        const auto* info = lookup_command(name);
        if (info != nullptr && info->category == CommandCategory::absorbed) return std::nullopt;
        if (info != nullptr && info->category == CommandCategory::spacing) {
            push(TokenKind::spacing, std::string(to_string(info->node->as<Spacing>().width)), start);
            return std::nullopt;
        }
        push(TokenKind::command, name, start);
        if (info != nullptr && info->category == CommandCategory::style) return text_group();
        return std::nullopt;
    }

    std::optional<ParseError> delimiter(bool left, std::size_t start) {
        skip_space();
        const auto kind = left ? TokenKind::left_delim : TokenKind::right_delim;
        if (pos_ < src_.size()) {
            const char d = src_[pos_];
            if (d == '(' || d == ')' || d == '[' || d == ']' || d == '|' || d == '.') {
                ++pos_;
                push(kind, std::string(1, d), start);
                return std::nullopt;
            }
            if (d == '\\' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '{' || src_[pos_ + 1] == '}')) {
                push(kind, std::string(1, src_[pos_ + 1]), start);
                pos_ += 2;
                return std::nullopt;
            }
        }
        return ParseError{pos_, {"delimiter"}, found_here(),
                          std::string("missing delimiter after \\") + (left ? "left" : "right")};
    }

    // The group after a text-style command: characters become symbols.
    std::optional<ParseError> text_group() {
        skip_space();
        if (pos_ >= src_.size() || src_[pos_] != '{') return std::nullopt;
        const std::size_t open = pos_;
        push(TokenKind::group_open, "{", open);
        ++pos_;
        int depth = 1;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            const std::size_t at = pos_;
            if (c == '{') {
                ++depth;
                push(TokenKind::group_open, "{", at);
                ++pos_;
            } else if (c == '}') {
                push(TokenKind::group_close, "}", at);
                ++pos_;
                if (--depth == 0) return std::nullopt;
            } else if (c == '\\' && pos_ + 1 < src_.size()) {
                const char e = src_[pos_ + 1];
                if (is_letter(e)) {
                    ++pos_;
                    push(TokenKind::command, read_name(), at);
                } else {
                    push(TokenKind::symbol, std::string(1, e), at);
                    pos_ += 2;
                }
            } else {
                push(TokenKind::symbol, next_code_point(), at);
            }
        }
        return ParseError{open, {"'}'"}, "end of input", "unterminated group"};
    }

    void push(TokenKind k, std::string text, std::size_t offset) {
        tokens_.push_back(Token{k, std::move(text), {}, offset});
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::vector<std::size_t> groups_;
    std::vector<Token> tokens_;
};

}  // namespace detail

inline TokenizeResult tokenize(std::string_view latex) { return detail::Lexer(latex).run(); }

}  // namespace casbridge::formula
