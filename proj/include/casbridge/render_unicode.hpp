#pragma once

// Two-dimensional text layout of a formula AST.
//
// Every box is a block of equal-width lines with a baseline row; widths are
// counted in code points. Composition rules:
//
//   Row        children side by side, baselines aligned; binary, relation and
//              arrow operators get one space each side, except that a binary
//              operator first in the row or right after another operator is
//              a bare prefix and an operator right after an operator drops
//              its left space; ',' and ';' are followed by one space; one
//              space around text runs and function names and between
//              adjacent numbers
//   Fraction   numerator, rule of width max(num, den) + 2, denominator, both
//              centred (extra column on the right); baseline on the rule
//   Script     script column after the base; sup bottom row max(1, ascent)
//              above the baseline, sub top row max(1, descent) below it
//   Root       radical prefix on the last row, overbar above the radicand,
//              index raised one row to the left of the radical
//   Delimited  one glyph column per side: plain glyph for height 1, two-piece
//              for height 2, three-piece (top, extension, bottom) beyond
//   Matrix     cells aligned per column spec, two spaces between columns,
//              rows stacked, baseline on the middle row
//   BigOp      integral column (two rows) or sum/product glyph, limits above
//              and below, body one space to the right
//
// The ASCII glyph set replaces every non-ASCII glyph.

#include <casbridge/command_table.hpp>
#include <casbridge/formula.hpp>
#include <casbridge/text.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace casbridge::formula {

enum class GlyphMode { unicode, ascii };

struct BoxLayout {
    std::vector<std::string> lines;
    std::size_t width = 0;
    std::size_t ascent = 0;
    std::size_t baseline = 0;

    std::size_t height() const { return lines.size(); }
    std::size_t descent() const { return lines.size() - 1 - baseline; }

    std::string str() const {
        std::string out;
        for (const auto& l : lines) out += l + "\n";
        return out;
    }

    friend bool operator==(const BoxLayout&, const BoxLayout&) = default;
};

namespace detail {

inline BoxLayout text_box(std::string s) {
    BoxLayout b;
    b.width = text::display_width(s);
    b.lines.push_back(std::move(s));
    return b;
}

inline std::string repeat(std::string_view g, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) out += g;
    return out;
}

/// A grid of code-point cells into which boxes are placed.
class Canvas {
public:
    struct Item {
        const BoxLayout* box;
        long offset;  // box baseline relative to the canvas baseline, down positive
        std::size_t col;
    };

    static BoxLayout compose(const std::vector<Item>& items, std::size_t width) {
        long top = 0, bottom = 0;
        for (const auto& it : items) {
            top = std::min(top, it.offset - static_cast<long>(it.box->baseline));
            bottom = std::max(bottom, it.offset + static_cast<long>(it.box->descent()));
        }
        const auto h = static_cast<std::size_t>(bottom - top + 1);
        std::vector<std::vector<std::string>> cells(h, std::vector<std::string>(width, " "));
        for (const auto& it : items) {
            const long first = it.offset - static_cast<long>(it.box->baseline) - top;
            for (std::size_t r = 0; r < it.box->lines.size(); ++r) {
                auto cps = text::code_points(it.box->lines[r]);
                auto& row = cells[static_cast<std::size_t>(first) + r];
                for (std::size_t c = 0; c < cps.size() && it.col + c < width; ++c) row[it.col + c] = cps[c];
            }
        }
        BoxLayout out;
        out.width = width;
        out.baseline = out.ascent = static_cast<std::size_t>(-top);
        for (const auto& row : cells) {
            std::string line;
            for (const auto& c : row) line += c;
            out.lines.push_back(std::move(line));
        }
        return out;
    }
};

inline BoxLayout hcat(const std::vector<BoxLayout>& boxes) {
    std::vector<Canvas::Item> items;
    std::size_t col = 0;
    for (const auto& b : boxes) {
        items.push_back({&b, 0, col});
        col += b.width;
    }
    if (items.empty()) return text_box("");
    return Canvas::compose(items, col);
}

inline std::string blackboard_letter(std::string_view name, GlyphMode mode) {
    if (mode == GlyphMode::ascii || name.size() != 1) return std::string(name);
    const char c = name[0];
    switch (c) {
        case 'C': return "ℂ";
        case 'H': return "ℍ";
        case 'N': return "ℕ";
        case 'P': return "ℙ";
        case 'Q': return "ℚ";
        case 'R': return "ℝ";
        case 'Z': return "ℤ";
        default: break;
    }
    char32_t cp;
    if (c >= 'A' && c <= 'Z') {
        cp = U'\U0001D538' + static_cast<char32_t>(c - 'A');
    } else if (c >= 'a' && c <= 'z') {
        cp = U'\U0001D552' + static_cast<char32_t>(c - 'a');
    } else {
        return std::string(name);
    }
    std::string out;
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
    return out;
}

inline std::string ascii_operator(const Operator& o) {
    if (auto c = char_for_operator(o)) return *c;
    static const std::pair<std::string_view, std::string_view> kMap[] = {
        {"∧", "/\\"}, {"∨", "\\/"}, {"⋅", "."},  {"×", "x"},  {"±", "+-"},   {"≠", "/="},
        {"≥", ">="},  {"≤", "<="},  {"≈", "~="}, {"∈", "in"}, {"→", "->"},   {"↦", "|->"},
    };
    for (auto [g, a] : kMap) {
        if (g == o.glyph) return std::string(a);
    }
    return text::is_valid_utf8(o.glyph) && o.glyph.size() == 1 ? o.glyph : "?";
}

enum class Edge { none, letter, digit, word, text, box };

class UnicodeLayout {
public:
    explicit UnicodeLayout(GlyphMode mode) : mode_(mode) {}

    BoxLayout layout(const Node& n) const {
        return std::visit([&](const auto& x) { return layout(x); }, n.v);
    }

    Edge start_edge(const Node& n) const {
        if (n.is<Script>()) return start_edge(*n.as<Script>().base);
        if (n.is<BigO>()) return Edge::letter;
        return leaf_edge(n);
    }

    Edge end_edge(const Node& n) const {
        if (n.is<BigOp>()) return Edge::word;
        return leaf_edge(n);
    }

    static bool needs_gap(Edge l, Edge r) {
        if (l == Edge::none || r == Edge::none) return false;
        if (l == Edge::text || r == Edge::text) return true;
        const auto wordy = [](Edge e) { return e == Edge::letter || e == Edge::digit || e == Edge::word; };
        if (l == Edge::word) return wordy(r);
        if (r == Edge::word) return wordy(l);
        return l == Edge::digit && r == Edge::digit;
    }

    std::string symbol_text(const Symbol& s) const {
        switch (s.cls) {
            case SymbolClass::blackboard: return blackboard_letter(s.name, mode_);
            case SymbolClass::greek:
                if (ascii()) {
                    if (auto c = command_for(s)) return *c;
                }
                return s.name;
            default: return s.name;
        }
    }

    std::string operator_text(const Operator& o) const { return ascii() ? ascii_operator(o) : o.glyph; }

private:
    bool ascii() const { return mode_ == GlyphMode::ascii; }

    Edge leaf_edge(const Node& n) const {
        if (n.is<Symbol>()) {
            const auto& s = n.as<Symbol>();
            if (s.cls == SymbolClass::operator_name) return Edge::word;
            if (s.cls == SymbolClass::greek && ascii()) return Edge::word;
            if (text::display_width(s.name) > 1) return Edge::word;
            return Edge::letter;
        }
        if (n.is<Number>()) return Edge::digit;
        if (n.is<TextRun>()) return Edge::text;
        if (n.is<Spacing>() || n.is<Operator>()) return Edge::none;
        return Edge::box;
    }

    BoxLayout layout(const Symbol& s) const { return text_box(symbol_text(s)); }
    BoxLayout layout(const Number& n) const { return text_box(n.text); }
    BoxLayout layout(const Operator& o) const { return text_box(operator_text(o)); }

    BoxLayout layout(const Row& r) const {
        std::vector<BoxLayout> parts;
        const Node* prev = nullptr;
        for (std::size_t i = 0; i < r.children.size(); ++i) {
            const Node& c = r.children[i];
            if (c.is<Operator>()) {
                const auto& o = c.as<Operator>();
                const std::string g = operator_text(o);
                const bool last = i + 1 == r.children.size();
                if (o.cls == OperatorClass::punctuation) {
                    parts.push_back(text_box((o.glyph == "," || o.glyph == ";") && !last ? g + " " : g));
                } else if (o.cls == OperatorClass::binary && (i == 0 || r.children[i - 1].is<Operator>())) {
                    parts.push_back(text_box(g));
                } else if (i > 0 && r.children[i - 1].is<Operator>()) {
                    parts.push_back(text_box(g + " "));
                } else {
                    parts.push_back(text_box(" " + g + " "));
                }
                prev = nullptr;
                continue;
            }
            if (prev != nullptr && needs_gap(end_edge(*prev), start_edge(c))) parts.push_back(text_box(" "));
            parts.push_back(layout(c));
            prev = &c;
        }
        return hcat(parts);
    }

    BoxLayout layout(const Fraction& f) const {
        const BoxLayout num = layout(*f.numerator);
        const BoxLayout den = layout(*f.denominator);
        const std::size_t w = std::max(num.width, den.width) + 2;
        BoxLayout rule = text_box(repeat(ascii() ? "-" : "─", w));
        std::vector<Canvas::Item> items{
            {&num, -static_cast<long>(num.descent()) - 1, (w - num.width) / 2},
            {&rule, 0, 0},
            {&den, static_cast<long>(den.ascent) + 1, (w - den.width) / 2},
        };
        return Canvas::compose(items, w);
    }

    BoxLayout layout(const Script& s) const {
        const BoxLayout base = layout(*s.base);
        std::vector<Canvas::Item> items{{&base, 0, 0}};
        std::optional<BoxLayout> sup, sub;
        std::size_t w = 0;
        if (s.sup) {
            sup = layout(**s.sup);
            const long bottom = -static_cast<long>(std::max<std::size_t>(1, base.ascent));
            items.push_back({&*sup, bottom - static_cast<long>(sup->descent()), base.width});
            w = std::max(w, sup->width);
        }
        if (s.sub) {
            sub = layout(**s.sub);
            const long top = static_cast<long>(std::max<std::size_t>(1, base.descent()));
            items.push_back({&*sub, top + static_cast<long>(sub->ascent), base.width});
            w = std::max(w, sub->width);
        }
        return Canvas::compose(items, base.width + w);
    }

    BoxLayout layout(const Root& r) const {
        const BoxLayout rad = layout(*r.radicand);
        const std::string sign = ascii() ? "\\/" : "√";
        const std::string vert = ascii() ? " |" : "│";
        const std::size_t pw = text::display_width(sign);
        BoxLayout root;
        root.width = pw + rad.width;
        root.lines.push_back(repeat(" ", pw) + repeat(ascii() ? "_" : "‾", rad.width));
        for (std::size_t i = 0; i < rad.lines.size(); ++i) {
            root.lines.push_back((i + 1 == rad.lines.size() ? sign : vert) + rad.lines[i]);
        }
        root.baseline = root.ascent = rad.baseline + 1;
        if (!r.index) return root;
        const BoxLayout idx = layout(**r.index);
        const long sign_row = static_cast<long>(root.height() - 1 - root.baseline);
        std::vector<Canvas::Item> items{
            {&root, 0, idx.width},
            {&idx, sign_row - 1 - static_cast<long>(idx.descent()), 0},
        };
        return Canvas::compose(items, idx.width + root.width);
    }

    // One column of delimiter glyphs for a body of height h.
    std::vector<std::string> delimiter_column(const std::string& d, std::size_t h) const {
        if (d.empty()) return std::vector<std::string>(h, "");
        if (h == 1) return {d};
        struct Pieces {
            std::string_view top, mid, ext, bottom, two_top, two_bottom;
        };
        Pieces p{};
        if (ascii()) {
            if (d == "(") p = {"/", "|", "|", "\\", "/", "\\"};
            else if (d == ")") p = {"\\", "|", "|", "/", "\\", "/"};
            else if (d == "[") p = {"[", "[", "[", "[", "[", "["};
            else if (d == "]") p = {"]", "]", "]", "]", "]", "]"};
            else if (d == "{") p = {"/", "<", "|", "\\", "/", "\\"};
            else if (d == "}") p = {"\\", ">", "|", "/", "\\", "/"};
            else p = {"|", "|", "|", "|", "|", "|"};
        } else {
            if (d == "(") p = {"⎛", "⎜", "⎜", "⎝", "⎛", "⎝"};
            else if (d == ")") p = {"⎞", "⎟", "⎟", "⎠", "⎞", "⎠"};
            else if (d == "[") p = {"⎡", "⎢", "⎢", "⎣", "⎡", "⎣"};
            else if (d == "]") p = {"⎤", "⎥", "⎥", "⎦", "⎤", "⎦"};
            else if (d == "{") p = {"⎧", "⎨", "⎪", "⎩", "⎰", "⎱"};
            else if (d == "}") p = {"⎫", "⎬", "⎪", "⎭", "⎱", "⎰"};
            else p = {"│", "│", "│", "│", "│", "│"};
        }
        if (h == 2) return {std::string(p.two_top), std::string(p.two_bottom)};
        std::vector<std::string> col(h, std::string(p.ext));
        col.front() = p.top;
        col.back() = p.bottom;
        col[(h - 1) / 2] = p.mid;
        return col;
    }

    BoxLayout layout(const Delimited& d) const {
        const BoxLayout body = layout(*d.body);
        const auto l = delimiter_column(d.left, body.height());
        const auto r = delimiter_column(d.right, body.height());
        BoxLayout out;
        out.width = text::display_width(l.front()) + body.width + text::display_width(r.front());
        out.baseline = out.ascent = body.baseline;
        for (std::size_t i = 0; i < body.height(); ++i) out.lines.push_back(l[i] + body.lines[i] + r[i]);
        return out;
    }

    BoxLayout layout(const Matrix& m) const {
        std::string align;
        for (char c : m.colspec) {
            if (c == 'l' || c == 'c' || c == 'r') align += c;
        }
        std::vector<std::vector<BoxLayout>> cells;
        std::vector<std::size_t> widths;
        for (const auto& row : m.rows) {
            auto& out = cells.emplace_back();
            for (std::size_t j = 0; j < row.size(); ++j) {
                out.push_back(layout(row[j]));
                if (widths.size() <= j) widths.resize(j + 1, 0);
                widths[j] = std::max(widths[j], out.back().width);
            }
        }
        std::size_t total = 0;
        std::vector<std::size_t> starts;
        for (std::size_t j = 0; j < widths.size(); ++j) {
            if (j > 0) total += 2;
            starts.push_back(total);
            total += widths[j];
        }
        std::vector<BoxLayout> rows;
        for (const auto& row : cells) {
            std::vector<Canvas::Item> items;
            for (std::size_t j = 0; j < row.size(); ++j) {
                const char a = j < align.size() ? align[j] : 'c';
                const std::size_t slack = widths[j] - row[j].width;
                const std::size_t shift = a == 'l' ? 0 : a == 'r' ? slack : slack / 2;
                items.push_back({&row[j], 0, starts[j] + shift});
            }
            if (items.empty()) {
                rows.push_back(text_box(repeat(" ", total)));
            } else {
                rows.push_back(Canvas::compose(items, total));
            }
        }
        BoxLayout out;
        out.width = total;
        for (const auto& r : rows)
            for (const auto& l : r.lines) out.lines.push_back(l);
        if (out.lines.empty()) out.lines.push_back("");
        out.baseline = out.ascent = (out.lines.size() - 1) / 2;
        return out;
    }

    BoxLayout layout(const BigOp& b) const {
        std::optional<BoxLayout> lower, upper;
        if (b.lower) lower = layout(**b.lower);
        if (b.upper) upper = layout(**b.upper);
        BoxLayout glyph;
        if (b.op == BigOpKind::integral) {
            glyph.lines = ascii() ? std::vector<std::string>{" /", "/ "} : std::vector<std::string>{"⌠", "⌡"};
            glyph.width = ascii() ? 2 : 1;
            glyph.baseline = glyph.ascent = 1;
        } else {
            const bool sum = b.op == BigOpKind::sum;
            glyph = text_box(ascii() ? (sum ? "Sum" : "Prod") : (sum ? "∑" : "∏"));
        }
        const bool centred = b.op != BigOpKind::integral;
        std::size_t w = glyph.width;
        if (lower) w = std::max(w, lower->width);
        if (upper) w = std::max(w, upper->width);
        const auto col = [&](const BoxLayout& x) { return centred ? (w - x.width) / 2 : 0; };
        std::vector<Canvas::Item> items{{&glyph, 0, col(glyph)}};
        if (upper) {
            items.push_back({&*upper, -static_cast<long>(glyph.ascent) - 1 - static_cast<long>(upper->descent()),
                             col(*upper)});
        }
        if (lower) {
            items.push_back({&*lower, static_cast<long>(glyph.descent()) + 1 + static_cast<long>(lower->ascent),
                             col(*lower)});
        }
        BoxLayout head = Canvas::compose(items, w);
        if (!b.body) return head;
        return hcat({head, text_box(" "), layout(**b.body)});
    }

    BoxLayout layout(const TextRun& t) const { return text_box(t.text); }

    BoxLayout layout(const Spacing& s) const {
        switch (s.width) {
            case SpacingClass::negthin: return text_box("");
            case SpacingClass::quad: return text_box("  ");
            default: return text_box(" ");
        }
    }

    BoxLayout layout(const Ellipsis&) const { return text_box(ascii() ? "..." : "⋯"); }

    BoxLayout layout(const BigO& b) const {
        Delimited d{"(", ")", *b.arg};
        return hcat({text_box("O"), layout(d)});
    }

    GlyphMode mode_;
};

}  // namespace detail

inline BoxLayout to_unicode(const Node& n, GlyphMode mode = GlyphMode::unicode) {
    return detail::UnicodeLayout(mode).layout(n);
}

inline bool layout_well_formed(const BoxLayout& b) {
    if (b.lines.empty() || b.baseline >= b.lines.size() || b.ascent != b.baseline) return false;
    return std::all_of(b.lines.begin(), b.lines.end(),
                       [&](const std::string& l) { return text::display_width(l) == b.width; });
}

}  // namespace casbridge::formula
