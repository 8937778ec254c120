#pragma once

// Just enough XML to check generated MathML: elements, attributes, text and
// the five predefined entities. Throws on malformed input.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace casbridge::testing {

struct XmlElement {
    std::string name;
    std::map<std::string, std::string> attrs;
    std::vector<XmlElement> children;
    std::string text;
};

class XmlReader {
public:
    explicit XmlReader(std::string_view s) : s_(s) {}

    XmlElement document() {
        XmlElement root = element();
        if (pos_ != s_.size()) throw std::runtime_error("trailing content after root element");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("xml: " + what + " at " + std::to_string(pos_));
    }

    bool at(char c) const { return pos_ < s_.size() && s_[pos_] == c; }

    void expect(char c) {
        if (!at(c)) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_space() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\n' || s_[pos_] == '\t')) ++pos_;
    }

    std::string name() {
        const auto b = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '-' ||
                                    s_[pos_] == ':' || s_[pos_] == '_')) {
            ++pos_;
        }
        if (b == pos_) fail("expected a name");
        return std::string(s_.substr(b, pos_ - b));
    }

    std::string decode(std::string_view raw) const {
        std::string out;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] != '&') {
                if (raw[i] == '<' || raw[i] == '>') throw std::runtime_error("xml: unescaped markup in text");
                out += raw[i];
                continue;
            }
            const auto semi = raw.find(';', i);
            if (semi == std::string_view::npos) throw std::runtime_error("xml: unterminated entity");
            const auto ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "amp") out += '&';
            else if (ent == "lt") out += '<';
            else if (ent == "gt") out += '>';
            else if (ent == "quot") out += '"';
            else if (ent == "apos") out += '\'';
            else throw std::runtime_error("xml: unknown entity &" + std::string(ent) + ";");
            i = semi;
        }
        return out;
    }

    XmlElement element() {
        expect('<');
        XmlElement e;
        e.name = name();
        while (true) {
            skip_space();
            if (at('/')) {
                ++pos_;
                expect('>');
                return e;
            }
            if (at('>')) {
                ++pos_;
                break;
            }
            const auto key = name();
            expect('=');
            expect('"');
            const auto end = s_.find('"', pos_);
            if (end == std::string_view::npos) fail("unterminated attribute");
            e.attrs[key] = decode(s_.substr(pos_, end - pos_));
            pos_ = end + 1;
        }
        while (true) {
            if (pos_ >= s_.size()) fail("unclosed element <" + e.name + ">");
            if (s_.substr(pos_, 2) == "</") {
                pos_ += 2;
                if (name() != e.name) fail("mismatched close tag for <" + e.name + ">");
                expect('>');
                return e;
            }
            if (at('<')) {
                e.children.push_back(element());
                continue;
            }
            const auto next = s_.find('<', pos_);
            if (next == std::string_view::npos) fail("unclosed element <" + e.name + ">");
            e.text += decode(s_.substr(pos_, next - pos_));
            pos_ = next;
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

inline XmlElement parse_xml(std::string_view s) { return XmlReader(s).document(); }

}  // namespace casbridge::testing
