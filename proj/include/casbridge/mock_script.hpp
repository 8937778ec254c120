#pragma once

// Scripted backend transcripts for replay mode.
//
// A script is a JSON document:
//
//   {"format": "casbridge-mockscript", "version": 1,
//    "profile": "maxima", "title": "...", "source": "...",
//    "normalization": ["..."],
//    "steps": [
//      {"emit": "text", "quiesce": true},      bytes given as text
//      {"emit_latex": "x^2"},                  bytes 0x02 "latex:" payload 0x05
//      {"emit_b64": "..."},                    bytes given in base64
//      {"expect": "integrate(x,x);"}]}         literal client input
//
// "quiesce" (default false) reports stream silence after the bytes.

#include <casbridge/segmenter.hpp>
#include <casbridge/text.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace casbridge {

struct ScriptStep {
    enum class Kind { expect_input, emit };
    Kind kind = Kind::emit;
    std::string text;  // expected input, or emitted bytes
    bool quiesce = false;

    friend bool operator==(const ScriptStep&, const ScriptStep&) = default;
};

struct MockScript {
    std::string profile;
    std::string title;
    std::string source;
    std::vector<std::string> normalization;
    std::vector<ScriptStep> steps;

    friend bool operator==(const MockScript&, const MockScript&) = default;
};

class ScriptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kMockScriptFormat = "casbridge-mockscript";

inline std::string latex_frame(std::string_view payload) {
    std::string out(1, kFrameOpen);
    out += kLatexTag;
    out += payload;
    out += kFrameClose;
    return out;
}

inline void validate(const MockScript& s) {
    if (s.profile.empty()) throw ScriptError("script has no profile");
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const auto& st = s.steps[i];
        if (st.kind == ScriptStep::Kind::emit && st.text.empty()) {
            throw ScriptError("step " + std::to_string(i) + ": empty emit");
        }
        if (i > 0 && st.kind == ScriptStep::Kind::expect_input &&
            s.steps[i - 1].kind == ScriptStep::Kind::expect_input) {
            throw ScriptError("step " + std::to_string(i) + ": two consecutive expect steps");
        }
    }
}

inline MockScript parse_mock_script(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScriptError(std::string("malformed script: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kMockScriptFormat) {
        throw ScriptError("not a casbridge-mockscript document");
    }
    if (j.value("version", 0) != 1) throw ScriptError("unsupported script version");
    MockScript s;
    s.profile = j.value("profile", "");
    s.title = j.value("title", "");
    s.source = j.value("source", "");
    if (j.contains("normalization")) s.normalization = j["normalization"].get<std::vector<std::string>>();
    if (!j.contains("steps") || !j["steps"].is_array()) throw ScriptError("script has no steps");
    std::size_t i = 0;
    for (const auto& st : j["steps"]) {
        ScriptStep step;
        step.quiesce = st.value("quiesce", false);
        if (st.contains("expect")) {
            step.kind = ScriptStep::Kind::expect_input;
            step.text = st["expect"].get<std::string>();
        } else if (st.contains("emit")) {
            step.text = st["emit"].get<std::string>();
        } else if (st.contains("emit_latex")) {
            step.text = latex_frame(st["emit_latex"].get<std::string>());
        } else if (st.contains("emit_b64")) {
            auto bytes = text::base64_decode(st["emit_b64"].get<std::string>());
            if (!bytes) throw ScriptError("step " + std::to_string(i) + ": bad base64");
            step.text = std::move(*bytes);
        } else {
            throw ScriptError("step " + std::to_string(i) + ": unknown step kind");
        }
        s.steps.push_back(std::move(step));
        ++i;
    }
    validate(s);
    return s;
}

/// Emits whole latex frames as emit_latex and non-UTF-8 bytes as emit_b64.
inline std::string serialize_mock_script(const MockScript& s) {
    nlohmann::ordered_json j;
    j["format"] = kMockScriptFormat;
    j["version"] = 1;
    j["profile"] = s.profile;
    j["title"] = s.title;
    j["source"] = s.source;
    j["normalization"] = s.normalization;
    auto steps = nlohmann::ordered_json::array();
    for (const auto& st : s.steps) {
        nlohmann::ordered_json o;
        if (st.kind == ScriptStep::Kind::expect_input) {
            o["expect"] = st.text;
        } else {
            const std::string open = std::string(1, kFrameOpen) + std::string(kLatexTag);
            const std::string_view t = st.text;
            const bool frame = t.size() > open.size() && t.starts_with(open) && t.back() == kFrameClose &&
                               t.find(kFrameClose) == t.size() - 1 && t.find(kFrameOpen, 1) == std::string_view::npos;
            if (!text::is_valid_utf8(t)) {
                o["emit_b64"] = text::base64_encode(t);
            } else if (frame) {
                o["emit_latex"] = std::string(t.substr(open.size(), t.size() - open.size() - 1));
            } else {
                o["emit"] = st.text;
            }
            if (st.quiesce) o["quiesce"] = true;
        }
        steps.push_back(std::move(o));
    }
    j["steps"] = std::move(steps);
    return j.dump(1) + "\n";
}

inline MockScript load_mock_script(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScriptError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mock_script(ss.str());
}

/// Concatenation of every emitted byte, in order.
inline std::string emitted_bytes(const MockScript& s) {
    std::string out;
    for (const auto& st : s.steps) {
        if (st.kind == ScriptStep::Kind::emit) out += st.text;
    }
    return out;
}

}  // namespace casbridge
