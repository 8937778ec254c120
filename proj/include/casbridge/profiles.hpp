#pragma once

// Backend profiles: declarative descriptions of a CAS's prompt grammar,
// interactive questions, banner, plot side effects and termination.
//
// Profiles are plain data loaded from YAML. A registry is an immutable value;
// reloading produces a new registry.

#include <casbridge/builtin_profiles.hpp>
#include <casbridge/text.hpp>

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace casbridge {

/// A compiled ECMAScript regular expression that remembers its source text.
/// Two patterns compare equal when their sources are equal.
class Pattern {
public:
    Pattern() = default;
    explicit Pattern(std::string source)
        : source_(std::move(source)),
          regex_(std::make_shared<const std::regex>(source_, std::regex::ECMAScript)) {}

    const std::string& source() const { return source_; }
    bool empty() const { return source_.empty(); }

    bool search(const std::string& s, std::smatch* m = nullptr) const {
        if (!regex_) return false;
        if (m != nullptr) return std::regex_search(s, *m, *regex_);
        return std::regex_search(s, *regex_);
    }

    bool full_match(std::string_view s) const {
        if (!regex_) return false;
        return std::regex_match(s.begin(), s.end(), *regex_);
    }

    friend bool operator==(const Pattern& a, const Pattern& b) { return a.source_ == b.source_; }

private:
    std::string source_;
    std::shared_ptr<const std::regex> regex_;
};

enum class AnswerKind { free_text, yes_no, menu };

inline std::string_view to_string(AnswerKind k) {
    switch (k) {
        case AnswerKind::free_text: return "free_text";
        case AnswerKind::yes_no: return "yes_no";
        case AnswerKind::menu: return "menu";
    }
    return "free_text";
}

inline std::optional<AnswerKind> answer_kind_from_string(std::string_view s) {
    if (s == "free_text") return AnswerKind::free_text;
    if (s == "yes_no") return AnswerKind::yes_no;
    if (s == "menu") return AnswerKind::menu;
    return std::nullopt;
}

struct QuestionRule {
    Pattern pattern;
    AnswerKind answer_kind = AnswerKind::free_text;
    std::optional<std::string> echo_label;
    // Accepted answers for yes_no and menu rules; compared after trimming
    // whitespace and one trailing ';'.
    std::vector<std::string> answers;

    bool accepts(std::string_view answer) const {
        if (answer_kind == AnswerKind::free_text) return true;
        auto a = text::trim(answer);
        if (!a.empty() && a.back() == ';') a = text::trim(a.substr(0, a.size() - 1));
        return std::find(answers.begin(), answers.end(), a) != answers.end();
    }

    friend bool operator==(const QuestionRule&, const QuestionRule&) = default;
};

struct AuxPrompt {
    std::string kind;
    Pattern pattern;
    friend bool operator==(const AuxPrompt&, const AuxPrompt&) = default;
};

struct BackendProfile {
    std::string name;
    std::vector<std::string> command;
    bool use_pty = false;
    std::string example_prompt;
    Pattern input_prompt;
    std::vector<AuxPrompt> aux_prompts;
    std::vector<QuestionRule> questions;
    Pattern banner;
    std::string quit_command;
    std::string end_marker;
    std::vector<Pattern> plot_events;
    // Optional capture of an output label (e.g. "D4") from a math payload.
    Pattern math_label;

    friend bool operator==(const BackendProfile&, const BackendProfile&) = default;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, std::optional<std::size_t> line = std::nullopt,
                std::optional<std::size_t> column = std::nullopt)
        : std::runtime_error(format(msg, line, column)), line_(line), column_(column) {}

    /// 1-based position in the config text, when the error has one.
    std::optional<std::size_t> line() const { return line_; }
    std::optional<std::size_t> column() const { return column_; }

private:
    static std::string format(const std::string& msg, std::optional<std::size_t> line,
                              std::optional<std::size_t> column) {
        if (!line) return msg;
        std::ostringstream os;
        os << "line " << *line;
        if (column) os << ", column " << *column;
        os << ": " << msg;
        return os.str();
    }

    std::optional<std::size_t> line_;
    std::optional<std::size_t> column_;
};

/// Immutable, shareable set of profiles with unique names.
class ProfileRegistry {
public:
    ProfileRegistry() = default;
    explicit ProfileRegistry(std::vector<BackendProfile> profiles) {
        for (auto& p : profiles) {
            if (find(p.name) != nullptr) {
                throw ConfigError("duplicate profile name '" + p.name + "'");
            }
            profiles_.push_back(std::make_shared<const BackendProfile>(std::move(p)));
        }
    }

    std::shared_ptr<const BackendProfile> find(std::string_view name) const {
        for (const auto& p : profiles_) {
            if (p->name == name) return p;
        }
        return nullptr;
    }

    const std::vector<std::shared_ptr<const BackendProfile>>& profiles() const { return profiles_; }
    std::size_t size() const { return profiles_.size(); }

    friend bool operator==(const ProfileRegistry& a, const ProfileRegistry& b) {
        return std::equal(a.profiles_.begin(), a.profiles_.end(), b.profiles_.begin(),
                          b.profiles_.end(), [](const auto& x, const auto& y) { return *x == *y; });
    }

private:
    std::vector<std::shared_ptr<const BackendProfile>> profiles_;
};

// ---------------------------------------------------------------------------
// Line classification
// ---------------------------------------------------------------------------

enum class LineKind { input_prompt, aux_prompt, question, plot_event, end_marker, plain };

struct LineClass {
    LineKind kind = LineKind::plain;
    std::string label;
    std::string aux_kind;
    const QuestionRule* question = nullptr;
    std::optional<std::string> plot_path;
};

namespace detail {

inline std::string first_capture(const std::smatch& m) {
    for (std::size_t i = 1; i < m.size(); ++i) {
        if (m[i].matched) return m[i].str();
    }
    return m.str(0);
}

}  // namespace detail

/// Classifies one line (without its terminator). Precedence:
/// end_marker > aux_prompt > input_prompt > question > plot_event > plain.
inline LineClass classify_line(const BackendProfile& profile, std::string_view line) {
    LineClass out;
    const std::string s(line);
    if (!profile.end_marker.empty() && text::trim(line) == profile.end_marker) {
        out.kind = LineKind::end_marker;
        return out;
    }
    std::smatch m;
    for (const auto& aux : profile.aux_prompts) {
        if (aux.pattern.search(s, &m)) {
            out.kind = LineKind::aux_prompt;
            out.aux_kind = aux.kind;
            out.label = detail::first_capture(m);
            return out;
        }
    }
    if (profile.input_prompt.search(s, &m)) {
        out.kind = LineKind::input_prompt;
        out.label = detail::first_capture(m);
        return out;
    }
    for (const auto& q : profile.questions) {
        if (q.pattern.search(s)) {
            out.kind = LineKind::question;
            out.question = &q;
            return out;
        }
    }
    for (const auto& p : profile.plot_events) {
        if (p.search(s, &m)) {
            out.kind = LineKind::plot_event;
            if (m.size() > 1 && m[1].matched) out.plot_path = m[1].str();
            return out;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// YAML loading and dumping
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<std::size_t> node_line(const YAML::Node& n) {
    const auto mark = n.Mark();
    if (mark.line < 0) return std::nullopt;
    return static_cast<std::size_t>(mark.line + 1);
}

inline std::optional<std::size_t> node_column(const YAML::Node& n) {
    const auto mark = n.Mark();
    if (mark.column < 0) return std::nullopt;
    return static_cast<std::size_t>(mark.column + 1);
}

[[noreturn]] inline void fail_at(const YAML::Node& n, const std::string& msg) {
    throw ConfigError(msg, node_line(n), node_column(n));
}

inline std::string scalar(const YAML::Node& parent, const char* key, const std::string& who,
                          bool required) {
    const auto n = parent[key];
    if (!n || n.IsNull()) {
        if (required) fail_at(parent, who + ": missing required key '" + key + "'");
        return {};
    }
    if (!n.IsScalar()) fail_at(n, who + ": '" + key + "' must be a string");
    return n.as<std::string>();
}

inline Pattern compile(const YAML::Node& at, const std::string& source, const std::string& who,
                       const char* field) {
    try {
        return Pattern(source);
    } catch (const std::regex_error& e) {
        fail_at(at, who + ": invalid pattern in '" + field + "': " + e.what());
    }
}

inline BackendProfile profile_from_yaml(const YAML::Node& n) {
    if (!n.IsMap()) fail_at(n, "profile entry must be a mapping");
    BackendProfile p;
    p.name = scalar(n, "name", "profile", true);
    if (p.name.empty()) fail_at(n, "profile: name must be non-empty");
    const std::string who = "profile '" + p.name + "'";

    if (const auto c = n["command"]; c && !c.IsNull()) {
        if (c.IsSequence()) {
            for (const auto& arg : c) p.command.push_back(arg.as<std::string>());
        } else if (c.IsScalar()) {
            try {
                p.command = text::split_command(c.as<std::string>());
            } catch (const std::invalid_argument& e) {
                fail_at(c, who + ": " + e.what());
            }
        } else {
            fail_at(c, who + ": 'command' must be a string or a list");
        }
    }
    if (const auto u = n["use_pty"]; u && !u.IsNull()) p.use_pty = u.as<bool>();

    p.example_prompt = scalar(n, "example_prompt", who, true);
    p.input_prompt = compile(n, scalar(n, "input_prompt", who, true), who, "input_prompt");

    if (const auto aux = n["aux_prompts"]; aux && !aux.IsNull()) {
        if (!aux.IsSequence()) fail_at(aux, who + ": 'aux_prompts' must be a list");
        for (const auto& a : aux) {
            AuxPrompt ap;
            ap.kind = scalar(a, "kind", who, true);
            ap.pattern = compile(a, scalar(a, "pattern", who, true), who, "aux_prompts");
            p.aux_prompts.push_back(std::move(ap));
        }
    }
    if (const auto qs = n["questions"]; qs && !qs.IsNull()) {
        if (!qs.IsSequence()) fail_at(qs, who + ": 'questions' must be a list");
        for (const auto& q : qs) {
            QuestionRule rule;
            rule.pattern = compile(q, scalar(q, "pattern", who, true), who, "questions");
            const auto kind = scalar(q, "answer_kind", who, false);
            if (!kind.empty()) {
                const auto k = answer_kind_from_string(kind);
                if (!k) fail_at(q, who + ": unknown answer_kind '" + kind + "'");
                rule.answer_kind = *k;
            }
            if (auto label = scalar(q, "label", who, false); !label.empty()) {
                rule.echo_label = std::move(label);
            }
            if (const auto ans = q["answers"]; ans && !ans.IsNull()) {
                if (!ans.IsSequence()) fail_at(ans, who + ": 'answers' must be a list");
                for (const auto& a : ans) rule.answers.push_back(a.as<std::string>());
            }
            if (rule.answer_kind != AnswerKind::free_text && rule.answers.empty()) {
                fail_at(q, who + ": " + std::string(to_string(rule.answer_kind)) +
                               " question needs a non-empty 'answers' list");
            }
            p.questions.push_back(std::move(rule));
        }
    }
    if (auto b = scalar(n, "banner", who, false); !b.empty()) p.banner = compile(n, b, who, "banner");
    p.quit_command = scalar(n, "quit_command", who, true);
    if (p.quit_command.empty()) fail_at(n, who + ": quit_command must be non-empty");
    p.end_marker = scalar(n, "end_marker", who, false);
    if (const auto pe = n["plot_events"]; pe && !pe.IsNull()) {
        if (!pe.IsSequence()) fail_at(pe, who + ": 'plot_events' must be a list");
        for (const auto& e : pe) p.plot_events.push_back(compile(e, e.as<std::string>(), who, "plot_events"));
    }
    if (auto ml = scalar(n, "math_label", who, false); !ml.empty()) {
        p.math_label = compile(n, ml, who, "math_label");
    }

    if (!p.input_prompt.search(p.example_prompt)) {
        fail_at(n, who + ": input_prompt '" + p.input_prompt.source() +
                       "' does not match its example_prompt '" + p.example_prompt + "'");
    }
    return p;
}

}  // namespace detail

/// Parses only the profiles defined in `config` (YAML with a top-level
/// `profiles:` list).
inline std::vector<BackendProfile> parse_profiles(std::string_view config) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(config));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, static_cast<std::size_t>(e.mark.line + 1),
                          static_cast<std::size_t>(e.mark.column + 1));
    }
    std::vector<BackendProfile> out;
    if (!root || root.IsNull()) return out;
    if (!root.IsMap()) detail::fail_at(root, "config root must be a mapping");
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (key != "profiles") detail::fail_at(kv.first, "unknown config key '" + key + "'");
    }
    const auto list = root["profiles"];
    if (!list || list.IsNull()) return out;
    if (!list.IsSequence()) detail::fail_at(list, "'profiles' must be a list");
    try {
        for (const auto& n : list) {
            auto p = detail::profile_from_yaml(n);
            const bool dup = std::any_of(out.begin(), out.end(),
                                         [&](const BackendProfile& q) { return q.name == p.name; });
            if (dup) detail::fail_at(n, "duplicate profile name '" + p.name + "'");
            out.push_back(std::move(p));
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.msg, static_cast<std::size_t>(e.mark.line + 1),
                          static_cast<std::size_t>(e.mark.column + 1));
    }
    return out;
}

inline ProfileRegistry builtin_registry() {
    static const ProfileRegistry reg(parse_profiles(kBuiltinProfilesYaml));
    return reg;
}

/// Built-in profiles overlaid with the profiles in `config`; a config profile
/// replaces a built-in of the same name.
inline ProfileRegistry load_profiles(std::string_view config) {
    const auto builtins = builtin_registry();
    std::vector<BackendProfile> merged;
    for (const auto& p : builtins.profiles()) merged.push_back(*p);
    for (auto& p : parse_profiles(config)) {
        auto it = std::find_if(merged.begin(), merged.end(),
                               [&](const BackendProfile& q) { return q.name == p.name; });
        if (it != merged.end()) {
            *it = std::move(p);
        } else {
            merged.push_back(std::move(p));
        }
    }
    return ProfileRegistry(std::move(merged));
}

inline std::string dump_profiles(const ProfileRegistry& registry) {
    YAML::Emitter out;
    out << YAML::BeginMap << YAML::Key << "profiles" << YAML::Value << YAML::BeginSeq;
    const auto quoted = [&](const std::string& s) { out << YAML::SingleQuoted << s; };
    for (const auto& pp : registry.profiles()) {
        const auto& p = *pp;
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << p.name;
        out << YAML::Key << "command" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (const auto& a : p.command) quoted(a);
        out << YAML::EndSeq;
        out << YAML::Key << "use_pty" << YAML::Value << p.use_pty;
        out << YAML::Key << "example_prompt" << YAML::Value;
        quoted(p.example_prompt);
        out << YAML::Key << "input_prompt" << YAML::Value;
        quoted(p.input_prompt.source());
        if (!p.aux_prompts.empty()) {
            out << YAML::Key << "aux_prompts" << YAML::Value << YAML::BeginSeq;
            for (const auto& a : p.aux_prompts) {
                out << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << a.kind;
                out << YAML::Key << "pattern" << YAML::Value;
                quoted(a.pattern.source());
                out << YAML::EndMap;
            }
            out << YAML::EndSeq;
        }
        if (!p.questions.empty()) {
            out << YAML::Key << "questions" << YAML::Value << YAML::BeginSeq;
            for (const auto& q : p.questions) {
                out << YAML::BeginMap << YAML::Key << "pattern" << YAML::Value;
                quoted(q.pattern.source());
                out << YAML::Key << "answer_kind" << YAML::Value << std::string(to_string(q.answer_kind));
                if (q.echo_label) out << YAML::Key << "label" << YAML::Value << *q.echo_label;
                if (!q.answers.empty()) {
                    out << YAML::Key << "answers" << YAML::Value << YAML::Flow << YAML::BeginSeq;
                    for (const auto& a : q.answers) quoted(a);
                    out << YAML::EndSeq;
                }
                out << YAML::EndMap;
            }
            out << YAML::EndSeq;
        }
        if (!p.banner.empty()) {
            out << YAML::Key << "banner" << YAML::Value;
            quoted(p.banner.source());
        }
        out << YAML::Key << "quit_command" << YAML::Value;
        quoted(p.quit_command);
        if (!p.end_marker.empty()) {
            out << YAML::Key << "end_marker" << YAML::Value;
            quoted(p.end_marker);
        }
        if (!p.plot_events.empty()) {
            out << YAML::Key << "plot_events" << YAML::Value << YAML::BeginSeq;
            for (const auto& e : p.plot_events) quoted(e.source());
            out << YAML::EndSeq;
        }
        if (!p.math_label.empty()) {
            out << YAML::Key << "math_label" << YAML::Value;
            quoted(p.math_label.source());
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace casbridge
