#pragma once

// Session events and their JSON record form, shared by transcripts and the
// wire protocol.
//
// Record fields: seq, at (microseconds), kind, then whichever of raw, label,
// aux_kind, latex, question, plot_path, byte_range, text are present. Byte
// fields (raw, label, plot_path, text) that are not UTF-8 are written as
// <name>_b64 instead.

#include <casbridge/profiles.hpp>
#include <casbridge/segmenter.hpp>
#include <casbridge/text.hpp>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace casbridge {

using Json = nlohmann::ordered_json;

enum class EventKind {
    banner,
    input_prompt,
    aux_prompt,
    math,
    plain_text,
    question,
    plot_event,
    session_end,
    client_input,
    session_error,
};

inline constexpr EventKind kAllEventKinds[] = {
    EventKind::banner,     EventKind::input_prompt, EventKind::aux_prompt,   EventKind::math,
    EventKind::plain_text, EventKind::question,     EventKind::plot_event,   EventKind::session_end,
    EventKind::client_input, EventKind::session_error,
};

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::banner: return "banner";
        case EventKind::input_prompt: return "input_prompt";
        case EventKind::aux_prompt: return "aux_prompt";
        case EventKind::math: return "math";
        case EventKind::plain_text: return "plain_text";
        case EventKind::question: return "question";
        case EventKind::plot_event: return "plot_event";
        case EventKind::session_end: return "session_end";
        case EventKind::client_input: return "client_input";
        case EventKind::session_error: return "session_error";
    }
    return "plain_text";
}

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
    for (auto k : kAllEventKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

inline EventKind event_kind(SegmentKind k) {
    switch (k) {
        case SegmentKind::banner: return EventKind::banner;
        case SegmentKind::input_prompt: return EventKind::input_prompt;
        case SegmentKind::aux_prompt: return EventKind::aux_prompt;
        case SegmentKind::math: return EventKind::math;
        case SegmentKind::plain_text: return EventKind::plain_text;
        case SegmentKind::question: return EventKind::question;
        case SegmentKind::plot_event: return EventKind::plot_event;
        case SegmentKind::session_end: return EventKind::session_end;
    }
    return EventKind::plain_text;
}

struct SessionEvent {
    std::uint64_t seq = 0;
    std::int64_t at = 0;
    EventKind kind = EventKind::plain_text;
    std::string raw;
    std::optional<std::string> label;
    std::optional<std::string> aux_kind;
    std::optional<std::string> latex;
    std::optional<QuestionRule> question;
    std::optional<std::string> plot_path;
    std::optional<ByteRange> byte_range;
    // client_input text or session_error message.
    std::optional<std::string> text;

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

/// Equality ignoring timestamps.
inline bool same_payload(const SessionEvent& a, const SessionEvent& b) {
    SessionEvent x = a;
    x.at = b.at;
    return x == b;
}

inline SessionEvent event_from_segment(const Segment& s) {
    SessionEvent e;
    e.kind = event_kind(s.kind);
    e.raw = s.raw;
    e.label = s.label;
    e.aux_kind = s.aux_kind;
    e.latex = s.latex;
    e.question = s.question;
    e.plot_path = s.plot_path;
    e.byte_range = s.byte_range;
    return e;
}

class RecordError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Json question_to_json(const QuestionRule& q) {
    Json j;
    j["pattern"] = q.pattern.source();
    j["answer_kind"] = to_string(q.answer_kind);
    if (q.echo_label) j["echo_label"] = *q.echo_label;
    if (!q.answers.empty()) j["answers"] = q.answers;
    return j;
}

inline QuestionRule question_from_json(const Json& j) {
    QuestionRule q;
    q.pattern = Pattern(j.at("pattern").get<std::string>());
    const auto kind = answer_kind_from_string(j.at("answer_kind").get<std::string>());
    if (!kind) throw RecordError("unknown answer_kind");
    q.answer_kind = *kind;
    if (j.contains("echo_label")) q.echo_label = j["echo_label"].get<std::string>();
    if (j.contains("answers")) q.answers = j["answers"].get<std::vector<std::string>>();
    return q;
}

namespace detail {

inline void put_bytes(Json& j, const char* key, const std::string& bytes) {
    if (text::is_valid_utf8(bytes)) {
        j[key] = bytes;
    } else {
        j[std::string(key) + "_b64"] = text::base64_encode(bytes);
    }
}

inline std::optional<std::string> get_bytes(const Json& j, const char* key) {
    const std::string b64 = std::string(key) + "_b64";
    if (j.contains(b64)) {
        auto bytes = text::base64_decode(j[b64].get<std::string>());
        if (!bytes) throw RecordError("bad " + b64);
        return bytes;
    }
    if (j.contains(key)) return j[key].get<std::string>();
    return std::nullopt;
}

}  // namespace detail

inline Json event_to_json(const SessionEvent& e) {
    Json j;
    j["seq"] = e.seq;
    j["at"] = e.at;
    j["kind"] = to_string(e.kind);
    detail::put_bytes(j, "raw", e.raw);
    if (e.label) detail::put_bytes(j, "label", *e.label);
    if (e.aux_kind) j["aux_kind"] = *e.aux_kind;
    if (e.latex) j["latex"] = *e.latex;
    if (e.question) j["question"] = question_to_json(*e.question);
    if (e.plot_path) detail::put_bytes(j, "plot_path", *e.plot_path);
    if (e.byte_range) j["byte_range"] = {e.byte_range->begin, e.byte_range->end};
    if (e.text) detail::put_bytes(j, "text", *e.text);
    return j;
}

inline SessionEvent event_from_json(const Json& j) {
    try {
        SessionEvent e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.at = j.at("at").get<std::int64_t>();
        const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) throw RecordError("unknown event kind");
        e.kind = *kind;
        auto raw = detail::get_bytes(j, "raw");
        if (!raw) throw RecordError("missing raw");
        e.raw = std::move(*raw);
        e.label = detail::get_bytes(j, "label");
        if (j.contains("aux_kind")) e.aux_kind = j["aux_kind"].get<std::string>();
        if (j.contains("latex")) e.latex = j["latex"].get<std::string>();
        if (j.contains("question")) e.question = question_from_json(j["question"]);
        e.plot_path = detail::get_bytes(j, "plot_path");
        if (j.contains("byte_range")) {
            const auto& r = j["byte_range"];
            if (!r.is_array() || r.size() != 2) throw RecordError("bad byte_range");
            e.byte_range = ByteRange{r[0].get<std::size_t>(), r[1].get<std::size_t>()};
        }
        e.text = detail::get_bytes(j, "text");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw RecordError(ex.what());
    }
}

}  // namespace casbridge
