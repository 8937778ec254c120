#pragma once

// Transcript files: newline-delimited JSON. The first line is a header,
//
//   {"format":"casbridge-transcript","version":1,"session_id":"s1","profile":"maxima","mode":"replay"}
//
// followed by one event record per line (see session_event.hpp). A
// transcript with no events is an empty file.

#include <casbridge/session_event.hpp>

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace casbridge {

inline constexpr std::string_view kTranscriptFormat = "casbridge-transcript";

struct TranscriptHeader {
    std::string session_id;
    std::string profile;
    std::string mode;
    friend bool operator==(const TranscriptHeader&, const TranscriptHeader&) = default;
};

struct Transcript {
    TranscriptHeader header;
    std::vector<SessionEvent> events;
};

class TranscriptError : public std::runtime_error {
public:
    TranscriptError(std::size_t line, const std::string& msg)
        : std::runtime_error("transcript line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

inline void write_transcript(std::ostream& os, const TranscriptHeader& h, const std::vector<SessionEvent>& events) {
    if (events.empty()) return;
    Json head;
    head["format"] = kTranscriptFormat;
    head["version"] = 1;
    head["session_id"] = h.session_id;
    head["profile"] = h.profile;
    head["mode"] = h.mode;
    os << head.dump() << '\n';
    for (const auto& e : events) os << event_to_json(e).dump() << '\n';
}

inline std::string transcript_text(const TranscriptHeader& h, const std::vector<SessionEvent>& events) {
    std::ostringstream os;
    write_transcript(os, h, events);
    return os.str();
}

inline Transcript read_transcript(std::istream& is) {
    Transcript t;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        const bool terminated = !is.eof();
        if (!terminated) throw TranscriptError(n, "unterminated record");
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw TranscriptError(n, e.what());
        }
        if (n == 1) {
            if (!j.is_object() || j.value("format", "") != kTranscriptFormat) {
                throw TranscriptError(n, "missing transcript header");
            }
            if (j.value("version", 0) != 1) throw TranscriptError(n, "unsupported transcript version");
            t.header.session_id = j.value("session_id", "");
            t.header.profile = j.value("profile", "");
            t.header.mode = j.value("mode", "");
            continue;
        }
        try {
            t.events.push_back(event_from_json(j));
        } catch (const RecordError& e) {
            throw TranscriptError(n, e.what());
        }
    }
    if (n == 1) throw TranscriptError(1, "header without events");
    return t;
}

inline Transcript parse_transcript(const std::string& text) {
    std::istringstream is(text);
    return read_transcript(is);
}

inline void save_transcript(const std::filesystem::path& path, const TranscriptHeader& h,
                            const std::vector<SessionEvent>& events) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_transcript(os, h, events);
}

inline Transcript load_transcript(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_transcript(is);
}

}  // namespace casbridge
