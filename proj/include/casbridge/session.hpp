#pragma once

// Sessions over a live backend process or a replayed mock script.
//
// State machine:
//
//   starting -> at_prompt             first input or aux prompt
//   at_prompt -> computing            accepted input
//   computing -> at_prompt | awaiting_answer | ended
//   awaiting_answer -> computing      accepted answer
//   any -> ended
//
// Input is accepted only at a prompt or while a question waits for its
// answer. Replay sessions pump the script synchronously after every accepted
// input unless created with auto_pump off, in which case pump() advances the
// script to its next expect step (or its end).

#include <casbridge/mock_script.hpp>
#include <casbridge/process.hpp>
#include <casbridge/profiles.hpp>
#include <casbridge/segmenter.hpp>
#include <casbridge/session_event.hpp>
#include <casbridge/text.hpp>
#include <casbridge/transcript.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace casbridge {

enum class SessionMode { live, replay };

inline std::string_view to_string(SessionMode m) { return m == SessionMode::live ? "live" : "replay"; }

inline std::optional<SessionMode> session_mode_from_string(std::string_view s) {
    if (s == "live") return SessionMode::live;
    if (s == "replay") return SessionMode::replay;
    return std::nullopt;
}

enum class StateKind { starting, at_prompt, computing, awaiting_answer, ended };

inline std::string_view to_string(StateKind k) {
    switch (k) {
        case StateKind::starting: return "starting";
        case StateKind::at_prompt: return "at_prompt";
        case StateKind::computing: return "computing";
        case StateKind::awaiting_answer: return "awaiting_answer";
        case StateKind::ended: return "ended";
    }
    return "starting";
}

inline std::optional<StateKind> state_kind_from_string(std::string_view s) {
    for (auto k : {StateKind::starting, StateKind::at_prompt, StateKind::computing, StateKind::awaiting_answer,
                   StateKind::ended}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

enum class EndReason { client_request, backend_quit, backend_exit, replay_exhausted, spawn_failed };

inline std::string_view to_string(EndReason r) {
    switch (r) {
        case EndReason::client_request: return "client_request";
        case EndReason::backend_quit: return "backend_quit";
        case EndReason::backend_exit: return "backend_exit";
        case EndReason::replay_exhausted: return "replay_exhausted";
        case EndReason::spawn_failed: return "spawn_failed";
    }
    return "client_request";
}

inline std::optional<EndReason> end_reason_from_string(std::string_view s) {
    for (auto r : {EndReason::client_request, EndReason::backend_quit, EndReason::backend_exit,
                   EndReason::replay_exhausted, EndReason::spawn_failed}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

struct SessionState {
    StateKind kind = StateKind::starting;
    // at_prompt: prompt label and "input" or the aux prompt kind.
    std::string label;
    std::string prompt_kind;
    std::optional<QuestionRule> question;
    std::optional<EndReason> reason;

    bool accepts_input() const { return kind == StateKind::at_prompt || kind == StateKind::awaiting_answer; }
    bool ended() const { return kind == StateKind::ended; }

    static SessionState at_prompt(std::string label, std::string kind) {
        SessionState s;
        s.kind = StateKind::at_prompt;
        s.label = std::move(label);
        s.prompt_kind = std::move(kind);
        return s;
    }
    static SessionState of(StateKind k) {
        SessionState s;
        s.kind = k;
        return s;
    }

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

inline Json state_to_json(const SessionState& s) {
    Json j;
    j["kind"] = to_string(s.kind);
    if (s.kind == StateKind::at_prompt) {
        j["label"] = s.label;
        j["prompt_kind"] = s.prompt_kind;
    }
    if (s.question) j["question"] = question_to_json(*s.question);
    if (s.reason) j["reason"] = to_string(*s.reason);
    return j;
}

inline std::ostream& operator<<(std::ostream& os, const SessionState& s) { return os << state_to_json(s).dump(); }

inline SessionState state_from_json(const Json& j) {
    SessionState s;
    const auto kind = state_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw RecordError("unknown state kind");
    s.kind = *kind;
    s.label = j.value("label", "");
    s.prompt_kind = j.value("prompt_kind", "");
    if (j.contains("question")) s.question = question_from_json(j["question"]);
    if (j.contains("reason")) {
        s.reason = end_reason_from_string(j["reason"].get<std::string>());
        if (!s.reason) throw RecordError("unknown end reason");
    }
    return s;
}

enum class ErrorCode {
    unknown_profile,
    missing_script,
    script_mismatch,
    spawn_failed,
    wrong_state,
    replay_mismatch,
    invalid_answer,
    unknown_session,
    unknown_corpus,
    already_ended,
    bad_request,
};

inline std::string_view to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::unknown_profile: return "unknown_profile";
        case ErrorCode::missing_script: return "missing_script";
        case ErrorCode::script_mismatch: return "script_mismatch";
        case ErrorCode::spawn_failed: return "spawn_failed";
        case ErrorCode::wrong_state: return "wrong_state";
        case ErrorCode::replay_mismatch: return "replay_mismatch";
        case ErrorCode::invalid_answer: return "invalid_answer";
        case ErrorCode::unknown_session: return "unknown_session";
        case ErrorCode::unknown_corpus: return "unknown_corpus";
        case ErrorCode::already_ended: return "already_ended";
        case ErrorCode::bad_request: return "bad_request";
    }
    return "bad_request";
}

inline std::optional<ErrorCode> error_code_from_string(std::string_view s) {
    for (auto c : {ErrorCode::unknown_profile, ErrorCode::missing_script, ErrorCode::script_mismatch,
                   ErrorCode::spawn_failed, ErrorCode::wrong_state, ErrorCode::replay_mismatch,
                   ErrorCode::invalid_answer, ErrorCode::unknown_session, ErrorCode::unknown_corpus,
                   ErrorCode::already_ended, ErrorCode::bad_request}) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

class SessionError : public std::runtime_error {
public:
    SessionError(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

using Clock = std::function<std::int64_t()>;

inline std::int64_t wall_clock_micros() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

struct SessionOptions {
    bool auto_pump = true;
    Clock clock;
    // When set, the transcript is written to <dir>/<id>.ndjson once the session ends.
    std::optional<std::filesystem::path> transcript_dir;
    int quiescence_ms = 50;
};

struct TerminateResult {
    SessionState state;
    bool already_ended = false;
};

class Session {
public:
    using Listener = std::function<void()>;

    Session(std::string id, std::shared_ptr<const BackendProfile> profile, SessionMode mode,
            std::optional<MockScript> script, SessionOptions options)
        : id_(std::move(id)),
          profile_(std::move(profile)),
          mode_(mode),
          script_(std::move(script)),
          options_(std::move(options)),
          segmenter_(profile_) {
        if (!options_.clock) options_.clock = wall_clock_micros;
    }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    ~Session() {
        {
            std::lock_guard lk(mu_);
            stop_ = true;
        }
        if (reader_.joinable()) reader_.join();
    }

    /// Live sessions spawn the backend; replay sessions pump to the first
    /// expect step unless auto_pump is off.
    void start() {
        if (mode_ == SessionMode::replay) {
            {
                std::lock_guard lk(mu_);
                if (options_.auto_pump) pump_locked();
            }
            notify();
            return;
        }
        try {
            child_ = ChildProcess::spawn(profile_->command, profile_->use_pty);
        } catch (const SpawnError& e) {
            {
                std::lock_guard lk(mu_);
                SessionEvent ev;
                ev.kind = EventKind::session_error;
                ev.text = e.what();
                append_locked(std::move(ev));
                end_locked(EndReason::spawn_failed);
            }
            notify();
            return;
        }
        reader_ = std::thread([this] { reader_loop(); });
    }

    const std::string& id() const { return id_; }
    const BackendProfile& profile() const { return *profile_; }
    SessionMode mode() const { return mode_; }

    SessionState state() const {
        std::lock_guard lk(mu_);
        return state_;
    }

    /// Returns the seq of the client_input event.
    std::uint64_t send_input(const std::string& input) {
        std::uint64_t seq = 0;
        {
            std::lock_guard lk(mu_);
            if (!state_.accepts_input()) {
                throw SessionError(ErrorCode::wrong_state,
                                   "session " + id_ + " is " + std::string(to_string(state_.kind)) + "; input not accepted");
            }
            if (state_.kind == StateKind::awaiting_answer && state_.question && !state_.question->accepts(input)) {
                std::string allowed;
                for (const auto& a : state_.question->answers) allowed += (allowed.empty() ? "" : ", ") + a;
                throw SessionError(ErrorCode::invalid_answer, "answer must be one of: " + allowed);
            }
            if (mode_ == SessionMode::replay) {
                if (cursor_ >= script_->steps.size() ||
                    script_->steps[cursor_].kind != ScriptStep::Kind::expect_input) {
                    throw SessionError(ErrorCode::replay_mismatch,
                                       "replay mismatch at step " + std::to_string(cursor_) + ": script expects no input");
                }
                const auto& expected = script_->steps[cursor_].text;
                if (text::trim(input) != text::trim(expected)) {
                    throw SessionError(ErrorCode::replay_mismatch, "replay mismatch at step " + std::to_string(cursor_) +
                                                                       ": expected \"" + expected + "\"");
                }
                ++cursor_;
            }
            SessionEvent ev;
            ev.kind = EventKind::client_input;
            ev.text = input;
            seq = append_locked(std::move(ev));
            state_ = SessionState::of(StateKind::computing);
            if (mode_ == SessionMode::replay && options_.auto_pump) pump_locked();
        }
        if (mode_ == SessionMode::live) write_backend(input + "\n");
        notify();
        return seq;
    }

    /// Replay only: runs emit steps up to the next expect step. Returns
    /// whether any step ran.
    bool pump() {
        bool ran = false;
        {
            std::lock_guard lk(mu_);
            if (mode_ != SessionMode::replay || state_.ended() || state_.accepts_input()) return false;
            ran = pump_locked();
        }
        notify();
        return ran;
    }

    /// The replay input the script waits for next, if any.
    std::optional<std::string> pending_expect() const {
        std::lock_guard lk(mu_);
        if (mode_ != SessionMode::replay || state_.ended() || cursor_ >= script_->steps.size()) return std::nullopt;
        const auto& st = script_->steps[cursor_];
        if (st.kind != ScriptStep::Kind::expect_input) return std::nullopt;
        return st.text;
    }

    /// Events with seq > after_seq, in order.
    std::vector<SessionEvent> poll_events(std::int64_t after_seq) const {
        std::lock_guard lk(mu_);
        return events_after_locked(after_seq);
    }

    /// Blocks until an event with seq > after_seq exists, the session has
    /// ended, or the timeout passes. Returns whether such an event exists.
    bool wait_events(std::int64_t after_seq, std::chrono::milliseconds timeout) const {
        std::unique_lock lk(mu_);
        cv_.wait_for(lk, timeout, [&] { return last_seq_locked() > after_seq || state_.ended(); });
        return last_seq_locked() > after_seq;
    }

    bool wait_until_ended(std::chrono::milliseconds timeout) const {
        std::unique_lock lk(mu_);
        return cv_.wait_for(lk, timeout, [&] { return state_.ended(); });
    }

    /// Waits until the session accepts input or ends.
    SessionState wait_ready(std::chrono::milliseconds timeout) const {
        std::unique_lock lk(mu_);
        cv_.wait_for(lk, timeout, [&] { return state_.ended() || state_.accepts_input(); });
        return state_;
    }

    std::vector<SessionEvent> events() const {
        std::lock_guard lk(mu_);
        return events_;
    }

    TerminateResult terminate() {
        std::lock_guard once(terminate_mu_);
        TerminateResult r;
        bool write_quit = false;
        {
            std::lock_guard lk(mu_);
            if (state_.ended()) {
                r.state = state_;
                r.already_ended = true;
                return r;
            }
            terminating_ = true;
            if (mode_ == SessionMode::replay) {
                pump_locked();
                if (!state_.ended()) end_locked(EndReason::client_request);
            } else {
                write_quit = !profile_->quit_command.empty();
            }
        }
        if (mode_ == SessionMode::live) {
            if (write_quit) {
                try {
                    write_backend(profile_->quit_command + "\n");
                } catch (const std::exception&) {
                }
            }
            if (!wait_until_ended(std::chrono::milliseconds(2000))) {
                std::lock_guard lk(mu_);
                stop_ = true;
            }
            if (reader_.joinable()) reader_.join();
            std::lock_guard lk(mu_);
            if (!state_.ended()) end_locked(EndReason::client_request);
        }
        notify();
        r.state = state();
        return r;
    }

    TranscriptHeader transcript_header() const { return {id_, profile_->name, std::string(to_string(mode_))}; }

    void persist(const std::filesystem::path& path) const { save_transcript(path, transcript_header(), events()); }

    std::size_t add_listener(Listener l) {
        std::lock_guard lk(listener_mu_);
        listeners_[++listener_id_] = std::move(l);
        return listener_id_;
    }

    void remove_listener(std::size_t id) {
        std::lock_guard lk(listener_mu_);
        listeners_.erase(id);
    }

private:
    std::int64_t last_seq_locked() const { return static_cast<std::int64_t>(events_.size()) - 1; }

    std::vector<SessionEvent> events_after_locked(std::int64_t after_seq) const {
        const auto from = static_cast<std::size_t>(std::max<std::int64_t>(after_seq + 1, 0));
        if (from >= events_.size()) return {};
        return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
    }

    std::uint64_t append_locked(SessionEvent ev) {
        ev.seq = events_.size();
        ev.at = options_.clock();
        events_.push_back(std::move(ev));
        cv_.notify_all();
        return events_.back().seq;
    }

    void absorb_locked(std::vector<Segment> segs) {
        for (auto& s : segs) {
            SessionEvent ev = event_from_segment(s);
            const auto kind = ev.kind;
            append_locked(std::move(ev));
            if (state_.ended()) continue;
            switch (kind) {
                case EventKind::input_prompt: state_ = SessionState::at_prompt(s.label.value_or(""), "input"); break;
                case EventKind::aux_prompt:
                    state_ = SessionState::at_prompt(s.label.value_or(""), s.aux_kind.value_or("aux"));
                    break;
                case EventKind::question:
                    state_ = SessionState::of(StateKind::awaiting_answer);
                    state_.question = s.question;
                    break;
                case EventKind::session_end: end_locked(EndReason::backend_quit); break;
                default: break;
            }
        }
    }

    bool pump_locked() {
        bool ran = false;
        const auto& steps = script_->steps;
        while (!state_.ended() && cursor_ < steps.size() && steps[cursor_].kind == ScriptStep::Kind::emit) {
            const auto& st = steps[cursor_++];
            segmenter_.feed(st.text);
            absorb_locked(segmenter_.drain());
            if (st.quiesce) absorb_locked(segmenter_.quiescence_tick());
            ran = true;
        }
        if (!state_.ended() && cursor_ >= steps.size()) {
            absorb_locked(segmenter_.quiescence_tick());
            if (!state_.ended()) end_locked(EndReason::replay_exhausted);
            ran = true;
        }
        return ran;
    }

    void end_locked(EndReason reason) {
        if (state_.ended()) return;
        if (terminating_) reason = EndReason::client_request;
        state_ = SessionState::of(StateKind::ended);
        state_.reason = reason;
        cv_.notify_all();
        if (options_.transcript_dir) {
            try {
                save_transcript(*options_.transcript_dir / (id_ + ".ndjson"), transcript_header(), events_);
            } catch (const std::exception&) {
            }
        }
    }

    void write_backend(const std::string& bytes) {
        std::lock_guard lk(write_mu_);
        child_.write_all(bytes);
    }

    void reader_loop() {
        bool unticked = false;
        while (true) {
            {
                std::lock_guard lk(mu_);
                if (stop_) break;
            }
            std::string buf;
            const auto status = child_.read_some(buf, options_.quiescence_ms);
            {
                std::lock_guard lk(mu_);
                switch (status) {
                    case ChildProcess::ReadStatus::data:
                        segmenter_.feed(buf);
                        absorb_locked(segmenter_.drain());
                        unticked = true;
                        break;
                    case ChildProcess::ReadStatus::timeout:
                        if (unticked) absorb_locked(segmenter_.quiescence_tick());
                        unticked = false;
                        break;
                    case ChildProcess::ReadStatus::eof:
                        absorb_locked(segmenter_.quiescence_tick());
                        stop_ = true;
                        break;
                }
            }
            notify();
        }
        child_.finish(std::chrono::milliseconds(500));
        {
            std::lock_guard lk(mu_);
            if (!state_.ended()) end_locked(EndReason::backend_exit);
        }
        notify();
    }

    void notify() {
        std::vector<Listener> ls;
        {
            std::lock_guard lk(listener_mu_);
            for (const auto& [_, l] : listeners_) ls.push_back(l);
        }
        for (const auto& l : ls) l();
    }

    const std::string id_;
    const std::shared_ptr<const BackendProfile> profile_;
    const SessionMode mode_;
    const std::optional<MockScript> script_;
    SessionOptions options_;

    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    Segmenter segmenter_;
    SessionState state_;
    std::vector<SessionEvent> events_;
    std::size_t cursor_ = 0;
    bool terminating_ = false;
    bool stop_ = false;

    std::mutex write_mu_;
    std::mutex terminate_mu_;
    ChildProcess child_;
    std::thread reader_;

    std::mutex listener_mu_;
    std::map<std::size_t, Listener> listeners_;
    std::size_t listener_id_ = 0;
};

class SessionManager {
public:
    explicit SessionManager(ProfileRegistry registry, SessionOptions defaults = {})
        : registry_(std::move(registry)), defaults_(std::move(defaults)) {}

    const ProfileRegistry& registry() const { return registry_; }

    std::shared_ptr<Session> create(const std::string& profile_name, SessionMode mode,
                                    std::optional<MockScript> script = std::nullopt,
                                    std::optional<SessionOptions> options = std::nullopt) {
        auto profile = registry_.find(profile_name);
        if (!profile) throw SessionError(ErrorCode::unknown_profile, "unknown profile \"" + profile_name + "\"");
        if (mode == SessionMode::replay) {
            if (!script) throw SessionError(ErrorCode::missing_script, "replay mode needs a script");
            if (script->profile != profile_name) {
                throw SessionError(ErrorCode::script_mismatch, "script is for profile \"" + script->profile +
                                                                   "\", not \"" + profile_name + "\"");
            }
        }
        const std::string id = "s" + std::to_string(next_id_.fetch_add(1) + 1);
        auto s = std::make_shared<Session>(id, profile, mode, std::move(script), options.value_or(defaults_));
        {
            std::lock_guard lk(mu_);
            sessions_[id] = s;
        }
        s->start();
        return s;
    }

    std::shared_ptr<Session> find(const std::string& id) const {
        std::lock_guard lk(mu_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    std::shared_ptr<Session> get(const std::string& id) const {
        auto s = find(id);
        if (!s) throw SessionError(ErrorCode::unknown_session, "unknown session");
        return s;
    }

    std::vector<std::string> ids() const {
        std::lock_guard lk(mu_);
        std::vector<std::string> out;
        for (const auto& [id, _] : sessions_) out.push_back(id);
        return out;
    }

    /// Terminates every session that has not ended.
    void shutdown() {
        std::vector<std::shared_ptr<Session>> all;
        {
            std::lock_guard lk(mu_);
            for (const auto& [_, s] : sessions_) all.push_back(s);
        }
        for (const auto& s : all) s->terminate();
    }

private:
    ProfileRegistry registry_;
    SessionOptions defaults_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<std::uint64_t> next_id_{0};
};

/// Feeds a replay session the script's own inputs until it ends.
inline void drive_replay(Session& s) {
    while (true) {
        auto st = s.state();
        if (st.ended()) return;
        if (!st.accepts_input()) {
            if (!s.pump()) return;
            continue;
        }
        const auto next = s.pending_expect();
        if (!next) return;
        s.send_input(*next);
    }
}

/// Events of a complete replay of `script`, with a fixed clock.
inline std::vector<SessionEvent> replay_script(const ProfileRegistry& registry, const MockScript& script) {
    SessionManager mgr(registry, SessionOptions{true, [] { return std::int64_t{0}; }, std::nullopt, 50});
    auto s = mgr.create(script.profile, SessionMode::replay, script);
    drive_replay(*s);
    return s->events();
}

}  // namespace casbridge
