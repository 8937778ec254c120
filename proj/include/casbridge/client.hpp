#pragma once

// Wire protocol client.

#include <casbridge/net.hpp>
#include <casbridge/session.hpp>
#include <casbridge/wire.hpp>

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <sys/socket.h>
#include <sys/time.h>

namespace casbridge {

class WireClient {
public:
    explicit WireClient(std::unique_ptr<net::Channel> channel) : channel_(std::move(channel)) {}

    /// `addr` is host:port. Reads give up after `timeout_s` seconds of silence.
    static WireClient connect(const std::string& addr, bool websocket = false, int timeout_s = 20) {
        const auto a = net::parse_address(addr);
        auto sock = net::connect_to(a);
        timeval tv{timeout_s, 0};
        ::setsockopt(sock.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        if (websocket) return WireClient(net::WebSocketChannel::connect(std::move(sock), a.host));
        return WireClient(std::make_unique<net::LineChannel>(std::move(sock)));
    }

    void send(const WireMessage& m) {
        const auto line = encode(m);
        if (record_) log_.push_back(line);
        if (!channel_->write_message(line)) throw net::NetError("connection closed");
    }

    /// Next message from the server, or nullopt when the connection closed.
    std::optional<WireMessage> receive() {
        if (!queued_.empty()) {
            auto m = std::move(queued_.front());
            queued_.pop_front();
            return m;
        }
        return read();
    }

    /// Sends `m` with a fresh req id and returns the reply carrying it.
    /// Messages arriving before the reply stay queued for receive().
    WireMessage request(WireMessage m) {
        m.req = std::to_string(++req_);
        send(m);
        while (true) {
            auto r = read();
            if (!r) throw net::NetError("connection closed before reply");
            if (r->req == m.req) return *r;
            queued_.push_back(std::move(*r));
        }
    }

    /// Keeps every line sent or received, in order.
    void record(bool on) { record_ = on; }
    const std::vector<std::string>& log() const { return log_; }

    void close() { channel_->shutdown(); }

private:
    std::optional<WireMessage> read() {
        auto line = channel_->read_message();
        if (!line) return std::nullopt;
        if (record_) log_.push_back(*line);
        return decode(*line);
    }

    std::unique_ptr<net::Channel> channel_;
    std::deque<WireMessage> queued_;
    std::vector<std::string> log_;
    bool record_ = false;
    std::uint64_t req_ = 0;
};

inline WireMessage create_request(const std::string& profile, SessionMode mode,
                                  const std::optional<std::string>& corpus) {
    Json body;
    body["profile"] = profile;
    body["mode"] = to_string(mode);
    if (corpus) body["corpus"] = *corpus;
    return make_message(MessageType::create_session, std::nullopt, std::move(body));
}

inline WireMessage input_request(const std::string& session_id, const std::string& text) {
    Json body;
    body["text"] = text;
    return make_message(MessageType::send_input, session_id, std::move(body));
}

inline WireMessage terminate_request(const std::string& session_id) {
    return make_message(MessageType::terminate, session_id);
}

inline WireMessage subscribe_request(const std::string& session_id, std::int64_t after_seq) {
    Json body;
    body["after_seq"] = after_seq;
    return make_message(MessageType::subscribe, session_id, std::move(body));
}

inline void throw_if_error(const WireMessage& m) {
    if (m.type != MessageType::error) return;
    const auto code = error_code_from_string(m.body.value("code", ""));
    throw SessionError(code.value_or(ErrorCode::bad_request), m.body.value("message", ""));
}

struct WireReplay {
    std::string session_id;
    std::vector<SessionEvent> events;
    SessionState final_state;
};

/// The inputs of a script's expect steps, in order.
inline std::vector<std::string> script_inputs(const MockScript& s) {
    std::vector<std::string> out;
    for (const auto& st : s.steps) {
        if (st.kind == ScriptStep::Kind::expect_input) out.push_back(st.text);
    }
    return out;
}

/// Replays a corpus over the wire, sending `inputs` one at a time whenever
/// the session is ready for input and terminating when they run out.
inline WireReplay replay_over_wire(WireClient& client, const std::string& profile, const std::string& corpus,
                                   const std::vector<std::string>& inputs) {
    WireReplay out;
    const auto created = client.request(create_request(profile, SessionMode::replay, corpus));
    throw_if_error(created);
    out.session_id = created.session_id.value_or("");

    const auto take = [&](const WireMessage& m) {
        for (const auto& e : m.body.at("events")) out.events.push_back(event_from_json(e));
        out.final_state = state_from_json(m.body.at("state"));
        return m.body.value("final", false);
    };

    std::size_t next = 0;
    while (true) {
        auto m = client.receive();
        if (!m) throw net::NetError("connection closed during replay");
        if (m->type != MessageType::event_batch || m->session_id != out.session_id) continue;
        if (take(*m)) return out;
        if (!out.final_state.accepts_input()) continue;
        if (next < inputs.size()) {
            throw_if_error(client.request(input_request(out.session_id, inputs[next++])));
        } else {
            take(client.request(terminate_request(out.session_id)));
            return out;
        }
    }
}

}  // namespace casbridge
