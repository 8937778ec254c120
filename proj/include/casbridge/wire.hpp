#pragma once

// Wire protocol: one JSON object per line (or per WebSocket text frame).
//
//   {"v":1,"direction":"client_to_server","type":"send_input","req":"3","session_id":"s1","body":{"text":"x;"}}
//
// Client to server:
//   create_session  {"profile":"maxima","mode":"replay","corpus":"corpus1"}
//   send_input      {"text":"..."}
//   subscribe       {"after_seq":-1}
//   terminate       {}
// Server to client:
//   session_created {"profile":..,"mode":..,"state":{..}}
//   input_accepted  {"seq":12}
//   event_batch     {"events":[..],"state":{..},"final":false}
//                   math events carry an extra "mathml" field when the
//                   payload parses; "already_ended":true answers a repeated
//                   terminate
//   error           {"code":"unknown_session","message":"unknown session"}
//
// Replies echo the request's "req". The creator of a session is subscribed
// to it from the start; event batches go out after each reply and whenever
// a subscribed session produces events.

#include <casbridge/session.hpp>
#include <casbridge/session_event.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace casbridge {

inline constexpr int kWireVersion = 1;

enum class Direction { client_to_server, server_to_client };

inline std::string_view to_string(Direction d) {
    return d == Direction::client_to_server ? "client_to_server" : "server_to_client";
}

enum class MessageType {
    create_session,
    session_created,
    send_input,
    input_accepted,
    event_batch,
    subscribe,
    terminate,
    error,
};

inline constexpr MessageType kAllMessageTypes[] = {
    MessageType::create_session, MessageType::session_created, MessageType::send_input,
    MessageType::input_accepted, MessageType::event_batch,     MessageType::subscribe,
    MessageType::terminate,      MessageType::error,
};

inline std::string_view to_string(MessageType t) {
    switch (t) {
        case MessageType::create_session: return "create_session";
        case MessageType::session_created: return "session_created";
        case MessageType::send_input: return "send_input";
        case MessageType::input_accepted: return "input_accepted";
        case MessageType::event_batch: return "event_batch";
        case MessageType::subscribe: return "subscribe";
        case MessageType::terminate: return "terminate";
        case MessageType::error: return "error";
    }
    return "error";
}

inline std::optional<MessageType> message_type_from_string(std::string_view s) {
    for (auto t : kAllMessageTypes) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

inline Direction direction_of(MessageType t) {
    switch (t) {
        case MessageType::create_session:
        case MessageType::send_input:
        case MessageType::subscribe:
        case MessageType::terminate: return Direction::client_to_server;
        default: return Direction::server_to_client;
    }
}

struct WireMessage {
    Direction direction = Direction::client_to_server;
    MessageType type = MessageType::error;
    std::optional<std::string> req;
    std::optional<std::string> session_id;
    Json body = Json::object();

    friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline WireMessage make_message(MessageType type, std::optional<std::string> session_id = std::nullopt,
                                Json body = Json::object(), std::optional<std::string> req = std::nullopt) {
    WireMessage m;
    m.direction = direction_of(type);
    m.type = type;
    m.req = std::move(req);
    m.session_id = std::move(session_id);
    m.body = std::move(body);
    return m;
}

/// One line, without the trailing newline.
inline std::string encode(const WireMessage& m) {
    Json j;
    j["v"] = kWireVersion;
    j["direction"] = to_string(m.direction);
    j["type"] = to_string(m.type);
    if (m.req) j["req"] = *m.req;
    if (m.session_id) j["session_id"] = *m.session_id;
    j["body"] = m.body;
    return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

inline WireMessage decode(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    Json j;
    try {
        j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw WireError(std::string("malformed message: ") + e.what());
    }
    if (!j.is_object()) throw WireError("message is not an object");
    if (!j.contains("v") || !j["v"].is_number_integer() || j["v"].get<int>() != kWireVersion) {
        throw WireError("unsupported protocol version");
    }
    WireMessage m;
    try {
        const auto dir = j.at("direction").get<std::string>();
        if (dir == "client_to_server") {
            m.direction = Direction::client_to_server;
        } else if (dir == "server_to_client") {
            m.direction = Direction::server_to_client;
        } else {
            throw WireError("unknown direction \"" + dir + "\"");
        }
        const auto type = message_type_from_string(j.at("type").get<std::string>());
        if (!type) throw WireError("unknown message type");
        m.type = *type;
        if (j.contains("req")) m.req = j["req"].get<std::string>();
        if (j.contains("session_id")) m.session_id = j["session_id"].get<std::string>();
        if (j.contains("body")) m.body = j["body"];
    } catch (const nlohmann::json::exception& e) {
        throw WireError(std::string("bad message field: ") + e.what());
    }
    if (!m.body.is_object()) throw WireError("body is not an object");
    return m;
}

inline WireMessage error_message(ErrorCode code, const std::string& message,
                                 std::optional<std::string> session_id = std::nullopt,
                                 std::optional<std::string> req = std::nullopt) {
    Json body;
    body["code"] = to_string(code);
    body["message"] = message;
    return make_message(MessageType::error, std::move(session_id), std::move(body), std::move(req));
}

}  // namespace casbridge
