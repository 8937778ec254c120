#pragma once

// The bridge service: sessions from a SessionManager exposed over the wire
// protocol. One thread per connection handles requests; a second thread per
// connection pushes event batches for subscribed sessions. Requests on one
// connection are answered in order, each reply followed by any batches it
// produced, so a replayed exchange is byte-for-byte reproducible.

#include <casbridge/latex_parser.hpp>
#include <casbridge/mock_script.hpp>
#include <casbridge/net.hpp>
#include <casbridge/profiles.hpp>
#include <casbridge/render_mathml.hpp>
#include <casbridge/session.hpp>
#include <casbridge/wire.hpp>

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace casbridge {

inline constexpr const char* kCorpusDirEnv = "CASBRIDGE_CORPUS_DIR";

#ifdef CASBRIDGE_DEFAULT_CORPUS_DIR
inline constexpr const char* kDefaultCorpusDir = CASBRIDGE_DEFAULT_CORPUS_DIR;
#else
inline constexpr const char* kDefaultCorpusDir = "corpus";
#endif

/// $CASBRIDGE_CORPUS_DIR if set, else the built-in default.
inline std::filesystem::path default_corpus_dir() {
    if (const char* env = std::getenv(kCorpusDirEnv); env != nullptr && *env != '\0') return env;
    return kDefaultCorpusDir;
}

/// Every *.json mock script in a directory, keyed by file stem.
class CorpusStore {
public:
    CorpusStore() = default;

    static CorpusStore load(const std::filesystem::path& dir) {
        CorpusStore store;
        store.dir_ = dir;
        std::error_code ec;
        if (!std::filesystem::is_directory(dir, ec)) throw ScriptError("corpus directory " + dir.string() + " not found");
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() != ".json") continue;
            try {
                store.scripts_[entry.path().stem().string()] = load_mock_script(entry.path());
            } catch (const ScriptError& e) {
                throw ScriptError(entry.path().string() + ": " + e.what());
            }
        }
        return store;
    }

    const std::filesystem::path& dir() const { return dir_; }

    const MockScript* find(const std::string& name) const {
        const auto it = scripts_.find(name);
        return it == scripts_.end() ? nullptr : &it->second;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [n, _] : scripts_) out.push_back(n);
        return out;
    }

private:
    std::filesystem::path dir_;
    std::map<std::string, MockScript> scripts_;
};

struct ServerConfig {
    std::string listen = "127.0.0.1:0";
    std::filesystem::path corpus_dir = default_corpus_dir();
    ProfileRegistry registry = builtin_registry();
    SessionOptions session_options;
};

/// Optional YAML service config. Keys: listen, corpus_dir, profiles (path
/// to a profiles file), transcript_dir.
struct ServiceFileConfig {
    std::optional<std::string> listen;
    std::optional<std::string> corpus_dir;
    std::optional<std::string> profiles;
    std::optional<std::string> transcript_dir;
};

inline ServiceFileConfig load_service_config(const std::filesystem::path& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    ServiceFileConfig c;
    const auto get = [&](const char* key) -> std::optional<std::string> {
        if (!root[key] || root[key].IsNull()) return std::nullopt;
        return root[key].as<std::string>();
    };
    c.listen = get("listen");
    c.corpus_dir = get("corpus_dir");
    c.profiles = get("profiles");
    c.transcript_dir = get("transcript_dir");
    return c;
}

/// Batch body: events (math events with a "mathml" field when the payload
/// parses), the session state and whether this is the last batch.
inline Json batch_body(const std::vector<SessionEvent>& events, const SessionState& state, bool final) {
    auto evs = Json::array();
    for (const auto& e : events) {
        Json j = event_to_json(e);
        if (e.kind == EventKind::math && e.latex) {
            if (auto r = formula::parse(*e.latex); r.formula) j["mathml"] = formula::to_mathml(*r.formula);
        }
        evs.push_back(std::move(j));
    }
    Json body;
    body["events"] = std::move(evs);
    body["state"] = state_to_json(state);
    body["final"] = final;
    return body;
}

class Server {
public:
    explicit Server(ServerConfig config)
        : config_(std::move(config)),
          corpora_(CorpusStore::load(config_.corpus_dir)),
          manager_(config_.registry, config_.session_options) {}

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;
    ~Server() { stop(); }

    void start() {
        listener_ = net::listen_on(net::parse_address(config_.listen));
        port_ = net::local_port(listener_);
        running_ = true;
        acceptor_ = std::thread([this] { accept_loop(); });
    }

    std::uint16_t port() const { return port_; }
    SessionManager& manager() { return manager_; }
    const CorpusStore& corpora() const { return corpora_; }

    /// Ends all sessions (flushing their transcripts), then closes every
    /// connection.
    void stop() {
        if (!running_.exchange(false)) return;
        manager_.shutdown();
        listener_.shutdown();
        if (acceptor_.joinable()) acceptor_.join();
        listener_.close();
        std::vector<std::thread> threads;
        {
            std::lock_guard lk(conn_mu_);
            for (auto& c : connections_) {
                if (auto p = c.lock()) p->close();
            }
            threads = std::move(conn_threads_);
        }
        for (auto& t : threads) t.join();
    }

private:
    class Connection : public std::enable_shared_from_this<Connection> {
    public:
        Connection(Server& server, std::unique_ptr<net::Channel> channel)
            : server_(server), channel_(std::move(channel)) {}

        void run() {
            std::thread pusher([self = shared_from_this()] { self->push_loop(); });
            while (auto line = channel_->read_message()) {
                if (line->empty()) continue;
                std::lock_guard lk(mu_);
                handle(*line);
                flush_locked();
            }
            {
                std::lock_guard lk(mu_);
                closed_ = true;
                for (auto& [_, sub] : subs_) sub.session->remove_listener(sub.listener);
                subs_.clear();
            }
            poke();
            pusher.join();
        }

        void close() {
            {
                std::lock_guard lk(mu_);
                if (!closed_) flush_locked();
                closed_ = true;
            }
            poke();
            channel_->shutdown();
        }

    private:
        struct Subscription {
            std::shared_ptr<Session> session;
            std::int64_t cursor = -1;
            std::size_t listener = 0;
        };

        void send(const WireMessage& m) { channel_->write_message(encode(m)); }

        void handle(const std::string& line) {
            WireMessage m;
            try {
                m = decode(line);
            } catch (const WireError& e) {
                send(error_message(ErrorCode::bad_request, e.what()));
                return;
            }
            try {
                if (m.direction != Direction::client_to_server) {
                    throw SessionError(ErrorCode::bad_request, "expected a client_to_server message");
                }
                switch (m.type) {
                    case MessageType::create_session: create(m); break;
                    case MessageType::send_input: send_input(m); break;
                    case MessageType::subscribe: subscribe(m); break;
                    case MessageType::terminate: terminate(m); break;
                    default:
                        throw SessionError(ErrorCode::bad_request,
                                           "unexpected message type " + std::string(to_string(m.type)));
                }
            } catch (const SessionError& e) {
                send(error_message(e.code(), e.what(), m.session_id, m.req));
            } catch (const std::exception& e) {
                send(error_message(ErrorCode::bad_request, e.what(), m.session_id, m.req));
            }
        }

        std::shared_ptr<Session> session_for(const WireMessage& m) {
            if (!m.session_id) throw SessionError(ErrorCode::bad_request, "missing session_id");
            return server_.manager_.get(*m.session_id);
        }

        void create(const WireMessage& m) {
            const auto profile = m.body.at("profile").get<std::string>();
            const auto mode = session_mode_from_string(m.body.value("mode", "replay"));
            if (!mode) throw SessionError(ErrorCode::bad_request, "mode must be live or replay");
            std::optional<MockScript> script;
            if (*mode == SessionMode::replay) {
                if (!m.body.contains("corpus")) throw SessionError(ErrorCode::missing_script, "replay mode needs a corpus");
                const auto name = m.body["corpus"].get<std::string>();
                const auto* s = server_.corpora_.find(name);
                if (s == nullptr) {
                    throw SessionError(ErrorCode::unknown_corpus,
                                       "unknown corpus \"" + name + "\" in " + server_.corpora_.dir().string());
                }
                script = *s;
            }
            auto session = server_.manager_.create(profile, *mode, std::move(script));
            Json body;
            body["profile"] = profile;
            body["mode"] = to_string(*mode);
            body["state"] = state_to_json(session->state());
            send(make_message(MessageType::session_created, session->id(), std::move(body), m.req));
            if (m.body.value("subscribe", true)) add_subscription(session, -1);
        }

        void send_input(const WireMessage& m) {
            auto session = session_for(m);
            const auto seq = session->send_input(m.body.at("text").get<std::string>());
            Json body;
            body["seq"] = seq;
            send(make_message(MessageType::input_accepted, session->id(), std::move(body), m.req));
        }

        void subscribe(const WireMessage& m) {
            auto session = session_for(m);
            const auto after = m.body.value("after_seq", std::int64_t{-1});
            add_subscription(session, after);
            flush_one_locked(session->id(), m.req, true);
        }

        void terminate(const WireMessage& m) {
            auto session = session_for(m);
            const auto result = session->terminate();
            std::vector<SessionEvent> events;
            if (auto it = subs_.find(session->id()); it != subs_.end()) {
                events = session->poll_events(it->second.cursor);
                it->second.session->remove_listener(it->second.listener);
                subs_.erase(it);
            }
            Json body = batch_body(events, result.state, true);
            if (result.already_ended) body["already_ended"] = true;
            send(make_message(MessageType::event_batch, session->id(), std::move(body), m.req));
        }

        void add_subscription(const std::shared_ptr<Session>& session, std::int64_t after) {
            auto& sub = subs_[session->id()];
            if (sub.session) sub.session->remove_listener(sub.listener);
            sub.session = session;
            sub.cursor = after;
            std::weak_ptr<Connection> weak = shared_from_this();
            sub.listener = session->add_listener([weak] {
                if (auto c = weak.lock()) c->poke();
            });
        }

        void poke() {
            {
                std::lock_guard lk(wake_mu_);
                dirty_ = true;
            }
            wake_.notify_all();
        }

        // Sends pending events for one subscription; with `always`, sends a
        // batch even when there is nothing new.
        void flush_one_locked(const std::string& id, const std::optional<std::string>& req, bool always) {
            auto it = subs_.find(id);
            if (it == subs_.end()) return;
            auto& sub = it->second;
            const auto state = sub.session->state();
            auto events = sub.session->poll_events(sub.cursor);
            if (events.empty() && !state.ended() && !always) return;
            if (!events.empty()) sub.cursor = static_cast<std::int64_t>(events.back().seq);
            send(make_message(MessageType::event_batch, id, batch_body(events, state, state.ended()), req));
            if (state.ended()) {
                sub.session->remove_listener(sub.listener);
                subs_.erase(it);
            }
        }

        void flush_locked() {
            std::vector<std::string> ids;
            for (const auto& [id, _] : subs_) ids.push_back(id);
            for (const auto& id : ids) flush_one_locked(id, std::nullopt, false);
        }

        void push_loop() {
            while (true) {
                {
                    std::unique_lock lk(wake_mu_);
                    wake_.wait(lk, [&] { return dirty_ || closed_; });
                    dirty_ = false;
                }
                std::lock_guard lk(mu_);
                if (closed_) return;
                flush_locked();
            }
        }

        Server& server_;
        std::unique_ptr<net::Channel> channel_;
        std::mutex mu_;
        std::map<std::string, Subscription> subs_;
        std::atomic<bool> closed_{false};

        std::mutex wake_mu_;
        std::condition_variable wake_;
        bool dirty_ = false;
    };

    void accept_loop() {
        while (running_) {
            const int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
            if (fd < 0) {
                if (errno == EINTR) continue;
                return;
            }
            net::Socket sock(fd);
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            std::lock_guard lk(conn_mu_);
            if (!running_) return;
            conn_threads_.emplace_back([this, s = std::move(sock)]() mutable {
                while (running_ && !s.readable(100)) {
                }
                if (!running_) return;
                auto channel = net::accept_channel(std::move(s));
                if (!channel) return;
                auto conn = std::make_shared<Connection>(*this, std::move(channel));
                {
                    std::lock_guard lk2(conn_mu_);
                    connections_.push_back(conn);
                    if (!running_) conn->close();
                }
                conn->run();
            });
        }
    }

    ServerConfig config_;
    CorpusStore corpora_;
    SessionManager manager_;
    net::Socket listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;

    std::mutex conn_mu_;
    std::vector<std::weak_ptr<Connection>> connections_;
    std::vector<std::thread> conn_threads_;
};

}  // namespace casbridge
