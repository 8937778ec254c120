#pragma once

// TCP sockets and message channels: newline-delimited lines, or WebSocket
// text frames after an HTTP upgrade on the same port.

#include <casbridge/text.hpp>

#include <openssl/sha.h>

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace casbridge::net {

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Address {
    std::string host;
    std::uint16_t port = 0;
};

/// "host:port", ":port" or "port".
inline Address parse_address(std::string_view s) {
    Address a;
    const auto colon = s.rfind(':');
    std::string_view port = s;
    if (colon != std::string_view::npos) {
        a.host = std::string(s.substr(0, colon));
        port = s.substr(colon + 1);
    }
    if (a.host.empty()) a.host = "0.0.0.0";
    if (port.empty()) throw NetError("missing port in \"" + std::string(s) + "\"");
    unsigned long v = 0;
    for (char c : port) {
        if (c < '0' || c > '9') throw NetError("bad port in \"" + std::string(s) + "\"");
        v = v * 10 + static_cast<unsigned long>(c - '0');
        if (v > 65535) throw NetError("bad port in \"" + std::string(s) + "\"");
    }
    a.port = static_cast<std::uint16_t>(v);
    return a;
}

inline sockaddr_in resolve(const Address& a) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(a.host.c_str(), nullptr, &hints, &res); rc != 0 || res == nullptr) {
        throw NetError("cannot resolve " + a.host + ": " + ::gai_strerror(rc));
    }
    sockaddr_in sa = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
    ::freeaddrinfo(res);
    sa.sin_port = htons(a.port);
    return sa;
}

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

    void close() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

    void shutdown() const {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

    bool write_all(std::string_view bytes) const {
        while (!bytes.empty()) {
            const auto n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            bytes.remove_prefix(static_cast<std::size_t>(n));
        }
        return true;
    }

    /// Appends received bytes; false on EOF or error.
    bool read_some(std::string& out) const {
        char buf[8192];
        while (true) {
            const auto n = ::recv(fd_, buf, sizeof buf, 0);
            if (n > 0) {
                out.append(buf, static_cast<std::size_t>(n));
                return true;
            }
            if (n < 0 && errno == EINTR) continue;
            return false;
        }
    }

    bool readable(int timeout_ms) const {
        pollfd p{fd_, POLLIN, 0};
        return ::poll(&p, 1, timeout_ms) > 0;
    }

private:
    int fd_ = -1;
};

inline Socket listen_on(const Address& a) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw NetError(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const auto sa = resolve(a);
    if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
        throw NetError("cannot bind " + a.host + ":" + std::to_string(a.port) + ": " + std::strerror(errno));
    }
    if (::listen(s.fd(), 64) != 0) throw NetError(std::string("listen: ") + std::strerror(errno));
    return s;
}

inline std::uint16_t local_port(const Socket& s) {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&sa), &len);
    return ntohs(sa.sin_port);
}

inline Socket connect_to(const Address& a) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw NetError(std::string("socket: ") + std::strerror(errno));
    const auto sa = resolve(a);
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
        throw NetError("cannot connect to " + a.host + ":" + std::to_string(a.port) + ": " + std::strerror(errno));
    }
    const int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

/// A bidirectional stream of text messages.
class Channel {
public:
    virtual ~Channel() = default;
    /// Next message, or nullopt once the peer has closed.
    virtual std::optional<std::string> read_message() = 0;
    virtual bool write_message(std::string_view msg) = 0;
    virtual void shutdown() = 0;
};

class LineChannel : public Channel {
public:
    explicit LineChannel(Socket s, std::string pending = {}) : sock_(std::move(s)), buf_(std::move(pending)) {}

    std::optional<std::string> read_message() override {
        while (true) {
            if (const auto nl = buf_.find('\n'); nl != std::string::npos) {
                std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (!sock_.read_some(buf_)) return std::nullopt;
        }
    }

    bool write_message(std::string_view msg) override {
        std::string line(msg);
        line += '\n';
        return sock_.write_all(line);
    }

    void shutdown() override { sock_.shutdown(); }

private:
    Socket sock_;
    std::string buf_;
};

inline constexpr std::string_view kWebSocketGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

inline std::string websocket_accept(std::string_view key) {
    const std::string in = std::string(key) + std::string(kWebSocketGuid);
    unsigned char digest[SHA_DIGEST_LENGTH];
    ::SHA1(reinterpret_cast<const unsigned char*>(in.data()), in.size(), digest);
    return text::base64_encode(std::string_view(reinterpret_cast<const char*>(digest), sizeof digest));
}

inline std::optional<std::string> http_header(std::string_view request, std::string_view name) {
    std::size_t pos = request.find("\r\n");
    while (pos != std::string_view::npos && pos + 2 < request.size()) {
        const auto start = pos + 2;
        const auto end = request.find("\r\n", start);
        const auto line = request.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        const auto colon = line.find(':');
        if (colon != std::string_view::npos && colon == name.size()) {
            bool same = true;
            for (std::size_t i = 0; i < name.size(); ++i) {
                if (std::tolower(static_cast<unsigned char>(line[i])) != std::tolower(static_cast<unsigned char>(name[i]))) {
                    same = false;
                    break;
                }
            }
            if (same) return std::string(text::trim(line.substr(colon + 1)));
        }
        pos = end;
    }
    return std::nullopt;
}

/// RFC 6455 framing; clients mask their frames, servers do not.
class WebSocketChannel : public Channel {
public:
    WebSocketChannel(Socket s, bool client, std::string pending = {})
        : sock_(std::move(s)), client_(client), buf_(std::move(pending)) {}

    std::optional<std::string> read_message() override {
        std::string message;
        while (true) {
            auto frame = read_frame();
            if (!frame) return std::nullopt;
            auto& [opcode, fin, payload] = *frame;
            switch (opcode) {
                case 0x8:
                    write_frame(0x8, {});
                    return std::nullopt;
                case 0x9: write_frame(0xA, payload); continue;
                case 0xA: continue;
                default: break;
            }
            message += payload;
            if (fin) return message;
        }
    }

    bool write_message(std::string_view msg) override { return write_frame(0x1, msg); }

    void shutdown() override { sock_.shutdown(); }

    /// Server side: completes the HTTP upgrade held in `request`.
    static std::unique_ptr<WebSocketChannel> accept(Socket s, std::string request) {
        const auto end = request.find("\r\n\r\n");
        const auto key = http_header(std::string_view(request).substr(0, end), "Sec-WebSocket-Key");
        if (!key) {
            s.write_all("HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
            return nullptr;
        }
        const std::string resp = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                                 "Sec-WebSocket-Accept: " +
                                 websocket_accept(*key) + "\r\n\r\n";
        if (!s.write_all(resp)) return nullptr;
        return std::make_unique<WebSocketChannel>(std::move(s), false, request.substr(end + 4));
    }

    /// Client side: performs the upgrade handshake.
    static std::unique_ptr<WebSocketChannel> connect(Socket s, const std::string& host) {
        const std::string key = text::base64_encode("casbridge-client");
        const std::string req = "GET / HTTP/1.1\r\nHost: " + host +
                                "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                                "\r\nSec-WebSocket-Version: 13\r\n\r\n";
        if (!s.write_all(req)) throw NetError("websocket handshake failed");
        std::string buf;
        while (buf.find("\r\n\r\n") == std::string::npos) {
            if (!s.read_some(buf)) throw NetError("websocket handshake failed");
        }
        const auto end = buf.find("\r\n\r\n");
        const auto head = std::string_view(buf).substr(0, end);
        if (!head.starts_with("HTTP/1.1 101") || http_header(head, "Sec-WebSocket-Accept") != websocket_accept(key)) {
            throw NetError("websocket handshake rejected");
        }
        return std::make_unique<WebSocketChannel>(std::move(s), true, buf.substr(end + 4));
    }

private:
    struct Frame {
        int opcode;
        bool fin;
        std::string payload;
    };

    bool fill(std::size_t n) {
        while (buf_.size() < n) {
            if (!sock_.read_some(buf_)) return false;
        }
        return true;
    }

    std::optional<Frame> read_frame() {
        if (!fill(2)) return std::nullopt;
        const auto b0 = static_cast<unsigned char>(buf_[0]);
        const auto b1 = static_cast<unsigned char>(buf_[1]);
        const bool masked = (b1 & 0x80) != 0;
        std::uint64_t len = b1 & 0x7F;
        std::size_t head = 2;
        if (len == 126) {
            if (!fill(4)) return std::nullopt;
            len = (static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[2])) << 8) |
                  static_cast<unsigned char>(buf_[3]);
            head = 4;
        } else if (len == 127) {
            if (!fill(10)) return std::nullopt;
            len = 0;
            for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<unsigned char>(buf_[2 + i]);
            head = 10;
        }
        if (len > (64u << 20)) return std::nullopt;
        const std::size_t mask_at = head;
        if (masked) head += 4;
        if (!fill(head + len)) return std::nullopt;
        Frame f{b0 & 0x0F, (b0 & 0x80) != 0, buf_.substr(head, len)};
        if (masked) {
            for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] ^= buf_[mask_at + (i % 4)];
        }
        buf_.erase(0, head + len);
        return f;
    }

    bool write_frame(int opcode, std::string_view payload) {
        std::string out;
        out += static_cast<char>(0x80 | opcode);
        const unsigned char mask_bit = client_ ? 0x80 : 0;
        if (payload.size() < 126) {
            out += static_cast<char>(mask_bit | payload.size());
        } else if (payload.size() <= 0xFFFF) {
            out += static_cast<char>(mask_bit | 126);
            out += static_cast<char>((payload.size() >> 8) & 0xFF);
            out += static_cast<char>(payload.size() & 0xFF);
        } else {
            out += static_cast<char>(mask_bit | 127);
            for (int i = 7; i >= 0; --i) out += static_cast<char>((static_cast<std::uint64_t>(payload.size()) >> (8 * i)) & 0xFF);
        }
        if (client_) {
            const char mask[4] = {0x1b, 0x2d, 0x3f, 0x41};
            out.append(mask, 4);
            for (std::size_t i = 0; i < payload.size(); ++i) out += static_cast<char>(payload[i] ^ mask[i % 4]);
        } else {
            out += payload;
        }
        return sock_.write_all(out);
    }

    Socket sock_;
    bool client_;
    std::string buf_;
};

/// Server side: a WebSocket channel when the first bytes are an HTTP
/// upgrade request, a line channel otherwise.
inline std::unique_ptr<Channel> accept_channel(Socket s) {
    std::string buf;
    while (buf.size() < 4) {
        if (!s.read_some(buf)) return nullptr;
    }
    if (!buf.starts_with("GET ")) return std::make_unique<LineChannel>(std::move(s), std::move(buf));
    while (buf.find("\r\n\r\n") == std::string::npos) {
        if (buf.size() > 65536 || !s.read_some(buf)) return nullptr;
    }
    return WebSocketChannel::accept(std::move(s), std::move(buf));
}

}  // namespace casbridge::net
