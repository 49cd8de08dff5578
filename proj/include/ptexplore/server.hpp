#pragma once

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include "ptexplore/protocol.hpp"

namespace ptexplore {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

inline void write_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == ENOTSOCK) n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(errno_text("write"));
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

/// Appends whatever is available; false on end of stream.
inline bool read_some(int fd, FrameDecoder& decoder) {
    char buf[1 << 16];
    for (;;) {
        const ssize_t n = ::read(fd, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) throw TransportError(errno_text("read"));
        if (n == 0) return false;
        decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
        return true;
    }
}

class FdGuard {
public:
    explicit FdGuard(int fd = -1) : fd_(fd) {}
    FdGuard(const FdGuard&) = delete;
    FdGuard& operator=(const FdGuard&) = delete;
    FdGuard(FdGuard&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    FdGuard& operator=(FdGuard&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~FdGuard() { reset(); }
    int get() const { return fd_; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_;
};

inline addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
    if (rc != 0) throw TransportError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
    return res;
}

} // namespace detail

/// Splits "host:port"; the host may be empty (all interfaces) or bracketed IPv6.
inline std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("endpoint must be host:port, got '" + s + "'");
    std::string host = s.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    const std::string port_text = s.substr(colon + 1);
    std::size_t used = 0;
    unsigned long port = 0;
    try {
        port = std::stoul(port_text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != port_text.size() || port > 65535) {
        throw std::invalid_argument("bad port in endpoint '" + s + "'");
    }
    return {host, static_cast<std::uint16_t>(port)};
}

/// Runs one session over a pair of descriptors until close or end of stream.
/// A frame over the size limit is answered with an error and ends the session.
inline void serve_stream(int in_fd, int out_fd, const SessionOptions& options) {
    Session session(options);
    FrameDecoder decoder;
    while (!session.closed()) {
        std::optional<std::string> body;
        try {
            body = decoder.next_body();
        } catch (const ProtocolError& e) {
            detail::write_all(out_fd, encode_frame(Session::error(0, "", "protocol", e.what())));
            return;
        }
        if (!body) {
            if (!detail::read_some(in_fd, decoder)) return;
            continue;
        }
        detail::write_all(out_fd, encode_frame(session.handle_body(*body)));
    }
}

/// Accepts connections and serves each on its own thread. Sessions are
/// independent; stop() unblocks accept and tears down open connections.
class TcpServer {
public:
    TcpServer(const std::string& host, std::uint16_t port, SessionOptions options) : options_(std::move(options)) {
        addrinfo* res = detail::resolve(host, port, true);
        std::string last_error = "no address";
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            detail::FdGuard fd(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
            if (fd.get() < 0) {
                last_error = detail::errno_text("socket");
                continue;
            }
            const int one = 1;
            ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
            if (::bind(fd.get(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(fd.get(), 16) != 0) {
                last_error = detail::errno_text("bind/listen");
                continue;
            }
            listen_ = std::move(fd);
            break;
        }
        ::freeaddrinfo(res);
        if (listen_.get() < 0) throw TransportError("cannot listen on " + host + ":" + std::to_string(port) + ": " + last_error);
        sockaddr_storage addr{};
        socklen_t len = sizeof addr;
        ::getsockname(listen_.get(), reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                           : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    }

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    ~TcpServer() {
        stop();
        std::vector<std::thread> workers;
        {
            std::lock_guard lock(mutex_);
            workers.swap(workers_);
        }
        for (auto& t : workers) t.join();
    }

    std::uint16_t port() const { return port_; }

    /// Blocks accepting connections until stop().
    void run() {
        while (!stopping_) {
            const int fd = ::accept(listen_.get(), nullptr, nullptr);
            if (fd < 0) {
                if (errno == EINTR) continue;
                if (stopping_) break;
                throw TransportError(detail::errno_text("accept"));
            }
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            std::lock_guard lock(mutex_);
            if (stopping_) {
                ::close(fd);
                break;
            }
            open_.push_back(fd);
            workers_.emplace_back([this, fd] { serve_connection(fd); });
        }
    }

    void stop() {
        std::lock_guard lock(mutex_);
        if (stopping_.exchange(true)) return;
        ::shutdown(listen_.get(), SHUT_RDWR);
        for (int fd : open_) ::shutdown(fd, SHUT_RDWR);
    }

private:
    void serve_connection(int fd) {
        try {
            serve_stream(fd, fd, options_);
        } catch (const std::exception&) {
            // Transport loss: the session and its environments are dropped.
        }
        std::lock_guard lock(mutex_);
        std::erase(open_, fd);
        ::close(fd);
    }

    SessionOptions options_;
    detail::FdGuard listen_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::mutex mutex_;
    std::vector<int> open_;
    std::vector<std::thread> workers_;
};

/// Minimal blocking client over a connected descriptor.
class Client {
public:
    explicit Client(int fd) : fd_(fd) {}

    static Client connect(const std::string& host, std::uint16_t port) {
        addrinfo* res = detail::resolve(host, port, false);
        std::string last_error = "no address";
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            detail::FdGuard fd(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
            if (fd.get() < 0) continue;
            if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
                ::freeaddrinfo(res);
                const int one = 1;
                ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                return Client(std::move(fd));
            }
            last_error = detail::errno_text("connect");
        }
        ::freeaddrinfo(res);
        throw TransportError("cannot connect to " + host + ":" + std::to_string(port) + ": " + last_error);
    }

    void send(const ProtocolMessage& m) { detail::write_all(fd_.get(), encode_frame(m)); }

    void send_raw(std::string_view bytes) { detail::write_all(fd_.get(), bytes); }

    ProtocolMessage receive() {
        for (;;) {
            if (auto body = decoder_.next_body()) return parse_body(*body);
            if (!detail::read_some(fd_.get(), decoder_)) throw TransportError("connection closed by server");
        }
    }

    /// Sends a request and waits for its response; error responses throw.
    ProtocolMessage call(const std::string& verb, nlohmann::json payload = nlohmann::json::object()) {
        const std::uint64_t id = ++next_id_;
        send({id, verb, std::move(payload)});
        ProtocolMessage r = receive();
        if (r.id != id) throw ProtocolError("response id " + std::to_string(r.id) + " for request " + std::to_string(id));
        if (r.verb == "error") {
            throw std::runtime_error(verb + " failed (" + r.payload.value("code", std::string()) +
                                     "): " + r.payload.value("message", std::string()));
        }
        return r;
    }

private:
    explicit Client(detail::FdGuard fd) : fd_(std::move(fd)) {}

    detail::FdGuard fd_;
    FrameDecoder decoder_;
    std::uint64_t next_id_ = 0;
};

} // namespace ptexplore
