#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <thread>

#include "fed/transport.hpp"

namespace fed {

namespace {

struct Fd {
    int fd = -1;
    Fd() = default;
    explicit Fd(int f) : fd(f) {}
    Fd(Fd&& other) noexcept : fd(other.fd) { other.fd = -1; }
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) {
            if (fd >= 0) ::close(fd);
            fd = other.fd;
            other.fd = -1;
        }
        return *this;
    }
    ~Fd() {
        if (fd >= 0) ::close(fd);
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
};

int poll_timeout_ms(double seconds) {
    return static_cast<int>(seconds * 1000.0);
}

void write_all(int fd, const std::uint8_t* data, std::size_t len, int timeout_ms) {
    std::size_t off = 0;
    while (off < len) {
        pollfd pfd{fd, POLLOUT, 0};
        if (::poll(&pfd, 1, timeout_ms) <= 0) {
            throw PartialDelivery("write timed out");
        }
        const ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
        if (n <= 0) {
            throw PartialDelivery("write failed");
        }
        off += static_cast<std::size_t>(n);
    }
}

// Reads exactly len bytes; returns false on clean EOF at offset 0.
bool read_all(int fd, std::uint8_t* data, std::size_t len, int timeout_ms) {
    std::size_t off = 0;
    while (off < len) {
        pollfd pfd{fd, POLLIN, 0};
        if (::poll(&pfd, 1, timeout_ms) <= 0) {
            throw PartialDelivery("read timed out");
        }
        const ssize_t n = ::recv(fd, data + off, len - off, 0);
        if (n == 0) {
            if (off == 0) return false;
            throw PartialDelivery("connection closed mid-message");
        }
        if (n < 0) {
            throw PartialDelivery("read failed");
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

std::vector<std::uint8_t> read_frame(int fd, int timeout_ms) {
    std::uint8_t header[4];
    if (!read_all(fd, header, 4, timeout_ms)) {
        throw PartialDelivery("connection closed before frame header");
    }
    const std::uint32_t len = (static_cast<std::uint32_t>(header[0]) << 24) |
                              (static_cast<std::uint32_t>(header[1]) << 16) |
                              (static_cast<std::uint32_t>(header[2]) << 8) |
                              static_cast<std::uint32_t>(header[3]);
    std::vector<std::uint8_t> frame(header, header + 4);
    frame.resize(4 + len);
    if (len > 0 && !read_all(fd, frame.data() + 4, len, timeout_ms)) {
        throw PartialDelivery("connection closed mid-frame");
    }
    return frame;
}

class TcpConnection : public Connection {
public:
    TcpConnection(Fd fd, int timeout_ms) : fd_(std::move(fd)), timeout_ms_(timeout_ms) {}

    Envelope roundtrip(const Envelope& request) override {
        const auto frame = encode(request);
        write_all(fd_.fd, frame.data(), frame.size(), timeout_ms_);
        return decode(read_frame(fd_.fd, timeout_ms_));
    }

private:
    Fd fd_;
    int timeout_ms_;
};

Fd connect_to(const std::string& endpoint, int timeout_ms) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) {
        throw InvalidConfig("endpoint must be host:port, got " + endpoint);
    }
    const std::string host = endpoint.substr(0, colon);
    const std::string port = endpoint.substr(colon + 1);

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
        throw ConnectionRefused("cannot resolve " + endpoint);
    }
    Fd fd(::socket(res->ai_family, SOCK_STREAM | SOCK_NONBLOCK, 0));
    if (fd.fd < 0) {
        ::freeaddrinfo(res);
        throw ConnectionRefused("socket() failed");
    }
    int rc = ::connect(fd.fd, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc < 0 && errno != EINPROGRESS) {
        throw ConnectionRefused("connect refused by " + endpoint);
    }
    if (rc < 0) {
        pollfd pfd{fd.fd, POLLOUT, 0};
        if (::poll(&pfd, 1, timeout_ms) <= 0) {
            throw ConnectionRefused("connect timed out for " + endpoint);
        }
        int err = 0;
        socklen_t len = sizeof(err);
        if (::getsockopt(fd.fd, SOL_SOCKET, SO_ERROR, &err, &len) < 0 || err != 0) {
            throw ConnectionRefused("connect refused by " + endpoint);
        }
    }
    return fd;
}

} // namespace

TcpTransport::TcpTransport(double timeout_seconds) : timeout_seconds_(timeout_seconds) {}

std::unique_ptr<Connection> TcpTransport::dial(const ServerAddress& address, std::uint64_t) {
    const int timeout_ms = poll_timeout_ms(timeout_seconds_);
    return std::make_unique<TcpConnection>(connect_to(address.endpoint, timeout_ms), timeout_ms);
}

struct TcpListener::Impl {
    Fd listen_fd;
    std::uint16_t port = 0;
    EnvelopeHandler handler;
    std::atomic<bool> running{true};
    std::thread accept_thread;

    void loop() {
        while (running.load()) {
            pollfd pfd{listen_fd.fd, POLLIN, 0};
            if (::poll(&pfd, 1, 100) <= 0) continue;
            Fd conn(::accept(listen_fd.fd, nullptr, nullptr));
            if (conn.fd < 0) continue;
            try {
                const auto frame = read_frame(conn.fd, 2000);
                const Envelope response = handler(decode(frame));
                const auto out = encode(response);
                write_all(conn.fd, out.data(), out.size(), 2000);
            } catch (const Error&) {
                // Malformed or truncated request; drop the connection.
            }
        }
    }
};

TcpListener::TcpListener(std::uint16_t port, EnvelopeHandler handler) : impl_(new Impl) {
    impl_->handler = std::move(handler);
    impl_->listen_fd = Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (impl_->listen_fd.fd < 0) {
        throw IoError("socket() failed");
    }
    int one = 1;
    ::setsockopt(impl_->listen_fd.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(impl_->listen_fd.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
        ::listen(impl_->listen_fd.fd, 16) < 0) {
        throw IoError("cannot listen on port " + std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(impl_->listen_fd.fd, reinterpret_cast<sockaddr*>(&addr), &len);
    impl_->port = ntohs(addr.sin_port);
    impl_->accept_thread = std::thread([this] { impl_->loop(); });
}

TcpListener::~TcpListener() {
    stop();
}

std::uint16_t TcpListener::port() const {
    return impl_->port;
}

void TcpListener::stop() {
    if (impl_ && impl_->running.exchange(false) && impl_->accept_thread.joinable()) {
        impl_->accept_thread.join();
    }
}

} // namespace fed
