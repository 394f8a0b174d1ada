#pragma once

// Loopback TCP plumbing: RAII descriptors and a framed, thread-safe channel.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "ztric/errors.hpp"
#include "ztric/pipeline/frame.hpp"

namespace ztric::pipeline {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

// Listening socket on 127.0.0.1 with a kernel-chosen port.
class Listener {
 public:
  Listener() {
    fd_ = Fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!fd_.valid()) throw IoError(errno_text("socket"));
    int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) throw IoError(errno_text("bind"));
    if (::listen(fd_.get(), 8) < 0) throw IoError(errno_text("listen"));
    socklen_t len = sizeof addr;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  std::uint16_t port() const { return port_; }

  // Waits up to timeout_ms (negative: forever).
  Fd accept(int timeout_ms = -1) {
    pollfd p{fd_.get(), POLLIN, 0};
    int rc;
    do rc = ::poll(&p, 1, timeout_ms);
    while (rc < 0 && errno == EINTR);
    if (rc == 0) throw IoError("accept timed out");
    if (rc < 0) throw IoError(errno_text("poll"));
    Fd c(::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC));
    if (!c.valid()) throw IoError(errno_text("accept"));
    set_nodelay(c.get());
    return c;
  }

  static void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

 private:
  Fd fd_;
  std::uint16_t port_ = 0;
};

inline Fd connect_loopback(std::uint16_t port) {
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd.valid()) throw IoError(errno_text("socket"));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  int rc;
  do rc = ::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  while (rc < 0 && errno == EINTR);
  if (rc < 0) throw IoError(errno_text("connect"));
  Listener::set_nodelay(fd.get());
  return fd;
}

// Observer for raw frame bytes crossing a channel (audit/tests).
using WireTap = std::function<void(const char* channel, bool outbound, std::span<const std::uint8_t> bytes)>;

// Framed duplex stream. send() may be called from several threads; recv()
// from one.
class FrameChannel {
 public:
  FrameChannel(Fd fd, std::string name, WireTap tap = {})
      : fd_(std::move(fd)), name_(std::move(name)), tap_(std::move(tap)) {}

  const std::string& name() const { return name_; }

  void send(const E2Frame& f) {
    const Bytes bytes = encode_frame(f);
    std::lock_guard lock(send_mu_);
    if (tap_) tap_(name_.c_str(), true, bytes);
    std::size_t done = 0;
    while (done < bytes.size()) {
      ssize_t n = ::send(fd_.get(), bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError(errno_text(("send on " + name_).c_str()));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  // Next frame, or nullopt on orderly EOF. timeout_ms < 0 waits forever;
  // on timeout throws IoError.
  std::optional<E2Frame> recv(int timeout_ms = -1) {
    for (;;) {
      if (auto f = decoder_.next()) {
        if (tap_) {
          const Bytes b = encode_frame(*f);
          tap_(name_.c_str(), false, b);
        }
        return f;
      }
      pollfd p{fd_.get(), POLLIN, 0};
      int rc = ::poll(&p, 1, timeout_ms);
      if (rc < 0 && errno == EINTR) continue;
      if (rc < 0) throw IoError(errno_text("poll"));
      if (rc == 0) throw IoError("timed out waiting on " + name_);
      std::uint8_t buf[65536];
      ssize_t n = ::recv(fd_.get(), buf, sizeof buf, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError(errno_text(("recv on " + name_).c_str()));
      }
      if (n == 0) {
        if (decoder_.buffered() != 0) throw ProtocolError("stream closed mid-frame on " + name_);
        return std::nullopt;
      }
      decoder_.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    }
  }

  // Half-close: the peer reads EOF after the frames already sent.
  void shutdown_send() { ::shutdown(fd_.get(), SHUT_WR); }

 private:
  Fd fd_;
  std::string name_;
  WireTap tap_;
  std::mutex send_mu_;
  FrameDecoder decoder_;
};

}  // namespace ztric::pipeline
