#pragma once

// Minimal POSIX TCP plumbing for the heartbeat line protocol.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <string_view>
#include <utility>

#include "core.hpp"

namespace pulsemark::net {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port" or ":port" (all interfaces).
inline Endpoint parse_endpoint(std::string_view s) {
  auto colon = s.rfind(':');
  if (colon == std::string_view::npos) throw Error("address must be host:port, got '" + std::string(s) + "'");
  auto port = detail::parse_number<std::uint16_t>(s.substr(colon + 1));
  if (!port) throw Error("bad port in address '" + std::string(s) + "'");
  return {std::string(s.substr(0, colon)), *port};
}

inline Socket connect_tcp(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string host = ep.host.empty() ? "127.0.0.1" : ep.host;
  if (int rc = ::getaddrinfo(host.c_str(), std::to_string(ep.port).c_str(), &hints, &res); rc != 0)
    throw Error("cannot resolve " + host + ": " + ::gai_strerror(rc));
  std::string last_err = "no addresses";
  for (auto* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s) continue;
    if (::connect(s.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return s;
    }
    last_err = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw Error("cannot connect to " + host + ":" + std::to_string(ep.port) + ": " + last_err);
}

/// Bound, listening IPv4 socket. Port 0 picks an ephemeral port; see bound_port().
inline Socket listen_tcp(const Endpoint& ep, int backlog = 16) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s) throw Error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(s.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (ep.host.empty() || ep.host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
  } else if (ep.host == "localhost") {
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  } else if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
    throw Error("listen address must be an IPv4 literal: " + ep.host);
  }
  if (::bind(s.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw Error("bind " + ep.host + ":" + std::to_string(ep.port) + ": " + std::strerror(errno));
  if (::listen(s.get(), backlog) != 0) throw Error(std::string("listen: ") + std::strerror(errno));
  return s;
}

inline std::uint16_t bound_port(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(s.get(), reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw Error(std::string("getsockname: ") + std::strerror(errno));
  return ntohs(addr.sin_port);
}

inline void send_all(const Socket& s, std::string_view data) {
  while (!data.empty()) {
    auto n = ::send(s.get(), data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("send: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace pulsemark::net
