// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "serve.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <iostream>
#include <istream>
#include <ostream>
#include <streambuf>
#include <thread>

namespace probesearch::tools {
namespace {

// Minimal unbuffered-write, buffered-read streambuf over a socket.
class SocketBuf : public std::streambuf {
 public:
  explicit SocketBuf(int fd) : fd_(fd) { setg(in_, in_, in_); }

 protected:
  int_type underflow() override {
    ssize_t n = ::recv(fd_, in_, sizeof in_, 0);
    if (n <= 0) return traits_type::eof();
    setg(in_, in_, in_ + n);
    return traits_type::to_int_type(in_[0]);
  }

  std::streamsize xsputn(const char* s, std::streamsize count) override {
    std::streamsize sent = 0;
    while (sent < count) {
      ssize_t n = ::send(fd_, s + sent, static_cast<std::size_t>(count - sent), MSG_NOSIGNAL);
      if (n <= 0) return sent;
      sent += n;
    }
    return sent;
  }

  int_type overflow(int_type ch) override {
    if (traits_type::eq_int_type(ch, traits_type::eof())) return 0;
    char c = traits_type::to_char_type(ch);
    return xsputn(&c, 1) == 1 ? ch : traits_type::eof();
  }

 private:
  int fd_;
  char in_[65536];
};

}  // namespace

int serve_tcp(Backend& backend, int port) {
  int server = ::socket(AF_INET, SOCK_STREAM, 0);
  if (server < 0) {
    std::cerr << "socket: " << std::strerror(errno) << '\n';
    return 1;
  }
  int one = 1;
  ::setsockopt(server, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(server, 16) != 0) {
    std::cerr << "cannot listen on port " << port << ": " << std::strerror(errno) << '\n';
    ::close(server);
    return 1;
  }
  std::cerr << "listening on 127.0.0.1:" << port << '\n';
  for (;;) {
    int fd = ::accept(server, nullptr, nullptr);
    if (fd < 0) continue;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::thread([&backend, fd] {
      SocketBuf buf(fd);
      std::istream in(&buf);
      std::ostream out(&buf);
      serve_lines(backend, in, out);
      ::close(fd);
    }).detach();
  }
}

}  // namespace probesearch::tools
