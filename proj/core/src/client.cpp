// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/client.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "probesearch/errors.hpp"
#include "probesearch/log.hpp"

namespace probesearch {
namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

// Buffered line reader/writer over a pair of file descriptors.
class FdLineStream {
 public:
  FdLineStream(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  void write_all(std::string_view data, bool is_socket) {
    while (!data.empty()) {
      ssize_t n = is_socket ? ::send(write_fd_, data.data(), data.size(), MSG_NOSIGNAL)
                            : ::write(write_fd_, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ConnectionError(errno_text("write failed"));
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  std::optional<std::string> read_line() {
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      char chunk[65536];
      ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  int read_fd() const { return read_fd_; }
  int write_fd() const { return write_fd_; }

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

class ProcessTransport : public LineTransport {
 public:
  explicit ProcessTransport(const std::string& command) {
    // A dead child must surface as a write error, not kill this process.
    ::signal(SIGPIPE, SIG_IGN);

    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw ConnectionError(errno_text("pipe"));
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw ConnectionError(errno_text("pipe"));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw ConnectionError(errno_text("fork"));
    }
    if (pid_ == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    stream_ = std::make_unique<FdLineStream>(from_child[0], to_child[1]);
  }

  ~ProcessTransport() override {
    close();
    ::close(stream_->read_fd());
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

  void write_line(std::string_view line) override {
    std::string data(line);
    data.push_back('\n');
    if (closed_.load()) throw ConnectionError("transport closed");
    stream_->write_all(data, /*is_socket=*/false);
  }

  std::optional<std::string> read_line() override { return stream_->read_line(); }

  void close() override {
    if (closed_.exchange(true)) return;
    ::close(stream_->write_fd());
    // The child may not exit on stdin EOF; terminate its whole group so the
    // reader sees EOF.
    ::kill(-pid_, SIGTERM);
    ::kill(pid_, SIGTERM);
  }

 private:
  pid_t pid_ = -1;
  std::atomic<bool> closed_{false};
  std::unique_ptr<FdLineStream> stream_;
};

class TcpTransport : public LineTransport {
 public:
  TcpTransport(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    std::string port_text = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints, &result); rc != 0) {
      throw ConnectionError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(result);
    if (fd < 0) throw ConnectionError("cannot connect to " + host + ":" + port_text);
    // Requests are small and strictly request/reply; Nagle would stall each one.
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    fd_ = fd;
    stream_ = std::make_unique<FdLineStream>(fd, fd);
  }

  ~TcpTransport() override {
    close();
    ::close(fd_);
  }

  void write_line(std::string_view line) override {
    std::string data(line);
    data.push_back('\n');
    if (closed_.load()) throw ConnectionError("transport closed");
    stream_->write_all(data, /*is_socket=*/true);
  }

  std::optional<std::string> read_line() override { return stream_->read_line(); }

  void close() override {
    if (closed_.exchange(true)) return;
    ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  int fd_ = -1;
  std::atomic<bool> closed_{false};
  std::unique_ptr<FdLineStream> stream_;
};

}  // namespace

std::unique_ptr<LineTransport> spawn_process_transport(const std::string& command) {
  return std::make_unique<ProcessTransport>(command);
}

std::unique_ptr<LineTransport> connect_tcp_transport(const std::string& host, int port) {
  return std::make_unique<TcpTransport>(host, port);
}

struct ProtocolClient::Session {
  std::unique_ptr<LineTransport> transport;
  std::mutex write_mu;
  std::mutex pending_mu;
  std::unordered_map<std::string, std::promise<Reply>> pending;
  bool dead = false;
  std::thread reader;

  explicit Session(std::unique_ptr<LineTransport> t) : transport(std::move(t)) {
    reader = std::thread([this] { read_loop(); });
  }

  ~Session() {
    transport->close();
    if (reader.joinable()) reader.join();
  }

  template <class E>
  void fail_all(const std::string& why, bool mark_dead) {
    std::lock_guard<std::mutex> lock(pending_mu);
    if (mark_dead) dead = true;
    for (auto& [id, promise] : pending) promise.set_exception(std::make_exception_ptr(E(why)));
    pending.clear();
  }

  void read_loop() {
    while (auto line = transport->read_line()) {
      if (line->empty()) continue;
      Reply reply;
      try {
        reply = wire::decode_reply(*line);
      } catch (const ProtocolError& e) {
        // Route the violation to its request if the id survived, otherwise
        // every in-flight request is suspect.
        auto j = nlohmann::json::parse(*line, nullptr, false);
        std::string id;
        if (!j.is_discarded() && j.is_object() && j.contains("id") && j["id"].is_string()) {
          id = j["id"].get<std::string>();
        }
        std::lock_guard<std::mutex> lock(pending_mu);
        if (auto it = pending.find(id); it != pending.end()) {
          it->second.set_exception(std::make_exception_ptr(ProtocolError(e.what())));
          pending.erase(it);
        } else {
          for (auto& [pid, promise] : pending) {
            promise.set_exception(std::make_exception_ptr(ProtocolError(e.what())));
          }
          pending.clear();
        }
        continue;
      }
      std::lock_guard<std::mutex> lock(pending_mu);
      if (auto it = pending.find(reply.id); it != pending.end()) {
        it->second.set_value(std::move(reply));
        pending.erase(it);
      } else {
        log_warning("dropping reply with unknown id " + reply.id);
      }
    }
    fail_all<ConnectionError>("backend connection closed", /*mark_dead=*/true);
  }

  std::future<Reply> submit(const std::string& id, const std::string& line) {
    std::future<Reply> future;
    {
      std::lock_guard<std::mutex> lock(pending_mu);
      if (dead) {
        std::promise<Reply> failed;
        failed.set_exception(std::make_exception_ptr(ConnectionError("backend connection closed")));
        return failed.get_future();
      }
      future = pending[id].get_future();
    }
    try {
      std::lock_guard<std::mutex> lock(write_mu);
      transport->write_line(line);
    } catch (const ConnectionError& e) {
      std::lock_guard<std::mutex> lock(pending_mu);
      if (auto it = pending.find(id); it != pending.end()) {
        it->second.set_exception(std::current_exception());
        pending.erase(it);
      }
    }
    return future;
  }

  void forget(const std::string& id) {
    std::lock_guard<std::mutex> lock(pending_mu);
    pending.erase(id);
  }

  bool is_dead() {
    std::lock_guard<std::mutex> lock(pending_mu);
    return dead;
  }
};

ProtocolClient::ProtocolClient(TransportFactory factory, ClientOptions options)
    : factory_(std::move(factory)), options_(options) {
  session_ = std::make_shared<Session>(factory_());
}

ProtocolClient::~ProtocolClient() = default;

std::shared_ptr<ProtocolClient::Session> ProtocolClient::session() {
  std::lock_guard<std::mutex> lock(session_mu_);
  return session_;
}

std::shared_ptr<ProtocolClient::Session> ProtocolClient::reconnect(const std::shared_ptr<Session>& dead) {
  std::lock_guard<std::mutex> lock(session_mu_);
  if (session_ == dead) session_ = std::make_shared<Session>(factory_());
  return session_;
}

namespace {

Request with_id(Request request, std::string id) {
  std::visit([&](auto& r) { r.id = std::move(id); }, request);
  return request;
}

}  // namespace

std::future<Reply> ProtocolClient::submit(Request request) {
  std::string id = "c" + std::to_string(next_id_.fetch_add(1));
  request = with_id(std::move(request), id);
  return session()->submit(id, wire::encode(request));
}

Reply ProtocolClient::call(Request request) {
  for (int attempt = 0;; ++attempt) {
    std::string id = "c" + std::to_string(next_id_.fetch_add(1));
    Request stamped = with_id(request, id);
    std::shared_ptr<Session> s = session();
    std::future<Reply> future = s->submit(id, wire::encode(stamped));
    if (future.wait_for(options_.timeout) != std::future_status::ready) {
      s->forget(id);
      throw TimeoutError("no reply to request " + id + " within " +
                         std::to_string(options_.timeout.count()) + " ms");
    }
    try {
      return future.get();
    } catch (const ConnectionError& e) {
      if (attempt >= options_.transport_retries) throw;
      log_warning(std::string("transport failure, retrying: ") + e.what());
      reconnect(s);
    }
  }
}

BackendInfo ProtocolClient::info() {
  Reply reply = call(InfoRequest{});
  if (const auto* err = std::get_if<ErrorReply>(&reply.body)) throw RequestRejected(err->message);
  if (const auto* info = std::get_if<BackendInfo>(&reply.body)) return *info;
  throw ProtocolError("info request answered with candidates");
}

GenerationResult ProtocolClient::generate(const GenerationRequest& request) {
  Reply reply = call(request);
  if (const auto* err = std::get_if<ErrorReply>(&reply.body)) throw RequestRejected(err->message);
  auto* result = std::get_if<GenerationResult>(&reply.body);
  if (result == nullptr) throw ProtocolError("generate request answered with info");
  const std::size_t n = result->candidates.size();
  if (n == 0 || n > static_cast<std::size_t>(request.k)) {
    throw ProtocolError("reply carries " + std::to_string(n) + " candidates for k=" +
                        std::to_string(request.k));
  }
  if (request.mode == DecodeMode::kGreedy && n != 1) {
    throw ProtocolError("greedy reply must carry exactly one candidate");
  }
  if (result->warning) {
    warnings_.fetch_add(1);
    log_warning("backend: " + *result->warning);
  }
  return std::move(*result);
}

std::unique_ptr<ProtocolClient> connect_backend(const std::string& spec, ClientOptions options) {
  std::string_view rest = spec;
  bool tcp = false;
  if (rest.rfind("tcp://", 0) == 0) {
    rest.remove_prefix(6);
    tcp = true;
  }
  auto colon = rest.rfind(':');
  if (!tcp && colon != std::string_view::npos && rest.find(' ') == std::string_view::npos) {
    std::string_view port = rest.substr(colon + 1);
    tcp = !port.empty() && port.find_first_not_of("0123456789") == std::string_view::npos;
  }
  if (tcp) {
    if (colon == std::string_view::npos) throw std::invalid_argument("tcp backend needs host:port");
    std::string host(rest.substr(0, colon));
    int port = std::stoi(std::string(rest.substr(colon + 1)));
    return std::make_unique<ProtocolClient>([host, port] { return connect_tcp_transport(host, port); },
                                            options);
  }
  return std::make_unique<ProtocolClient>([spec] { return spawn_process_transport(spec); }, options);
}

}  // namespace probesearch
