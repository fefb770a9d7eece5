// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "probesearch/backend.hpp"
#include "probesearch/protocol.hpp"

namespace probesearch {

// A bidirectional line stream. write_line may be called concurrently with
// read_line from another thread; close() unblocks a pending read_line.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  // Throws ConnectionError when the peer is gone.
  virtual void write_line(std::string_view line) = 0;
  // std::nullopt on EOF or after close().
  virtual std::optional<std::string> read_line() = 0;
  virtual void close() = 0;
};

// Spawns `/bin/sh -c command` and talks to its stdin/stdout.
std::unique_ptr<LineTransport> spawn_process_transport(const std::string& command);

// Connects to host:port. Throws ConnectionError when unreachable.
std::unique_ptr<LineTransport> connect_tcp_transport(const std::string& host, int port);

using TransportFactory = std::function<std::unique_ptr<LineTransport>()>;

struct ClientOptions {
  std::chrono::milliseconds timeout{120'000};
  // Extra attempts after a transport failure. Protocol errors are never retried.
  int transport_retries = 1;
};

// Pipelining client. Many requests may be in flight; replies are matched to
// requests by id so out-of-order replies are fine. Safe to share between
// threads. Request ids are assigned by the client.
class ProtocolClient : public Backend {
 public:
  explicit ProtocolClient(TransportFactory factory, ClientOptions options = {});
  ~ProtocolClient() override;

  ProtocolClient(const ProtocolClient&) = delete;
  ProtocolClient& operator=(const ProtocolClient&) = delete;

  // Sends without waiting. The future throws ConnectionError if the
  // transport dies before the reply arrives.
  std::future<Reply> submit(Request request);

  // Sends, waits up to the timeout and retries once on transport failure.
  // ok:false replies come back as-is.
  Reply call(Request request);

  BackendInfo info() override;
  GenerationResult generate(const GenerationRequest& request) override;

  // Warnings (e.g. k clamping) seen so far.
  std::size_t warning_count() const { return warnings_.load(); }

 private:
  struct Session;

  std::shared_ptr<Session> session();
  std::shared_ptr<Session> reconnect(const std::shared_ptr<Session>& dead);

  TransportFactory factory_;
  ClientOptions options_;
  std::mutex session_mu_;
  std::shared_ptr<Session> session_;
  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<std::size_t> warnings_{0};
};

// Backend specs understood by the command-line tool:
//   "tcp://host:port" or "host:port" -> TCP connection
//   anything else                     -> shell command speaking the protocol on stdio
std::unique_ptr<ProtocolClient> connect_backend(const std::string& spec, ClientOptions options = {});

}  // namespace probesearch
