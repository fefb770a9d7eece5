// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace probesearch {
namespace {

LogLevel level_from_env() {
  const char* env = std::getenv("PROBESEARCH_LOG");
  if (env == nullptr) return LogLevel::kWarning;
  std::string v(env);
  if (v == "debug") return LogLevel::kDebug;
  if (v == "info") return LogLevel::kInfo;
  if (v == "error") return LogLevel::kError;
  if (v == "silent") return LogLevel::kSilent;
  return LogLevel::kWarning;
}

std::atomic<LogLevel>& threshold() {
  static std::atomic<LogLevel> level{level_from_env()};
  return level;
}

std::string_view label(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarning: return "warning";
    case LogLevel::kError: return "error";
    case LogLevel::kSilent: break;
  }
  return "";
}

}  // namespace

void set_log_level(LogLevel level) { threshold().store(level); }
LogLevel log_level() { return threshold().load(); }

void log(LogLevel level, std::string_view message) {
  if (level < threshold().load() || level == LogLevel::kSilent) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[probesearch " << label(level) << "] " << message << '\n';
}

}  // namespace probesearch
