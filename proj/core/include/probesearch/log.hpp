// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace probesearch {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kSilent = 4 };

// Process-wide threshold; messages below it are dropped. Defaults to kWarning,
// or to the value of PROBESEARCH_LOG (debug|info|warning|error|silent).
void set_log_level(LogLevel level);
LogLevel log_level();

// Writes one line to stderr. Thread-safe.
void log(LogLevel level, std::string_view message);

inline void log_info(std::string_view message) { log(LogLevel::kInfo, message); }
inline void log_warning(std::string_view message) { log(LogLevel::kWarning, message); }

}  // namespace probesearch
