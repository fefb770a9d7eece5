// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "probesearch/backend.hpp"

namespace probesearch::tools {

// Accepts connections on 127.0.0.1:port and runs the line protocol on each,
// one thread per connection. Does not return unless bind/listen fails.
int serve_tcp(Backend& backend, int port);

}  // namespace probesearch::tools
