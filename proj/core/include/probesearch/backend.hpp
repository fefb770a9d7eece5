// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

#include "probesearch/protocol.hpp"

namespace probesearch {

// Anything that can generate continuations with activation capture: an
// in-process model or a remote one reached through ProtocolClient.
// Implementations used by the search engine and harness must be safe to call
// from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendInfo info() = 0;

  // Returns between 1 and request.k candidates, ordered by descending
  // first-token probability. Throws RequestRejected for requests the backend
  // refuses (for example a layer outside [0, num_layers)).
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
};

// Checks the request against the type invariants and the backend's shape.
// Throws RequestRejected.
void validate_request(const GenerationRequest& request, const BackendInfo& info);

// Server-side dispatch: never throws, failures become ok:false replies.
Reply handle_request(Backend& backend, const Request& request);

// Protocol loop over a line stream. Malformed lines are answered with an
// ok:false reply carrying the id when it can be recovered. Returns when the
// input reaches EOF.
void serve_lines(Backend& backend, std::istream& in, std::ostream& out);

}  // namespace probesearch
