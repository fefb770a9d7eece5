// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/backend.hpp"

#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "probesearch/errors.hpp"

namespace probesearch {

void validate_request(const GenerationRequest& request, const BackendInfo& info) {
  if (request.k < 1) throw RequestRejected("k must be >= 1");
  if (request.max_new_tokens < 1) throw RequestRejected("max_new_tokens must be >= 1");
  if (request.layer < 0 || request.layer >= info.num_layers) {
    throw RequestRejected("layer " + std::to_string(request.layer) + " out of range [0, " +
                          std::to_string(info.num_layers) + ")");
  }
}

Reply handle_request(Backend& backend, const Request& request) {
  Reply reply;
  reply.id = request_id(request);
  try {
    if (std::holds_alternative<InfoRequest>(request)) {
      reply.body = backend.info();
    } else {
      reply.body = backend.generate(std::get<GenerationRequest>(request));
    }
  } catch (const std::exception& e) {
    reply.body = ErrorReply{e.what()};
  }
  return reply;
}

void serve_lines(Backend& backend, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Reply reply;
    try {
      reply = handle_request(backend, wire::decode_request(line));
    } catch (const ProtocolError& e) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.is_object() && j.contains("id") && j["id"].is_string()) {
        reply.id = j["id"].get<std::string>();
      }
      reply.body = ErrorReply{e.what()};
    }
    out << wire::encode(reply) << '\n';
    out.flush();
  }
}

}  // namespace probesearch
