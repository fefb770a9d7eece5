// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Backend-neutral generation contract and its newline-delimited JSON codec.
//
// Request lines:
//   {"id":str,"op":"info"}
//   {"id":str,"op":"generate","prompt_text":str,"k":int,"max_new_tokens":int,
//    "mode":"topk_start"|"greedy","layer":int,"rep_kind":"hidden"|"attn"|"mlp",
//    "capture":"last_token"|"all_tokens"}
// Reply lines:
//   {"id":str,"ok":true,"info":{...}}
//   {"id":str,"ok":true,"candidates":[...],"warning":str?}
//   {"id":str,"ok":false,"error":str}

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace probesearch {

enum class RepKind { kHidden, kAttn, kMlp };
enum class DecodeMode { kTopKStart, kGreedy };
enum class Capture { kLastToken, kAllTokens };
enum class FinishReason { kStopToken, kLength, kNone };

std::string_view to_string(RepKind kind);
std::string_view to_string(DecodeMode mode);
std::string_view to_string(Capture capture);
std::string_view to_string(FinishReason reason);

// Parsers throw std::invalid_argument on unknown spellings.
RepKind parse_rep_kind(std::string_view text);
DecodeMode parse_decode_mode(std::string_view text);
Capture parse_capture(std::string_view text);
FinishReason parse_finish_reason(std::string_view text);

using Activation = std::vector<float>;

struct BackendInfo {
  std::string model_name;
  int num_layers = 1;
  int activation_dim = 1;
  int vocab_size = 1;

  bool operator==(const BackendInfo&) const = default;
};

struct GenerationRequest {
  std::string id;
  std::string prompt_text;
  int k = 1;
  int max_new_tokens = 1;
  DecodeMode mode = DecodeMode::kGreedy;
  int layer = 0;
  RepKind rep_kind = RepKind::kHidden;
  Capture capture = Capture::kLastToken;

  bool operator==(const GenerationRequest&) const = default;
};

struct CandidateContinuation {
  std::string text;
  int token_count = 0;
  // Activation at the segment's last token.
  Activation activation;
  // One vector per generated token; only filled for Capture::kAllTokens.
  std::vector<Activation> activations;
  bool finished = false;
  FinishReason finish_reason = FinishReason::kNone;

  bool operator==(const CandidateContinuation&) const = default;
};

struct GenerationResult {
  std::vector<CandidateContinuation> candidates;
  std::optional<std::string> warning;

  bool operator==(const GenerationResult&) const = default;
};

struct InfoRequest {
  std::string id;
  bool operator==(const InfoRequest&) const = default;
};

using Request = std::variant<InfoRequest, GenerationRequest>;

struct ErrorReply {
  std::string message;
  bool operator==(const ErrorReply&) const = default;
};

struct Reply {
  std::string id;
  std::variant<BackendInfo, GenerationResult, ErrorReply> body;

  bool ok() const { return !std::holds_alternative<ErrorReply>(body); }
  bool operator==(const Reply&) const = default;
};

const std::string& request_id(const Request& request);

namespace wire {

// Encoders produce a single line without the trailing newline.
std::string encode(const Request& request);
std::string encode(const Reply& reply);

// Decoders throw ProtocolError on malformed JSON or missing/mistyped fields.
Request decode_request(std::string_view line);
Reply decode_reply(std::string_view line);

}  // namespace wire
}  // namespace probesearch
