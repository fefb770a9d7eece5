// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/protocol.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "probesearch/errors.hpp"

namespace probesearch {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(RepKind kind) {
  switch (kind) {
    case RepKind::kHidden: return "hidden";
    case RepKind::kAttn: return "attn";
    case RepKind::kMlp: return "mlp";
  }
  return "hidden";
}

std::string_view to_string(DecodeMode mode) {
  return mode == DecodeMode::kTopKStart ? "topk_start" : "greedy";
}

std::string_view to_string(Capture capture) {
  return capture == Capture::kAllTokens ? "all_tokens" : "last_token";
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStopToken: return "stop_token";
    case FinishReason::kLength: return "length";
    case FinishReason::kNone: return "none";
  }
  return "none";
}

RepKind parse_rep_kind(std::string_view text) {
  if (text == "hidden") return RepKind::kHidden;
  if (text == "attn") return RepKind::kAttn;
  if (text == "mlp") return RepKind::kMlp;
  throw std::invalid_argument("unknown rep_kind: " + std::string(text));
}

DecodeMode parse_decode_mode(std::string_view text) {
  if (text == "topk_start") return DecodeMode::kTopKStart;
  if (text == "greedy") return DecodeMode::kGreedy;
  throw std::invalid_argument("unknown mode: " + std::string(text));
}

Capture parse_capture(std::string_view text) {
  if (text == "last_token") return Capture::kLastToken;
  if (text == "all_tokens") return Capture::kAllTokens;
  throw std::invalid_argument("unknown capture: " + std::string(text));
}

FinishReason parse_finish_reason(std::string_view text) {
  if (text == "stop_token") return FinishReason::kStopToken;
  if (text == "length") return FinishReason::kLength;
  if (text == "none") return FinishReason::kNone;
  throw std::invalid_argument("unknown finish_reason: " + std::string(text));
}

const std::string& request_id(const Request& request) {
  return std::visit([](const auto& r) -> const std::string& { return r.id; }, request);
}

namespace {

// Floats are widened to double so the shortest decimal form reproduces the
// float exactly on the way back.
ojson activation_to_json(const Activation& v) {
  ojson out = ojson::array();
  for (float x : v) out.push_back(static_cast<double>(x));
  return out;
}

const json& field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ProtocolError(std::string("missing field \"") + name + "\"");
  return *it;
}

std::string string_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_string()) throw ProtocolError(std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

int int_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_number_integer()) throw ProtocolError(std::string("field \"") + name + "\" must be an integer");
  return v.get<int>();
}

bool bool_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_boolean()) throw ProtocolError(std::string("field \"") + name + "\" must be a boolean");
  return v.get<bool>();
}

Activation activation_from_json(const json& v, const char* name) {
  if (!v.is_array()) throw ProtocolError(std::string("field \"") + name + "\" must be an array");
  Activation out;
  out.reserve(v.size());
  for (const json& x : v) {
    if (!x.is_number()) throw ProtocolError(std::string("field \"") + name + "\" must hold numbers");
    out.push_back(static_cast<float>(x.get<double>()));
  }
  return out;
}

template <class Parse>
auto enum_field(const json& obj, const char* name, Parse parse) {
  std::string text = string_field(obj, name);
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(e.what());
  }
}

ojson info_to_json(const BackendInfo& info) {
  return ojson{{"model_name", info.model_name},
              {"num_layers", info.num_layers},
              {"activation_dim", info.activation_dim},
              {"vocab_size", info.vocab_size}};
}

BackendInfo info_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("\"info\" must be an object");
  BackendInfo info;
  info.model_name = string_field(j, "model_name");
  info.num_layers = int_field(j, "num_layers");
  info.activation_dim = int_field(j, "activation_dim");
  info.vocab_size = int_field(j, "vocab_size");
  if (info.num_layers < 1 || info.activation_dim < 1 || info.vocab_size < 1) {
    throw ProtocolError("backend info fields must be positive");
  }
  return info;
}

ojson candidate_to_json(const CandidateContinuation& c) {
  ojson out{{"text", c.text},
           {"token_count", c.token_count},
           {"activation", activation_to_json(c.activation)}};
  if (!c.activations.empty()) {
    ojson all = ojson::array();
    for (const Activation& a : c.activations) all.push_back(activation_to_json(a));
    out["activations"] = std::move(all);
  }
  out["finished"] = c.finished;
  out["finish_reason"] = to_string(c.finish_reason);
  return out;
}

CandidateContinuation candidate_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("candidate must be an object");
  CandidateContinuation c;
  c.text = string_field(j, "text");
  c.token_count = int_field(j, "token_count");
  if (c.token_count < 0) throw ProtocolError("token_count must be nonnegative");
  c.activation = activation_from_json(field(j, "activation"), "activation");
  if (auto it = j.find("activations"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ProtocolError("field \"activations\" must be an array");
    for (const json& a : *it) c.activations.push_back(activation_from_json(a, "activations"));
  }
  c.finished = bool_field(j, "finished");
  c.finish_reason = enum_field(j, "finish_reason", parse_finish_reason);
  return c;
}

json parse_line(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ProtocolError("malformed JSON record");
  if (!j.is_object()) throw ProtocolError("record must be a JSON object");
  return j;
}

}  // namespace

namespace wire {

std::string encode(const Request& request) {
  if (const auto* info = std::get_if<InfoRequest>(&request)) {
    return ojson{{"id", info->id}, {"op", "info"}}.dump();
  }
  const auto& g = std::get<GenerationRequest>(request);
  ojson j{{"id", g.id},
         {"op", "generate"},
         {"prompt_text", g.prompt_text},
         {"k", g.k},
         {"max_new_tokens", g.max_new_tokens},
         {"mode", to_string(g.mode)},
         {"layer", g.layer},
         {"rep_kind", to_string(g.rep_kind)},
         {"capture", to_string(g.capture)}};
  return j.dump();
}

std::string encode(const Reply& reply) {
  ojson j{{"id", reply.id}};
  if (const auto* info = std::get_if<BackendInfo>(&reply.body)) {
    j["ok"] = true;
    j["info"] = info_to_json(*info);
  } else if (const auto* gen = std::get_if<GenerationResult>(&reply.body)) {
    j["ok"] = true;
    ojson candidates = ojson::array();
    for (const auto& c : gen->candidates) candidates.push_back(candidate_to_json(c));
    j["candidates"] = std::move(candidates);
    if (gen->warning) j["warning"] = *gen->warning;
  } else {
    j["ok"] = false;
    j["error"] = std::get<ErrorReply>(reply.body).message;
  }
  return j.dump();
}

Request decode_request(std::string_view line) {
  json j = parse_line(line);
  std::string id = string_field(j, "id");
  std::string op = string_field(j, "op");
  if (op == "info") return InfoRequest{std::move(id)};
  if (op != "generate") throw ProtocolError("unknown op: " + op);

  GenerationRequest g;
  g.id = std::move(id);
  g.prompt_text = string_field(j, "prompt_text");
  g.k = int_field(j, "k");
  g.max_new_tokens = int_field(j, "max_new_tokens");
  g.mode = enum_field(j, "mode", parse_decode_mode);
  g.layer = int_field(j, "layer");
  g.rep_kind = enum_field(j, "rep_kind", parse_rep_kind);
  g.capture = enum_field(j, "capture", parse_capture);
  if (g.k < 1) throw ProtocolError("k must be >= 1");
  if (g.max_new_tokens < 1) throw ProtocolError("max_new_tokens must be >= 1");
  return g;
}

Reply decode_reply(std::string_view line) {
  json j = parse_line(line);
  Reply reply;
  reply.id = string_field(j, "id");
  if (!bool_field(j, "ok")) {
    reply.body = ErrorReply{string_field(j, "error")};
    return reply;
  }
  if (auto it = j.find("info"); it != j.end()) {
    reply.body = info_from_json(*it);
    return reply;
  }
  auto it = j.find("candidates");
  if (it == j.end()) throw ProtocolError("reply has neither \"info\" nor \"candidates\"");
  if (!it->is_array()) throw ProtocolError("field \"candidates\" must be an array");
  GenerationResult gen;
  for (const json& c : *it) gen.candidates.push_back(candidate_from_json(c));
  if (auto w = j.find("warning"); w != j.end() && !w->is_null()) {
    if (!w->is_string()) throw ProtocolError("field \"warning\" must be a string");
    gen.warning = w->get<std::string>();
  }
  reply.body = std::move(gen);
  return reply;
}

}  // namespace wire
}  // namespace probesearch
