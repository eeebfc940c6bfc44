#include "econ/wire.hpp"

#include <json.hpp>

#include "econ/errors.hpp"

namespace econ::wire {
namespace {

using nlohmann::json;

json Parse(const std::string& payload) {
  try {
    json j = json::parse(payload);
    if (!j.is_object()) {
      throw ProtocolError("expected a JSON object", ProtocolError::Excerpt(payload));
    }
    return j;
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("invalid JSON: ") + e.what(), ProtocolError::Excerpt(payload));
  }
}

[[noreturn]] void Fail(const std::string& what, const std::string& payload) {
  throw ProtocolError(what, ProtocolError::Excerpt(payload));
}

const json& Require(const json& j, const char* key, const std::string& payload) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) Fail(std::string("missing required field '") + key + "'", payload);
  return *it;
}

std::string RequireString(const json& j, const char* key, const std::string& payload) {
  const json& v = Require(j, key, payload);
  if (!v.is_string()) Fail(std::string("field '") + key + "' must be a string", payload);
  return v.get<std::string>();
}

std::int64_t RequireInt(const json& j, const char* key, const std::string& payload) {
  const json& v = Require(j, key, payload);
  if (!v.is_number_integer()) Fail(std::string("field '") + key + "' must be an integer", payload);
  return v.get<std::int64_t>();
}

const json* Optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

std::vector<std::string> StringArray(const json& v, const char* key, const std::string& payload) {
  if (!v.is_array()) Fail(std::string("field '") + key + "' must be an array", payload);
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const json& item : v) {
    if (!item.is_string()) Fail(std::string("field '") + key + "' must hold strings", payload);
    out.push_back(item.get<std::string>());
  }
  return out;
}

Mode ModeField(const json& v, const char* key, const std::string& payload) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "cot") return Mode::kCot;
    if (s == "noncot") return Mode::kNonCot;
  }
  Fail(std::string("field '") + key + "' must be \"cot\" or \"noncot\"", payload);
}

}  // namespace

std::string EncodeProveRequest(const ProverRequest& request) {
  json j;
  j["problem_id"] = request.problem_id;
  j["statement"] = request.statement;
  j["prompt_template_id"] = request.prompt_template_id;
  if (request.mode_hint) j["mode_hint"] = std::string(ToString(*request.mode_hint));
  if (request.prefix_id) j["prefix_id"] = *request.prefix_id;
  j["max_tokens"] = request.max_tokens;
  j["seed"] = request.seed;
  if (request.refinement_round > 0) {
    j["refinement_round"] = request.refinement_round;
    j["previous_proof"] = request.previous_proof;
    j["feedback"] = request.feedback;
  }
  return j.dump();
}

ProverRequest DecodeProveRequest(const std::string& payload) {
  const json j = Parse(payload);
  ProverRequest r;
  r.problem_id = RequireString(j, "problem_id", payload);
  r.statement = RequireString(j, "statement", payload);
  r.prompt_template_id = RequireString(j, "prompt_template_id", payload);
  if (const json* v = Optional(j, "mode_hint")) r.mode_hint = ModeField(*v, "mode_hint", payload);
  if (const json* v = Optional(j, "prefix_id")) {
    if (!v->is_number_integer()) Fail("field 'prefix_id' must be an integer", payload);
    r.prefix_id = v->get<int>();
  }
  r.max_tokens = RequireInt(j, "max_tokens", payload);
  if (r.max_tokens <= 0) Fail("field 'max_tokens' must be positive", payload);
  const json& seed = Require(j, "seed", payload);
  if (!seed.is_number_unsigned()) Fail("field 'seed' must be a non-negative integer", payload);
  r.seed = seed.get<std::uint64_t>();
  if (const json* v = Optional(j, "refinement_round")) {
    if (!v->is_number_integer()) Fail("field 'refinement_round' must be an integer", payload);
    r.refinement_round = v->get<int>();
  }
  if (const json* v = Optional(j, "previous_proof")) {
    if (!v->is_string()) Fail("field 'previous_proof' must be a string", payload);
    r.previous_proof = v->get<std::string>();
  }
  if (const json* v = Optional(j, "feedback")) r.feedback = StringArray(*v, "feedback", payload);
  return r;
}

std::string EncodeProveResponse(const ProveResponse& response) {
  json j;
  j["text"] = response.text;
  j["token_count"] = response.token_count;
  j["finish_reason"] = response.finish_reason == FinishReason::kLength ? "length" : "stop";
  if (response.tokens) j["tokens"] = *response.tokens;
  if (response.mode) j["mode"] = std::string(ToString(*response.mode));
  return j.dump();
}

ProveResponse DecodeProveResponse(const std::string& payload) {
  const json j = Parse(payload);
  ProveResponse r;
  r.text = RequireString(j, "text", payload);
  r.token_count = RequireInt(j, "token_count", payload);
  if (r.token_count < 0) Fail("field 'token_count' must be non-negative", payload);
  const std::string finish = RequireString(j, "finish_reason", payload);
  if (finish == "stop") {
    r.finish_reason = FinishReason::kStop;
  } else if (finish == "length") {
    r.finish_reason = FinishReason::kLength;
  } else {
    Fail("field 'finish_reason' must be \"stop\" or \"length\"", payload);
  }
  if (const json* v = Optional(j, "tokens")) r.tokens = StringArray(*v, "tokens", payload);
  if (const json* v = Optional(j, "mode")) r.mode = ModeField(*v, "mode", payload);
  return r;
}

std::string EncodeVerifyRequest(const VerifyRequest& request) {
  json j;
  j["statement"] = request.statement;
  j["proof_text"] = request.proof_text;
  return j.dump();
}

VerifyRequest DecodeVerifyRequest(const std::string& payload) {
  const json j = Parse(payload);
  return VerifyRequest{RequireString(j, "statement", payload),
                       RequireString(j, "proof_text", payload)};
}

std::string EncodeVerifyResponse(const VerifierReport& report) {
  if (report.verdict == Verdict::kUnverified) {
    throw DomainError("a verifier response cannot carry the 'unverified' verdict");
  }
  json j;
  j["verdict"] = std::string(ToString(report.verdict));
  j["messages"] = report.messages;
  return j.dump();
}

VerifierReport DecodeVerifyResponse(const std::string& payload) {
  const json j = Parse(payload);
  VerifierReport r;
  const std::string verdict = RequireString(j, "verdict", payload);
  if (verdict == "pass") {
    r.verdict = Verdict::kPass;
  } else if (verdict == "fail") {
    r.verdict = Verdict::kFail;
  } else if (verdict == "timeout") {
    r.verdict = Verdict::kTimeout;
  } else {
    Fail("field 'verdict' must be \"pass\", \"fail\" or \"timeout\"", payload);
  }
  if (const json* v = Optional(j, "messages")) r.messages = StringArray(*v, "messages", payload);
  return r;
}

}  // namespace econ::wire
