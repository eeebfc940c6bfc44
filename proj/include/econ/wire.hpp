#pragma once

// JSON wire format of the /v1/prove and /v1/verify endpoints.
//
// Encoders emit compact JSON with keys in lexicographic order; absent
// optionals are omitted. Decoders accept an explicit null for optionals and
// throw ProtocolError on anything malformed.

#include <string>

#include "econ/backend.hpp"

namespace econ::wire {

std::string EncodeProveRequest(const ProverRequest& request);
ProverRequest DecodeProveRequest(const std::string& payload);

std::string EncodeProveResponse(const ProveResponse& response);
ProveResponse DecodeProveResponse(const std::string& payload);

std::string EncodeVerifyRequest(const VerifyRequest& request);
VerifyRequest DecodeVerifyRequest(const std::string& payload);

std::string EncodeVerifyResponse(const VerifierReport& report);
VerifierReport DecodeVerifyResponse(const std::string& payload);

}  // namespace econ::wire
