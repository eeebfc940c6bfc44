#pragma once

// HTTP client for a real inference server and a Lean verification service.

#include <chrono>
#include <memory>
#include <string>

#include "econ/backend.hpp"

namespace econ {

struct RemoteOptions {
  std::string base_url;  // e.g. "http://127.0.0.1:8000"
  int max_inflight = 8;
  int retries = 1;  // extra attempts after the first failure
  std::chrono::milliseconds timeout{120000};
};

class InflightLimiter;

class RemoteProver final : public Prover {
 public:
  explicit RemoteProver(RemoteOptions options);
  ~RemoteProver() override;

  ProveResponse Prove(const ProverRequest& request) const override;

 private:
  RemoteOptions options_;
  std::unique_ptr<InflightLimiter> limiter_;
};

class RemoteVerifier final : public Verifier {
 public:
  explicit RemoteVerifier(RemoteOptions options);
  ~RemoteVerifier() override;

  VerifierReport Verify(const VerifyRequest& request) const override;

 private:
  RemoteOptions options_;
  std::unique_ptr<InflightLimiter> limiter_;
};

}  // namespace econ
