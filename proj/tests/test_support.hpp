#pragma once

#include <atomic>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "econ/backend.hpp"
#include "econ/core.hpp"
#include "econ/errors.hpp"

namespace econ::testing {

inline Problem MockProblem(std::string id, MockLatent latent) {
  Problem p;
  p.statement = "theorem " + id + " : True := by";
  p.id = std::move(id);
  p.latent = latent;
  return p;
}

inline MockLatent Latent(double p_noncot, double p_cot) {
  MockLatent m;
  m.p_noncot = p_noncot;
  m.p_cot = p_cot;
  return m;
}

inline Attempt CostOnly(std::int64_t initial, std::vector<std::int64_t> refinements = {}) {
  Attempt a;
  a.initial_tokens = initial;
  a.refinement_tokens = std::move(refinements);
  return a;
}

// Wraps a prover and throws for the listed (problem, seed) requests or for
// every request once `fail_all` is set.
class FlakyProver final : public Prover {
 public:
  FlakyProver(const Prover& inner, std::set<std::uint64_t> failing_seeds, bool fail_all = false)
      : inner_(inner), failing_(std::move(failing_seeds)), fail_all_(fail_all) {}

  ProveResponse Prove(const ProverRequest& request) const override {
    ++calls_;
    if (fail_all_ || failing_.count(request.seed)) throw BackendError("injected prover failure");
    return inner_.Prove(request);
  }

  int calls() const { return calls_.load(); }

 private:
  const Prover& inner_;
  std::set<std::uint64_t> failing_;
  bool fail_all_;
  mutable std::atomic<int> calls_{0};
};

class BrokenVerifier final : public Verifier {
 public:
  VerifierReport Verify(const VerifyRequest&) const override {
    throw BackendError("injected verifier failure");
  }
};

}  // namespace econ::testing
