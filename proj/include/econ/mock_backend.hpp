#pragma once

// Seeded stochastic stand-in for a prover and a Lean checker.
//
// The mock prover draws every outcome from the request seed, so a fixed
// SeedPath reproduces the same attempt on any thread and in any order. The
// drawn outcome is written into a trailer line of the proof text, which the
// mock verifier reads back.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "econ/backend.hpp"
#include "econ/core.hpp"

namespace econ {

struct MockConfig {
  // Number of proof strategies (prefix ids are in [0, num_strategies)).
  int num_strategies = 8;
  // Prefix strategy distribution of the unheaded base model: weight decay^s.
  double base_strategy_decay = 0.6;
  // Each refinement round succeeds with 1 - (1 - p) * refine_rho.
  double refine_rho = 0.7;
  // Mean refinement length as a fraction of the mode's mean length.
  double refine_length_ratio = 0.3;
  double timeout_prob = 0.0;
  // Lexemes of the generated stream that are materialized (the rest are only counted).
  int emitted_lexemes = 24;
  // Distinct body lexemes per strategy after the fixed three-lexeme header.
  int body_vocabulary = 3;
};

// Normalized base-model distribution over prefix strategies.
std::vector<double> BaseStrategyDistribution(int num_strategies, double decay);

// The fixed three-lexeme header a strategy's proofs start with.
std::vector<std::string> StrategyHeader(int strategy);

class MockProver final : public Prover {
 public:
  MockProver(std::span<const Problem> corpus, MockConfig config = {});

  ProveResponse Prove(const ProverRequest& request) const override;

  const MockConfig& config() const { return config_; }
  const MockLatent& LatentFor(const std::string& problem_id) const;

  // Success probability of one initial attempt.
  double SuccessProbability(const MockLatent& latent, Mode mode,
                            std::optional<int> prefix_id) const;

 private:
  std::vector<std::string> GenerateLexemes(int strategy, std::int64_t length,
                                           std::uint64_t seed) const;

  MockConfig config_;
  std::map<std::string, MockLatent, std::less<>> latents_;
  std::vector<double> base_distribution_;
};

class MockVerifier final : public Verifier {
 public:
  VerifierReport Verify(const VerifyRequest& request) const override;
};

// Single-problem conveniences mirroring the prover/verifier pair.
Attempt MockProve(const Problem& problem, Mode mode, std::optional<int> head_strategy,
                  const SeedPath& seed_path, const MockConfig& config = {});
VerifierReport MockVerify(const Attempt& attempt);

}  // namespace econ
