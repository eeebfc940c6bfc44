#pragma once

// Prover / verifier boundary shared by the mock and the remote client.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "econ/core.hpp"

namespace econ {

inline constexpr std::int64_t kDefaultMaxTokens = 32768;
inline constexpr const char* kDefaultTemplateId = "dynamic-cot-v1";

struct ProverRequest {
  std::string problem_id;
  std::string statement;
  std::optional<Mode> mode_hint;
  // Prefix (proof strategy) the head selected for this attempt.
  std::optional<int> prefix_id;
  std::int64_t max_tokens = kDefaultMaxTokens;
  std::uint64_t seed = 0;
  std::string prompt_template_id = kDefaultTemplateId;
  // Refinement extension: round 0 is the initial generation.
  int refinement_round = 0;
  std::string previous_proof;
  std::vector<std::string> feedback;

  friend bool operator==(const ProverRequest&, const ProverRequest&) = default;
};

enum class FinishReason { kStop, kLength };

struct ProveResponse {
  std::string text;
  std::int64_t token_count = 0;
  FinishReason finish_reason = FinishReason::kStop;
  std::optional<std::vector<std::string>> tokens;
  // Mode the model actually used, when the server reports it.
  std::optional<Mode> mode;

  friend bool operator==(const ProveResponse&, const ProveResponse&) = default;
};

struct VerifyRequest {
  std::string statement;
  std::string proof_text;

  friend bool operator==(const VerifyRequest&, const VerifyRequest&) = default;
};

struct VerifierReport {
  Verdict verdict = Verdict::kFail;  // kPass, kFail or kTimeout
  std::vector<std::string> messages;

  friend bool operator==(const VerifierReport&, const VerifierReport&) = default;
};

// Implementations must be safe to call concurrently.
class Prover {
 public:
  virtual ~Prover() = default;
  virtual ProveResponse Prove(const ProverRequest& request) const = 0;
};

class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual VerifierReport Verify(const VerifyRequest& request) const = 0;
};

struct AttemptSpec {
  const Problem* problem = nullptr;
  std::optional<Mode> mode;  // nullopt: let the model choose
  std::optional<int> head_id;
  std::optional<int> prefix_id;
  SeedPath seed_path;
  std::int64_t max_tokens = kDefaultMaxTokens;
  std::string prompt_template_id = kDefaultTemplateId;
};

// Whitespace lexer used when a backend does not return token lists.
std::vector<std::string> SplitLexemes(const std::string& text);

// Generate and verify one attempt (no refinement).
//
// A prover failure yields verdict kUnverified with zero tokens; a verifier
// failure yields kUnverified with the generated tokens kept, so cost stays
// complete. `error` receives the failure message when non-null.
Attempt RunAttempt(const AttemptSpec& spec, const Prover& prover, const Verifier& verifier,
                   std::vector<std::string>* messages = nullptr, std::string* error = nullptr);

}  // namespace econ
