#pragma once

// Shared domain types, token-cost arithmetic and Pass@k estimation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "econ/rng.hpp"

namespace econ {

enum class Mode { kNonCot, kCot };

std::string_view ToString(Mode mode);        // "noncot" | "cot"
Mode ModeFromString(std::string_view text);  // throws DomainError

enum class DifficultyTag { kModerate, kOlympiad };

std::string_view ToString(DifficultyTag tag);
DifficultyTag DifficultyTagFromString(std::string_view text);

// Ground truth for the seeded mock prover. Only mock corpora carry one.
struct MockLatent {
  double p_noncot = 0.0;
  double p_cot = 0.0;
  int strategy_star = 0;
  // Success chance when a head's sampled prefix strategy does / does not
  // match strategy_star.
  double q_hit = 0.0;
  double q_miss = 0.0;
  std::int64_t len_noncot_mean = 443;
  std::int64_t len_cot_mean = 4488;

  // Throws DomainError when probabilities are out of range or q_miss > q_hit.
  void Validate() const;

  friend bool operator==(const MockLatent&, const MockLatent&) = default;
};

struct Problem {
  std::string id;
  std::string statement;
  std::optional<DifficultyTag> difficulty_tag;
  std::optional<MockLatent> latent;

  friend bool operator==(const Problem&, const Problem&) = default;
};

// Throws DomainError on empty ids/statements or duplicate ids.
void ValidateCorpus(std::span<const Problem> corpus);

enum class Verdict { kPass, kFail, kTimeout, kUnverified };

std::string_view ToString(Verdict verdict);  // "pass" | "fail" | "timeout" | "unverified"
Verdict VerdictFromString(std::string_view text);

struct Attempt {
  std::string problem_id;
  Mode mode = Mode::kNonCot;
  std::optional<int> head_id;
  // Prefix strategy requested from the prover, when a head chose one.
  std::optional<int> prefix_id;
  std::int64_t pass_index = 0;
  std::int64_t initial_tokens = 0;
  std::vector<std::int64_t> refinement_tokens;
  std::vector<std::string> token_stream;
  Verdict verdict = Verdict::kUnverified;
  SeedPath seed_path;
  // Latest proof text (after refinement, if any). Not part of the record format.
  std::string proof_text;

  bool solved() const { return verdict == Verdict::kPass; }

  friend bool operator==(const Attempt&, const Attempt&) = default;
};

struct SamplingCost {
  std::int64_t total_tokens = 0;
  std::vector<std::int64_t> per_pass;
  std::int64_t passes = 0;

  friend bool operator==(const SamplingCost&, const SamplingCost&) = default;
};

struct PassAtK {
  int n = 1;
  int c = 0;
  int k = 1;
  double value = 0.0;
};

// Adds two token counts; throws OverflowError beyond INT64_MAX.
std::int64_t CheckedTokenAdd(std::int64_t a, std::int64_t b);
std::int64_t CheckedTokenMul(std::int64_t a, std::int64_t b);

// initial_tokens + sum(refinement_tokens).
std::int64_t AttemptCost(const Attempt& attempt);

// One per_pass entry per attempt. Throws DomainError("no attempts") on empty input.
SamplingCost TotalSamplingCost(std::span<const Attempt> attempts_by_pass);

// Unbiased estimator 1 - C(n-c, k) / C(n, k).
double PassAtKValue(int n, int c, int k);
PassAtK MakePassAtK(int n, int c, int k);

// Mean of per-problem values. Throws DomainError on empty input.
double CorpusPassRate(std::span<const PassAtK> per_problem);
double CorpusPassRate(std::span<const double> per_problem);

}  // namespace econ
