#pragma once

// Inference-time dispatch: budget allocation over heads, simulated dynamic
// CoT switching, parallel passes with a token ledger, and refinement.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "econ/backend.hpp"
#include "econ/core.hpp"
#include "econ/learn.hpp"

namespace econ::orchestrate {

inline constexpr int kDefaultRefineRounds = 2;

struct Allocation {
  std::vector<int> per_head;

  int Total() const;
};

// floor(k/n) per head, one extra for heads 0..(k mod n)-1.
Allocation AllocateBudget(int k, int n);

// Head serving pass index j: round-robin j mod n. The first k passes of any
// longer run therefore follow AllocateBudget(k, n).
int HeadForPass(std::int64_t pass_index, int n_heads);

struct SwitchPolicy {
  double threshold = 0.5;
  double noise_sigma = 0.0;

  void Validate() const;
};

// 1 - p_noncot of a mock problem. Throws DomainError for problems without a
// latent.
double TrueDifficulty(const Problem& problem);

// CoT iff true difficulty plus N(0, sigma) noise drawn for this attempt
// exceeds the threshold.
Mode SelectMode(const SwitchPolicy& policy, const Problem& problem, const SeedPath& seed_path);

// Threshold that makes the switcher choose CoT for `target_rate` of the
// attempts drawn under calibration_seed with `passes` attempts per problem.
double CalibrateThreshold(double noise_sigma, std::span<const Problem> corpus, int passes,
                          double target_rate, std::uint64_t calibration_seed);

struct ModeSource {
  enum class Kind { kFixed, kSwitch, kModelChosen };

  Kind kind = Kind::kFixed;
  Mode fixed = Mode::kNonCot;
  SwitchPolicy policy;

  static ModeSource Fixed(Mode mode) { return {Kind::kFixed, mode, {}}; }
  static ModeSource Switch(SwitchPolicy policy) { return {Kind::kSwitch, Mode::kNonCot, policy}; }
  static ModeSource ModelChosen() { return {Kind::kModelChosen, Mode::kNonCot, {}}; }

  // nullopt leaves the choice to the prover.
  std::optional<Mode> Resolve(const Problem& problem, const SeedPath& seed_path) const;
};

struct RunOptions {
  std::uint64_t run_seed = 0;
  int max_inflight = 1;
  std::int64_t max_tokens = kDefaultMaxTokens;
  int refine_rounds = 0;  // 0 disables refinement
  std::string prompt_template_id = kDefaultTemplateId;
};

struct RunLedger {
  std::vector<Attempt> attempts;
  SamplingCost cost;  // nominal: every attempt issued
  std::map<std::string, bool> solved;
  double cot_rate = 0.0;
  // Tokens up to and including each problem's first solving pass.
  std::int64_t realized_tokens = 0;

  double Accuracy() const;
};

// Assembles ledger totals from attempts ordered by (problem, pass index).
RunLedger MakeLedger(std::vector<Attempt> attempts, std::span<const Problem> problems);

// Issues sum(allocation) attempts for one problem. heads may be empty (base
// model, no prefix); otherwise allocation must have one entry per head.
RunLedger RunParallelPass(const Problem& problem, std::span<const learn::HeadPolicy> heads,
                          const Allocation& allocation, const ModeSource& mode_source,
                          const Prover& prover, const Verifier& verifier,
                          const RunOptions& options);

// k passes per problem across the corpus, heads in round-robin order.
RunLedger RunCorpus(std::span<const Problem> corpus, std::span<const learn::HeadPolicy> heads,
                    int k, const ModeSource& mode_source, const Prover& prover,
                    const Verifier& verifier, const RunOptions& options);

// Regenerates a failed attempt up to max_rounds times, feeding back verifier
// messages, stopping at the first Pass. Throws DomainError("nothing to
// refine") for an attempt that already passed.
Attempt RefineLoop(const Problem& problem, Attempt attempt, int max_rounds, const Prover& prover,
                   const Verifier& verifier, std::vector<std::string> feedback = {},
                   std::int64_t max_tokens = kDefaultMaxTokens);

// One JSON object per attempt.
void WriteAttemptRecords(std::ostream& out, std::span<const Attempt> attempts);

// run_id,total_tokens,passes,accuracy,cot_rate
void WriteLedgerSummaryHeader(std::ostream& out);
void WriteLedgerSummaryRow(std::ostream& out, const std::string& run_id, const RunLedger& ledger);

}  // namespace econ::orchestrate
