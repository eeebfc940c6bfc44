#include "econ/orchestrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "econ/diversity.hpp"
#include "econ/errors.hpp"
#include "econ/parallel.hpp"

namespace econ::orchestrate {

int Allocation::Total() const {
  return std::accumulate(per_head.begin(), per_head.end(), 0);
}

Allocation AllocateBudget(int k, int n) {
  if (k < 1 || n < 1) throw DomainError("allocate_budget needs k >= 1 and n >= 1");
  Allocation a;
  a.per_head.assign(static_cast<std::size_t>(n), k / n);
  std::fill_n(a.per_head.begin(), k % n, k / n + 1);
  return a;
}

int HeadForPass(std::int64_t pass_index, int n_heads) {
  if (n_heads < 1) throw DomainError("need at least one head");
  return static_cast<int>(pass_index % n_heads);
}

void SwitchPolicy::Validate() const {
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma)) {
    throw DomainError("noise_sigma must be finite and >= 0");
  }
  if (!std::isfinite(threshold)) throw DomainError("threshold must be finite");
}

double TrueDifficulty(const Problem& problem) {
  if (!problem.latent) throw DomainError("switcher requires difficulty signal or real model");
  return 1.0 - problem.latent->p_noncot;
}

namespace {

double PerceivedDifficulty(double noise_sigma, const Problem& problem, const SeedPath& seed_path) {
  const double d = TrueDifficulty(problem);
  if (noise_sigma == 0.0) return d;
  Rng rng(DeriveSeed(seed_path.Seed(), "switch"));
  return d + noise_sigma * rng.Normal();
}

}  // namespace

Mode SelectMode(const SwitchPolicy& policy, const Problem& problem, const SeedPath& seed_path) {
  policy.Validate();
  return PerceivedDifficulty(policy.noise_sigma, problem, seed_path) > policy.threshold
             ? Mode::kCot
             : Mode::kNonCot;
}

double CalibrateThreshold(double noise_sigma, std::span<const Problem> corpus, int passes,
                          double target_rate, std::uint64_t calibration_seed) {
  if (corpus.empty() || passes < 1) throw DomainError("calibration needs problems and passes");
  if (!(target_rate > 0 && target_rate < 1)) throw DomainError("target rate must lie in (0, 1)");
  std::vector<double> values;
  values.reserve(corpus.size() * static_cast<std::size_t>(passes));
  for (const Problem& p : corpus) {
    for (int j = 0; j < passes; ++j) {
      values.push_back(
          PerceivedDifficulty(noise_sigma, p, SeedPath{calibration_seed, p.id, std::nullopt, j}));
    }
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  const auto m = static_cast<std::size_t>(
      std::clamp<double>(std::round(target_rate * static_cast<double>(values.size())), 1.0,
                         static_cast<double>(values.size() - 1)));
  return 0.5 * (values[m - 1] + values[m]);
}

std::optional<Mode> ModeSource::Resolve(const Problem& problem, const SeedPath& seed_path) const {
  switch (kind) {
    case Kind::kFixed:
      return fixed;
    case Kind::kSwitch:
      return SelectMode(policy, problem, seed_path);
    case Kind::kModelChosen:
      return std::nullopt;
  }
  return std::nullopt;
}

double RunLedger::Accuracy() const {
  if (solved.empty()) return 0.0;
  const auto n = std::count_if(solved.begin(), solved.end(), [](const auto& kv) { return kv.second; });
  return static_cast<double>(n) / static_cast<double>(solved.size());
}

RunLedger MakeLedger(std::vector<Attempt> attempts, std::span<const Problem> problems) {
  RunLedger ledger;
  for (const Problem& p : problems) ledger.solved[p.id] = false;
  std::map<std::string, bool> done;
  std::int64_t cot = 0;
  for (const Attempt& a : attempts) {
    if (a.mode == Mode::kCot) ++cot;
    if (!done[a.problem_id]) ledger.realized_tokens = CheckedTokenAdd(ledger.realized_tokens, AttemptCost(a));
    if (a.solved()) {
      ledger.solved[a.problem_id] = true;
      done[a.problem_id] = true;
    }
  }
  if (!attempts.empty()) {
    ledger.cost = TotalSamplingCost(attempts);
    ledger.cot_rate = static_cast<double>(cot) / static_cast<double>(attempts.size());
  }
  ledger.attempts = std::move(attempts);
  return ledger;
}

namespace {

struct Task {
  const Problem* problem;
  std::int64_t pass_index;
  std::optional<int> head;
};

Attempt RunTask(const Task& task, std::span<const learn::HeadPolicy> heads,
                const ModeSource& mode_source, const Prover& prover, const Verifier& verifier,
                const RunOptions& options) {
  AttemptSpec spec;
  spec.problem = task.problem;
  spec.head_id = task.head;
  spec.seed_path = SeedPath{options.run_seed, task.problem->id, task.head, task.pass_index};
  spec.max_tokens = options.max_tokens;
  spec.prompt_template_id = options.prompt_template_id;
  spec.mode = mode_source.Resolve(*task.problem, spec.seed_path);
  if (task.head) {
    Rng rng(DeriveSeed(spec.seed_path.Seed(), "head-prefix"));
    spec.prefix_id = learn::HeadSample(heads[static_cast<std::size_t>(*task.head)], rng);
  }
  std::vector<std::string> messages;
  Attempt attempt = RunAttempt(spec, prover, verifier, &messages);
  if (options.refine_rounds > 0 &&
      (attempt.verdict == Verdict::kFail || attempt.verdict == Verdict::kTimeout)) {
    attempt = RefineLoop(*task.problem, std::move(attempt), options.refine_rounds, prover,
                         verifier, std::move(messages), options.max_tokens);
  }
  return attempt;
}

std::vector<Attempt> RunTasks(const std::vector<Task>& tasks,
                              std::span<const learn::HeadPolicy> heads,
                              const ModeSource& mode_source, const Prover& prover,
                              const Verifier& verifier, const RunOptions& options) {
  std::vector<Attempt> out(tasks.size());
  ParallelFor(tasks.size(), options.max_inflight, [&](std::size_t i) {
    out[i] = RunTask(tasks[i], heads, mode_source, prover, verifier, options);
  });
  return out;
}

}  // namespace

RunLedger RunParallelPass(const Problem& problem, std::span<const learn::HeadPolicy> heads,
                          const Allocation& allocation, const ModeSource& mode_source,
                          const Prover& prover, const Verifier& verifier,
                          const RunOptions& options) {
  const std::size_t n_heads = heads.empty() ? 1 : heads.size();
  if (allocation.per_head.size() != n_heads) {
    throw DomainError("allocation has " + std::to_string(allocation.per_head.size()) +
                      " entries for " + std::to_string(n_heads) + " heads");
  }
  std::vector<Task> tasks;
  std::int64_t pass = 0;
  for (std::size_t h = 0; h < n_heads; ++h) {
    if (allocation.per_head[h] < 0) throw DomainError("allocation entries must be >= 0");
    for (int j = 0; j < allocation.per_head[h]; ++j) {
      tasks.push_back({&problem, pass++,
                       heads.empty() ? std::nullopt : std::optional<int>(static_cast<int>(h))});
    }
  }
  return MakeLedger(RunTasks(tasks, heads, mode_source, prover, verifier, options),
                    std::span<const Problem>(&problem, 1));
}

RunLedger RunCorpus(std::span<const Problem> corpus, std::span<const learn::HeadPolicy> heads,
                    int k, const ModeSource& mode_source, const Prover& prover,
                    const Verifier& verifier, const RunOptions& options) {
  if (k < 1) throw DomainError("pass count must be >= 1");
  std::vector<Task> tasks;
  tasks.reserve(corpus.size() * static_cast<std::size_t>(k));
  for (const Problem& p : corpus) {
    for (std::int64_t j = 0; j < k; ++j) {
      std::optional<int> head;
      if (!heads.empty()) head = HeadForPass(j, static_cast<int>(heads.size()));
      tasks.push_back({&p, j, head});
    }
  }
  return MakeLedger(RunTasks(tasks, heads, mode_source, prover, verifier, options), corpus);
}

Attempt RefineLoop(const Problem& problem, Attempt attempt, int max_rounds, const Prover& prover,
                   const Verifier& verifier, std::vector<std::string> feedback,
                   std::int64_t max_tokens) {
  if (attempt.verdict == Verdict::kPass) throw DomainError("nothing to refine");
  if (attempt.verdict == Verdict::kUnverified) {
    throw DomainError("cannot refine an unverified attempt");
  }
  if (max_rounds < 1) throw DomainError("refinement needs R >= 1");
  const int done = static_cast<int>(attempt.refinement_tokens.size());
  for (int round = done + 1; round <= done + max_rounds; ++round) {
    ProverRequest request;
    request.problem_id = problem.id;
    request.statement = problem.statement;
    request.mode_hint = attempt.mode;
    request.prefix_id = attempt.prefix_id;
    request.max_tokens = max_tokens;
    request.seed = attempt.seed_path.Seed();
    request.refinement_round = round;
    request.previous_proof = attempt.proof_text;
    request.feedback = feedback;
    ProveResponse response;
    try {
      response = prover.Prove(request);
    } catch (const std::exception&) {
      attempt.verdict = Verdict::kUnverified;
      return attempt;
    }
    attempt.refinement_tokens.push_back(response.token_count);
    attempt.proof_text = response.text;
    try {
      VerifierReport report = verifier.Verify(VerifyRequest{problem.statement, response.text});
      attempt.verdict = report.verdict;
      feedback = std::move(report.messages);
    } catch (const std::exception&) {
      attempt.verdict = Verdict::kUnverified;
      return attempt;
    }
    if (attempt.verdict == Verdict::kPass) break;
  }
  return attempt;
}

void WriteAttemptRecords(std::ostream& out, std::span<const Attempt> attempts) {
  for (const Attempt& a : attempts) {
    const std::size_t boundary = diversity::FindStatementBoundary(a.token_stream).value_or(0);
    const diversity::Prefix prefix = diversity::ExtractPrefix(a.token_stream, boundary, 20);
    nlohmann::json j;
    j["problem_id"] = a.problem_id;
    j["mode"] = std::string(ToString(a.mode));
    j["head_id"] = a.head_id ? nlohmann::json(*a.head_id) : nlohmann::json(nullptr);
    j["pass_index"] = a.pass_index;
    j["initial_tokens"] = a.initial_tokens;
    j["refinement_tokens"] = a.refinement_tokens;
    j["verdict"] = std::string(ToString(a.verdict));
    j["prefix_lexemes"] = prefix.lexemes;
    out << j.dump() << '\n';
  }
}

void WriteLedgerSummaryHeader(std::ostream& out) {
  out << "run_id,total_tokens,passes,accuracy,cot_rate\n";
}

void WriteLedgerSummaryRow(std::ostream& out, const std::string& run_id, const RunLedger& ledger) {
  out << fmt::format("{},{},{},{:.6f},{:.6f}\n", run_id, ledger.cost.total_tokens,
                     ledger.cost.passes, ledger.Accuracy(), ledger.cot_rate);
}

}  // namespace econ::orchestrate
