#include "econ/mock_backend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "econ/errors.hpp"

namespace econ {
namespace {

constexpr std::array<std::string_view, 16> kOpeners = {
    "nlinarith", "omega",     "induction", "norm_num",   "field_simp", "rcases",
    "interval_cases", "simp", "decide",    "linarith",   "ring_nf",    "positivity",
    "aesop",     "by_contra", "push_cast", "constructor"};

constexpr std::array<std::string_view, 16> kHeaderArgs = {
    "[sq_nonneg",  "h₀",   "n",        "[h₀,",   "[div_eq_iff", "h₁", "x",    "[pow_two,",
    "(by",         "[h₀]", "at",       "[mul_pos", "using",     "hx", "k",    "[Nat.succ_le,"};

constexpr std::array<std::string_view, 24> kBodyPool = {
    "<;>", "(a", "-", "b)", "h₁", "h₂", "mul_pos", "sq_nonneg", "at", "⊢", "with", "only",
    "[h₀]", "norm_num", "nlinarith", "ring", "exact", "apply", "intro", "x", "y", "le_of_lt",
    "Nat.succ", "Finset.sum_range_succ"};

constexpr std::string_view kTrailer = "\n-- mock: ";

std::string LexemeFromTable(std::span<const std::string_view> table, int index, const char* tag) {
  if (index < static_cast<int>(table.size())) return std::string(table[index]);
  return std::string(tag) + "_" + std::to_string(index);
}

}  // namespace

std::vector<double> BaseStrategyDistribution(int num_strategies, double decay) {
  if (num_strategies < 1) throw DomainError("need at least one strategy");
  std::vector<double> w(num_strategies);
  double total = 0.0;
  for (int s = 0; s < num_strategies; ++s) {
    w[s] = std::pow(decay, s);
    total += w[s];
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<std::string> StrategyHeader(int strategy) {
  return {LexemeFromTable(kOpeners, strategy, "tactic"),
          LexemeFromTable(kHeaderArgs, strategy, "arg"), "<;>"};
}

MockProver::MockProver(std::span<const Problem> corpus, MockConfig config)
    : config_(config),
      base_distribution_(BaseStrategyDistribution(config.num_strategies,
                                                  config.base_strategy_decay)) {
  for (const Problem& p : corpus) {
    if (!p.latent) continue;
    p.latent->Validate();
    latents_.emplace(p.id, *p.latent);
  }
}

const MockLatent& MockProver::LatentFor(const std::string& problem_id) const {
  auto it = latents_.find(problem_id);
  if (it == latents_.end()) throw DomainError("not a mock problem: '" + problem_id + "'");
  return it->second;
}

double MockProver::SuccessProbability(const MockLatent& latent, Mode mode,
                                      std::optional<int> prefix_id) const {
  if (prefix_id) return *prefix_id == latent.strategy_star ? latent.q_hit : latent.q_miss;
  return mode == Mode::kCot ? latent.p_cot : latent.p_noncot;
}

std::vector<std::string> MockProver::GenerateLexemes(int strategy, std::int64_t length,
                                                     std::uint64_t seed) const {
  const auto count = static_cast<std::size_t>(
      std::min<std::int64_t>(length, config_.emitted_lexemes));
  std::vector<std::string> out = StrategyHeader(strategy);
  out.resize(std::min(out.size(), count));
  Rng rng(seed);
  const int vocab = std::max(1, config_.body_vocabulary);
  while (out.size() < count) {
    const auto t = static_cast<int>(rng.Below(static_cast<std::uint64_t>(vocab)));
    const std::size_t idx = (static_cast<std::size_t>(strategy) * 5 + t * 7) % kBodyPool.size();
    out.emplace_back(kBodyPool[idx]);
  }
  return out;
}

ProveResponse MockProver::Prove(const ProverRequest& request) const {
  const MockLatent& latent = LatentFor(request.problem_id);
  if (request.max_tokens <= 0) throw DomainError("max_tokens must be positive");
  if (request.prefix_id &&
      (*request.prefix_id < 0 || *request.prefix_id >= config_.num_strategies)) {
    throw DomainError("prefix id " + std::to_string(*request.prefix_id) + " out of range");
  }
  const Mode mode = request.mode_hint.value_or(Mode::kNonCot);
  const int round = request.refinement_round;
  const std::uint64_t seed =
      round == 0 ? request.seed : DeriveSeed(request.seed, "refine/" + std::to_string(round));

  double p = SuccessProbability(latent, mode, request.prefix_id);
  if (round > 0) p = 1.0 - (1.0 - p) * config_.refine_rho;

  int strategy = 0;
  if (request.prefix_id) {
    strategy = *request.prefix_id;
  } else {
    Rng prefix_rng(DeriveSeed(request.seed, "prefix"));
    strategy = static_cast<int>(prefix_rng.Categorical(base_distribution_));
  }

  double mean = static_cast<double>(mode == Mode::kCot ? latent.len_cot_mean
                                                       : latent.len_noncot_mean);
  if (round > 0) mean = std::max(1.0, mean * config_.refine_length_ratio);

  Rng length_rng(DeriveSeed(seed, "length"));
  std::int64_t length = length_rng.ShiftedGeometric(mean);
  const bool truncated = length > request.max_tokens;
  if (truncated) length = request.max_tokens;

  Rng outcome_rng(DeriveSeed(seed, "outcome"));
  const bool success = outcome_rng.Bernoulli(p);
  Rng timeout_rng(DeriveSeed(seed, "timeout"));
  const bool timeout = timeout_rng.Bernoulli(config_.timeout_prob);

  ProveResponse response;
  response.token_count = length;
  response.finish_reason = truncated ? FinishReason::kLength : FinishReason::kStop;
  response.mode = mode;
  response.tokens = GenerateLexemes(strategy, length, DeriveSeed(seed, "lexemes"));

  std::string text;
  if (mode == Mode::kCot) {
    text = "/- informal reasoning: " + std::to_string(length) + " tokens -/\n";
  }
  for (const std::string& lex : *response.tokens) {
    if (!text.empty() && text.back() != '\n') text += ' ';
    text += lex;
  }
  text += kTrailer;
  if (timeout) {
    text += "timeout";
  } else if (success && !truncated) {
    text += "pass";
  } else {
    Rng pos_rng(DeriveSeed(seed, "position"));
    text += "fail at lexeme " +
            std::to_string(pos_rng.Below(static_cast<std::uint64_t>(length)));
  }
  response.text = std::move(text);
  return response;
}

VerifierReport MockVerifier::Verify(const VerifyRequest& request) const {
  const std::string& text = request.proof_text;
  const std::size_t at = text.rfind(kTrailer);
  if (at == std::string::npos) {
    return {Verdict::kFail, {"error: proof was not produced by the mock prover"}};
  }
  const std::string_view outcome = std::string_view(text).substr(at + kTrailer.size());
  if (outcome == "pass") return {Verdict::kPass, {}};
  if (outcome == "timeout") return {Verdict::kTimeout, {"error: verification timed out"}};
  constexpr std::string_view kFailAt = "fail at lexeme ";
  if (outcome.starts_with(kFailAt)) {
    return {Verdict::kFail,
            {"error: unsolved goals at lexeme " + std::string(outcome.substr(kFailAt.size()))}};
  }
  return {Verdict::kFail, {"error: unrecognized mock outcome"}};
}

Attempt MockProve(const Problem& problem, Mode mode, std::optional<int> head_strategy,
                  const SeedPath& seed_path, const MockConfig& config) {
  if (!problem.latent) throw DomainError("not a mock problem: '" + problem.id + "'");
  MockProver prover(std::span<const Problem>(&problem, 1), config);
  MockVerifier verifier;
  AttemptSpec spec;
  spec.problem = &problem;
  spec.mode = mode;
  spec.prefix_id = head_strategy;
  spec.seed_path = seed_path;
  spec.head_id = seed_path.head_id;
  return RunAttempt(spec, prover, verifier);
}

VerifierReport MockVerify(const Attempt& attempt) {
  return MockVerifier{}.Verify(VerifyRequest{"", attempt.proof_text});
}

}  // namespace econ
