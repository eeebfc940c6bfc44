#include "econ/core.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "econ/errors.hpp"

namespace econ {

std::string_view ToString(Mode mode) {
  return mode == Mode::kCot ? "cot" : "noncot";
}

Mode ModeFromString(std::string_view text) {
  if (text == "cot") return Mode::kCot;
  if (text == "noncot") return Mode::kNonCot;
  throw DomainError("unknown mode '" + std::string(text) + "'");
}

std::string_view ToString(DifficultyTag tag) {
  return tag == DifficultyTag::kOlympiad ? "olympiad" : "moderate";
}

DifficultyTag DifficultyTagFromString(std::string_view text) {
  if (text == "olympiad") return DifficultyTag::kOlympiad;
  if (text == "moderate") return DifficultyTag::kModerate;
  throw DomainError("unknown difficulty tag '" + std::string(text) + "'");
}

std::string_view ToString(Verdict verdict) {
  switch (verdict) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kTimeout:
      return "timeout";
    case Verdict::kUnverified:
      return "unverified";
  }
  return "unverified";
}

Verdict VerdictFromString(std::string_view text) {
  if (text == "pass") return Verdict::kPass;
  if (text == "fail") return Verdict::kFail;
  if (text == "timeout") return Verdict::kTimeout;
  if (text == "unverified") return Verdict::kUnverified;
  throw DomainError("unknown verdict '" + std::string(text) + "'");
}

void MockLatent::Validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(p_noncot) || !prob(p_cot) || !prob(q_hit) || !prob(q_miss)) {
    throw DomainError("mock latent probabilities must lie in [0, 1]");
  }
  if (q_miss > q_hit) throw DomainError("mock latent requires q_miss <= q_hit");
  if (strategy_star < 0) throw DomainError("mock latent strategy_star must be >= 0");
  if (len_noncot_mean < 1 || len_cot_mean < 1) {
    throw DomainError("mock latent length means must be >= 1");
  }
}

void ValidateCorpus(std::span<const Problem> corpus) {
  std::set<std::string_view> seen;
  for (const Problem& p : corpus) {
    if (p.id.empty()) throw DomainError("problem id must be nonempty");
    if (p.statement.empty()) throw DomainError("problem '" + p.id + "' has an empty statement");
    if (!seen.insert(p.id).second) throw DomainError("duplicate problem id '" + p.id + "'");
    if (p.latent) p.latent->Validate();
  }
}

std::int64_t CheckedTokenAdd(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_add_overflow(a, b, &out)) {
    throw OverflowError("token total exceeds the int64 maximum (" +
                        std::to_string(std::numeric_limits<std::int64_t>::max()) + ")");
  }
  return out;
}

std::int64_t CheckedTokenMul(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw OverflowError("token total exceeds the int64 maximum");
  }
  return out;
}

std::int64_t AttemptCost(const Attempt& attempt) {
  std::int64_t total = attempt.initial_tokens;
  for (std::int64_t t : attempt.refinement_tokens) total = CheckedTokenAdd(total, t);
  return total;
}

SamplingCost TotalSamplingCost(std::span<const Attempt> attempts_by_pass) {
  if (attempts_by_pass.empty()) throw DomainError("no attempts");
  SamplingCost cost;
  cost.per_pass.reserve(attempts_by_pass.size());
  for (const Attempt& a : attempts_by_pass) {
    const std::int64_t c = AttemptCost(a);
    cost.per_pass.push_back(c);
    cost.total_tokens = CheckedTokenAdd(cost.total_tokens, c);
  }
  cost.passes = static_cast<std::int64_t>(attempts_by_pass.size());
  return cost;
}

namespace {

// C(n, k) if it is exactly representable in a double, else nullopt.
std::optional<unsigned __int128> ExactBinomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (int i = 0; i < k; ++i) {
    c = c * static_cast<unsigned>(n - i) / static_cast<unsigned>(i + 1);
    if (c > (static_cast<unsigned __int128>(1) << 53)) return std::nullopt;
  }
  return c;
}

}  // namespace

double PassAtKValue(int n, int c, int k) {
  if (n < 1) throw DomainError("pass@k requires n >= 1");
  if (k < 1 || k > n) throw DomainError("pass@k requires 1 <= k <= n");
  if (c < 0 || c > n) throw DomainError("pass@k requires 0 <= c <= n");
  if (c == 0) return 0.0;
  if (n - c < k) return 1.0;

  // Small cases: one correctly rounded division of exact integers.
  const auto total = ExactBinomial(n, k);
  if (total) {
    const auto none = *ExactBinomial(n - c, k);
    return static_cast<double>(*total - none) / static_cast<double>(*total);
  }
  // C(n-c,k)/C(n,k) = prod_{i=n-c+1}^{n} (1 - k/i)
  double miss = 1.0;
  for (int i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / i;
  return 1.0 - miss;
}

PassAtK MakePassAtK(int n, int c, int k) {
  return PassAtK{n, c, k, PassAtKValue(n, c, k)};
}

double CorpusPassRate(std::span<const PassAtK> per_problem) {
  if (per_problem.empty()) throw DomainError("corpus pass rate over an empty list");
  double sum = 0.0;
  for (const PassAtK& p : per_problem) sum += p.value;
  return sum / static_cast<double>(per_problem.size());
}

double CorpusPassRate(std::span<const double> per_problem) {
  if (per_problem.empty()) throw DomainError("corpus pass rate over an empty list");
  double sum = 0.0;
  for (double v : per_problem) sum += v;
  return sum / static_cast<double>(per_problem.size());
}

}  // namespace econ
