#pragma once

// Difficulty measurement, bin partitioning, training-shard construction,
// complexity classification and preference-dataset assembly.

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "econ/backend.hpp"
#include "econ/core.hpp"
#include "econ/rng.hpp"

namespace econ::datapipe {

inline constexpr int kDifficultyBudget = 32;

struct MeasureOptions {
  int budget = kDifficultyBudget;
  std::uint64_t run_seed = 0;
  int max_inflight = 1;
  std::int64_t max_tokens = kDefaultMaxTokens;
};

struct DifficultyProfile {
  std::string problem_id;
  int c = 0;    // Pass verdicts out of the budget
  int bin = 0;  // 1-based, 0 until partitioned

  friend bool operator==(const DifficultyProfile&, const DifficultyProfile&) = default;
};

// Runs exactly `budget` Non-CoT attempts. Any attempt the backend could not
// complete discards the partial count and throws BackendError.
DifficultyProfile MeasureDifficulty(const Problem& problem, const Prover& prover,
                                    const Verifier& verifier, const MeasureOptions& options);

std::vector<DifficultyProfile> MeasureCorpus(std::span<const Problem> corpus, const Prover& prover,
                                             const Verifier& verifier,
                                             const MeasureOptions& options);

using Bin = std::vector<DifficultyProfile>;

// Sort by c descending (ties: id ascending) and cut into n contiguous bins
// whose sizes differ by at most one, larger bins first. B_1 is the easiest.
std::vector<Bin> PartitionBins(std::span<const DifficultyProfile> profiles, int n);

// Same bin sizes as PartitionBins, but membership is a seeded shuffle.
std::vector<Bin> RandomBins(std::span<const DifficultyProfile> profiles, int n, Rng& rng);

struct Shard {
  int index = 0;  // 0-based bin index
  std::vector<std::string> problem_ids;
  int own_bin_count = 0;
  int other_bin_count = 0;
};

// ceil(size/2) problems from bins[index], floor(size/2) from the other bins,
// each drawn uniformly without replacement.
Shard BuildShard(int index, std::span<const Bin> bins, int shard_size, Rng& rng);

enum class ComplexityClass { kNonCotSolvable, kCotDependent };

std::string_view ToString(ComplexityClass cls);  // "noncot_solvable" | "cot_dependent"
ComplexityClass ComplexityClassFromString(std::string_view text);

// NonCotSolvable iff at least one of the budgeted Non-CoT attempts passes.
ComplexityClass ClassifyProblem(const Problem& problem, const Prover& prover,
                                const Verifier& verifier, const MeasureOptions& options);
ComplexityClass ClassifyFromCount(int c);

std::string RenderDynamicCotPrompt(const std::string& statement);

struct PreferenceExample {
  std::string prompt;
  std::string chosen;    // y_w
  std::string rejected;  // y_l
  ComplexityClass cls = ComplexityClass::kNonCotSolvable;
};

// Direct proof preferred for NonCotSolvable, CoT answer preferred otherwise.
PreferenceExample BuildPreferencePair(const Problem& problem, ComplexityClass cls,
                                      const std::string& direct_proof,
                                      const std::string& cot_answer);

struct DatasetComposition {
  int total = 15000;
  double noncot_ratio = 0.40;
};

// Subsample per class to round(total * ratio) / remainder, shrinking the
// total (largest feasible) when a class runs short, then shuffle.
std::vector<PreferenceExample> ComposeDataset(std::span<const PreferenceExample> pairs,
                                              const DatasetComposition& composition, Rng& rng);

// {"chosen","class","prompt","rejected"} per line.
void WritePreferenceDataset(std::ostream& out, std::span<const PreferenceExample> dataset);
std::vector<PreferenceExample> ReadPreferenceDataset(std::istream& in);

// One problem per line: {"id","statement"} plus optional "difficulty_tag"
// and "latent" (mock ground truth).
void WriteCorpus(std::ostream& out, std::span<const Problem> corpus);
std::vector<Problem> ReadCorpus(std::istream& in);

// {"index","other_bin_count","own_bin_count","problem_ids"} per line.
void WriteShards(std::ostream& out, std::span<const Shard> shards);
std::vector<Shard> ReadShards(std::istream& in);

// problem_id,c,bin
void WriteDifficultyCsv(std::ostream& out, std::span<const DifficultyProfile> profiles);
std::vector<DifficultyProfile> ReadDifficultyCsv(std::istream& in);

}  // namespace econ::datapipe
