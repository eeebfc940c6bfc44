#pragma once

// Seeded mock corpora, scaling-curve grids, directional reproductions of the
// dynamic-switching and head-diversity ablations, and result files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "econ/backend.hpp"
#include "econ/core.hpp"
#include "econ/learn.hpp"
#include "econ/mock_backend.hpp"
#include "econ/orchestrate.hpp"

namespace econ::experiment {

// Non-CoT success probabilities drawn from Beta(alpha, beta); CoT adds a
// fixed uplift.
struct BetaCorpusConfig {
  int size = 244;
  double alpha = 2.0;
  double beta = 5.0;
  double cot_uplift = 0.1;
  std::int64_t len_noncot_mean = 443;
  std::int64_t len_cot_mean = 4488;
};

std::vector<Problem> MakeBetaCorpus(const BetaCorpusConfig& config, std::uint64_t seed);

// Three populations: base-solvable problems (Beta success, CoT uplift),
// problems only CoT can solve, and problems neither mode solves.
struct SwitchCorpusConfig {
  int size = 244;
  double solvable_fraction = 0.70;
  double cot_only_fraction = 0.08;
  double alpha = 2.0;
  double beta = 5.0;
  double cot_uplift = 0.1;
  double cot_only_low = 0.1;
  double cot_only_high = 0.3;
  std::int64_t len_noncot_mean = 443;
  std::int64_t len_cot_mean = 4488;
};

std::vector<Problem> MakeSwitchCorpus(const SwitchCorpusConfig& config, std::uint64_t seed);

// Problems in K difficulty levels. A level-d problem mostly needs strategy d;
// the base model picks strategies with weight decay^s.
struct StrategyEnvConfig {
  int num_strategies = 8;
  double base_decay = 0.6;
  double purity = 0.8;
  std::vector<double> level_success = {0.8, 0.65, 0.5, 0.38, 0.27, 0.18, 0.1, 0.04};
  std::vector<double> level_q_hit = {0.95, 0.9, 0.9, 0.9, 0.8, 0.7, 1.0, 0.5};
  int train_size = 1024;
  int eval_size = 244;

  void Validate() const;
};

struct StrategyEnvironment {
  StrategyEnvConfig config;
  std::vector<Problem> train;
  std::vector<Problem> eval;

  MockConfig MockSettings() const;
  // train followed by eval, for building one prover over both.
  std::vector<Problem> AllProblems() const;
};

StrategyEnvironment MakeStrategyEnvironment(const StrategyEnvConfig& config, std::uint64_t seed);

enum class GridMode { kNonCot, kCot, kDynamic };

std::string_view ToString(GridMode mode);
GridMode GridModeFromString(std::string_view text);

struct ScalingConfig {
  std::vector<int> pass_counts = {8, 16, 32, 64, 128};
  std::vector<GridMode> modes = {GridMode::kNonCot, GridMode::kCot, GridMode::kDynamic};
  std::vector<learn::HeadPolicy> heads;  // empty: base model
  int refine_rounds = 0;
  std::string corpus_id = "beta-244";
  std::uint64_t run_seed = 0;
  orchestrate::SwitchPolicy switch_policy;
  int max_inflight = 1;
  std::int64_t max_tokens = kDefaultMaxTokens;

  void Validate() const;
};

struct CurvePoint {
  std::string label;  // "<mode>@<k>"
  GridMode mode = GridMode::kNonCot;
  int k = 0;
  std::int64_t total_cost_tokens = 0;
  double accuracy = 0.0;
  bool failed = false;
  std::string error;
};

// One point per (mode, pass count). Each mode runs max(pass_counts) passes
// once; the k-cell reuses its first k passes for cost and estimates accuracy
// with the unbiased Pass@k over all passes. A mode that fails yields flagged
// points instead of aborting the grid.
// When ledgers is non-null it receives one ledger per successful mode.
std::vector<CurvePoint> RunScalingGrid(const ScalingConfig& config, std::span<const Problem> corpus,
                                       const Prover& prover, const Verifier& verifier,
                                       std::vector<orchestrate::RunLedger>* ledgers = nullptr);

// <stem>.csv (label,cost,accuracy) and <stem>.plot.csv
// (label,log10_cost,accuracy). Throws IoError when a file cannot be written.
void EmitResults(std::span<const CurvePoint> points, const std::filesystem::path& stem);

struct ModeRow {
  std::string label;
  double accuracy = 0.0;
  double mean_tokens = 0.0;
  double cot_rate = 0.0;
};

struct Table2Config {
  SwitchCorpusConfig corpus;
  int passes = 32;
  double target_cot_rate = 0.148;
  double noise_sigma = 0.2;
  // Skips calibration when set.
  std::optional<double> threshold;
  std::uint64_t seed = 0;
  int max_inflight = 1;
};

struct Table2Report {
  ModeRow noncot;
  ModeRow dynamic;
  ModeRow full_cot;
  double threshold = 0.0;
  double token_ratio = 0.0;  // dynamic / full CoT mean tokens
  bool accuracy_order = false;
  bool token_order = false;
  bool cot_rate_on_target = false;
  std::vector<std::string> diagnostics;

  bool Pass() const { return accuracy_order && token_order && cot_rate_on_target; }
};

Table2Report ReproduceTable2Shape(const Table2Config& config);
// Same comparison on a caller-supplied mock corpus.
Table2Report ReproduceTable2Shape(const Table2Config& config, std::span<const Problem> corpus);

struct HeadSetRow {
  std::string label;
  double pass8 = 0.0;
  double pass16 = 0.0;
  double cover8 = 0.0;
  int distinct_modes = 0;
  int heads_on_bin_majority = 0;
  std::vector<int> modal_strategies;
};

struct Table3Config {
  StrategyEnvConfig env;
  learn::PpoConfig ppo{.clip_eps = 0.2,
                       .learning_rate = 0.3,
                       .epochs_per_batch = 4,
                       .batch_size = 64,
                       .iterations = 200,
                       .n_heads = 8};
  int replicates = 16;
  int cover_attempts = 512;
  std::size_t cover_sample = 8;
  bool compare_sixteen_heads = false;
  std::uint64_t seed = 0;
  int max_inflight = 1;
};

struct Table3Report {
  HeadSetRow baseline;
  HeadSetRow random;
  HeadSetRow aware;
  std::optional<HeadSetRow> aware16;
  std::vector<learn::TrainedHead> aware_heads;
  std::vector<learn::TrainedHead> random_heads;
  bool pass16_order = false;  // aware > random > baseline
  bool aware_beats_random = false;
  bool aware_beats_baseline = false;
  bool cover_margin = false;  // aware cover8 - baseline >= 0.05

  bool Pass() const { return aware_beats_random && aware_beats_baseline && cover_margin; }
};

Table3Report ReproduceTable3Shape(const Table3Config& config);

}  // namespace econ::experiment
