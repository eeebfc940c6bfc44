#include "econ/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "econ/datapipe.hpp"
#include "econ/diversity.hpp"
#include "econ/errors.hpp"
#include "econ/parallel.hpp"

namespace econ::experiment {
namespace {

std::string MockStatement(const std::string& id) {
  return "theorem " + id + " (x : ℝ) (h₀ : 0 < x) : goal_" + id + " x := by";
}

Problem MakeProblem(std::string id, MockLatent latent) {
  Problem p;
  p.statement = MockStatement(id);
  p.id = std::move(id);
  p.latent = latent;
  return p;
}

}  // namespace

std::vector<Problem> MakeBetaCorpus(const BetaCorpusConfig& config, std::uint64_t seed) {
  if (config.size < 1) throw DomainError("corpus size must be >= 1");
  if (config.alpha <= 0 || config.beta <= 0) throw DomainError("Beta parameters must be positive");
  Rng rng(DeriveSeed(seed, "beta-corpus"));
  std::vector<Problem> out;
  out.reserve(static_cast<std::size_t>(config.size));
  for (int i = 0; i < config.size; ++i) {
    MockLatent latent;
    latent.p_noncot = rng.Beta(config.alpha, config.beta);
    latent.p_cot = std::min(1.0, latent.p_noncot + config.cot_uplift);
    latent.len_noncot_mean = config.len_noncot_mean;
    latent.len_cot_mean = config.len_cot_mean;
    out.push_back(MakeProblem(fmt::format("beta_{:04}", i), latent));
  }
  return out;
}

std::vector<Problem> MakeSwitchCorpus(const SwitchCorpusConfig& config, std::uint64_t seed) {
  if (config.size < 1) throw DomainError("corpus size must be >= 1");
  if (config.solvable_fraction < 0 || config.cot_only_fraction < 0 ||
      config.solvable_fraction + config.cot_only_fraction > 1.0) {
    throw DomainError("population fractions must be nonnegative and sum to at most 1");
  }
  const int solvable = static_cast<int>(std::lround(config.size * config.solvable_fraction));
  const int cot_only = static_cast<int>(std::lround(config.size * config.cot_only_fraction));
  Rng rng(DeriveSeed(seed, "switch-corpus"));
  std::vector<Problem> out;
  out.reserve(static_cast<std::size_t>(config.size));
  for (int i = 0; i < config.size; ++i) {
    MockLatent latent;
    latent.len_noncot_mean = config.len_noncot_mean;
    latent.len_cot_mean = config.len_cot_mean;
    if (i < solvable) {
      latent.p_noncot = rng.Beta(config.alpha, config.beta);
      latent.p_cot = std::min(1.0, latent.p_noncot + config.cot_uplift);
    } else if (i < solvable + cot_only) {
      latent.p_cot = config.cot_only_low + (config.cot_only_high - config.cot_only_low) * rng.Uniform();
    }
    out.push_back(MakeProblem(fmt::format("switch_{:04}", i), latent));
  }
  rng.Shuffle(out);
  return out;
}

void StrategyEnvConfig::Validate() const {
  if (num_strategies < 2) throw DomainError("environment needs at least 2 strategies");
  const auto k = static_cast<std::size_t>(num_strategies);
  if (level_success.size() != k || level_q_hit.size() != k) {
    throw DomainError("need one success target and one q_hit per strategy level");
  }
  if (!(purity >= 0 && purity <= 1)) throw DomainError("purity must lie in [0, 1]");
  if (!(base_decay > 0)) throw DomainError("base decay must be positive");
  if (train_size < num_strategies || eval_size < 1) throw DomainError("corpus sizes too small");
}

MockConfig StrategyEnvironment::MockSettings() const {
  MockConfig m;
  m.num_strategies = config.num_strategies;
  m.base_strategy_decay = config.base_decay;
  return m;
}

std::vector<Problem> StrategyEnvironment::AllProblems() const {
  std::vector<Problem> all = train;
  all.insert(all.end(), eval.begin(), eval.end());
  return all;
}

StrategyEnvironment MakeStrategyEnvironment(const StrategyEnvConfig& config, std::uint64_t seed) {
  config.Validate();
  const int k = config.num_strategies;
  const std::vector<double> base = BaseStrategyDistribution(k, config.base_decay);
  // q_miss per level makes a pure level-d problem hit its success target
  // under the base distribution.
  std::vector<double> q_miss(static_cast<std::size_t>(k));
  for (std::size_t d = 0; d < q_miss.size(); ++d) {
    q_miss[d] = std::max(0.0, (config.level_success[d] - base[d] * config.level_q_hit[d]) /
                                  (1.0 - base[d]));
    if (q_miss[d] > config.level_q_hit[d]) {
      throw DomainError(fmt::format("level {} success target exceeds its q_hit", d));
    }
  }
  Rng rng(DeriveSeed(seed, "strategy-env"));
  auto make = [&](int n, const char* tag) {
    std::vector<Problem> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int level = static_cast<int>(static_cast<std::int64_t>(i) * k / n);
      const auto d = static_cast<std::size_t>(level);
      MockLatent latent;
      latent.strategy_star = rng.Bernoulli(config.purity)
                                 ? level
                                 : static_cast<int>(rng.Below(static_cast<std::uint64_t>(k)));
      latent.q_hit = config.level_q_hit[d];
      latent.q_miss = q_miss[d];
      const double b = base[static_cast<std::size_t>(latent.strategy_star)];
      latent.p_noncot = b * latent.q_hit + (1.0 - b) * latent.q_miss;
      latent.p_cot = latent.p_noncot;
      out.push_back(MakeProblem(fmt::format("{}_{:04}", tag, i), latent));
    }
    return out;
  };
  StrategyEnvironment env;
  env.config = config;
  env.train = make(config.train_size, "train");
  env.eval = make(config.eval_size, "eval");
  return env;
}

std::string_view ToString(GridMode mode) {
  switch (mode) {
    case GridMode::kNonCot:
      return "noncot";
    case GridMode::kCot:
      return "cot";
    case GridMode::kDynamic:
      return "dynamic";
  }
  return "noncot";
}

GridMode GridModeFromString(std::string_view text) {
  if (text == "noncot") return GridMode::kNonCot;
  if (text == "cot") return GridMode::kCot;
  if (text == "dynamic") return GridMode::kDynamic;
  throw DomainError("unknown grid mode '" + std::string(text) + "'");
}

void ScalingConfig::Validate() const {
  if (pass_counts.empty()) throw DomainError("pass_counts must be nonempty");
  for (std::size_t i = 0; i < pass_counts.size(); ++i) {
    if (pass_counts[i] < 1) throw DomainError("pass counts must be >= 1");
    if (i > 0 && pass_counts[i] <= pass_counts[i - 1]) {
      throw DomainError("pass_counts must be strictly ascending");
    }
  }
  if (modes.empty()) throw DomainError("modes must be nonempty");
  if (refine_rounds < 0) throw DomainError("refinement rounds must be >= 0");
}

namespace {

orchestrate::ModeSource SourceFor(GridMode mode, const orchestrate::SwitchPolicy& policy) {
  switch (mode) {
    case GridMode::kNonCot:
      return orchestrate::ModeSource::Fixed(Mode::kNonCot);
    case GridMode::kCot:
      return orchestrate::ModeSource::Fixed(Mode::kCot);
    case GridMode::kDynamic:
      return orchestrate::ModeSource::Switch(policy);
  }
  return orchestrate::ModeSource::Fixed(Mode::kNonCot);
}

// Successes among each problem's passes, keyed in corpus order.
std::vector<int> SuccessCounts(std::span<const Problem> corpus, std::span<const Attempt> attempts,
                               std::int64_t first_k) {
  std::map<std::string, int, std::less<>> counts;
  for (const Attempt& a : attempts) {
    if (a.pass_index < first_k && a.solved()) ++counts[a.problem_id];
  }
  std::vector<int> out;
  out.reserve(corpus.size());
  for (const Problem& p : corpus) {
    auto it = counts.find(p.id);
    out.push_back(it == counts.end() ? 0 : it->second);
  }
  return out;
}

}  // namespace

std::vector<CurvePoint> RunScalingGrid(const ScalingConfig& config, std::span<const Problem> corpus,
                                       const Prover& prover, const Verifier& verifier,
                                       std::vector<orchestrate::RunLedger>* ledgers) {
  config.Validate();
  if (corpus.empty()) throw DomainError("scaling grid needs a nonempty corpus");
  const int n = config.pass_counts.back();
  std::vector<CurvePoint> points;
  for (GridMode mode : config.modes) {
    orchestrate::RunOptions options;
    options.run_seed = config.run_seed;
    options.max_inflight = config.max_inflight;
    options.max_tokens = config.max_tokens;
    options.refine_rounds = config.refine_rounds;
    std::vector<CurvePoint> cells;
    try {
      orchestrate::RunLedger ledger =
          orchestrate::RunCorpus(corpus, config.heads, n, SourceFor(mode, config.switch_policy),
                                 prover, verifier, options);
      const std::vector<int> counts = SuccessCounts(corpus, ledger.attempts, n);
      for (int k : config.pass_counts) {
        CurvePoint point;
        point.mode = mode;
        point.k = k;
        point.label = fmt::format("{}@{}", ToString(mode), k);
        for (const Attempt& a : ledger.attempts) {
          if (a.pass_index < k) {
            point.total_cost_tokens = CheckedTokenAdd(point.total_cost_tokens, AttemptCost(a));
          }
        }
        std::vector<double> values;
        values.reserve(counts.size());
        for (int c : counts) values.push_back(PassAtKValue(n, c, k));
        point.accuracy = CorpusPassRate(values);
        cells.push_back(std::move(point));
      }
      if (ledgers) ledgers->push_back(std::move(ledger));
    } catch (const std::exception& e) {
      cells.clear();
      for (int k : config.pass_counts) {
        CurvePoint point;
        point.mode = mode;
        point.k = k;
        point.label = fmt::format("{}@{}", ToString(mode), k);
        point.failed = true;
        point.error = e.what();
        cells.push_back(std::move(point));
      }
    }
    points.insert(points.end(), cells.begin(), cells.end());
  }
  return points;
}

void EmitResults(std::span<const CurvePoint> points, const std::filesystem::path& stem) {
  if (points.empty()) throw DomainError("no curve points to emit");
  const std::filesystem::path csv_path = stem.string() + ".csv";
  const std::filesystem::path plot_path = stem.string() + ".plot.csv";
  std::string csv = "label,cost,accuracy\n";
  std::string plot = "label,log10_cost,accuracy\n";
  for (const CurvePoint& p : points) {
    if (p.failed) {
      csv += fmt::format("{},,\n", p.label);
      plot += fmt::format("{},,\n", p.label);
      continue;
    }
    if (p.total_cost_tokens <= 0) throw DomainError("curve point '" + p.label + "' has no cost");
    csv += fmt::format("{},{},{:.6f}\n", p.label, p.total_cost_tokens, p.accuracy);
    plot += fmt::format("{},{:.5f},{:.6f}\n", p.label,
                        std::log10(static_cast<double>(p.total_cost_tokens)), p.accuracy);
  }
  for (const auto& [path, body] : {std::pair{csv_path, &csv}, std::pair{plot_path, &plot}}) {
    std::ofstream out(path, std::ios::binary);
    out << *body;
    if (!out) throw IoError("cannot write " + path.string());
  }
}

namespace {

ModeRow RowFor(const std::string& label, const orchestrate::RunLedger& ledger) {
  ModeRow row;
  row.label = label;
  row.accuracy = ledger.Accuracy();
  row.mean_tokens = static_cast<double>(ledger.cost.total_tokens) /
                    static_cast<double>(std::max<std::int64_t>(1, ledger.cost.passes));
  row.cot_rate = ledger.cot_rate;
  return row;
}

}  // namespace

Table2Report ReproduceTable2Shape(const Table2Config& config) {
  const std::vector<Problem> corpus =
      MakeSwitchCorpus(config.corpus, DeriveSeed(config.seed, "corpus"));
  return ReproduceTable2Shape(config, corpus);
}

Table2Report ReproduceTable2Shape(const Table2Config& config, std::span<const Problem> corpus) {
  if (corpus.empty()) throw DomainError("table 2 reproduction needs a corpus");
  MockProver prover(corpus);
  MockVerifier verifier;
  Table2Report report;
  report.threshold = config.threshold.value_or(0.0);
  if (!config.threshold) {
    report.threshold =
        orchestrate::CalibrateThreshold(config.noise_sigma, corpus, config.passes,
                                        config.target_cot_rate, DeriveSeed(config.seed, "calibrate"));
  }
  orchestrate::RunOptions options;
  options.run_seed = DeriveSeed(config.seed, "run");
  options.max_inflight = config.max_inflight;
  const orchestrate::SwitchPolicy policy{report.threshold, config.noise_sigma};

  using orchestrate::ModeSource;
  report.noncot = RowFor("noncot", orchestrate::RunCorpus(corpus, {}, config.passes,
                                                          ModeSource::Fixed(Mode::kNonCot), prover,
                                                          verifier, options));
  report.dynamic = RowFor("dynamic", orchestrate::RunCorpus(corpus, {}, config.passes,
                                                            ModeSource::Switch(policy), prover,
                                                            verifier, options));
  report.full_cot = RowFor("full_cot", orchestrate::RunCorpus(corpus, {}, config.passes,
                                                              ModeSource::Fixed(Mode::kCot),
                                                              prover, verifier, options));
  report.token_ratio = report.dynamic.mean_tokens / report.full_cot.mean_tokens;
  report.accuracy_order = report.noncot.accuracy < report.dynamic.accuracy &&
                          report.dynamic.accuracy <= report.full_cot.accuracy;
  report.token_order = report.noncot.mean_tokens < report.dynamic.mean_tokens &&
                       report.token_ratio < 0.30;
  report.cot_rate_on_target = std::abs(report.dynamic.cot_rate - config.target_cot_rate) <= 0.01;
  if (!report.accuracy_order) {
    report.diagnostics.push_back(fmt::format(
        "accuracy ordering failed: noncot {:.4f}, dynamic {:.4f}, full_cot {:.4f}",
        report.noncot.accuracy, report.dynamic.accuracy, report.full_cot.accuracy));
  }
  if (!report.token_order) {
    report.diagnostics.push_back(fmt::format(
        "token ordering failed: noncot {:.1f}, dynamic {:.1f}, full_cot {:.1f} (ratio {:.4f})",
        report.noncot.mean_tokens, report.dynamic.mean_tokens, report.full_cot.mean_tokens,
        report.token_ratio));
  }
  if (!report.cot_rate_on_target) {
    report.diagnostics.push_back(fmt::format("CoT rate {:.4f} misses target {:.4f} by more than 0.01",
                                             report.dynamic.cot_rate, config.target_cot_rate));
  }
  return report;
}

namespace {

struct HeadSetContext {
  const StrategyEnvironment& env;
  const MockProver& prover;
  const MockVerifier& verifier;
  const Table3Config& config;
};

std::vector<learn::HeadPolicy> Policies(std::span<const learn::TrainedHead> heads) {
  std::vector<learn::HeadPolicy> out;
  for (const auto& h : heads) out.push_back(h.policy);
  return out;
}

HeadSetRow Evaluate(const HeadSetContext& ctx, const std::string& label,
                    std::span<const learn::HeadPolicy> heads) {
  HeadSetRow row;
  row.label = label;
  const std::uint64_t eval_seed = DeriveSeed(ctx.config.seed, "evaluate");
  const auto source = orchestrate::ModeSource::Fixed(Mode::kNonCot);
  double solved8 = 0.0, solved16 = 0.0;
  for (int r = 0; r < ctx.config.replicates; ++r) {
    orchestrate::RunOptions options;
    options.run_seed = DeriveSeed(eval_seed, static_cast<std::uint64_t>(r));
    options.max_inflight = ctx.config.max_inflight;
    const auto ledger =
        orchestrate::RunCorpus(ctx.env.eval, heads, 16, source, ctx.prover, ctx.verifier, options);
    for (int c : SuccessCounts(ctx.env.eval, ledger.attempts, 8)) solved8 += c > 0 ? 1.0 : 0.0;
    for (int c : SuccessCounts(ctx.env.eval, ledger.attempts, 16)) solved16 += c > 0 ? 1.0 : 0.0;
  }
  const double denom = static_cast<double>(ctx.config.replicates) *
                       static_cast<double>(ctx.env.eval.size());
  row.pass8 = solved8 / denom;
  row.pass16 = solved16 / denom;

  orchestrate::RunOptions options;
  options.run_seed = DeriveSeed(ctx.config.seed, "cover");
  options.max_inflight = ctx.config.max_inflight;
  const auto ledger = orchestrate::RunCorpus(ctx.env.eval, heads, ctx.config.cover_attempts,
                                             source, ctx.prover, ctx.verifier, options);
  std::vector<diversity::PrefixProfile> profiles(ctx.env.eval.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    profiles[i].problem_id = ctx.env.eval[i].id;
    profiles[i].reference_size = static_cast<std::size_t>(ctx.config.cover_attempts);
    profiles[i].attempts.reserve(static_cast<std::size_t>(ctx.config.cover_attempts));
  }
  const std::size_t per_problem = static_cast<std::size_t>(ctx.config.cover_attempts);
  for (std::size_t a = 0; a < ledger.attempts.size(); ++a) {
    profiles[a / per_problem].attempts.push_back(ledger.attempts[a].token_stream);
  }
  row.cover8 = diversity::MeanPdc(profiles, ctx.config.cover_sample);

  std::set<int> modes;
  for (const auto& h : heads) {
    row.modal_strategies.push_back(h.ModalStrategy());
    modes.insert(h.ModalStrategy());
  }
  row.distinct_modes = static_cast<int>(modes.size());
  return row;
}

int CountOnMajority(std::span<const learn::TrainedHead> heads,
                    std::span<const datapipe::Bin> bins, const StrategyEnvironment& env) {
  std::map<std::string, int, std::less<>> star;
  for (const Problem& p : env.train) star[p.id] = p.latent->strategy_star;
  int good = 0;
  for (const auto& h : heads) {
    const auto& bin = bins[static_cast<std::size_t>(h.shard_index)];
    std::vector<int> tally(static_cast<std::size_t>(env.config.num_strategies), 0);
    for (const auto& profile : bin) ++tally[static_cast<std::size_t>(star[profile.problem_id])];
    const auto majority = std::max_element(tally.begin(), tally.end()) - tally.begin();
    if (h.policy.Probabilities()[static_cast<std::size_t>(majority)] > 0.5) ++good;
  }
  return good;
}

struct TrainedSet {
  std::vector<datapipe::Bin> bins;
  std::vector<learn::TrainedHead> heads;
};

TrainedSet TrainSet(const HeadSetContext& ctx, std::span<const datapipe::DifficultyProfile> profiles,
                    int n_heads, bool difficulty_aware) {
  const std::uint64_t seed = DeriveSeed(ctx.config.seed, difficulty_aware ? "aware" : "random");
  TrainedSet set;
  if (difficulty_aware) {
    set.bins = datapipe::PartitionBins(profiles, n_heads);
  } else {
    Rng bin_rng(DeriveSeed(seed, "bins"));
    set.bins = datapipe::RandomBins(profiles, n_heads, bin_rng);
  }
  Rng shard_rng(DeriveSeed(seed, "shards"));
  std::vector<datapipe::Shard> shards;
  for (int i = 0; i < n_heads; ++i) {
    shards.push_back(datapipe::BuildShard(
        i, set.bins, static_cast<int>(set.bins[static_cast<std::size_t>(i)].size()), shard_rng));
  }
  learn::PpoConfig ppo = ctx.config.ppo;
  ppo.n_heads = n_heads;
  learn::TrainOptions options;
  options.run_seed = DeriveSeed(ctx.config.seed, "train");
  options.max_inflight = ctx.config.max_inflight;
  options.num_strategies = ctx.env.config.num_strategies;
  set.heads = learn::TrainHeads(shards, ctx.env.train, ctx.prover, ctx.verifier, ppo, options);
  return set;
}

}  // namespace

Table3Report ReproduceTable3Shape(const Table3Config& config) {
  if (config.replicates < 1) throw DomainError("need at least one replicate");
  if (config.cover_attempts < static_cast<int>(config.cover_sample)) {
    throw DomainError("cover attempts must be at least the cover sample size");
  }
  const StrategyEnvironment env = MakeStrategyEnvironment(config.env, config.seed);
  const std::vector<Problem> all = env.AllProblems();
  const MockProver prover(all, env.MockSettings());
  const MockVerifier verifier;
  const HeadSetContext ctx{env, prover, verifier, config};

  datapipe::MeasureOptions measure;
  measure.run_seed = DeriveSeed(config.seed, "difficulty");
  measure.max_inflight = config.max_inflight;
  const auto profiles = datapipe::MeasureCorpus(env.train, prover, verifier, measure);

  Table3Report report;
  const int n = config.ppo.n_heads;
  TrainedSet aware = TrainSet(ctx, profiles, n, true);
  TrainedSet random = TrainSet(ctx, profiles, n, false);
  report.baseline = Evaluate(ctx, "baseline", {});
  report.random = Evaluate(ctx, "random", Policies(random.heads));
  report.random.heads_on_bin_majority = CountOnMajority(random.heads, random.bins, env);
  report.aware = Evaluate(ctx, "difficulty_aware", Policies(aware.heads));
  report.aware.heads_on_bin_majority = CountOnMajority(aware.heads, aware.bins, env);
  if (config.compare_sixteen_heads) {
    TrainedSet aware16 = TrainSet(ctx, profiles, 16, true);
    report.aware16 = Evaluate(ctx, "difficulty_aware_16", Policies(aware16.heads));
    report.aware16->heads_on_bin_majority = CountOnMajority(aware16.heads, aware16.bins, env);
  }
  report.aware_heads = std::move(aware.heads);
  report.random_heads = std::move(random.heads);
  report.aware_beats_random = report.aware.pass16 > report.random.pass16;
  report.aware_beats_baseline = report.aware.pass16 > report.baseline.pass16;
  report.pass16_order = report.aware_beats_random && report.random.pass16 > report.baseline.pass16;
  report.cover_margin = report.aware.cover8 - report.baseline.cover8 >= 0.05;
  return report;
}

}  // namespace econ::experiment
