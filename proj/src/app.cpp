#include "econ/app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "econ/config.hpp"
#include "econ/datapipe.hpp"
#include "econ/diversity.hpp"
#include "econ/errors.hpp"
#include "econ/experiment.hpp"
#include "econ/learn.hpp"
#include "econ/mock_backend.hpp"
#include "econ/orchestrate.hpp"
#include "econ/remote_backend.hpp"
#include "econ/wire.hpp"

namespace econ {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  std::string out_dir = "out";
  int max_inflight = 1;
  std::optional<std::uint64_t> seed;
  bool require_seed = false;
  std::string pass_counts;
  std::vector<std::string> sets;
};

struct Context {
  RunConfig config;
  fs::path out_dir;
  int max_inflight = 1;
  std::ostream& out;
  std::ostream& err;
};

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Fn>
void WriteFile(const fs::path& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw IoError("cannot write " + path.string());
}

struct Workload {
  std::vector<Problem> problems;  // problems the subcommand operates on
  std::vector<Problem> all;       // everything the mock prover must know
  MockConfig mock;
};

Workload LoadWorkload(const RunConfig& config, bool evaluation) {
  Workload w;
  if (!config.corpus.empty()) {
    std::ifstream in(config.corpus, std::ios::binary);
    if (!in) throw IoError("cannot read corpus " + config.corpus);
    w.problems = datapipe::ReadCorpus(in);
    w.all = w.problems;
    return w;
  }
  const std::uint64_t seed = DeriveSeed(config.Seed(), "corpus");
  if (config.corpus_id == "beta-244") {
    w.problems = experiment::MakeBetaCorpus({}, seed);
  } else if (config.corpus_id == "switch-244") {
    w.problems = experiment::MakeSwitchCorpus({}, seed);
  } else {
    experiment::StrategyEnvironment env = experiment::MakeStrategyEnvironment({}, seed);
    w.mock = env.MockSettings();
    w.all = env.AllProblems();
    w.problems = evaluation ? env.eval : env.train;
    return w;
  }
  w.all = w.problems;
  return w;
}

struct Backends {
  std::unique_ptr<Prover> prover;
  std::unique_ptr<Verifier> verifier;
};

Backends MakeBackends(const Context& ctx, const Workload& w) {
  Backends b;
  if (ctx.config.backend == BackendKind::kMock) {
    b.prover = std::make_unique<MockProver>(w.all, w.mock);
    b.verifier = std::make_unique<MockVerifier>();
  } else {
    RemoteOptions options;
    options.base_url = ctx.config.remote_url;
    options.max_inflight = ctx.max_inflight;
    b.prover = std::make_unique<RemoteProver>(options);
    b.verifier = std::make_unique<RemoteVerifier>(options);
  }
  return b;
}

datapipe::MeasureOptions MeasureFor(const Context& ctx) {
  datapipe::MeasureOptions m;
  m.budget = ctx.config.difficulty_budget;
  m.run_seed = DeriveSeed(ctx.config.Seed(), "difficulty");
  m.max_inflight = ctx.max_inflight;
  m.max_tokens = ctx.config.max_tokens;
  return m;
}

learn::PpoConfig PpoFor(const RunConfig& c) {
  learn::PpoConfig p;
  p.clip_eps = c.clip_eps;
  p.learning_rate = c.learning_rate;
  p.epochs_per_batch = c.epochs_per_batch;
  p.batch_size = c.batch_size;
  p.iterations = c.iterations;
  p.n_heads = c.n_heads;
  return p;
}

std::vector<learn::HeadPolicy> LoadHeads(const std::string& path) {
  std::vector<learn::HeadPolicy> heads;
  if (path.empty()) return heads;
  std::istringstream in(ReadFile(path));
  for (auto& h : learn::ReadHeads(in)) heads.push_back(std::move(h.policy));
  std::sort(heads.begin(), heads.end(),
            [](const auto& a, const auto& b) { return a.head_id < b.head_id; });
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i].head_id != static_cast<int>(i)) throw DomainError("head ids must be 0..n-1");
  }
  return heads;
}

void CmdMeasure(Context& ctx) {
  const Workload w = LoadWorkload(ctx.config, false);
  const Backends b = MakeBackends(ctx, w);
  const auto profiles = datapipe::MeasureCorpus(w.problems, *b.prover, *b.verifier, MeasureFor(ctx));
  WriteFile(ctx.out_dir / "difficulty.csv",
            [&](std::ostream& o) { datapipe::WriteDifficultyCsv(o, profiles); });
  ctx.err << fmt::format("measured {} problems with {} attempts each\n", profiles.size(),
                         ctx.config.difficulty_budget);
}

struct Partitioned {
  std::vector<datapipe::Bin> bins;
  std::vector<datapipe::Shard> shards;
};

Partitioned Partition(const Context& ctx, std::span<const datapipe::DifficultyProfile> profiles,
                      bool random) {
  Partitioned p;
  const std::uint64_t seed = DeriveSeed(ctx.config.Seed(), random ? "random" : "aware");
  if (random) {
    Rng rng(DeriveSeed(seed, "bins"));
    p.bins = datapipe::RandomBins(profiles, ctx.config.n_heads, rng);
  } else {
    p.bins = datapipe::PartitionBins(profiles, ctx.config.n_heads);
  }
  Rng shard_rng(DeriveSeed(seed, "shards"));
  for (int i = 0; i < ctx.config.n_heads; ++i) {
    p.shards.push_back(datapipe::BuildShard(
        i, p.bins, static_cast<int>(p.bins[static_cast<std::size_t>(i)].size()), shard_rng));
  }
  return p;
}

void WritePartition(const Context& ctx, const Partitioned& p) {
  std::vector<datapipe::DifficultyProfile> flat;
  for (const auto& bin : p.bins) flat.insert(flat.end(), bin.begin(), bin.end());
  WriteFile(ctx.out_dir / "bins.csv", [&](std::ostream& o) { datapipe::WriteDifficultyCsv(o, flat); });
  WriteFile(ctx.out_dir / "shards.jsonl", [&](std::ostream& o) { datapipe::WriteShards(o, p.shards); });
}

void CmdPartition(Context& ctx, const std::string& input, bool random) {
  const fs::path path = input.empty() ? ctx.out_dir / "difficulty.csv" : fs::path(input);
  std::istringstream in(ReadFile(path));
  const auto profiles = datapipe::ReadDifficultyCsv(in);
  WritePartition(ctx, Partition(ctx, profiles, random));
  ctx.err << fmt::format("partitioned {} problems into {} bins\n", profiles.size(), ctx.config.n_heads);
}

void CmdBuildPrefs(Context& ctx) {
  const Workload w = LoadWorkload(ctx.config, false);
  const Backends b = MakeBackends(ctx, w);
  const auto profiles = datapipe::MeasureCorpus(w.problems, *b.prover, *b.verifier, MeasureFor(ctx));
  const std::uint64_t seed = DeriveSeed(ctx.config.Seed(), "responses");
  std::vector<datapipe::PreferenceExample> pairs;
  int degenerate = 0;
  for (std::size_t i = 0; i < w.problems.size(); ++i) {
    const Problem& p = w.problems[i];
    auto generate = [&](Mode mode) {
      ProverRequest r;
      r.problem_id = p.id;
      r.statement = p.statement;
      r.mode_hint = mode;
      r.max_tokens = ctx.config.max_tokens;
      r.seed = SeedPath{seed, p.id, std::nullopt, 0}.Seed();
      return b.prover->Prove(r).text;
    };
    try {
      pairs.push_back(datapipe::BuildPreferencePair(
          p, datapipe::ClassifyFromCount(profiles[i].c), generate(Mode::kNonCot), generate(Mode::kCot)));
    } catch (const DomainError&) {
      ++degenerate;
    }
  }
  Rng rng(DeriveSeed(ctx.config.Seed(), "compose"));
  const auto dataset = datapipe::ComposeDataset(
      pairs, {ctx.config.dataset_total, ctx.config.noncot_ratio}, rng);
  WriteFile(ctx.out_dir / "prefs.jsonl",
            [&](std::ostream& o) { datapipe::WritePreferenceDataset(o, dataset); });
  ctx.err << fmt::format("{} pairs built, {} degenerate skipped, {} composed\n", pairs.size(),
                         degenerate, dataset.size());
}

void CmdTrainHeads(Context& ctx, bool random) {
  const Workload w = LoadWorkload(ctx.config, false);
  const Backends b = MakeBackends(ctx, w);
  const auto profiles = datapipe::MeasureCorpus(w.problems, *b.prover, *b.verifier, MeasureFor(ctx));
  WriteFile(ctx.out_dir / "difficulty.csv",
            [&](std::ostream& o) { datapipe::WriteDifficultyCsv(o, profiles); });
  const Partitioned part = Partition(ctx, profiles, random);
  WritePartition(ctx, part);
  learn::TrainOptions options;
  options.run_seed = DeriveSeed(ctx.config.Seed(), "train");
  options.max_inflight = ctx.max_inflight;
  options.max_tokens = ctx.config.max_tokens;
  options.num_strategies = w.mock.num_strategies;
  const auto heads =
      learn::TrainHeads(part.shards, w.problems, *b.prover, *b.verifier, PpoFor(ctx.config), options);
  WriteFile(ctx.out_dir / "heads.jsonl", [&](std::ostream& o) { learn::WriteHeads(o, heads); });
  WriteFile(ctx.out_dir / "telemetry.csv",
            [&](std::ostream& o) { learn::WriteTelemetryCsv(o, heads); });
  for (const auto& h : heads) {
    ctx.err << fmt::format("head {}: modal strategy {}, final mean reward {:.4f}\n",
                           h.policy.head_id, h.policy.ModalStrategy(), h.final_mean_reward);
  }
}

void CmdAnalyzePdc(Context& ctx, const std::string& heads_path) {
  const Workload w = LoadWorkload(ctx.config, true);
  const Backends b = MakeBackends(ctx, w);
  const auto heads = LoadHeads(heads_path);
  orchestrate::RunOptions options;
  options.run_seed = DeriveSeed(ctx.config.Seed(), "pdc");
  options.max_inflight = ctx.max_inflight;
  options.max_tokens = ctx.config.max_tokens;
  const auto k = static_cast<int>(ctx.config.reference_size);
  const auto ledger = orchestrate::RunCorpus(w.problems, heads, k,
                                             orchestrate::ModeSource::Fixed(Mode::kNonCot),
                                             *b.prover, *b.verifier, options);
  std::vector<std::size_t> sizes;
  for (std::size_t s = 1; s < ctx.config.reference_size; s *= 2) sizes.push_back(s);
  sizes.push_back(ctx.config.reference_size);
  std::vector<std::string> ids;
  std::vector<diversity::CoverageCurve> curves;
  std::vector<diversity::PrefixProfile> profiles;
  for (std::size_t i = 0; i < w.problems.size(); ++i) {
    diversity::PrefixProfile profile;
    profile.problem_id = w.problems[i].id;
    profile.prefix_len = ctx.config.prefix_len;
    profile.ngram = ctx.config.ngram;
    profile.reference_size = ctx.config.reference_size;
    for (std::size_t a = 0; a < ctx.config.reference_size; ++a) {
      profile.attempts.push_back(ledger.attempts[i * ctx.config.reference_size + a].token_stream);
    }
    ids.push_back(profile.problem_id);
    curves.push_back(diversity::PdcCurve(profile, sizes));
    profiles.push_back(std::move(profile));
  }
  WriteFile(ctx.out_dir / "coverage.csv",
            [&](std::ostream& o) { diversity::WriteCoverageCsv(o, ids, curves); });
  const std::size_t s = std::min<std::size_t>(8, ctx.config.reference_size);
  ctx.out << fmt::format("mean PDC@{} = {:.6f}\n", s, diversity::MeanPdc(profiles, s));
}

void CmdRunGrid(Context& ctx, const std::string& heads_path) {
  const Workload w = LoadWorkload(ctx.config, true);
  const Backends b = MakeBackends(ctx, w);
  experiment::ScalingConfig grid;
  grid.pass_counts = ctx.config.pass_counts;
  grid.modes.clear();
  for (const std::string& m : ctx.config.modes) grid.modes.push_back(experiment::GridModeFromString(m));
  grid.heads = LoadHeads(heads_path);
  grid.refine_rounds = ctx.config.refine ? ctx.config.refine_rounds : 0;
  grid.corpus_id = ctx.config.corpus.empty() ? ctx.config.corpus_id : ctx.config.corpus;
  grid.run_seed = DeriveSeed(ctx.config.Seed(), "grid");
  grid.max_inflight = ctx.max_inflight;
  grid.max_tokens = ctx.config.max_tokens;
  grid.switch_policy.noise_sigma = ctx.config.noise_sigma;
  if (std::find(grid.modes.begin(), grid.modes.end(), experiment::GridMode::kDynamic) !=
      grid.modes.end()) {
    grid.switch_policy.threshold = orchestrate::CalibrateThreshold(
        ctx.config.noise_sigma, w.problems, grid.pass_counts.back(), ctx.config.target_cot_rate,
        DeriveSeed(ctx.config.Seed(), "calibrate"));
  }
  std::vector<orchestrate::RunLedger> ledgers;
  const auto points = experiment::RunScalingGrid(grid, w.problems, *b.prover, *b.verifier, &ledgers);
  experiment::EmitResults(points, ctx.out_dir / "grid");
  WriteFile(ctx.out_dir / "attempts.jsonl", [&](std::ostream& o) {
    for (const auto& l : ledgers) orchestrate::WriteAttemptRecords(o, l.attempts);
  });
  WriteFile(ctx.out_dir / "ledger.csv", [&](std::ostream& o) {
    orchestrate::WriteLedgerSummaryHeader(o);
    std::size_t li = 0;
    for (experiment::GridMode mode : grid.modes) {
      const bool failed = std::any_of(points.begin(), points.end(), [&](const auto& p) {
        return p.mode == mode && p.failed;
      });
      if (failed) continue;
      orchestrate::WriteLedgerSummaryRow(o, std::string(experiment::ToString(mode)), ledgers[li++]);
    }
  });
  for (const auto& p : points) {
    if (p.failed) {
      ctx.err << fmt::format("cell {} failed: {}\n", p.label, p.error);
    } else {
      ctx.out << fmt::format("{:<14} cost {:>12} accuracy {:.4f}\n", p.label, p.total_cost_tokens,
                             p.accuracy);
    }
  }
}

bool CmdTable2(Context& ctx) {
  experiment::Table2Config c;
  c.seed = ctx.config.Seed();
  c.target_cot_rate = ctx.config.target_cot_rate;
  c.noise_sigma = ctx.config.noise_sigma;
  c.max_inflight = ctx.max_inflight;
  const auto r = experiment::ReproduceTable2Shape(c);
  WriteFile(ctx.out_dir / "table2.csv", [&](std::ostream& o) {
    o << "label,accuracy,mean_tokens,cot_rate\n";
    for (const auto* row : {&r.noncot, &r.dynamic, &r.full_cot}) {
      o << fmt::format("{},{:.6f},{:.3f},{:.6f}\n", row->label, row->accuracy, row->mean_tokens,
                       row->cot_rate);
    }
  });
  for (const auto* row : {&r.noncot, &r.dynamic, &r.full_cot}) {
    ctx.out << fmt::format("{:<9} accuracy {:.4f} mean tokens {:>8.1f} CoT rate {:.4f}\n",
                           row->label, row->accuracy, row->mean_tokens, row->cot_rate);
  }
  ctx.out << fmt::format("threshold {:.6f}, dynamic/full token ratio {:.4f}\n", r.threshold,
                         r.token_ratio);
  for (const auto& d : r.diagnostics) ctx.err << d << '\n';
  ctx.out << (r.Pass() ? "PASS" : "FAIL") << '\n';
  return r.Pass();
}

bool CmdTable3(Context& ctx) {
  experiment::Table3Config c;
  c.seed = ctx.config.Seed();
  c.ppo = PpoFor(ctx.config);
  c.replicates = ctx.config.replicates;
  c.cover_attempts = static_cast<int>(ctx.config.reference_size);
  c.max_inflight = ctx.max_inflight;
  const auto r = experiment::ReproduceTable3Shape(c);
  WriteFile(ctx.out_dir / "table3.csv", [&](std::ostream& o) {
    o << "label,pass8,pass16,cover8,distinct_modes,heads_on_bin_majority\n";
    for (const auto* row : {&r.baseline, &r.random, &r.aware}) {
      o << fmt::format("{},{:.6f},{:.6f},{:.6f},{},{}\n", row->label, row->pass8, row->pass16,
                       row->cover8, row->distinct_modes, row->heads_on_bin_majority);
    }
  });
  WriteFile(ctx.out_dir / "heads_aware.jsonl",
            [&](std::ostream& o) { learn::WriteHeads(o, r.aware_heads); });
  WriteFile(ctx.out_dir / "heads_random.jsonl",
            [&](std::ostream& o) { learn::WriteHeads(o, r.random_heads); });
  for (const auto* row : {&r.baseline, &r.random, &r.aware}) {
    ctx.out << fmt::format("{:<17} Pass@8 {:.4f} Pass@16 {:.4f} Cover@8 {:.4f}\n", row->label,
                           row->pass8, row->pass16, row->cover8);
  }
  ctx.out << (r.Pass() ? "PASS" : "FAIL") << '\n';
  return r.Pass();
}

void CmdEmitFixtures(Context& ctx) {
  ProverRequest request;
  request.problem_id = "mathd_algebra_10";
  request.statement = "theorem mathd_algebra_10 : abs ((120 : ℝ) / 100 * 30 - 130 / 100 * 20) = 10 := by";
  request.mode_hint = Mode::kNonCot;
  request.max_tokens = 32768;
  request.seed = 42;
  WriteFile(ctx.out_dir / "prove_request.golden.json",
            [&](std::ostream& o) { o << wire::EncodeProveRequest(request) << '\n'; });
  const Workload w = LoadWorkload(ctx.config, false);
  WriteFile(ctx.out_dir / "corpus.jsonl", [&](std::ostream& o) { datapipe::WriteCorpus(o, w.problems); });
}

void WriteManifest(const Context& ctx, const std::string& command) {
  WriteFile(ctx.out_dir / "manifest.txt", [&](std::ostream& o) {
    o << "# econprove " << command << '\n' << RenderConfig(ctx.config);
  });
}

}  // namespace

int RunApp(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Economical test-time scaling toolkit for theorem provers", "econprove"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--out-dir", g.out_dir, "directory for all output files");
  app.add_option("--max-inflight", g.max_inflight, "concurrent attempts")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "run seed (overrides run_seed)");
  app.add_flag("--require-seed", g.require_seed, "fail when no run seed is configured");
  app.add_option("--pass-counts", g.pass_counts, "comma-separated pass counts");
  app.add_option("--set", g.sets, "key=value override (repeatable)");

  auto* measure = app.add_subcommand("measure-difficulty", "success counts over the difficulty budget");
  std::string partition_input;
  bool random_bins = false;
  auto* partition = app.add_subcommand("partition", "difficulty bins and training shards");
  partition->add_option("--input", partition_input, "difficulty CSV (default <out-dir>/difficulty.csv)");
  partition->add_flag("--random", random_bins, "random bins instead of difficulty order");
  auto* prefs = app.add_subcommand("build-prefs", "DPO preference dataset");
  bool random_heads = false;
  auto* train = app.add_subcommand("train-heads", "PPO prefix heads on difficulty shards");
  train->add_flag("--random", random_heads, "train on random shards");
  std::string heads_path;
  auto* pdc = app.add_subcommand("analyze-pdc", "prefix diversity coverage curves");
  pdc->add_option("--heads", heads_path, "trained heads file");
  auto* grid = app.add_subcommand("run-grid", "scaling-curve grid");
  grid->add_option("--heads", heads_path, "trained heads file");
  std::string table;
  auto* reproduce = app.add_subcommand("reproduce", "directional table reproductions");
  reproduce->add_option("table", table, "table2 or table3")
      ->required()
      ->check(CLI::IsMember({"table2", "table3"}));
  auto* fixtures = app.add_subcommand("emit-fixtures", "wire and corpus fixtures");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    ConfigOverrides overrides;
    for (const std::string& s : g.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (g.seed) overrides.emplace_back("run_seed", std::to_string(*g.seed));
    if (!g.pass_counts.empty()) overrides.emplace_back("pass_counts", g.pass_counts);
    const std::string text = g.config_path.empty() ? std::string() : ReadFile(g.config_path);
    Context ctx{ParseConfig(text, overrides, g.require_seed), g.out_dir, g.max_inflight, out, err};
    fs::create_directories(ctx.out_dir);

    std::string command = app.get_subcommands().front()->get_name();
    if (reproduce->parsed()) command += " " + table;
    WriteManifest(ctx, command);

    bool ok = true;
    if (measure->parsed()) CmdMeasure(ctx);
    if (partition->parsed()) CmdPartition(ctx, partition_input, random_bins);
    if (prefs->parsed()) CmdBuildPrefs(ctx);
    if (train->parsed()) CmdTrainHeads(ctx, random_heads);
    if (pdc->parsed()) CmdAnalyzePdc(ctx, heads_path);
    if (grid->parsed()) CmdRunGrid(ctx, heads_path);
    if (reproduce->parsed()) ok = table == "table2" ? CmdTable2(ctx) : CmdTable3(ctx);
    if (fixtures->parsed()) CmdEmitFixtures(ctx);
    return ok ? kExitOk : kExitAcceptance;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const ProtocolError& e) {
    err << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace econ
