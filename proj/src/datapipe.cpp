#include "econ/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "econ/errors.hpp"
#include "econ/parallel.hpp"

namespace econ::datapipe {

DifficultyProfile MeasureDifficulty(const Problem& problem, const Prover& prover,
                                    const Verifier& verifier, const MeasureOptions& options) {
  if (options.budget < 1) throw DomainError("difficulty budget must be >= 1");
  std::vector<Verdict> verdicts(static_cast<std::size_t>(options.budget));
  std::vector<std::string> errors(verdicts.size());
  ParallelFor(verdicts.size(), options.max_inflight, [&](std::size_t i) {
    AttemptSpec spec;
    spec.problem = &problem;
    spec.mode = Mode::kNonCot;
    spec.seed_path = SeedPath{options.run_seed, problem.id, std::nullopt,
                              static_cast<std::int64_t>(i)};
    spec.max_tokens = options.max_tokens;
    verdicts[i] = RunAttempt(spec, prover, verifier, nullptr, &errors[i]).verdict;
  });
  DifficultyProfile profile{problem.id, 0, 0};
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i] == Verdict::kUnverified) {
      throw BackendError("difficulty measurement of '" + problem.id + "' failed at attempt " +
                         std::to_string(i) + ": " + errors[i]);
    }
    if (verdicts[i] == Verdict::kPass) ++profile.c;
  }
  return profile;
}

std::vector<DifficultyProfile> MeasureCorpus(std::span<const Problem> corpus, const Prover& prover,
                                             const Verifier& verifier,
                                             const MeasureOptions& options) {
  std::vector<DifficultyProfile> out(corpus.size());
  MeasureOptions inner = options;
  inner.max_inflight = 1;
  ParallelFor(corpus.size(), options.max_inflight, [&](std::size_t i) {
    out[i] = MeasureDifficulty(corpus[i], prover, verifier, inner);
  });
  return out;
}

namespace {

std::vector<Bin> CutContiguous(std::vector<DifficultyProfile> ordered, int n) {
  const std::size_t total = ordered.size();
  const std::size_t base = total / static_cast<std::size_t>(n);
  const std::size_t extra = total % static_cast<std::size_t>(n);
  std::vector<Bin> bins(static_cast<std::size_t>(n));
  std::size_t pos = 0;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j, ++pos) {
      ordered[pos].bin = static_cast<int>(b) + 1;
      bins[b].push_back(std::move(ordered[pos]));
    }
  }
  return bins;
}

void CheckBinCount(std::size_t profiles, int n) {
  if (n < 2) throw DomainError("need at least 2 bins");
  if (static_cast<std::size_t>(n) > profiles) {
    throw DomainError("cannot split " + std::to_string(profiles) + " profiles into " +
                      std::to_string(n) + " bins");
  }
}

}  // namespace

std::vector<Bin> PartitionBins(std::span<const DifficultyProfile> profiles, int n) {
  CheckBinCount(profiles.size(), n);
  std::vector<DifficultyProfile> ordered(profiles.begin(), profiles.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.c != b.c) return a.c > b.c;
    return a.problem_id < b.problem_id;
  });
  return CutContiguous(std::move(ordered), n);
}

std::vector<Bin> RandomBins(std::span<const DifficultyProfile> profiles, int n, Rng& rng) {
  CheckBinCount(profiles.size(), n);
  std::vector<DifficultyProfile> ordered(profiles.begin(), profiles.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.problem_id < b.problem_id; });
  rng.Shuffle(ordered);
  return CutContiguous(std::move(ordered), n);
}

Shard BuildShard(int index, std::span<const Bin> bins, int shard_size, Rng& rng) {
  if (index < 0 || static_cast<std::size_t>(index) >= bins.size()) {
    throw DomainError("shard index " + std::to_string(index) + " out of range");
  }
  if (shard_size < 1) throw DomainError("shard size must be >= 1");
  const Bin& own = bins[static_cast<std::size_t>(index)];
  std::vector<const DifficultyProfile*> others;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (b == static_cast<std::size_t>(index)) continue;
    for (const auto& p : bins[b]) others.push_back(&p);
  }
  const std::size_t want_own = static_cast<std::size_t>((shard_size + 1) / 2);
  const std::size_t want_other = static_cast<std::size_t>(shard_size / 2);
  if (want_own > own.size()) {
    throw DomainError("own-bin pool B_" + std::to_string(index + 1) + " has " +
                      std::to_string(own.size()) + " problems, shard needs " +
                      std::to_string(want_own));
  }
  if (want_other > others.size()) {
    throw DomainError("other-bin pool has " + std::to_string(others.size()) +
                      " problems, shard needs " + std::to_string(want_other));
  }
  Shard shard;
  shard.index = index;
  for (std::size_t i : rng.SampleWithoutReplacement(own.size(), want_own)) {
    shard.problem_ids.push_back(own[i].problem_id);
  }
  for (std::size_t i : rng.SampleWithoutReplacement(others.size(), want_other)) {
    shard.problem_ids.push_back(others[i]->problem_id);
  }
  shard.own_bin_count = static_cast<int>(want_own);
  shard.other_bin_count = static_cast<int>(want_other);
  return shard;
}

std::string_view ToString(ComplexityClass cls) {
  return cls == ComplexityClass::kNonCotSolvable ? "noncot_solvable" : "cot_dependent";
}

ComplexityClass ComplexityClassFromString(std::string_view text) {
  if (text == "noncot_solvable") return ComplexityClass::kNonCotSolvable;
  if (text == "cot_dependent") return ComplexityClass::kCotDependent;
  throw DomainError("unknown complexity class '" + std::string(text) + "'");
}

ComplexityClass ClassifyFromCount(int c) {
  return c >= 1 ? ComplexityClass::kNonCotSolvable : ComplexityClass::kCotDependent;
}

ComplexityClass ClassifyProblem(const Problem& problem, const Prover& prover,
                                const Verifier& verifier, const MeasureOptions& options) {
  return ClassifyFromCount(MeasureDifficulty(problem, prover, verifier, options).c);
}

std::string RenderDynamicCotPrompt(const std::string& statement) {
  return "Complete the following Lean 4 code, thinking step by step if the problem requires "
         "careful reasoning:\n" +
         statement +
         "\n/- The model will autonomously choose:\n"
         "   Option 1: Direct formal proof generation\n"
         "   Option 2: Informal reasoning followed by formal proof -/";
}

PreferenceExample BuildPreferencePair(const Problem& problem, ComplexityClass cls,
                                      const std::string& direct_proof,
                                      const std::string& cot_answer) {
  if (direct_proof.empty() || cot_answer.empty()) {
    throw DomainError("preference pair needs nonempty direct and CoT responses");
  }
  if (direct_proof == cot_answer) throw DomainError("degenerate pair");
  PreferenceExample ex;
  ex.prompt = RenderDynamicCotPrompt(problem.statement);
  ex.cls = cls;
  if (cls == ComplexityClass::kNonCotSolvable) {
    ex.chosen = direct_proof;
    ex.rejected = cot_answer;
  } else {
    ex.chosen = cot_answer;
    ex.rejected = direct_proof;
  }
  return ex;
}

std::vector<PreferenceExample> ComposeDataset(std::span<const PreferenceExample> pairs,
                                              const DatasetComposition& composition, Rng& rng) {
  if (composition.total < 2) throw DomainError("dataset total must be >= 2");
  if (composition.noncot_ratio <= 0.0 || composition.noncot_ratio >= 1.0) {
    throw DomainError("noncot ratio must lie in (0, 1)");
  }
  std::vector<const PreferenceExample*> noncot, cot;
  for (const auto& p : pairs) {
    (p.cls == ComplexityClass::kNonCotSolvable ? noncot : cot).push_back(&p);
  }
  if (noncot.empty() || cot.empty()) {
    throw DomainError(std::string("no ") + (noncot.empty() ? "noncot_solvable" : "cot_dependent") +
                      " pairs to compose from");
  }
  auto split = [&](int total) {
    const int n_noncot = static_cast<int>(std::lround(total * composition.noncot_ratio));
    return std::pair{n_noncot, total - n_noncot};
  };
  int total = composition.total;
  while (total >= 2) {
    auto [a, b] = split(total);
    if (static_cast<std::size_t>(a) <= noncot.size() && static_cast<std::size_t>(b) <= cot.size()) {
      break;
    }
    --total;
  }
  auto [n_noncot, n_cot] = split(total);
  if (total < 2 || n_noncot < 1 || n_cot < 1) {
    throw DomainError("too few pairs to meet the class ratio");
  }
  std::vector<PreferenceExample> out;
  out.reserve(static_cast<std::size_t>(total));
  for (std::size_t i : rng.SampleWithoutReplacement(noncot.size(), static_cast<std::size_t>(n_noncot))) {
    out.push_back(*noncot[i]);
  }
  for (std::size_t i : rng.SampleWithoutReplacement(cot.size(), static_cast<std::size_t>(n_cot))) {
    out.push_back(*cot[i]);
  }
  rng.Shuffle(out);
  return out;
}

void WritePreferenceDataset(std::ostream& out, std::span<const PreferenceExample> dataset) {
  for (const auto& ex : dataset) {
    nlohmann::json j;
    j["prompt"] = ex.prompt;
    j["chosen"] = ex.chosen;
    j["rejected"] = ex.rejected;
    j["class"] = std::string(ToString(ex.cls));
    out << j.dump() << '\n';
  }
}

std::vector<PreferenceExample> ReadPreferenceDataset(std::istream& in) {
  std::vector<PreferenceExample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PreferenceExample ex;
      ex.prompt = j.at("prompt").get<std::string>();
      ex.chosen = j.at("chosen").get<std::string>();
      ex.rejected = j.at("rejected").get<std::string>();
      ex.cls = ComplexityClassFromString(j.at("class").get<std::string>());
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("preference record " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void WriteCorpus(std::ostream& out, std::span<const Problem> corpus) {
  for (const Problem& p : corpus) {
    nlohmann::json j;
    j["id"] = p.id;
    j["statement"] = p.statement;
    if (p.difficulty_tag) j["difficulty_tag"] = std::string(ToString(*p.difficulty_tag));
    if (p.latent) {
      const MockLatent& l = *p.latent;
      j["latent"] = {{"p_noncot", l.p_noncot},         {"p_cot", l.p_cot},
                     {"strategy_star", l.strategy_star}, {"q_hit", l.q_hit},
                     {"q_miss", l.q_miss},               {"len_noncot_mean", l.len_noncot_mean},
                     {"len_cot_mean", l.len_cot_mean}};
    }
    out << j.dump() << '\n';
  }
}

std::vector<Problem> ReadCorpus(std::istream& in) {
  std::vector<Problem> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Problem p;
      p.id = j.at("id").get<std::string>();
      p.statement = j.at("statement").get<std::string>();
      if (j.contains("difficulty_tag") && !j["difficulty_tag"].is_null()) {
        p.difficulty_tag = DifficultyTagFromString(j["difficulty_tag"].get<std::string>());
      }
      if (j.contains("latent") && !j["latent"].is_null()) {
        const auto& l = j["latent"];
        MockLatent latent;
        latent.p_noncot = l.at("p_noncot").get<double>();
        latent.p_cot = l.at("p_cot").get<double>();
        latent.strategy_star = l.value("strategy_star", 0);
        latent.q_hit = l.value("q_hit", 0.0);
        latent.q_miss = l.value("q_miss", 0.0);
        latent.len_noncot_mean = l.value("len_noncot_mean", std::int64_t{443});
        latent.len_cot_mean = l.value("len_cot_mean", std::int64_t{4488});
        p.latent = latent;
      }
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("corpus record " + std::to_string(line_no) + ": " + e.what());
    }
  }
  ValidateCorpus(out);
  return out;
}

void WriteShards(std::ostream& out, std::span<const Shard> shards) {
  for (const Shard& s : shards) {
    nlohmann::json j;
    j["index"] = s.index;
    j["problem_ids"] = s.problem_ids;
    j["own_bin_count"] = s.own_bin_count;
    j["other_bin_count"] = s.other_bin_count;
    out << j.dump() << '\n';
  }
}

std::vector<Shard> ReadShards(std::istream& in) {
  std::vector<Shard> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Shard s;
      s.index = j.at("index").get<int>();
      s.problem_ids = j.at("problem_ids").get<std::vector<std::string>>();
      s.own_bin_count = j.at("own_bin_count").get<int>();
      s.other_bin_count = j.at("other_bin_count").get<int>();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("shard record " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void WriteDifficultyCsv(std::ostream& out, std::span<const DifficultyProfile> profiles) {
  out << "problem_id,c,bin\n";
  for (const auto& p : profiles) out << p.problem_id << ',' << p.c << ',' << p.bin << '\n';
}

std::vector<DifficultyProfile> ReadDifficultyCsv(std::istream& in) {
  std::vector<DifficultyProfile> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::istringstream row(line);
    DifficultyProfile p;
    std::string c, bin;
    if (!std::getline(row, p.problem_id, ',') || !std::getline(row, c, ',') ||
        !std::getline(row, bin)) {
      throw DomainError("difficulty CSV line " + std::to_string(line_no) + " is malformed");
    }
    try {
      p.c = std::stoi(c);
      p.bin = std::stoi(bin);
    } catch (const std::exception&) {
      throw DomainError("difficulty CSV line " + std::to_string(line_no) + " is malformed");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace econ::datapipe
