#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "econ/diversity.hpp"
#include "econ/errors.hpp"
#include "econ/mock_backend.hpp"
#include "econ/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace econ::diversity {
namespace {

Lexemes Split(const std::string& text) { return WhitespaceTokenize(text); }

Lexemes Numbered(std::size_t count) {
  Lexemes out;
  for (std::size_t i = 0; i < count; ++i) out.push_back("t" + std::to_string(i));
  return out;
}

std::vector<Lexemes> RandomCorpus(Rng& rng, std::size_t attempts, std::size_t length,
                                  std::uint64_t vocab) {
  std::vector<Lexemes> out(attempts);
  for (auto& a : out) {
    for (std::size_t i = 0; i < length; ++i) a.push_back("w" + std::to_string(rng.Below(vocab)));
  }
  return out;
}

TEST(ExtractPrefix, Slices) {
  const Lexemes stream = Numbered(100);
  const Prefix p = ExtractPrefix(stream, 10, 20);
  ASSERT_EQ(p.lexemes.size(), 20u);
  EXPECT_EQ(p.lexemes.front(), "t10");
  EXPECT_EQ(p.lexemes.back(), "t29");
  EXPECT_FALSE(p.degenerate);
}

TEST(ExtractPrefix, ShortTailAndEnd) {
  const Lexemes stream = Numbered(25);
  EXPECT_EQ(ExtractPrefix(stream, 10, 20).lexemes.size(), 15u);
  const Prefix end = ExtractPrefix(stream, 25, 20);
  EXPECT_TRUE(end.lexemes.empty());
  EXPECT_TRUE(end.degenerate);
  EXPECT_THROW(ExtractPrefix(stream, 26, 20), DomainError);
}

TEST(FindStatementBoundary, LocatesProofStart) {
  const Lexemes stream = Split("theorem t (x : ℝ) : x = x := by rfl");
  const auto b = FindStatementBoundary(stream);
  ASSERT_TRUE(b);
  EXPECT_EQ(stream[*b], "rfl");
  EXPECT_FALSE(FindStatementBoundary(Split("nlinarith [sq_nonneg x]")));
}

TEST(NGramSet, Examples) {
  EXPECT_EQ(NGramSet(Split("a b c d e"), 3).size(), 3u);
  EXPECT_TRUE(NGramSet(Split("a b"), 3).empty());
  EXPECT_EQ(NGramSet(Split("a a a a"), 3).size(), 1u);
}

TEST(NGramSet, LexemesWithSeparatorLikeContentStayDistinct) {
  EXPECT_EQ(NGramSet(Split("ab c d ab"), 2).size(), 3u);
  EXPECT_NE(NGramSet(Split("a bc d"), 2), NGramSet(Split("ab c d"), 2));
}

TEST(PdcCurve, ThreeAttemptExample) {
  PrefixProfile profile;
  profile.problem_id = "ex";
  profile.prefix_len = 5;
  profile.attempts = {Split("a b c d e"), Split("a b c x y"), Split("p q r s t")};
  const std::vector<std::size_t> sizes = {1, 2, 3};
  const CoverageCurve curve = PdcCurve(profile, sizes);
  EXPECT_DOUBLE_EQ(curve.coverage[0], 3.0 / 8.0);
  EXPECT_DOUBLE_EQ(curve.coverage[1], 5.0 / 8.0);
  EXPECT_DOUBLE_EQ(curve.coverage[2], 1.0);
}

TEST(PdcCurve, IdenticalAttemptsAreFullyCoveredAtOne) {
  PrefixProfile profile;
  profile.problem_id = "same";
  profile.attempts.assign(512, Numbered(30));
  const std::vector<std::size_t> sizes = {1, 512};
  const CoverageCurve curve = PdcCurve(profile, sizes);
  EXPECT_DOUBLE_EQ(curve.At(1), 1.0);
  EXPECT_DOUBLE_EQ(curve.At(512), 1.0);
}

TEST(PdcCurve, DegenerateCorpus) {
  PrefixProfile profile;
  profile.problem_id = "short";
  profile.attempts = {Split("a b"), Split("c")};
  const std::vector<std::size_t> sizes = {1};
  EXPECT_THROW(PdcCurve(profile, sizes), DomainError);
}

TEST(PdcCurve, RejectsBadSampleSizes) {
  PrefixProfile profile;
  profile.problem_id = "x";
  profile.attempts = {Numbered(10), Numbered(10)};
  const std::vector<std::size_t> too_big = {3};
  const std::vector<std::size_t> unsorted = {2, 1};
  EXPECT_THROW(PdcCurve(profile, too_big), DomainError);
  EXPECT_THROW(PdcCurve(profile, unsorted), DomainError);
  profile.prefix_len = 2;
  const std::vector<std::size_t> ok = {1};
  EXPECT_THROW(PdcCurve(profile, ok), DomainError);
}

TEST(PdcCurve, MatchesBruteForceOnRandomCorpora) {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    PrefixProfile profile;
    profile.problem_id = "r";
    profile.attempts = RandomCorpus(rng, 128, 24, 6 + rng.Below(20));
    std::vector<std::size_t> sizes(128);
    std::iota(sizes.begin(), sizes.end(), 1);
    const CoverageCurve curve = PdcCurve(profile, sizes);
    const std::vector<double> oracle = oracle::BruteForceCoverage(profile.attempts, 20, 3, sizes);
    ASSERT_EQ(curve.coverage.size(), oracle.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      EXPECT_DOUBLE_EQ(curve.coverage[i], oracle[i]) << "trial " << trial << " s=" << sizes[i];
      if (i > 0) EXPECT_GE(curve.coverage[i], curve.coverage[i - 1]);
    }
    EXPECT_EQ(curve.coverage.back(), 1.0);
  }
}

TEST(PdcCurve, ReferenceSetIsTheLeadingAttempts) {
  PrefixProfile profile;
  profile.problem_id = "ref";
  profile.reference_size = 2;
  profile.attempts = {Split("a b c d"), Split("a b c e"), Split("x y z w")};
  const std::vector<std::size_t> sizes = {1, 2};
  const CoverageCurve curve = PdcCurve(profile, sizes);
  EXPECT_DOUBLE_EQ(curve.At(1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve.At(2), 1.0);
}

TEST(PdcCurve, DependsOnAttemptOrder) {
  PrefixProfile profile;
  profile.problem_id = "order";
  profile.attempts = {Split("a b c d e"), Split("a b c")};
  const std::vector<std::size_t> sizes = {1, 2};
  EXPECT_DOUBLE_EQ(PdcCurve(profile, sizes).At(1), 1.0);
  std::swap(profile.attempts[0], profile.attempts[1]);
  EXPECT_DOUBLE_EQ(PdcCurve(profile, sizes).At(1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(PdcCurve(profile, sizes).At(2), 1.0);
}

TEST(MeanPdc, Examples) {
  PrefixProfile full;
  full.problem_id = "a";
  full.attempts.assign(8, Numbered(20));
  std::vector<PrefixProfile> two = {full, full};
  two[1].problem_id = "b";
  EXPECT_DOUBLE_EQ(MeanPdc(two, 8), 1.0);
  EXPECT_THROW(MeanPdc({}, 8), DomainError);
  two[1].ngram = 2;
  EXPECT_THROW(MeanPdc(two, 8), DomainError);
}

TEST(MeanPdc, GrowsWithSampleSizeOnEquiprobableStrategies) {
  MockConfig config;
  config.base_strategy_decay = 1.0;
  std::vector<PrefixProfile> profiles;
  for (int p = 0; p < 20; ++p) {
    MockLatent latent = testing::Latent(0.5, 0.5);
    const Problem problem = testing::MockProblem("p" + std::to_string(p), latent);
    PrefixProfile profile;
    profile.problem_id = problem.id;
    for (int a = 0; a < 64; ++a) {
      profile.attempts.push_back(
          MockProve(problem, Mode::kNonCot, std::nullopt, SeedPath{1, problem.id, std::nullopt, a},
                    config)
              .token_stream);
    }
    profiles.push_back(std::move(profile));
  }
  EXPECT_GT(MeanPdc(profiles, 8), MeanPdc(profiles, 1));
}

TEST(WriteCoverageCsv, Format) {
  CoverageCurve curve{{1, 2}, {0.375, 1.0}};
  const std::vector<std::string> ids = {"ex"};
  const std::vector<CoverageCurve> curves = {curve};
  std::ostringstream out;
  WriteCoverageCsv(out, ids, curves);
  EXPECT_EQ(out.str(), "problem_id,sample_size,coverage\nex,1,0.375000\nex,2,1.000000\n");
}

}  // namespace
}  // namespace econ::diversity
