#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "econ/errors.hpp"
#include "econ/learn.hpp"
#include "econ/mock_backend.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace econ::learn {
namespace {

double Loss(const DpoBatchItem& item) { return DpoLoss(std::span<const DpoBatchItem>(&item, 1)); }

TEST(DpoLoss, ZeroMarginIsLn2) {
  const DpoBatchItem item{-3.0, -4.0, -3.0, -4.0, 0.1};
  EXPECT_NEAR(Loss(item), std::log(2.0), 1e-12);
}

TEST(DpoLoss, WorkedExample) {
  const DpoBatchItem item{-1.0, -2.0, -1.5, -1.5, 0.1};
  EXPECT_NEAR(DpoMargin(item), 0.1, 1e-15);
  EXPECT_NEAR(Loss(item), 0.644397, 1e-6);
  EXPECT_NEAR(Loss(item), std::log1p(std::exp(-0.1)), 1e-15);
}

TEST(DpoLoss, SaturatesWithoutOverflow) {
  const DpoBatchItem huge{0.0, -1e6, -1.0, -1.0, 0.5};
  EXPECT_GE(Loss(huge), 0.0);
  EXPECT_LT(Loss(huge), 1e-300);
  const DpoBatchItem awful{-1e6, 0.0, -1.0, -1.0, 0.5};
  EXPECT_NEAR(Loss(awful), 5e5, 1e-6);
  EXPECT_TRUE(std::isfinite(Loss(awful)));
}

TEST(DpoLoss, MatchesDirectEvaluation) {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const DpoBatchItem item{-10 * rng.Uniform(), -10 * rng.Uniform(), -10 * rng.Uniform(),
                            -10 * rng.Uniform(), 0.05 + rng.Uniform()};
    const long double direct =
        oracle::DirectDpoLoss(item.lpw_theta, item.lpl_theta, item.lpw_ref, item.lpl_ref, item.beta);
    EXPECT_NEAR(Loss(item), static_cast<double>(direct), 1e-12);
  }
}

TEST(DpoLoss, BatchMean) {
  const std::vector<DpoBatchItem> batch = {{-1.0, -2.0, -1.5, -1.5, 0.1}, {-3.0, -4.0, -3.0, -4.0, 0.1}};
  EXPECT_NEAR(DpoLoss(batch), 0.5 * (0.644397 + std::log(2.0)), 1e-6);
}

TEST(DpoLoss, Errors) {
  EXPECT_THROW(DpoLoss({}), DomainError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(Loss({nan, -1, -1, -1, 0.1}), DomainError);
  EXPECT_THROW(Loss({-1, -inf, -1, -1, 0.1}), DomainError);
  EXPECT_THROW(Loss({0.5, -1, -1, -1, 0.1}), DomainError);
  EXPECT_THROW(Loss({-1, -1, -1, -1, 0.0}), DomainError);
}

TEST(DpoLoss, ShiftInvariant) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const DpoBatchItem item{-5 - 5 * rng.Uniform(), -5 - 5 * rng.Uniform(), -5 - 5 * rng.Uniform(),
                            -5 - 5 * rng.Uniform(), 0.1};
    const double shift = -4 * rng.Uniform();
    const DpoBatchItem shifted{item.lpw_theta + shift, item.lpl_theta + shift, item.lpw_ref + shift,
                               item.lpl_ref + shift, item.beta};
    EXPECT_NEAR(Loss(item), Loss(shifted), 1e-12);
  }
}

TEST(DpoLoss, DecreasesInPreferredLogProb) {
  double previous = std::numeric_limits<double>::infinity();
  for (double lpw = -20.0; lpw <= 0.0; lpw += 0.25) {
    const double loss = Loss({lpw, -3.0, -2.0, -3.0, 0.5});
    EXPECT_LT(loss, previous);
    previous = loss;
  }
}

TEST(DpoGrad, Examples) {
  const DpoGradient zero = DpoGrad({-2.0, -2.0, -2.0, -2.0, 0.1});
  EXPECT_NEAR(zero.d_lpw_theta, -0.05, 1e-15);
  EXPECT_NEAR(zero.d_lpl_theta, 0.05, 1e-15);
  const DpoGradient worked = DpoGrad({-1.0, -2.0, -1.5, -1.5, 0.1});
  EXPECT_NEAR(worked.d_lpw_theta, -0.0475021, 1e-7);
  EXPECT_NEAR(worked.d_lpl_theta, 0.0475021, 1e-7);
  const DpoGradient saturated = DpoGrad({0.0, -1e4, -1.0, -1.0, 0.5});
  EXPECT_NEAR(saturated.d_lpw_theta, 0.0, 1e-300);
  EXPECT_NEAR(saturated.d_lpl_theta, 0.0, 1e-300);
}

TEST(DpoGrad, MatchesCentralDifferences) {
  Rng rng(3);
  for (double beta : {0.05, 0.1, 0.5}) {
    for (int i = 0; i < 300; ++i) {
      const DpoBatchItem item{-20 * rng.Uniform() - 1e-3, -20 * rng.Uniform() - 1e-3,
                              -20 * rng.Uniform(), -20 * rng.Uniform(), beta};
      const DpoGradient g = DpoGrad(item);
      const oracle::FiniteDifference fd = oracle::CentralDifference(item);
      EXPECT_LE(std::abs(fd.d_lpw - g.d_lpw_theta), 1e-6 * std::abs(g.d_lpw_theta));
      EXPECT_LE(std::abs(fd.d_lpl - g.d_lpl_theta), 1e-6 * std::abs(g.d_lpl_theta));
    }
  }
}

TEST(HeadSample, DominantLogit) {
  HeadPolicy p = HeadPolicy::Uniform(0, 5);
  p.logits[3] = 1e6;
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(HeadSample(p, rng), 3);
}

TEST(HeadSample, UniformFrequencies) {
  const HeadPolicy p = HeadPolicy::Uniform(0, 8);
  Rng rng(5);
  std::vector<int> counts(8);
  for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(HeadSample(p, rng))];
  for (int c : counts) EXPECT_NEAR(c / 1e5, 0.125, 0.01);
}

TEST(HeadSample, TwoStrategyFrequencies) {
  HeadPolicy p = HeadPolicy::Uniform(0, 2);
  p.logits[1] = std::log(3.0);
  Rng rng(6);
  int ones = 0;
  for (int i = 0; i < 100000; ++i) ones += HeadSample(p, rng);
  EXPECT_NEAR(ones / 1e5, 0.75, 0.01);
}

TEST(HeadPolicy, ProbabilitiesSumToOne) {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    HeadPolicy p = HeadPolicy::Uniform(0, 2 + static_cast<int>(rng.Below(10)));
    for (double& l : p.logits) l = 50 * (rng.Uniform() - 0.5);
    double total = 0;
    for (double x : p.Probabilities()) total += x;
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
  EXPECT_THROW(HeadPolicy::Uniform(0, 1), DomainError);
}

std::vector<Trajectory> SampleBatch(const HeadPolicy& p, Rng& rng, int size,
                                    const std::vector<double>& reward_prob) {
  const std::vector<double> pi = p.Probabilities();
  std::vector<Trajectory> batch;
  for (int i = 0; i < size; ++i) {
    const int a = HeadSample(p, rng);
    batch.push_back({a, rng.Bernoulli(reward_prob[static_cast<std::size_t>(a)]) ? 1.0 : 0.0,
                     pi[static_cast<std::size_t>(a)]});
  }
  return batch;
}

TEST(PpoUpdate, ZeroAdvantageLeavesLogits) {
  HeadPolicy p = HeadPolicy::Uniform(0, 4);
  p.logits = {0.3, -0.2, 0.1, 0.0};
  p.baseline = 1.0;
  const auto pi = p.Probabilities();
  const std::vector<Trajectory> batch = {{0, 1.0, pi[0]}, {2, 1.0, pi[2]}, {3, 1.0, pi[3]}};
  const HeadPolicy q = PpoUpdate(p, batch, PpoConfig{});
  EXPECT_EQ(q.logits, p.logits);
  EXPECT_DOUBLE_EQ(q.baseline, 1.0);
}

TEST(PpoUpdate, BaselineMovingAverage) {
  HeadPolicy p = HeadPolicy::Uniform(0, 2);
  const std::vector<Trajectory> batch = {{0, 1.0, 0.5}, {1, 0.0, 0.5}, {0, 1.0, 0.5}, {0, 1.0, 0.5}};
  EXPECT_DOUBLE_EQ(PpoUpdate(p, batch, PpoConfig{}).baseline, 0.1 * 0.75);
  EXPECT_THROW(PpoUpdate(p, {}, PpoConfig{}), DomainError);
}

TEST(PpoUpdate, UnclippedSingleEpochIsPolicyGradient) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.Below(3));
    HeadPolicy p = HeadPolicy::Uniform(0, k);
    for (double& l : p.logits) l = 2 * (rng.Uniform() - 0.5);
    p.baseline = rng.Uniform();
    std::vector<double> reward_prob(static_cast<std::size_t>(k));
    for (double& r : reward_prob) r = rng.Uniform();
    const auto batch = SampleBatch(p, rng, 16, reward_prob);
    PpoConfig config;
    config.clip_eps = 1e12;
    config.epochs_per_batch = 1;
    config.learning_rate = 0.5;
    const HeadPolicy q = PpoUpdate(p, batch, config);
    const auto expected = oracle::ReinforceStep(p.logits, p.baseline, batch, config.learning_rate);
    for (int j = 0; j < k; ++j) EXPECT_NEAR(q.logits[static_cast<std::size_t>(j)], expected[static_cast<std::size_t>(j)], 1e-12);
  }
}

TEST(PpoUpdate, ClipBoundsTheProbabilityRatio) {
  HeadPolicy p = HeadPolicy::Uniform(0, 4);
  const std::vector<Trajectory> batch(32, Trajectory{0, 1.0, 0.25});
  PpoConfig clipped;
  clipped.learning_rate = 0.05;
  clipped.epochs_per_batch = 500;
  const double ratio = PpoUpdate(p, batch, clipped).Probabilities()[0] / 0.25;
  EXPECT_GE(ratio, 1.2);
  EXPECT_LE(ratio, 1.25);
  PpoConfig unclipped = clipped;
  unclipped.clip_eps = 1e12;
  EXPECT_GT(PpoUpdate(p, batch, unclipped).Probabilities()[0] / 0.25, 2.0);
}

TEST(PpoUpdate, ConvergesOnTwoArmedBandit) {
  Rng rng(9);
  HeadPolicy p = HeadPolicy::Uniform(0, 2);
  const PpoConfig config;
  for (int it = 0; it < 200; ++it) p = PpoUpdate(p, SampleBatch(p, rng, config.batch_size, {1.0, 0.0}), config);
  EXPECT_GT(p.Probabilities()[0], 0.95);

  // The same run driven by the vanilla gradient oracle also converges.
  Rng oracle_rng(9);
  HeadPolicy r = HeadPolicy::Uniform(0, 2);
  for (int it = 0; it < 200; ++it) {
    const auto batch = SampleBatch(r, oracle_rng, config.batch_size, {1.0, 0.0});
    double mean = 0;
    for (const auto& t : batch) mean += t.reward / static_cast<double>(batch.size());
    r.logits = oracle::ReinforceStep(r.logits, r.baseline, batch, config.learning_rate);
    r.baseline = 0.9 * r.baseline + 0.1 * mean;
  }
  EXPECT_GT(r.Probabilities()[0], 0.95);
}

std::vector<Problem> StarCorpus(int num_problems, int star_of(int)) {
  std::vector<Problem> corpus;
  for (int i = 0; i < num_problems; ++i) {
    MockLatent m = testing::Latent(0.2, 0.2);
    m.strategy_star = star_of(i);
    m.q_hit = 0.9;
    m.q_miss = 0.05;
    corpus.push_back(testing::MockProblem("h" + std::to_string(i), m));
  }
  return corpus;
}

TEST(TrainHeads, SingleProblemHeadFindsItsStrategy) {
  const auto corpus = StarCorpus(1, [](int) { return 5; });
  MockProver prover(corpus);
  MockVerifier verifier;
  PpoConfig config;
  config.n_heads = 1;
  config.iterations = 100;
  const std::vector<datapipe::Shard> shards = {{0, {"h0"}, 1, 0}};
  const auto heads = TrainHeads(shards, corpus, prover, verifier, config, {});
  ASSERT_EQ(heads.size(), 1u);
  EXPECT_EQ(heads[0].policy.ModalStrategy(), 5);
  EXPECT_GT(heads[0].policy.Probabilities()[5], 0.5);
  EXPECT_EQ(heads[0].reward_curve.size(), 100u);
  EXPECT_DOUBLE_EQ(heads[0].final_mean_reward, heads[0].reward_curve.back());
}

TEST(TrainHeads, HeadsAreIndependent) {
  const auto corpus = StarCorpus(40, [](int i) { return i % 4; });
  MockProver prover(corpus);
  MockVerifier verifier;
  PpoConfig config;
  config.n_heads = 3;
  config.iterations = 20;
  config.batch_size = 16;
  std::vector<datapipe::Shard> shards(3);
  for (int h = 0; h < 3; ++h) {
    shards[static_cast<std::size_t>(h)].index = h;
    for (int i = h; i < 40; i += 3) shards[static_cast<std::size_t>(h)].problem_ids.push_back("h" + std::to_string(i));
  }
  TrainOptions serial;
  serial.run_seed = 11;
  TrainOptions parallel = serial;
  parallel.max_inflight = 3;
  const auto a = TrainHeads(shards, corpus, prover, verifier, config, serial);
  const auto b = TrainHeads(shards, corpus, prover, verifier, config, parallel);
  // Replacing another head's shard leaves head 0 untouched.
  auto altered = shards;
  altered[2].problem_ids = {"h0", "h1"};
  const auto c = TrainHeads(altered, corpus, prover, verifier, config, serial);
  for (std::size_t h = 0; h < 3; ++h) {
    EXPECT_EQ(a[h].policy.logits, b[h].policy.logits);
    EXPECT_EQ(a[h].reward_curve, b[h].reward_curve);
  }
  EXPECT_EQ(a[0].policy.logits, c[0].policy.logits);
  EXPECT_EQ(a[1].policy.logits, c[1].policy.logits);
  EXPECT_NE(a[2].policy.logits, c[2].policy.logits);
}

TEST(TrainHeads, Errors) {
  const auto corpus = StarCorpus(4, [](int) { return 0; });
  MockProver prover(corpus);
  MockVerifier verifier;
  PpoConfig config;
  config.n_heads = 2;
  const std::vector<datapipe::Shard> one = {{0, {"h0"}, 1, 0}};
  EXPECT_THROW(TrainHeads(one, corpus, prover, verifier, config, {}), DomainError);
  const std::vector<datapipe::Shard> missing = {{0, {"h0"}, 1, 0}, {1, {"nope"}, 1, 0}};
  EXPECT_THROW(TrainHeads(missing, corpus, prover, verifier, config, {}), DomainError);
}

TEST(HeadsFile, RoundTripAndTelemetry) {
  TrainedHead h;
  h.policy = HeadPolicy::Uniform(2, 3);
  h.policy.logits = {0.5, -1.25, 3.0};
  h.shard_index = 2;
  h.reward_curve = {0.25, 0.5};
  h.final_mean_reward = 0.5;
  const std::vector<TrainedHead> heads = {h};
  std::stringstream io;
  WriteHeads(io, heads);
  const auto back = ReadHeads(io);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].policy.logits, h.policy.logits);
  EXPECT_EQ(back[0].policy.head_id, 2);
  EXPECT_EQ(back[0].shard_index, 2);
  std::ostringstream csv;
  WriteTelemetryCsv(csv, heads);
  EXPECT_EQ(csv.str(), "head_id,iteration,mean_reward\n2,0,0.250000\n2,1,0.500000\n");
}

}  // namespace
}  // namespace econ::learn
