#pragma once

// DPO objective with analytic gradients, and independent bandit PPO training
// of categorical prefix heads.

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "econ/backend.hpp"
#include "econ/core.hpp"
#include "econ/datapipe.hpp"
#include "econ/rng.hpp"

namespace econ::learn {

inline constexpr double kDefaultBeta = 0.1;

struct DpoBatchItem {
  double lpw_theta = 0.0;
  double lpl_theta = 0.0;
  double lpw_ref = 0.0;
  double lpl_ref = 0.0;
  double beta = kDefaultBeta;
};

// beta * ((lpw_theta - lpw_ref) - (lpl_theta - lpl_ref)).
double DpoMargin(const DpoBatchItem& item);

// Mean softplus(-z). Throws DomainError on an empty batch, non-finite
// inputs, positive log-probabilities or beta <= 0.
double DpoLoss(std::span<const DpoBatchItem> batch);

struct DpoGradient {
  double d_lpw_theta = 0.0;
  double d_lpl_theta = 0.0;
};

DpoGradient DpoGrad(const DpoBatchItem& item);

struct HeadPolicy {
  int head_id = 0;
  std::vector<double> logits;
  double baseline = 0.0;

  static HeadPolicy Uniform(int head_id, int num_strategies);

  // softmax(logits)
  std::vector<double> Probabilities() const;
  int ModalStrategy() const;
  void Validate() const;
};

struct PpoConfig {
  double clip_eps = 0.2;
  double learning_rate = 0.1;
  int epochs_per_batch = 4;
  int batch_size = 64;
  int iterations = 200;
  int n_heads = 8;

  void Validate() const;
};

int HeadSample(const HeadPolicy& policy, Rng& rng);

struct Trajectory {
  int action = 0;
  double reward = 0.0;
  double old_prob = 1.0;
};

// One clipped bandit update over the batch, then the baseline EMA step.
HeadPolicy PpoUpdate(const HeadPolicy& policy, std::span<const Trajectory> batch,
                     const PpoConfig& config);

struct TrainedHead {
  HeadPolicy policy;
  int shard_index = 0;
  std::vector<double> reward_curve;  // mean reward per iteration
  double final_mean_reward = 0.0;
};

struct TrainOptions {
  std::uint64_t run_seed = 0;
  int max_inflight = 1;
  std::int64_t max_tokens = kDefaultMaxTokens;
  int num_strategies = 8;
};

// Head i samples problems only from shards[i] and draws from its own seed
// stream, so results do not depend on head order or concurrency.
std::vector<TrainedHead> TrainHeads(std::span<const datapipe::Shard> shards,
                                    std::span<const Problem> corpus, const Prover& prover,
                                    const Verifier& verifier, const PpoConfig& config,
                                    const TrainOptions& options);

// {"final_mean_reward","head_id","logits","shard_index"} per line.
void WriteHeads(std::ostream& out, std::span<const TrainedHead> heads);
std::vector<TrainedHead> ReadHeads(std::istream& in);

// head_id,iteration,mean_reward
void WriteTelemetryCsv(std::ostream& out, std::span<const TrainedHead> heads);

}  // namespace econ::learn
