#include "econ/learn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "econ/errors.hpp"
#include "econ/parallel.hpp"

namespace econ::learn {
namespace {

void CheckItem(const DpoBatchItem& item) {
  for (double v : {item.lpw_theta, item.lpl_theta, item.lpw_ref, item.lpl_ref, item.beta}) {
    if (!std::isfinite(v)) throw DomainError("DPO input is not finite");
  }
  if (item.lpw_theta > 0 || item.lpl_theta > 0 || item.lpw_ref > 0 || item.lpl_ref > 0) {
    throw DomainError("log-probabilities must be <= 0");
  }
  if (item.beta <= 0) throw DomainError("beta must be positive");
}

// log(1 + e^x) without overflow.
double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double DpoMargin(const DpoBatchItem& item) {
  return item.beta * ((item.lpw_theta - item.lpw_ref) - (item.lpl_theta - item.lpl_ref));
}

double DpoLoss(std::span<const DpoBatchItem> batch) {
  if (batch.empty()) throw DomainError("DPO batch is empty");
  double sum = 0.0;
  for (const DpoBatchItem& item : batch) {
    CheckItem(item);
    sum += Softplus(-DpoMargin(item));
  }
  return sum / static_cast<double>(batch.size());
}

DpoGradient DpoGrad(const DpoBatchItem& item) {
  CheckItem(item);
  const double g = item.beta * Sigmoid(-DpoMargin(item));  // beta * (1 - sigma(z))
  return {-g, g};
}

HeadPolicy HeadPolicy::Uniform(int head_id, int num_strategies) {
  HeadPolicy p;
  p.head_id = head_id;
  p.logits.assign(static_cast<std::size_t>(num_strategies), 0.0);
  p.Validate();
  return p;
}

std::vector<double> HeadPolicy::Probabilities() const {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

int HeadPolicy::ModalStrategy() const {
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

void HeadPolicy::Validate() const {
  if (logits.size() < 2) throw DomainError("head policy needs at least 2 strategies");
  for (double v : logits) {
    if (!std::isfinite(v)) throw DomainError("head policy logits must be finite");
  }
  if (head_id < 0) throw DomainError("head id must be >= 0");
}

void PpoConfig::Validate() const {
  if (!(clip_eps > 0 && clip_eps < 1)) throw DomainError("clip_eps must lie in (0, 1)");
  if (!(learning_rate > 0)) throw DomainError("learning_rate must be positive");
  if (epochs_per_batch < 1 || batch_size < 1 || iterations < 1) {
    throw DomainError("epochs, batch size and iterations must be >= 1");
  }
  if (n_heads < 1) throw DomainError("n_heads must be >= 1");
}

int HeadSample(const HeadPolicy& policy, Rng& rng) {
  return static_cast<int>(rng.Categorical(policy.Probabilities()));
}

HeadPolicy PpoUpdate(const HeadPolicy& policy, std::span<const Trajectory> batch,
                     const PpoConfig& config) {
  if (batch.empty()) throw DomainError("empty trajectory batch");
  policy.Validate();
  const std::size_t k = policy.logits.size();
  double mean_reward = 0.0;
  for (const Trajectory& t : batch) {
    if (t.action < 0 || static_cast<std::size_t>(t.action) >= k) {
      throw DomainError("trajectory action out of range");
    }
    if (!(t.old_prob > 0 && t.old_prob <= 1)) throw DomainError("old_prob must lie in (0, 1]");
    mean_reward += t.reward;
  }
  mean_reward /= static_cast<double>(batch.size());

  HeadPolicy out = policy;
  const double n = static_cast<double>(batch.size());
  std::vector<double> grad(k);
  for (int epoch = 0; epoch < config.epochs_per_batch; ++epoch) {
    const std::vector<double> pi = out.Probabilities();
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const Trajectory& t : batch) {
      const double advantage = t.reward - policy.baseline;
      const double ratio = pi[static_cast<std::size_t>(t.action)] / t.old_prob;
      // Inside the clip range min() picks the unclipped term; outside it the
      // objective is flat in the logits.
      const bool active = advantage >= 0 ? ratio <= 1 + config.clip_eps
                                         : ratio >= 1 - config.clip_eps;
      if (!active) continue;
      const double scale = advantage * ratio;
      for (std::size_t j = 0; j < k; ++j) {
        grad[j] += scale * ((static_cast<std::size_t>(t.action) == j ? 1.0 : 0.0) - pi[j]);
      }
    }
    for (std::size_t j = 0; j < k; ++j) out.logits[j] += config.learning_rate * grad[j] / n;
  }
  out.baseline = 0.9 * policy.baseline + 0.1 * mean_reward;
  return out;
}

namespace {

TrainedHead TrainOne(int head, const datapipe::Shard& shard,
                     const std::map<std::string, const Problem*, std::less<>>& by_id,
                     int num_strategies, const Prover& prover, const Verifier& verifier,
                     const PpoConfig& config, const TrainOptions& options) {
  std::vector<const Problem*> pool;
  pool.reserve(shard.problem_ids.size());
  for (const std::string& id : shard.problem_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DomainError("shard problem '" + id + "' is not in the corpus");
    pool.push_back(it->second);
  }
  if (pool.empty()) throw DomainError("shard " + std::to_string(shard.index) + " is empty");

  const std::uint64_t head_seed =
      DeriveSeed(DeriveSeed(options.run_seed, "train-heads"), static_cast<std::uint64_t>(head));
  Rng rng(head_seed);
  TrainedHead result;
  result.shard_index = shard.index;
  result.policy = HeadPolicy::Uniform(head, num_strategies);
  std::vector<Trajectory> batch(static_cast<std::size_t>(config.batch_size));
  for (int it = 0; it < config.iterations; ++it) {
    const std::vector<double> pi = result.policy.Probabilities();
    double reward_sum = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      const Problem& problem = *pool[rng.Below(pool.size())];
      const int action = static_cast<int>(rng.Categorical(pi));
      AttemptSpec spec;
      spec.problem = &problem;
      spec.mode = Mode::kNonCot;
      spec.head_id = head;
      spec.prefix_id = action;
      spec.max_tokens = options.max_tokens;
      spec.seed_path = SeedPath{head_seed, problem.id, head,
                                static_cast<std::int64_t>(it) * config.batch_size + b};
      std::string error;
      const Attempt attempt = RunAttempt(spec, prover, verifier, nullptr, &error);
      if (attempt.verdict == Verdict::kUnverified) {
        throw BackendError("head " + std::to_string(head) + " rollout failed: " + error);
      }
      const double reward = attempt.solved() ? 1.0 : 0.0;
      batch[static_cast<std::size_t>(b)] = {action, reward, pi[static_cast<std::size_t>(action)]};
      reward_sum += reward;
    }
    result.policy = PpoUpdate(result.policy, batch, config);
    result.reward_curve.push_back(reward_sum / config.batch_size);
  }
  result.final_mean_reward = result.reward_curve.back();
  return result;
}

}  // namespace

std::vector<TrainedHead> TrainHeads(std::span<const datapipe::Shard> shards,
                                    std::span<const Problem> corpus, const Prover& prover,
                                    const Verifier& verifier, const PpoConfig& config,
                                    const TrainOptions& options) {
  config.Validate();
  if (shards.size() != static_cast<std::size_t>(config.n_heads)) {
    throw DomainError("got " + std::to_string(shards.size()) + " shards for " +
                      std::to_string(config.n_heads) + " heads");
  }
  if (options.num_strategies < 2) throw DomainError("heads need at least 2 strategies");
  std::map<std::string, const Problem*, std::less<>> by_id;
  for (const Problem& p : corpus) {
    if (!p.latent) throw DomainError("training problem '" + p.id + "' has no mock latent");
    by_id.emplace(p.id, &p);
  }

  std::vector<TrainedHead> heads(shards.size());
  ParallelFor(shards.size(), options.max_inflight, [&](std::size_t i) {
    heads[i] = TrainOne(static_cast<int>(i), shards[i], by_id, options.num_strategies, prover, verifier,
                        config, options);
  });
  return heads;
}

void WriteHeads(std::ostream& out, std::span<const TrainedHead> heads) {
  for (const TrainedHead& h : heads) {
    nlohmann::json j;
    j["head_id"] = h.policy.head_id;
    j["logits"] = h.policy.logits;
    j["shard_index"] = h.shard_index;
    j["final_mean_reward"] = h.final_mean_reward;
    out << j.dump() << '\n';
  }
}

std::vector<TrainedHead> ReadHeads(std::istream& in) {
  std::vector<TrainedHead> heads;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TrainedHead h;
      h.policy.head_id = j.at("head_id").get<int>();
      h.policy.logits = j.at("logits").get<std::vector<double>>();
      h.shard_index = j.at("shard_index").get<int>();
      h.final_mean_reward = j.at("final_mean_reward").get<double>();
      h.policy.Validate();
      heads.push_back(std::move(h));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("heads record " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return heads;
}

void WriteTelemetryCsv(std::ostream& out, std::span<const TrainedHead> heads) {
  out << "head_id,iteration,mean_reward\n";
  for (const TrainedHead& h : heads) {
    for (std::size_t it = 0; it < h.reward_curve.size(); ++it) {
      out << fmt::format("{},{},{:.6f}\n", h.policy.head_id, it, h.reward_curve[it]);
    }
  }
}

}  // namespace econ::learn
