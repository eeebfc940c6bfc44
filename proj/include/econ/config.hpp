#pragma once

// Run configuration: a "key = value" text format with '#' comments. Flags
// override file values, and the resolved configuration is written back out
// as the run manifest.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace econ {

enum class BackendKind { kMock, kRemote };

struct RunConfig {
  std::optional<std::uint64_t> run_seed;
  BackendKind backend = BackendKind::kMock;
  std::string remote_url = "http://127.0.0.1:8000";
  std::string corpus;  // problems file; empty: generate corpus_id
  std::string corpus_id = "beta-244";
  std::int64_t max_tokens = 32768;

  int difficulty_budget = 32;
  int n_heads = 8;
  double beta = 0.1;
  int refine_rounds = 2;
  bool refine = false;

  std::vector<int> pass_counts = {8, 16, 32, 64, 128};
  std::vector<std::string> modes = {"noncot", "cot", "dynamic"};
  double target_cot_rate = 0.148;
  double noise_sigma = 0.2;

  std::size_t prefix_len = 20;
  std::size_t ngram = 3;
  std::size_t reference_size = 512;

  int dataset_total = 15000;
  double noncot_ratio = 0.40;

  double clip_eps = 0.2;
  double learning_rate = 0.3;
  int epochs_per_batch = 4;
  int batch_size = 64;
  int iterations = 200;

  int replicates = 16;

  std::uint64_t Seed() const { return run_seed.value_or(0); }
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

// Every key accepted in a config file, in manifest order.
std::vector<std::string> ConfigKeys();

// Throws ConfigError (with the 1-based line for file errors).
RunConfig ParseConfig(const std::string& text, const ConfigOverrides& overrides = {},
                      bool require_seed = false);

// All keys with resolved values. ParseConfig(RenderConfig(c)) == c.
std::string RenderConfig(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace econ
