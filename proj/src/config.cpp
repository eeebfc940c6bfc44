#include "econ/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "econ/errors.hpp"

namespace econ {
namespace {

struct KeySpec {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("'" + text + "' is not a valid number");
  }
  return value;
}

int ParsePositiveInt(const std::string& text) {
  const int v = ParseNumber<int>(text);
  if (v < 1) throw ConfigError("'" + text + "' must be >= 1");
  return v;
}

bool ParseBool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("'" + text + "' is not a boolean");
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("list must be nonempty");
  return out;
}

std::string Num(double v) { return fmt::format("{}", v); }

const std::vector<KeySpec>& Keys() {
  static const std::vector<KeySpec> keys = {
      {"run_seed", [](RunConfig& c, const std::string& v) { c.run_seed = ParseNumber<std::uint64_t>(v); },
       [](const RunConfig& c) { return c.run_seed ? std::to_string(*c.run_seed) : std::string(); }},
      {"backend",
       [](RunConfig& c, const std::string& v) {
         if (v == "mock") {
           c.backend = BackendKind::kMock;
         } else if (v == "remote") {
           c.backend = BackendKind::kRemote;
         } else {
           throw ConfigError("backend must be mock or remote, got '" + v + "'");
         }
       },
       [](const RunConfig& c) { return std::string(c.backend == BackendKind::kMock ? "mock" : "remote"); }},
      {"remote_url", [](RunConfig& c, const std::string& v) { c.remote_url = v; },
       [](const RunConfig& c) { return c.remote_url; }},
      {"corpus", [](RunConfig& c, const std::string& v) { c.corpus = v; },
       [](const RunConfig& c) { return c.corpus; }},
      {"corpus_id",
       [](RunConfig& c, const std::string& v) {
         if (v != "beta-244" && v != "switch-244" && v != "strategy-env") {
           throw ConfigError("corpus_id must be beta-244, switch-244 or strategy-env");
         }
         c.corpus_id = v;
       },
       [](const RunConfig& c) { return c.corpus_id; }},
      {"max_tokens",
       [](RunConfig& c, const std::string& v) {
         c.max_tokens = ParseNumber<std::int64_t>(v);
         if (c.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
       },
       [](const RunConfig& c) { return std::to_string(c.max_tokens); }},
      {"difficulty_budget", [](RunConfig& c, const std::string& v) { c.difficulty_budget = ParsePositiveInt(v); },
       [](const RunConfig& c) { return std::to_string(c.difficulty_budget); }},
      {"n_heads", [](RunConfig& c, const std::string& v) { c.n_heads = ParsePositiveInt(v); },
       [](const RunConfig& c) { return std::to_string(c.n_heads); }},
      {"beta",
       [](RunConfig& c, const std::string& v) {
         c.beta = ParseNumber<double>(v);
         if (!(c.beta > 0)) throw ConfigError("beta must be positive");
       },
       [](const RunConfig& c) { return Num(c.beta); }},
      {"refine_rounds", [](RunConfig& c, const std::string& v) { c.refine_rounds = ParsePositiveInt(v); },
       [](const RunConfig& c) { return std::to_string(c.refine_rounds); }},
      {"refine", [](RunConfig& c, const std::string& v) { c.refine = ParseBool(v); },
       [](const RunConfig& c) { return std::string(c.refine ? "true" : "false"); }},
      {"pass_counts",
       [](RunConfig& c, const std::string& v) {
         std::vector<int> counts;
         for (const std::string& item : SplitList(v)) counts.push_back(ParsePositiveInt(item));
         if (!std::is_sorted(counts.begin(), counts.end()) ||
             std::adjacent_find(counts.begin(), counts.end()) != counts.end()) {
           throw ConfigError("pass_counts must be strictly ascending");
         }
         c.pass_counts = std::move(counts);
       },
       [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.pass_counts, ",")); }},
      {"modes",
       [](RunConfig& c, const std::string& v) {
         auto modes = SplitList(v);
         for (const std::string& m : modes) {
           if (m != "noncot" && m != "cot" && m != "dynamic") {
             throw ConfigError("unknown mode '" + m + "' (noncot, cot, dynamic)");
           }
         }
         c.modes = std::move(modes);
       },
       [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.modes, ",")); }},
      {"target_cot_rate",
       [](RunConfig& c, const std::string& v) {
         c.target_cot_rate = ParseNumber<double>(v);
         if (!(c.target_cot_rate > 0 && c.target_cot_rate < 1)) {
           throw ConfigError("target_cot_rate must lie in (0, 1)");
         }
       },
       [](const RunConfig& c) { return Num(c.target_cot_rate); }},
      {"noise_sigma",
       [](RunConfig& c, const std::string& v) {
         c.noise_sigma = ParseNumber<double>(v);
         if (!(c.noise_sigma >= 0)) throw ConfigError("noise_sigma must be >= 0");
       },
       [](const RunConfig& c) { return Num(c.noise_sigma); }},
      {"prefix_len", [](RunConfig& c, const std::string& v) { c.prefix_len = static_cast<std::size_t>(ParsePositiveInt(v)); },
       [](const RunConfig& c) { return std::to_string(c.prefix_len); }},
      {"ngram", [](RunConfig& c, const std::string& v) { c.ngram = static_cast<std::size_t>(ParsePositiveInt(v)); },
       [](const RunConfig& c) { return std::to_string(c.ngram); }},
      {"reference_size", [](RunConfig& c, const std::string& v) { c.reference_size = static_cast<std::size_t>(ParsePositiveInt(v)); },
       [](const RunConfig& c) { return std::to_string(c.reference_size); }},
      {"dataset_total", [](RunConfig& c, const std::string& v) { c.dataset_total = ParsePositiveInt(v); },
       [](const RunConfig& c) { return std::to_string(c.dataset_total); }},
      {"noncot_ratio",
       [](RunConfig& c, const std::string& v) {
         c.noncot_ratio = ParseNumber<double>(v);
         if (!(c.noncot_ratio > 0 && c.noncot_ratio < 1)) throw ConfigError("noncot_ratio must lie in (0, 1)");
       },
       [](const RunConfig& c) { return Num(c.noncot_ratio); }},
      {"clip_eps",
       [](RunConfig& c, const std::string& v) {
         c.clip_eps = ParseNumber<double>(v);
         if (!(c.clip_eps > 0 && c.clip_eps < 1)) throw ConfigError("clip_eps must lie in (0, 1)");
       },
       [](const RunConfig& c) { return Num(c.clip_eps); }},
      {"learning_rate",
       [](RunConfig& c, const std::string& v) {
         c.learning_rate = ParseNumber<double>(v);
         if (!(c.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
       },
       [](const RunConfig& c) { return Num(c.learning_rate); }},
      {"epochs_per_batch", [](RunConfig& c, const std::string& v) { c.epochs_per_batch = ParsePositiveInt(v); },
       [](const RunConfig& c) { return std::to_string(c.epochs_per_batch); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.batch_size = ParsePositiveInt(v); },
       [](const RunConfig& c) { return std::to_string(c.batch_size); }},
      {"iterations", [](RunConfig& c, const std::string& v) { c.iterations = ParsePositiveInt(v); },
       [](const RunConfig& c) { return std::to_string(c.iterations); }},
      {"replicates", [](RunConfig& c, const std::string& v) { c.replicates = ParsePositiveInt(v); },
       [](const RunConfig& c) { return std::to_string(c.replicates); }},
  };
  return keys;
}

const KeySpec& FindKey(const std::string& name, int line) {
  for (const KeySpec& k : Keys()) {
    if (name == k.name) return k;
  }
  throw ConfigError(fmt::format("unknown key '{}'; valid keys: {}", name, fmt::join(ConfigKeys(), ", ")),
                    line);
}

void Apply(RunConfig& config, const std::string& key, const std::string& value, int line) {
  const KeySpec& spec = FindKey(key, line);
  try {
    spec.set(config, value);
  } catch (const ConfigError& e) {
    if (line > 0) throw ConfigError(key + ": " + e.what(), line);
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> names;
  for (const KeySpec& k : Keys()) names.emplace_back(k.name);
  return names;
}

RunConfig ParseConfig(const std::string& text, const ConfigOverrides& overrides,
                      bool require_seed) {
  RunConfig config;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string body = raw.substr(0, raw.find('#'));
    body = Trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + body + "'", line);
    const std::string key = Trim(body.substr(0, eq));
    const std::string value = Trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line);
    if (key == "run_seed" && value.empty()) {
      config.run_seed.reset();
      continue;
    }
    Apply(config, key, value, line);
  }
  for (const auto& [key, value] : overrides) Apply(config, key, value, 0);
  if (require_seed && !config.run_seed) {
    throw ConfigError("run_seed is required (set it in the config file or with --seed)");
  }
  return config;
}

std::string RenderConfig(const RunConfig& config) {
  std::string out;
  for (const KeySpec& k : Keys()) out += fmt::format("{} = {}\n", k.name, k.get(config));
  return out;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return RenderConfig(a) == RenderConfig(b);
}

}  // namespace econ
