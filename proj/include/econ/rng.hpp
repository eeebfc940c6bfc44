#pragma once

// Seed derivation and a small random-variate layer.
//
// All draws go through Rng so results depend only on std::mt19937_64 (whose
// output sequence is fixed by the standard) and on the code below, never on
// the standard library's distribution implementations.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace econ {

std::uint64_t Mix64(std::uint64_t x);
std::uint64_t Fnv1a64(std::string_view text);

// Derive an independent sub-seed for a named purpose ("outcome", "length", ...).
std::uint64_t DeriveSeed(std::uint64_t base, std::string_view purpose);
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t index);

// Identity of one attempt's random stream.
struct SeedPath {
  std::uint64_t run_seed = 0;
  std::string problem_id;
  std::optional<int> head_id;
  std::int64_t pass_index = 0;

  std::uint64_t Seed() const;

  friend bool operator==(const SeedPath&, const SeedPath&) = default;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(Mix64(seed)) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  // Uniform integer on [0, n). n must be > 0.
  std::uint64_t Below(std::uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }
  double Normal();
  double Gamma(double shape);
  double Beta(double a, double b);
  // Geometric on {1, 2, ...} with the given mean (>= 1).
  std::int64_t ShiftedGeometric(double mean);
  // Index drawn proportionally to weights (need not be normalized).
  std::size_t Categorical(std::span<const double> weights);

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> SampleWithoutReplacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace econ
