#include "econ/rng.hpp"

#include <cmath>
#include <numeric>

namespace econ {

std::uint64_t Mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t Fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t DeriveSeed(std::uint64_t base, std::string_view purpose) {
  return Mix64(base ^ Mix64(Fnv1a64(purpose)));
}

std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t index) {
  return Mix64(base ^ Mix64(index + 0x632be59bd9b4e019ULL));
}

std::uint64_t SeedPath::Seed() const {
  std::uint64_t s = Mix64(run_seed);
  s = Mix64(s ^ Fnv1a64(problem_id));
  // head_id absent and head_id = -1 must not collide with real heads.
  s = Mix64(s ^ (head_id ? static_cast<std::uint64_t>(*head_id) + 1 : 0));
  s = Mix64(s ^ static_cast<std::uint64_t>(pass_index) * 0xd1342543de82ef95ULL);
  return s;
}

double Rng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::Below(std::uint64_t n) {
  // Lemire-style rejection to avoid modulo bias.
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  const double u1 = 1.0 - Uniform();  // (0, 1]
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::Gamma(double shape) {
  if (shape < 1.0) {
    const double u = 1.0 - Uniform();
    return Gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = Normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - Uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double Rng::Beta(double a, double b) {
  const double x = Gamma(a);
  const double y = Gamma(b);
  return x / (x + y);
}

std::int64_t Rng::ShiftedGeometric(double mean) {
  if (mean <= 1.0) return 1;
  const double q = 1.0 / mean;
  const double u = 1.0 - Uniform();  // (0, 1]
  return 1 + static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-q)));
}

std::size_t Rng::Categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double target = Uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    target -= weights[i];
    if (target < 0.0) return i;
  }
  // Rounding left a sliver; fall back to the last positive weight.
  for (std::size_t i = weights.size(); i > 0; --i) {
    if (weights[i - 1] > 0.0) return i - 1;
  }
  return 0;
}

std::vector<std::size_t> Rng::SampleWithoutReplacement(std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(Below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace econ
