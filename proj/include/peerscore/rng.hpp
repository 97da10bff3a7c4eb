#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace peerscore {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for replicate `index` of an experiment seeded with `seed`.
/// Fixed forever: changing it changes every published output.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Seeded generator with platform-independent derived draws.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are NOT portable, so every derived
/// draw is implemented here:
///   - uniform01: top 53 bits of one engine word, times 2^-53.
///   - uniform_int(n): rejection sampling. Draw w until w < 2^64 - (2^64 mod n),
///     return w mod n.
///   - bernoulli(p): uniform01() < p.
///   - categorical(w): inverse CDF on one uniform01 draw, scanning w in index order.
///   - shuffle: Fisher-Yates from the last element down, swapping i with
///     uniform_int(i + 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01();
  std::uint64_t uniform_int(std::uint64_t n);
  bool bernoulli(double p) { return uniform01() < p; }
  int categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace peerscore
