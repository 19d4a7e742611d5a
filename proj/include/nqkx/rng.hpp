#pragma once

#include <cstdint>
#include <random>

namespace nqkx {

// Deterministic randomness source. Every operation that needs randomness
// takes one of these explicitly; nothing in the library reads global state.
//
// split() derives an independent child stream from a counter, so parallel
// trials can each own their own stream while the whole run stays
// reproducible from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t word() { return engine_(); }

  bool bit() { return (engine_() >> 63) != 0; }

  // Uniform integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
    return dist(engine_);
  }

  Rng split(std::uint64_t stream) {
    // splitmix64 finalizer over (fresh word, stream index)
    std::uint64_t z = word() + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nqkx
