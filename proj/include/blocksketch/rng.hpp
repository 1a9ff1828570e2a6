#pragma once

// Deterministic, splittable randomness.
//
// Every random quantity in the library is drawn from a named stream derived
// from a 64-bit master seed.  A stream is a SplitMix64 generator: a 64-bit
// Weyl counter advanced by a fixed odd constant, with a bijective finalizer
// applied to each counter value.  Derivation hashes (master seed, stream id,
// index) into the initial counter, so streams never overlap by construction
// and consuming one stream cannot perturb another.
//
// Stream roster (the index parameter subdivides a role, e.g. per iteration):
//   Projection   dense projection entries (Haar normals, Rademacher signs, ...)
//   Signature    +-1 diagonal of the sign matrix D
//   Permutation  row permutations (garbling)
//   Sampling     block-index draws for sketches
//   Rounds       per-iteration worker runtimes in the straggler simulation
//   Data         synthetic dataset entries (matrix / weights / noise / masks)
//   Probe        internal deterministic probes (e.g. power-iteration start)
//   Trial        per-trial key draws in the secrecy frequency test

#include <cstdint>
#include <vector>

namespace blocksketch::rng {

enum class StreamId : std::uint64_t {
  Projection = 1,
  Signature = 2,
  Permutation = 3,
  Sampling = 4,
  Rounds = 5,
  Data = 6,
  Probe = 7,
  Trial = 8,
};

// SplitMix64 stream; satisfies UniformRandomBitGenerator so the standard
// <random> distributions can run on top of it.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(operator()() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

using Index64 = std::int64_t;

// Hash (master, id, index) into the initial counter of a fresh stream.
Stream derive(std::uint64_t master, StreamId id, std::uint64_t index = 0);

// Uniform random permutation of {0, ..., n-1} (Fisher-Yates, unbiased draws).
std::vector<Index64> random_permutation(Stream& stream, Index64 n);

}  // namespace blocksketch::rng
