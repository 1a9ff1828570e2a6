#include "blocksketch/rng.hpp"

#include <random>
#include <stdexcept>

namespace blocksketch::rng {

namespace {

// One round of the SplitMix64 finalizer, used here as a mixing hash.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Stream derive(std::uint64_t master, StreamId id, std::uint64_t index) {
  std::uint64_t h = mix(master);
  h = mix(h ^ static_cast<std::uint64_t>(id));
  h = mix(h ^ index);
  return Stream(h);
}

std::vector<Index64> random_permutation(Stream& stream, Index64 n) {
  if (n < 0) throw std::invalid_argument("random_permutation: negative length");
  std::vector<Index64> perm(static_cast<std::size_t>(n));
  for (Index64 i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Index64 i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index64> pick(0, i);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(stream))]);
  }
  return perm;
}

}  // namespace blocksketch::rng
