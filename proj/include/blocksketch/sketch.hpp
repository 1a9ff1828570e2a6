#pragma once

// Block-subsampled orthonormal sketching.
//
// A sketch is built in two stages: a seeded N x N projection Pi (orthonormal
// for every kind except Rademacher and Gaussian), followed by a uniform
// with-replacement draw of q row blocks out of the K-block partition, each
// selected block scaled by sqrt(K/q).  The resulting operator S (r x N,
// r = q*tau) satisfies E[S^T S] = I_N over the block draw.

#include "blocksketch/rng.hpp"
#include "blocksketch/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace blocksketch::sketch {

enum class ProjectionKind {
  Identity,          // Pi = I (baseline / debugging)
  HaarOrthonormal,   // QR of a Gaussian matrix, Haar-distributed Q
  BlockSrht,         // Pi = H D: normalized Walsh-Hadamard times random signs
  GarbledBlockSrht,  // Pi = P H D: BlockSrht with a secret row permutation
  Rademacher,        // dense +-1/sqrt(N) entries (not orthonormal)
  GaussianDense,     // dense N(0, 1/N) entries (experiments only, not orthonormal)
};

std::string to_string(ProjectionKind kind);
ProjectionKind kind_from_string(const std::string& name);

// True for kinds with Pi^T Pi = I exactly.
bool is_orthonormal_kind(ProjectionKind kind);
// True for kinds realized through the Walsh-Hadamard transform (which require
// N to be a power of two).
bool is_hadamard_kind(ProjectionKind kind);

// A seeded N x N projection.  Hadamard kinds store only the +-1 signature
// (and the row permutation when garbled) and apply in O(N log N) per column;
// dense kinds materialize the matrix.
struct Projection {
  ProjectionKind kind = ProjectionKind::Identity;
  Index n = 0;
  std::uint64_t seed = 0;
  Vector signature;                       // diag of D, Hadamard kinds only
  std::vector<rng::Index64> permutation;  // garbled kind only
  Matrix dense;                           // Haar / Rademacher / Gaussian only

  Matrix apply(const Matrix& m) const;            // Pi * M
  Matrix apply_transpose(const Matrix& m) const;  // Pi^T * M

  bool orthonormal() const { return is_orthonormal_kind(kind); }

  // One-line text record "kind=<name> n=<N> seed=<seed>"; enough to rebuild
  // the projection exactly via build_projection (dense data is never stored).
  std::string record() const;
  static Projection from_record(const std::string& line);
};

// Deterministically builds the projection for (kind, n, seed).  Hadamard
// kinds require n to be a power of two; all kinds require n >= 2.
Projection build_projection(ProjectionKind kind, Index n, std::uint64_t seed);

// Materializes Pi as a dense N x N matrix (test/diagnostic use).
Matrix materialize(const Projection& p);

// Dimensions of a sketching configuration.
struct SketchConfig {
  Index n = 0;            // rows of A
  Index dim = 0;          // columns of A
  Index blocks = 0;       // K
  Index sketch_rows = 0;  // r = q * tau
  std::uint64_t seed = 0;
  ProjectionKind kind = ProjectionKind::BlockSrht;

  Index tau() const { return n / blocks; }
  Index sample_count() const { return sketch_rows / tau(); }  // q
  Partition partition() const { return Partition::contiguous(n, blocks); }

  // Throws dimension_error / precondition_error when the invariants fail:
  // K | N, tau | r, q > d / tau, and power-of-two N for Hadamard kinds.
  void validate() const;
};

// A with-replacement draw of q block indices (0-based, each in [0, K)).
struct BlockSample {
  std::vector<rng::Index64> indices;
  Index blocks = 0;  // K

  Index draws() const { return static_cast<Index>(indices.size()); }  // q
  // sqrt(K/q); scale^2 equals K/q as a ratio of the stored integers.
  double scale() const;
};

// Draws q block indices uniformly with replacement from the Sampling stream
// of `seed`.
BlockSample sample_blocks(const SketchConfig& cfg, std::uint64_t seed);

// Assembles the sketch of A: rows of scale * (Pi A) restricted to the sampled
// blocks, stacked in draw order; result is (q*tau) x A.cols().
Matrix assemble_sketch(const Projection& p, const BlockSample& sample, const Partition& part,
                       const Matrix& a);

// The explicit r x N sketch operator S = scale * Omega * Pi for the sampled
// blocks (materializes Pi; test/diagnostic use).
Matrix explicit_sketch_matrix(const Projection& p, const BlockSample& sample,
                              const Partition& part);

// Exact average of S^T S over all (K choose q) without-replacement q-subsets
// of blocks, with per-subset scale sqrt(K/q).  Enumerates every subset;
// throws capacity_error when (K choose q) exceeds 100000.  For orthonormal
// projections the result equals I_N.
Matrix gram_expectation_oracle(const Projection& p, const Partition& part, Index q);

}  // namespace blocksketch::sketch
