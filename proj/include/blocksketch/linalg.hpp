#pragma once

// Core dense linear algebra: the normalized fast Walsh-Hadamard transform,
// orthonormal range bases, a power-iteration spectral norm, leverage-score
// profiles over row blocks, and the subspace-embedding distortion metric.

#include "blocksketch/types.hpp"

#include <vector>

namespace blocksketch::linalg {

// In-place normalized Walsh-Hadamard transform of a length-2^k vector:
// v <- (1/sqrt(N)) * H_N v where H_N = H_2 tensor ... tensor H_2 and
// H_2 = [[1, 1], [1, -1]].  O(N log N); the transform is an involution and
// preserves the Euclidean norm.  Throws dimension_error unless the length is
// a positive power of two.
void fwht_inplace(Eigen::Ref<Vector> v);

// Applies fwht_inplace to every column of M (returns the transformed copy).
Matrix fwht_columns(Matrix m);

// Orthonormal basis U (N x d) of the column span of A (N x d, N >= d), via
// Householder QR with column signs fixed so an already-orthonormal input is
// returned unchanged.  Throws rank_error when the smallest singular value
// falls below 1e-10 times the largest (numerically rank-deficient input).
Matrix orthonormal_basis(const Matrix& a);

// Largest singular value by power iteration on M^T M with a fixed seeded
// start vector; converges to relative tolerance `tol`, iteration cap
// 10 * max(rows, cols) * log(1/tol).  Returns 0 for the zero matrix.  Throws
// convergence_error (carrying the last estimate) if the cap is reached.
double spectral_norm(const Matrix& m, double tol = 1e-8);

// Largest-magnitude eigenvalue of a symmetric matrix, by dense
// eigendecomposition.  Exact even when the top eigenvalue magnitudes are
// tied (where power iteration stalls); used by the contraction and
// distortion diagnostics.  Throws dimension_error for non-square input and
// precondition_error when the matrix is not symmetric.
double symmetric_spectral_norm(const Matrix& m);

// Leverage scores of an orthonormal basis U over a row partition.
struct LeverageProfile {
  std::vector<double> row_scores;         // l_i = ||U_(i)||^2, size N
  std::vector<double> block_scores;       // block Frobenius mass, size K
  std::vector<double> normalized_blocks;  // block_scores / d, size K
};

// Computes the profile; requires U orthonormal (||U^T U - I||_max <= 1e-8,
// else precondition_error) and a partition with part.rows == U.rows().
LeverageProfile leverage_profile(const Matrix& u, const Partition& part);

// Squared Frobenius mass of each row block of M (no orthonormality
// precondition; equals the block leverage scores when M is orthonormal).
std::vector<double> block_squared_norms(const Matrix& m, const Partition& part);

// ||I_d - G^T G||_2 for an already-sketched basis G = S U (r x d).
double gram_distortion(const Matrix& sketched_basis);

// l2 subspace-embedding distortion ||I_d - (S U)^T (S U)||_2 of an explicit
// sketch operator S (r x N) applied to an orthonormal basis U (N x d).
double embedding_distortion(const Matrix& u, const Matrix& s);

}  // namespace blocksketch::linalg
