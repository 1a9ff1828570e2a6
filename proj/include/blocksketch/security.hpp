#pragma once

// Security analysis of orthonormal projections used as one-time keys.
//
// Encrypting a data basis M as C = Pi * M hides M perfectly exactly when the
// key Pi is drawn uniformly from a group closed under the relevant products.
// This module provides: the secret row-permutation (garbling) primitive, a
// concrete distinguisher that breaks the plain sign-only Hadamard ensemble,
// finite orthonormal groups small enough to check Shannon secrecy by
// frequency counts, and exact counts of each key ensemble.

#include "blocksketch/sketch.hpp"
#include "blocksketch/types.hpp"

#include <gmpxx.h>

#include <cstdint>
#include <vector>

namespace blocksketch::security {

// Uniform secret permutation of {0..n-1}; identical to the permutation used
// by build_projection for the garbled kind with the same seed.
std::vector<rng::Index64> garble(std::uint64_t seed, Index n);

struct Ciphertext {
  Matrix data;
  sketch::ProjectionKind key_kind;
};

Ciphertext encrypt(const sketch::Projection& key, const Matrix& plaintext);
// Pi^T C; exact inverse of encrypt for orthonormal kinds.
Matrix decrypt(const sketch::Projection& key, const Ciphertext& c);

enum class PlaintextLabel { U0, U1 };

// The canonical 2x2 plaintext pair whose sign-only Hadamard ciphertexts are
// distinguishable: u0 = I_2 and u1 = H_hat_2.  Every ciphertext of u0 has
// four nonzero entries, every ciphertext of u1 contains two zeros,
// regardless of the sign key.
Matrix plaintext_u0();
Matrix plaintext_u1();

// Zero-entry test: returns U1 if the 2x2 ciphertext contains an entry equal
// to 0 within 1e-12, else U0.  Correct for every sign key on the canonical
// pair above, which is what breaks the sign-only ensemble.
PlaintextLabel srht_distinguisher(const Matrix& ciphertext);

// A finite group of orthonormal n x n matrices, listed explicitly.
struct FiniteOrthogroup {
  Index n = 0;
  std::vector<Matrix> elements;

  Index size() const { return static_cast<Index>(elements.size()); }

  // All P * D with P a permutation and D a +-1 diagonal (2^n * n! elements);
  // supported for n <= 4.
  static FiniteOrthogroup signed_permutations(Index n);
  // The +-1 diagonal subgroup only (2^n elements); supported for n <= 8.
  static FiniteOrthogroup diagonal_signs(Index n);
  // The trivial group {I_n}.
  static FiniteOrthogroup trivial(Index n);

  // Checks identity membership, orthonormality, and closure under products
  // and transposes (within tol); throws closure_error otherwise.
  void validate(double tol = 1e-10) const;

  // Index of the element equal to m within tol (max-abs); closure_error when
  // no element matches.
  Index find(const Matrix& m, double tol = 1e-8) const;
};

// Shannon-secrecy frequency test.  For every message M in G, draws `trials`
// uniform keys K from G and bins the ciphertext K*M back onto G; returns the
// maximum total-variation distance between the empirical ciphertext
// distributions of any two messages.  A secure group keeps the result near 0
// (the test threshold 3*sqrt(|G|/trials) covers sampling noise).  Requires
// |G| <= 256.
double secrecy_frequency_test(const FiniteOrthogroup& g, Index trials, std::uint64_t seed);

// Same statistic with keys enumerated instead of sampled; exactly 0 for any
// group, since K -> K*M permutes G.
double secrecy_exact_test(const FiniteOrthogroup& g);

// Exact size of the key ensemble of a projection kind at dimension n:
// 2^n sign patterns for the sign-only Hadamard kind, 2^n * n! for the garbled
// kind, 2^(n^2) sign matrices for Rademacher.  Other kinds are rejected
// (their ensembles are not finite).
mpz_class ensemble_size(sketch::ProjectionKind kind, Index n);

}  // namespace blocksketch::security
