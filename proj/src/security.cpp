#include "blocksketch/security.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace blocksketch::security {

std::vector<rng::Index64> garble(std::uint64_t seed, Index n) {
  if (n < 1) throw dimension_error("garble: need n >= 1");
  rng::Stream stream = rng::derive(seed, rng::StreamId::Permutation);
  return rng::random_permutation(stream, n);
}

Ciphertext encrypt(const sketch::Projection& key, const Matrix& plaintext) {
  return Ciphertext{key.apply(plaintext), key.kind};
}

Matrix decrypt(const sketch::Projection& key, const Ciphertext& c) {
  return key.apply_transpose(c.data);
}

Matrix plaintext_u0() { return Matrix::Identity(2, 2); }

Matrix plaintext_u1() {
  const double h = 1.0 / std::sqrt(2.0);
  Matrix u(2, 2);
  u << h, h, h, -h;
  return u;
}

PlaintextLabel srht_distinguisher(const Matrix& ciphertext) {
  if (ciphertext.rows() != 2 || ciphertext.cols() != 2)
    throw dimension_error("srht_distinguisher: expects a 2x2 ciphertext");
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j)
      if (std::abs(ciphertext(i, j)) <= 1e-12) return PlaintextLabel::U1;
  return PlaintextLabel::U0;
}

FiniteOrthogroup FiniteOrthogroup::signed_permutations(Index n) {
  if (n < 1 || n > 4)
    throw dimension_error("signed_permutations: supported for 1 <= n <= 4");
  FiniteOrthogroup g;
  g.n = n;
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  do {
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      Matrix m = Matrix::Zero(n, n);
      for (Index i = 0; i < n; ++i) {
        const double sign = (mask >> i) & 1u ? -1.0 : 1.0;
        m(i, perm[static_cast<std::size_t>(i)]) = sign;
      }
      g.elements.push_back(std::move(m));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return g;
}

FiniteOrthogroup FiniteOrthogroup::diagonal_signs(Index n) {
  if (n < 1 || n > 8) throw dimension_error("diagonal_signs: supported for 1 <= n <= 8");
  FiniteOrthogroup g;
  g.n = n;
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    Matrix m = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = (mask >> i) & 1u ? -1.0 : 1.0;
    g.elements.push_back(std::move(m));
  }
  return g;
}

FiniteOrthogroup FiniteOrthogroup::trivial(Index n) {
  if (n < 1) throw dimension_error("trivial group: need n >= 1");
  FiniteOrthogroup g;
  g.n = n;
  g.elements.push_back(Matrix::Identity(n, n));
  return g;
}

void FiniteOrthogroup::validate(double tol) const {
  if (elements.empty()) throw closure_error("group: empty element list");
  const Matrix eye = Matrix::Identity(n, n);
  bool has_identity = false;
  for (const Matrix& m : elements) {
    if (m.rows() != n || m.cols() != n) throw closure_error("group: element dimension mismatch");
    if ((m.transpose() * m - eye).lpNorm<Eigen::Infinity>() > tol)
      throw closure_error("group: element is not orthonormal");
    if ((m - eye).lpNorm<Eigen::Infinity>() <= tol) has_identity = true;
  }
  if (!has_identity) throw closure_error("group: identity element missing");
  for (const Matrix& a : elements) {
    find(a.transpose(), tol);
    for (const Matrix& b : elements) find(a * b, tol);
  }
}

Index FiniteOrthogroup::find(const Matrix& m, double tol) const {
  for (std::size_t i = 0; i < elements.size(); ++i)
    if ((elements[i] - m).lpNorm<Eigen::Infinity>() <= tol) return static_cast<Index>(i);
  throw closure_error("group: matrix is not a group element");
}

namespace {

// Max pairwise total-variation distance between per-message histograms.
double max_pairwise_tv(const std::vector<std::vector<double>>& dists) {
  double worst = 0.0;
  for (std::size_t a = 0; a < dists.size(); ++a) {
    for (std::size_t b = a + 1; b < dists.size(); ++b) {
      double tv = 0.0;
      for (std::size_t k = 0; k < dists[a].size(); ++k)
        tv += std::abs(dists[a][k] - dists[b][k]);
      worst = std::max(worst, 0.5 * tv);
    }
  }
  return worst;
}

}  // namespace

double secrecy_frequency_test(const FiniteOrthogroup& g, Index trials, std::uint64_t seed) {
  if (g.size() > 256) throw capacity_error("secrecy test: |G| must be at most 256");
  if (trials < 100 * g.size())
    throw precondition_error("secrecy test: need trials >= 100 * |G|");
  const std::size_t order = static_cast<std::size_t>(g.size());
  std::vector<std::vector<double>> dists(order, std::vector<double>(order, 0.0));
  for (std::size_t m = 0; m < order; ++m) {
    rng::Stream stream = rng::derive(seed, rng::StreamId::Trial, static_cast<std::uint64_t>(m));
    std::uniform_int_distribution<std::size_t> pick(0, order - 1);
    for (Index t = 0; t < trials; ++t) {
      const std::size_t key = pick(stream);
      const Matrix cipher = g.elements[key] * g.elements[m];
      dists[m][static_cast<std::size_t>(g.find(cipher))] += 1.0;
    }
    for (double& p : dists[m]) p /= static_cast<double>(trials);
  }
  return max_pairwise_tv(dists);
}

double secrecy_exact_test(const FiniteOrthogroup& g) {
  if (g.size() > 512) throw capacity_error("secrecy test: |G| must be at most 512");
  const std::size_t order = static_cast<std::size_t>(g.size());
  std::vector<std::vector<double>> dists(order, std::vector<double>(order, 0.0));
  for (std::size_t m = 0; m < order; ++m) {
    for (std::size_t key = 0; key < order; ++key) {
      const Matrix cipher = g.elements[key] * g.elements[m];
      dists[m][static_cast<std::size_t>(g.find(cipher))] += 1.0;
    }
    for (double& p : dists[m]) p /= static_cast<double>(order);
  }
  return max_pairwise_tv(dists);
}

mpz_class ensemble_size(sketch::ProjectionKind kind, Index n) {
  if (n < 1) throw dimension_error("ensemble_size: need n >= 1");
  const unsigned long un = static_cast<unsigned long>(n);
  mpz_class count;
  switch (kind) {
    case sketch::ProjectionKind::BlockSrht:
      mpz_ui_pow_ui(count.get_mpz_t(), 2, un);
      return count;
    case sketch::ProjectionKind::GarbledBlockSrht: {
      mpz_ui_pow_ui(count.get_mpz_t(), 2, un);
      mpz_class fact;
      mpz_fac_ui(fact.get_mpz_t(), un);
      return count * fact;
    }
    case sketch::ProjectionKind::Rademacher:
      mpz_ui_pow_ui(count.get_mpz_t(), 2, un * un);
      return count;
    default:
      throw precondition_error("ensemble_size: kind has no finite sign/permutation ensemble");
  }
}

}  // namespace blocksketch::security
