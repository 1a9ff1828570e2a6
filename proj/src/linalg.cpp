#include "blocksketch/linalg.hpp"

#include "blocksketch/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace blocksketch::linalg {

namespace {

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void fwht_inplace(Eigen::Ref<Vector> v) {
  const Index n = v.size();
  if (!is_power_of_two(n)) throw dimension_error("fwht: length must be a positive power of two");
  // Radix-2 butterflies over strides 1, 2, 4, ...
  for (Index h = 1; h < n; h *= 2) {
    for (Index i = 0; i < n; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        const double x = v[j];
        const double y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
  v *= 1.0 / std::sqrt(static_cast<double>(n));
}

Matrix fwht_columns(Matrix m) {
  for (Index c = 0; c < m.cols(); ++c) fwht_inplace(m.col(c));
  return m;
}

Matrix orthonormal_basis(const Matrix& a) {
  if (a.rows() < a.cols() || a.cols() == 0)
    throw dimension_error("orthonormal_basis: need N >= d >= 1");
  const Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sigma = svd.singularValues();
  if (!(sigma[0] > 0.0) || sigma[sigma.size() - 1] < 1e-10 * sigma[0])
    throw rank_error("orthonormal_basis: input is numerically rank-deficient");

  const Index d = a.cols();
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), d);
  // Fix column signs so an already-orthonormal input is returned unchanged.
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

double spectral_norm(const Matrix& m, double tol) {
  if (m.size() == 0) throw dimension_error("spectral_norm: empty matrix");
  if (!(tol > 0.0)) throw dimension_error("spectral_norm: tolerance must be positive");
  if (m.lpNorm<Eigen::Infinity>() == 0.0) return 0.0;

  // Power iteration on M^T M with a fixed seeded start vector, so repeated
  // calls on identical input return identical values.
  rng::Stream probe = rng::derive(0x5EEDBA5Eu, rng::StreamId::Probe);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(m.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = gauss(probe);
  v.normalize();

  const Index cap = static_cast<Index>(
      std::ceil(10.0 * static_cast<double>(std::max(m.rows(), m.cols())) * std::log(1.0 / tol)));
  double estimate = 0.0;
  for (Index it = 0; it < cap; ++it) {
    Vector w = m * v;
    const double sigma = w.norm();
    if (sigma == 0.0) {
      // v landed in the null space; restart from a fresh probe direction.
      for (Index i = 0; i < v.size(); ++i) v[i] = gauss(probe);
      v.normalize();
      continue;
    }
    Vector next = m.transpose() * w;
    const double prev = estimate;
    estimate = sigma;
    v = next / next.norm();
    if (it > 0 && std::abs(estimate - prev) <= tol * estimate) return estimate;
  }
  throw convergence_error("spectral_norm: power iteration hit its cap", estimate);
}

double symmetric_spectral_norm(const Matrix& m) {
  if (m.size() == 0 || m.rows() != m.cols())
    throw dimension_error("symmetric_spectral_norm: need a square matrix");
  const double scale = 1.0 + m.lpNorm<Eigen::Infinity>();
  if ((m - m.transpose()).lpNorm<Eigen::Infinity>() > 1e-9 * scale)
    throw precondition_error("symmetric_spectral_norm: input is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  const Vector& vals = eig.eigenvalues();  // ascending
  return std::max(std::abs(vals(0)), std::abs(vals(vals.size() - 1)));
}

LeverageProfile leverage_profile(const Matrix& u, const Partition& part) {
  if (part.rows != u.rows()) throw dimension_error("leverage_profile: partition/U row mismatch");
  const Index d = u.cols();
  const Matrix gram = u.transpose() * u;
  const double defect = (gram - Matrix::Identity(d, d)).lpNorm<Eigen::Infinity>();
  if (defect > 1e-8)
    throw precondition_error("leverage_profile: input columns are not orthonormal");

  LeverageProfile profile;
  profile.row_scores.resize(static_cast<std::size_t>(u.rows()));
  for (Index i = 0; i < u.rows(); ++i)
    profile.row_scores[static_cast<std::size_t>(i)] = u.row(i).squaredNorm();

  profile.block_scores.resize(static_cast<std::size_t>(part.blocks));
  profile.normalized_blocks.resize(static_cast<std::size_t>(part.blocks));
  for (Index k = 0; k < part.blocks; ++k) {
    const auto [first, last] = part.block_range(k);
    double mass = 0.0;
    for (Index i = first; i < last; ++i) mass += profile.row_scores[static_cast<std::size_t>(i)];
    profile.block_scores[static_cast<std::size_t>(k)] = mass;
    profile.normalized_blocks[static_cast<std::size_t>(k)] = mass / static_cast<double>(d);
  }
  return profile;
}

std::vector<double> block_squared_norms(const Matrix& m, const Partition& part) {
  if (part.rows != m.rows()) throw dimension_error("block_squared_norms: partition/matrix mismatch");
  std::vector<double> scores(static_cast<std::size_t>(part.blocks));
  for (Index k = 0; k < part.blocks; ++k) {
    const auto [first, last] = part.block_range(k);
    scores[static_cast<std::size_t>(k)] = m.middleRows(first, last - first).squaredNorm();
  }
  return scores;
}

double gram_distortion(const Matrix& sketched_basis) {
  const Index d = sketched_basis.cols();
  if (d == 0) throw dimension_error("gram_distortion: empty basis");
  const Matrix residual =
      Matrix::Identity(d, d) - sketched_basis.transpose() * sketched_basis;
  return symmetric_spectral_norm(residual);
}

double embedding_distortion(const Matrix& u, const Matrix& s) {
  if (s.cols() != u.rows())
    throw dimension_error("embedding_distortion: sketch columns must match basis rows");
  return gram_distortion(s * u);
}

}  // namespace blocksketch::linalg
