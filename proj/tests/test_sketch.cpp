#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "blocksketch/linalg.hpp"
#include "blocksketch/rng.hpp"
#include "blocksketch/sketch.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace blocksketch;
using sketch::ProjectionKind;

namespace {

Matrix gaussian(std::uint64_t seed, Index rows, Index cols) {
  rng::Stream s = rng::derive(seed, rng::StreamId::Data);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(s);
  return m;
}

Matrix dense_hadamard(Index n) {
  Matrix h(1, 1);
  h << 1.0;
  for (Index size = 1; size < n; size *= 2) {
    Matrix next(2 * size, 2 * size);
    next.topLeftCorner(size, size) = h;
    next.topRightCorner(size, size) = h;
    next.bottomLeftCorner(size, size) = h;
    next.bottomRightCorner(size, size) = -h;
    h = std::move(next);
  }
  return h / std::sqrt(static_cast<double>(n));
}

const std::vector<ProjectionKind> kAllKinds = {
    ProjectionKind::Identity,   ProjectionKind::HaarOrthonormal, ProjectionKind::BlockSrht,
    ProjectionKind::GarbledBlockSrht, ProjectionKind::Rademacher, ProjectionKind::GaussianDense};

const std::vector<ProjectionKind> kOrthonormalKinds = {
    ProjectionKind::Identity, ProjectionKind::HaarOrthonormal, ProjectionKind::BlockSrht,
    ProjectionKind::GarbledBlockSrht};

}  // namespace

TEST_CASE("kind names round-trip and reject unknowns") {
  for (ProjectionKind kind : kAllKinds)
    CHECK(sketch::kind_from_string(sketch::to_string(kind)) == kind);
  CHECK_THROWS_AS(sketch::kind_from_string("fourier"), dimension_error);
}

TEST_CASE("identity projection applies as the identity map") {
  const auto p = sketch::build_projection(ProjectionKind::Identity, 10, 3);
  const Matrix m = gaussian(1, 10, 4);
  CHECK((p.apply(m) - m).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((p.apply_transpose(m) - m).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("a sign-free 2x2 transform is the normalized H_2") {
  sketch::Projection p;
  p.kind = ProjectionKind::BlockSrht;
  p.n = 2;
  p.signature = Vector(2);
  p.signature << 1.0, 1.0;
  const double h = 1.0 / std::sqrt(2.0);
  Matrix expected(2, 2);
  expected << h, h, h, -h;
  CHECK((sketch::materialize(p) - expected).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("garbling with the identity permutation reduces to the plain kind") {
  auto plain = sketch::build_projection(ProjectionKind::BlockSrht, 16, 5);
  sketch::Projection garbled;
  garbled.kind = ProjectionKind::GarbledBlockSrht;
  garbled.n = 16;
  garbled.signature = plain.signature;
  garbled.permutation.resize(16);
  for (rng::Index64 i = 0; i < 16; ++i) garbled.permutation[static_cast<std::size_t>(i)] = i;
  const Matrix m = gaussian(2, 16, 3);
  CHECK((garbled.apply(m) - plain.apply(m)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("Hadamard-kind apply matches the dense oracle") {
  const Index n = 32;
  const Matrix h = dense_hadamard(n);
  const Matrix m = gaussian(3, n, 4);
  {
    const auto p = sketch::build_projection(ProjectionKind::BlockSrht, n, 11);
    const Matrix dense = h * p.signature.asDiagonal() * m;
    CHECK((p.apply(m) - dense).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  {
    const auto p = sketch::build_projection(ProjectionKind::GarbledBlockSrht, n, 12);
    Matrix perm_matrix = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      perm_matrix(i, static_cast<Index>(p.permutation[static_cast<std::size_t>(i)])) = 1.0;
    const Matrix dense = perm_matrix * h * p.signature.asDiagonal() * m;
    CHECK((p.apply(m) - dense).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("orthonormal kinds are isometries with exact inverses") {
  for (ProjectionKind kind : kOrthonormalKinds) {
    const auto p = sketch::build_projection(kind, 64, 21);
    CHECK(p.orthonormal());
    const Matrix pi = sketch::materialize(p);
    CHECK(linalg::spectral_norm(Matrix(pi.transpose() * pi - Matrix::Identity(64, 64))) < 1e-10);

    const Matrix m = gaussian(4, 64, 2);
    CHECK(std::abs(p.apply(m).col(0).norm() - m.col(0).norm()) < 1e-12);
    CHECK((p.apply_transpose(p.apply(m)) - m).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  CHECK_FALSE(sketch::build_projection(ProjectionKind::Rademacher, 8, 1).orthonormal());
}

TEST_CASE("Rademacher entries are all +-1/sqrt(N)") {
  const Index n = 16;
  const auto p = sketch::build_projection(ProjectionKind::Rademacher, n, 9);
  const double mag = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      CHECK(std::abs(std::abs(p.dense(i, j)) - mag) < 1e-15);
}

TEST_CASE("build_projection is seed-deterministic") {
  for (ProjectionKind kind : kAllKinds) {
    const Matrix a = sketch::materialize(sketch::build_projection(kind, 16, 77));
    const Matrix b = sketch::materialize(sketch::build_projection(kind, 16, 77));
    CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
    if (kind != ProjectionKind::Identity) {
      const Matrix c = sketch::materialize(sketch::build_projection(kind, 16, 78));
      CHECK((a - c).lpNorm<Eigen::Infinity>() > 0.0);
    }
  }
}

TEST_CASE("build_projection validates its dimensions") {
  CHECK_THROWS_AS(sketch::build_projection(ProjectionKind::BlockSrht, 12, 1), dimension_error);
  CHECK_THROWS_AS(sketch::build_projection(ProjectionKind::HaarOrthonormal, 1, 1),
                  dimension_error);
}

TEST_CASE("projection records rebuild the exact projection") {
  for (ProjectionKind kind : kAllKinds) {
    const auto p = sketch::build_projection(kind, 8, 123456789);
    const auto q = sketch::Projection::from_record(p.record());
    CHECK(q.kind == p.kind);
    CHECK(q.n == p.n);
    CHECK(q.seed == p.seed);
    CHECK((sketch::materialize(q) - sketch::materialize(p)).lpNorm<Eigen::Infinity>() == 0.0);
  }
  CHECK_THROWS_AS(sketch::Projection::from_record("kind=haar n=8"), dimension_error);
}

TEST_CASE("SketchConfig validation enforces the dimension contract") {
  sketch::SketchConfig good{64, 4, 8, 32, 0, ProjectionKind::BlockSrht};
  CHECK_NOTHROW(good.validate());
  CHECK(good.tau() == 8);
  CHECK(good.sample_count() == 4);

  sketch::SketchConfig bad = good;
  bad.blocks = 7;  // K must divide N
  CHECK_THROWS_AS(bad.validate(), dimension_error);

  bad = good;
  bad.sketch_rows = 36;  // tau = 8 must divide r
  CHECK_THROWS_AS(bad.validate(), dimension_error);

  bad = good;
  bad.sketch_rows = 0;
  CHECK_THROWS_AS(bad.validate(), dimension_error);

  bad = good;
  bad.dim = 40;  // r <= d violates q > d/tau
  CHECK_THROWS_AS(bad.validate(), precondition_error);

  sketch::SketchConfig odd{60, 4, 6, 30, 0, ProjectionKind::BlockSrht};
  CHECK_THROWS_AS(odd.validate(), precondition_error);  // Hadamard needs power of two
  odd.kind = ProjectionKind::HaarOrthonormal;
  CHECK_NOTHROW(odd.validate());
}

TEST_CASE("sample_blocks draws deterministically and uniformly") {
  sketch::SketchConfig one{6, 1, 1, 18, 0, ProjectionKind::HaarOrthonormal};
  const auto all_same = sketch::sample_blocks(one, 5);
  REQUIRE(all_same.draws() == 3);
  for (auto idx : all_same.indices) CHECK(idx == 0);

  sketch::SketchConfig cfg{200, 2, 20, 50, 0, ProjectionKind::HaarOrthonormal};
  CHECK(sketch::sample_blocks(cfg, 1).scale() == doctest::Approx(2.0));  // sqrt(20/5)

  const auto s1 = sketch::sample_blocks(cfg, 42);
  const auto s2 = sketch::sample_blocks(cfg, 42);
  CHECK(s1.indices == s2.indices);

  // K=100, q=50: per-seed expected count per block is 0.5.
  sketch::SketchConfig freq{2000, 4, 100, 1000, 0, ProjectionKind::HaarOrthonormal};
  std::vector<double> counts(100, 0.0);
  const int seeds = 100000;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto s = sketch::sample_blocks(freq, static_cast<std::uint64_t>(seed));
    for (auto idx : s.indices) counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  for (double c : counts) CHECK(c / seeds == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("assemble_sketch with the identity projection and a full pass is A") {
  const Index n = 12, k = 4;
  const auto p = sketch::build_projection(ProjectionKind::Identity, n, 0);
  sketch::BlockSample sample;
  sample.blocks = k;
  for (rng::Index64 i = 0; i < k; ++i) sample.indices.push_back(i);
  const Matrix a = gaussian(6, n, 3);
  const Matrix s = sketch::assemble_sketch(p, sample, Partition::contiguous(n, k), a);
  REQUIRE(s.rows() == n);  // q * tau = r = N here, scale 1
  CHECK((s - a).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("assemble_sketch equals the explicit operator product") {
  // Spot instance from the contract...
  {
    sketch::SketchConfig cfg{8, 2, 4, 4, 0, ProjectionKind::BlockSrht};
    const auto p = sketch::build_projection(cfg.kind, cfg.n, 31);
    const auto sample = sketch::sample_blocks(cfg, 32);
    const Matrix a = gaussian(7, 8, 2);
    const Matrix fast = sketch::assemble_sketch(p, sample, cfg.partition(), a);
    const Matrix s = sketch::explicit_sketch_matrix(p, sample, cfg.partition());
    CHECK((fast - s * a).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  // ...and a broad sweep over sizes, kinds, and seeds.
  for (ProjectionKind kind : kAllKinds) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Index n = 16 << (seed % 3);  // 16, 32, 64
      sketch::SketchConfig cfg{n, 3, n / 4, n / 2, 0, kind};
      const auto p = sketch::build_projection(kind, n, 1000 + seed);
      const auto sample = sketch::sample_blocks(cfg, 2000 + seed);
      const Matrix a = gaussian(3000 + seed, n, 3);
      const Matrix fast = sketch::assemble_sketch(p, sample, cfg.partition(), a);
      REQUIRE(fast.rows() == cfg.sketch_rows);
      const Matrix s = sketch::explicit_sketch_matrix(p, sample, cfg.partition());
      CHECK((fast - s * a).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
}

TEST_CASE("gram_expectation_oracle identities") {
  // q = K: a single subset, Gram of the full projection.
  {
    const auto p = sketch::build_projection(ProjectionKind::HaarOrthonormal, 8, 41);
    const Matrix mean = sketch::gram_expectation_oracle(p, Partition::contiguous(8, 4), 4);
    CHECK((mean - Matrix::Identity(8, 8)).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  // Identity projection, K=2, q=1: average of the two block Grams.
  {
    const auto p = sketch::build_projection(ProjectionKind::Identity, 4, 0);
    const Matrix mean = sketch::gram_expectation_oracle(p, Partition::contiguous(4, 2), 1);
    CHECK((mean - Matrix::Identity(4, 4)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  // Orthonormal kinds at the contract dimensions (tau = 2, q = K/2).
  for (ProjectionKind kind : {ProjectionKind::HaarOrthonormal, ProjectionKind::BlockSrht,
                              ProjectionKind::GarbledBlockSrht}) {
    const Index n = sketch::is_hadamard_kind(kind) ? 16 : 12;
    const auto p = sketch::build_projection(kind, n, 43);
    const Matrix mean = sketch::gram_expectation_oracle(p, Partition::contiguous(n, n / 2), n / 4);
    CHECK((mean - Matrix::Identity(n, n)).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("gram_expectation_oracle rejects oversized enumerations") {
  const auto p = sketch::build_projection(ProjectionKind::HaarOrthonormal, 60, 44);
  // (30 choose 15) = 155117520 >> 100000.
  CHECK_THROWS_AS(sketch::gram_expectation_oracle(p, Partition::contiguous(60, 30), 15),
                  capacity_error);
}

TEST_CASE("randomized kinds flatten a concentrated basis: block-score bound") {
  // Worst-case U: all leverage on the first block.  After projection every
  // block score must sit below C^2 d log(Nd/delta) tau / N.
  const Index n = 2048, d = 32, k = 64;
  const Index tau = n / k;
  const double delta = 0.05;
  const double log_term = std::log(static_cast<double>(n * d) / delta);
  const double c2 = 2.0 + std::log(16.0) / log_term;
  const double bound =
      c2 * static_cast<double>(d) * log_term * static_cast<double>(tau) / static_cast<double>(n);
  const Matrix u = Matrix::Identity(n, n).leftCols(d);
  const Partition part = Partition::contiguous(n, k);

  for (ProjectionKind kind : {ProjectionKind::BlockSrht, ProjectionKind::GarbledBlockSrht,
                              ProjectionKind::Rademacher}) {
    int pass = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto p = sketch::build_projection(kind, n, 5000 + seed);
      const auto scores = linalg::block_squared_norms(p.apply(u), part);
      bool ok = true;
      for (double v : scores) ok = ok && v <= bound;
      pass += ok ? 1 : 0;
    }
    CHECK(pass == 20);
  }
}

TEST_CASE("subsampled block sketches embed a random subspace") {
  // Distortion below 0.5 in at least 90% of seeded trials.
  const Index n = 1024, d = 16, k = 64, q = 32;
  sketch::SketchConfig cfg{n, d, k, q * (n / k), 0, ProjectionKind::BlockSrht};
  int pass = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix u = linalg::orthonormal_basis(gaussian(6000 + seed, n, d));
    const auto p = sketch::build_projection(cfg.kind, n, 7000 + seed);
    const auto sample = sketch::sample_blocks(cfg, 8000 + seed);
    const Matrix su = sketch::assemble_sketch(p, sample, cfg.partition(), u);
    pass += linalg::gram_distortion(su) < 0.5 ? 1 : 0;
  }
  CHECK(pass >= 45);
}
