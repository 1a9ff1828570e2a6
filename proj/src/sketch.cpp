#include "blocksketch/sketch.hpp"

#include "blocksketch/linalg.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace blocksketch::sketch {

namespace {

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

// (K choose q) with a hard cap; throws capacity_error beyond it.
std::uint64_t binomial_capped(Index k, Index q, std::uint64_t cap) {
  std::uint64_t value = 1;
  // C(k, q) = prod_{i=1..q} (k - q + i) / i, exact at every step.
  for (Index i = 1; i <= q; ++i) {
    value = value * static_cast<std::uint64_t>(k - q + i) / static_cast<std::uint64_t>(i);
    if (value > cap)
      throw capacity_error("gram_expectation_oracle: (K choose q) exceeds enumeration cap");
  }
  return value;
}

Vector random_signs(rng::Stream& stream, Index n) {
  Vector signs(n);
  for (Index i = 0; i < n; ++i) signs[i] = (stream() & 1u) ? 1.0 : -1.0;
  return signs;
}

}  // namespace

std::string to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::Identity: return "identity";
    case ProjectionKind::HaarOrthonormal: return "haar";
    case ProjectionKind::BlockSrht: return "block-srht";
    case ProjectionKind::GarbledBlockSrht: return "garbled-block-srht";
    case ProjectionKind::Rademacher: return "rademacher";
    case ProjectionKind::GaussianDense: return "gaussian";
  }
  throw dimension_error("to_string: unknown projection kind");
}

ProjectionKind kind_from_string(const std::string& name) {
  if (name == "identity") return ProjectionKind::Identity;
  if (name == "haar") return ProjectionKind::HaarOrthonormal;
  if (name == "block-srht") return ProjectionKind::BlockSrht;
  if (name == "garbled-block-srht") return ProjectionKind::GarbledBlockSrht;
  if (name == "rademacher") return ProjectionKind::Rademacher;
  if (name == "gaussian") return ProjectionKind::GaussianDense;
  throw dimension_error("kind_from_string: unknown projection kind '" + name + "'");
}

bool is_orthonormal_kind(ProjectionKind kind) {
  return kind == ProjectionKind::Identity || kind == ProjectionKind::HaarOrthonormal ||
         kind == ProjectionKind::BlockSrht || kind == ProjectionKind::GarbledBlockSrht;
}

bool is_hadamard_kind(ProjectionKind kind) {
  return kind == ProjectionKind::BlockSrht || kind == ProjectionKind::GarbledBlockSrht;
}

Matrix Projection::apply(const Matrix& m) const {
  if (m.rows() != n) throw dimension_error("projection apply: row mismatch");
  switch (kind) {
    case ProjectionKind::Identity:
      return m;
    case ProjectionKind::BlockSrht:
      return linalg::fwht_columns(signature.asDiagonal() * m);
    case ProjectionKind::GarbledBlockSrht: {
      const Matrix h = linalg::fwht_columns(signature.asDiagonal() * m);
      Matrix out(n, m.cols());
      // Row i of the output is row permutation[i] of H D M (P selects rows).
      for (Index i = 0; i < n; ++i)
        out.row(i) = h.row(static_cast<Index>(permutation[static_cast<std::size_t>(i)]));
      return out;
    }
    case ProjectionKind::HaarOrthonormal:
    case ProjectionKind::Rademacher:
    case ProjectionKind::GaussianDense:
      return dense * m;
  }
  throw dimension_error("projection apply: unknown kind");
}

Matrix Projection::apply_transpose(const Matrix& m) const {
  if (m.rows() != n) throw dimension_error("projection apply_transpose: row mismatch");
  switch (kind) {
    case ProjectionKind::Identity:
      return m;
    case ProjectionKind::BlockSrht:
      // (H D)^T = D H, and H is symmetric.
      return signature.asDiagonal() * linalg::fwht_columns(m);
    case ProjectionKind::GarbledBlockSrht: {
      // (P H D)^T = D H P^T; P^T undoes the row selection.
      Matrix unpermuted(n, m.cols());
      for (Index i = 0; i < n; ++i)
        unpermuted.row(static_cast<Index>(permutation[static_cast<std::size_t>(i)])) = m.row(i);
      return signature.asDiagonal() * linalg::fwht_columns(std::move(unpermuted));
    }
    case ProjectionKind::HaarOrthonormal:
    case ProjectionKind::Rademacher:
    case ProjectionKind::GaussianDense:
      return dense.transpose() * m;
  }
  throw dimension_error("projection apply_transpose: unknown kind");
}

std::string Projection::record() const {
  std::ostringstream out;
  out << "kind=" << to_string(kind) << " n=" << n << " seed=" << seed;
  return out.str();
}

Projection Projection::from_record(const std::string& line) {
  std::istringstream in(line);
  std::string kind_field, n_field, seed_field;
  if (!(in >> kind_field >> n_field >> seed_field) || kind_field.rfind("kind=", 0) != 0 ||
      n_field.rfind("n=", 0) != 0 || seed_field.rfind("seed=", 0) != 0)
    throw dimension_error("projection record: malformed line '" + line + "'");
  const ProjectionKind kind = kind_from_string(kind_field.substr(5));
  const Index n = static_cast<Index>(std::stoll(n_field.substr(2)));
  const std::uint64_t seed = std::stoull(seed_field.substr(5));
  return build_projection(kind, n, seed);
}

Projection build_projection(ProjectionKind kind, Index n, std::uint64_t seed) {
  if (n < 2) throw dimension_error("build_projection: need n >= 2");
  if (is_hadamard_kind(kind) && !is_power_of_two(n))
    throw dimension_error("build_projection: Hadamard kinds require power-of-two n");

  Projection p;
  p.kind = kind;
  p.n = n;
  p.seed = seed;

  std::normal_distribution<double> gauss(0.0, 1.0);
  switch (kind) {
    case ProjectionKind::Identity:
      break;
    case ProjectionKind::BlockSrht: {
      rng::Stream signs = rng::derive(seed, rng::StreamId::Signature);
      p.signature = random_signs(signs, n);
      break;
    }
    case ProjectionKind::GarbledBlockSrht: {
      rng::Stream signs = rng::derive(seed, rng::StreamId::Signature);
      p.signature = random_signs(signs, n);
      rng::Stream perm = rng::derive(seed, rng::StreamId::Permutation);
      p.permutation = rng::random_permutation(perm, n);
      break;
    }
    case ProjectionKind::HaarOrthonormal: {
      rng::Stream entries = rng::derive(seed, rng::StreamId::Projection);
      Matrix g(n, n);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) g(i, j) = gauss(entries);
      Eigen::HouseholderQR<Matrix> qr(g);
      Matrix q = qr.householderQ() * Matrix::Identity(n, n);
      const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
      // Fixing sign(diag R) > 0 makes Q exactly Haar-distributed.
      for (Index j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
      p.dense = std::move(q);
      break;
    }
    case ProjectionKind::Rademacher: {
      rng::Stream entries = rng::derive(seed, rng::StreamId::Projection);
      const double scale = 1.0 / std::sqrt(static_cast<double>(n));
      p.dense.resize(n, n);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) p.dense(i, j) = (entries() & 1u) ? scale : -scale;
      break;
    }
    case ProjectionKind::GaussianDense: {
      rng::Stream entries = rng::derive(seed, rng::StreamId::Projection);
      const double scale = 1.0 / std::sqrt(static_cast<double>(n));
      p.dense.resize(n, n);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) p.dense(i, j) = scale * gauss(entries);
      break;
    }
  }
  return p;
}

Matrix materialize(const Projection& p) { return p.apply(Matrix::Identity(p.n, p.n)); }

void SketchConfig::validate() const {
  if (n <= 0 || dim <= 0 || blocks <= 0 || sketch_rows <= 0)
    throw dimension_error("sketch config: dimensions must be positive");
  if (n % blocks != 0) throw dimension_error("sketch config: K must divide N");
  const Index t = tau();
  if (sketch_rows % t != 0) throw dimension_error("sketch config: tau must divide r");
  if (sample_count() * t != sketch_rows)
    throw dimension_error("sketch config: r must equal q * tau");
  // q > d / tau, equivalently r > d with integer dimensions.
  if (sketch_rows <= dim) throw precondition_error("sketch config: need q > d / tau (r > d)");
  if (is_hadamard_kind(kind) && !is_power_of_two(n))
    throw precondition_error("sketch config: Hadamard kinds require power-of-two N");
}

double BlockSample::scale() const {
  if (indices.empty() || blocks <= 0) throw dimension_error("block sample: empty sample");
  return std::sqrt(static_cast<double>(blocks) / static_cast<double>(draws()));
}

BlockSample sample_blocks(const SketchConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  BlockSample sample;
  sample.blocks = cfg.blocks;
  const Index q = cfg.sample_count();
  sample.indices.resize(static_cast<std::size_t>(q));
  rng::Stream stream = rng::derive(seed, rng::StreamId::Sampling);
  std::uniform_int_distribution<rng::Index64> pick(0, cfg.blocks - 1);
  for (Index i = 0; i < q; ++i) sample.indices[static_cast<std::size_t>(i)] = pick(stream);
  return sample;
}

Matrix assemble_sketch(const Projection& p, const BlockSample& sample, const Partition& part,
                       const Matrix& a) {
  if (p.n != part.rows) throw dimension_error("assemble_sketch: projection/partition mismatch");
  if (a.rows() != part.rows) throw dimension_error("assemble_sketch: matrix/partition mismatch");
  if (sample.blocks != part.blocks)
    throw dimension_error("assemble_sketch: sample drawn from a different partition");
  const Matrix projected = p.apply(a);
  const Index tau = part.block_rows();
  const double scale = sample.scale();
  Matrix out(sample.draws() * tau, a.cols());
  for (Index i = 0; i < sample.draws(); ++i) {
    const auto [first, last] = part.block_range(
        static_cast<Index>(sample.indices[static_cast<std::size_t>(i)]));
    out.middleRows(i * tau, tau) = scale * projected.middleRows(first, last - first);
  }
  return out;
}

Matrix explicit_sketch_matrix(const Projection& p, const BlockSample& sample,
                              const Partition& part) {
  return assemble_sketch(p, sample, part, Matrix::Identity(part.rows, part.rows));
}

Matrix gram_expectation_oracle(const Projection& p, const Partition& part, Index q) {
  if (p.n != part.rows) throw dimension_error("gram oracle: projection/partition mismatch");
  if (q < 1 || q > part.blocks) throw dimension_error("gram oracle: need 1 <= q <= K");
  const std::uint64_t total = binomial_capped(part.blocks, q, 100000);

  // Per-block Gram contributions of Pi; each subset's S^T S is (K/q) times
  // the sum over its blocks.
  const Matrix pi = materialize(p);
  std::vector<Matrix> block_grams(static_cast<std::size_t>(part.blocks));
  for (Index k = 0; k < part.blocks; ++k) {
    const auto [first, last] = part.block_range(k);
    const Matrix rows = pi.middleRows(first, last - first);
    block_grams[static_cast<std::size_t>(k)] = rows.transpose() * rows;
  }

  Matrix accum = Matrix::Zero(p.n, p.n);
  std::vector<Index> subset(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) subset[static_cast<std::size_t>(i)] = i;
  const double weight = static_cast<double>(part.blocks) / static_cast<double>(q);
  std::uint64_t visited = 0;
  while (true) {
    Matrix gram = Matrix::Zero(p.n, p.n);
    for (Index i : subset) gram += block_grams[static_cast<std::size_t>(i)];
    accum += weight * gram;
    ++visited;
    // Advance to the next ascending q-subset of {0..K-1}.
    Index pos = q - 1;
    while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == part.blocks - q + pos) --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (Index i = pos + 1; i < q; ++i)
      subset[static_cast<std::size_t>(i)] = subset[static_cast<std::size_t>(i - 1)] + 1;
  }
  if (visited != total)
    throw capacity_error("gram oracle: subset enumeration mismatch");
  return accum / static_cast<double>(total);
}

}  // namespace blocksketch::sketch
