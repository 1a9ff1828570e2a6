#include "blocksketch/sim.hpp"

#include "blocksketch/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace blocksketch::sim {

namespace {

constexpr double kDivergenceGuard = 1e12;

// Shared per-step bookkeeping for every solver loop.
IterationRecord make_record(const Dataset& data, const Vector& x, const Vector& x_star,
                            const Vector& gradient, std::vector<rng::Index64> responders) {
  IterationRecord rec;
  rec.responders = std::move(responders);
  rec.gradient_norm = gradient.norm();
  rec.residual_error = (x - x_star).norm();
  rec.objective = (data.A * x - data.b).squaredNorm();
  return rec;
}

void check_divergence(const char* who, SolverState& state) {
  const IterationRecord& rec = state.history.back();
  if (!std::isfinite(rec.residual_error) || !std::isfinite(rec.objective) ||
      rec.residual_error > kDivergenceGuard) {
    SolverState snapshot = state;
    throw divergence_error(std::string(who) + ": residual passed the divergence guard",
                           std::move(snapshot));
  }
}

}  // namespace

void StragglerModel::validate() const {
  if (workers < 1) throw dimension_error("straggler model: need at least one worker");
  if (wait_for < 1 || wait_for > workers)
    throw dimension_error("straggler model: need 1 <= q <= workers");
  if (const auto* fixed = std::get_if<DeterministicRuntimes>(&law)) {
    if (static_cast<Index>(fixed->seconds.size()) != workers)
      throw dimension_error("straggler model: one deterministic runtime per worker");
  } else {
    const auto& exp = std::get<ShiftedExponential>(law);
    if (exp.shift < 0.0 || !(exp.rate > 0.0))
      throw dimension_error("straggler model: need shift >= 0 and rate > 0");
  }
}

std::vector<rng::Index64> simulate_round(const StragglerModel& model, std::uint64_t seed,
                                         Index iteration) {
  model.validate();
  if (iteration < 0) throw dimension_error("simulate_round: negative iteration");

  std::vector<double> runtimes(static_cast<std::size_t>(model.workers));
  if (const auto* fixed = std::get_if<DeterministicRuntimes>(&model.law)) {
    runtimes = fixed->seconds;
  } else {
    const auto& law = std::get<ShiftedExponential>(model.law);
    rng::Stream stream =
        rng::derive(seed, rng::StreamId::Rounds, static_cast<std::uint64_t>(iteration));
    std::exponential_distribution<double> tail(law.rate);
    for (double& t : runtimes) t = law.shift + tail(stream);
  }

  // Order by (runtime, worker index); the first q are the responders.
  std::vector<rng::Index64> order(static_cast<std::size_t>(model.workers));
  for (Index i = 0; i < model.workers; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](rng::Index64 a, rng::Index64 b) {
    const double ta = runtimes[static_cast<std::size_t>(a)];
    const double tb = runtimes[static_cast<std::size_t>(b)];
    return ta < tb || (ta == tb && a < b);
  });
  order.resize(static_cast<std::size_t>(model.wait_for));
  std::sort(order.begin(), order.end());
  return order;
}

EncodedShards encode_distribute(const Matrix& a, const Vector& b, sketch::Projection p,
                                const Partition& part, Index r) {
  if (a.rows() != part.rows) throw dimension_error("encode: matrix/partition mismatch");
  if (b.size() != a.rows()) throw dimension_error("encode: label length mismatch");
  if (p.n != part.rows) throw dimension_error("encode: projection/partition mismatch");
  const Index tau = part.block_rows();
  if (r < tau || r % tau != 0) throw dimension_error("encode: tau must divide r, r >= tau");

  EncodedShards shards;
  shards.part = part;
  shards.scale = std::sqrt(static_cast<double>(part.rows) / static_cast<double>(r));

  Matrix stacked(a.rows(), a.cols() + 1);
  stacked.leftCols(a.cols()) = a;
  stacked.col(a.cols()) = b;
  const Matrix encoded = shards.scale * p.apply(stacked);
  shards.projection = std::move(p);

  shards.features.reserve(static_cast<std::size_t>(part.blocks));
  shards.labels.reserve(static_cast<std::size_t>(part.blocks));
  for (Index k = 0; k < part.blocks; ++k) {
    const auto [first, last] = part.block_range(k);
    shards.features.push_back(encoded.block(first, 0, last - first, a.cols()));
    shards.labels.push_back(encoded.block(first, a.cols(), last - first, 1));
  }
  return shards;
}

Vector aggregated_gradient(const EncodedShards& shards, const std::vector<rng::Index64>& responders,
                           const Vector& x) {
  if (responders.empty()) throw dimension_error("aggregated_gradient: empty responder set");
  if (x.size() != shards.dim()) throw dimension_error("aggregated_gradient: x dimension mismatch");
  std::vector<rng::Index64> ordered = responders;
  std::sort(ordered.begin(), ordered.end());
  Vector g = Vector::Zero(x.size());
  for (rng::Index64 j : ordered) {
    if (j < 0 || j >= shards.count())
      throw dimension_error("aggregated_gradient: responder index out of range");
    const Matrix& aj = shards.features[static_cast<std::size_t>(j)];
    const Vector& bj = shards.labels[static_cast<std::size_t>(j)];
    g.noalias() += 2.0 * (aj.transpose() * (aj * x - bj));
  }
  return g;
}

Vector ssd_step(const EncodedShards& shards, const std::vector<rng::Index64>& responders,
                const Vector& x, const StepRule& rule) {
  const Vector g = aggregated_gradient(shards, responders, x);
  return x - (rule.effective() / static_cast<double>(shards.part.rows)) * g;
}

SolverState ssd_run(const Dataset& data, const EncodedShards& shards, const StragglerModel& model,
                    const Vector& x0, const SsdOptions& opt) {
  data.validate();
  model.validate();
  if (shards.part.rows != data.part.rows || shards.part.blocks != data.part.blocks)
    throw dimension_error("ssd_run: shard/dataset partition mismatch");
  if (model.workers != shards.count())
    throw dimension_error("ssd_run: one worker per shard required");
  if (x0.size() != data.A.cols()) throw dimension_error("ssd_run: x0 dimension mismatch");
  if (opt.steps < 0) throw dimension_error("ssd_run: negative step count");

  SolverState state;
  state.rule = opt.rule;
  state.x = x0;
  state.x_star = opt.x_star ? *opt.x_star : least_squares_solve(data.A, data.b);
  state.history.reserve(static_cast<std::size_t>(opt.steps));

  // Induced per-round sketch rows are scale * (Pi A) block rows; materialized
  // only when contraction factors are requested.
  Matrix projected_rows;
  if (opt.record_contraction)
    projected_rows = shards.scale * sketch::materialize(shards.projection);

  const double n = static_cast<double>(data.part.rows);
  for (Index t = 0; t < opt.steps; ++t) {
    const std::vector<rng::Index64> responders = simulate_round(model, opt.seed, t);
    const Vector g = aggregated_gradient(shards, responders, state.x);
    state.x -= (opt.rule.effective() / n) * g;

    IterationRecord rec = make_record(data, state.x, state.x_star, g, responders);
    if (opt.record_contraction) {
      const Index tau = shards.part.block_rows();
      Matrix s(static_cast<Index>(responders.size()) * tau, data.part.rows);
      for (std::size_t i = 0; i < responders.size(); ++i) {
        const auto [first, last] = shards.part.block_range(static_cast<Index>(responders[i]));
        s.middleRows(static_cast<Index>(i) * tau, tau) =
            projected_rows.middleRows(first, last - first);
      }
      rec.contraction = contraction_factor(data.A, s, opt.rule.effective() / n);
    }
    state.history.push_back(std::move(rec));
    check_divergence("ssd_run", state);
  }
  return state;
}

SolverState baseline_sd(const Dataset& data, const Vector& x0, double xi, Index steps,
                        std::optional<Vector> x_star) {
  data.validate();
  if (x0.size() != data.A.cols()) throw dimension_error("baseline_sd: x0 dimension mismatch");
  if (steps < 0) throw dimension_error("baseline_sd: negative step count");

  SolverState state;
  state.rule = StepRule::fixed(xi);
  state.x = x0;
  state.x_star = x_star ? *x_star : least_squares_solve(data.A, data.b);
  const double n = static_cast<double>(data.A.rows());
  for (Index t = 0; t < steps; ++t) {
    const Vector g = 2.0 * (data.A.transpose() * (data.A * state.x - data.b));
    state.x -= (xi / n) * g;
    state.history.push_back(make_record(data, state.x, state.x_star, g, {}));
    check_divergence("baseline_sd", state);
  }
  return state;
}

SolverState baseline_minibatch(const Dataset& data, Index batch_blocks, const Vector& x0,
                               double xi, Index steps, std::uint64_t seed,
                               std::optional<Vector> x_star) {
  data.validate();
  if (x0.size() != data.A.cols())
    throw dimension_error("baseline_minibatch: x0 dimension mismatch");
  if (batch_blocks < 1 || batch_blocks > data.part.blocks)
    throw dimension_error("baseline_minibatch: need 1 <= batch_blocks <= K");
  if (steps < 0) throw dimension_error("baseline_minibatch: negative step count");

  SolverState state;
  state.rule = StepRule::fixed(xi);
  state.x = x0;
  state.x_star = x_star ? *x_star : least_squares_solve(data.A, data.b);
  const double n = static_cast<double>(data.A.rows());
  const double rescale = static_cast<double>(data.part.blocks) / static_cast<double>(batch_blocks);
  for (Index t = 0; t < steps; ++t) {
    // Uniform without-replacement draw: first batch_blocks of a random
    // permutation of the blocks, accumulated in ascending order.
    rng::Stream stream =
        rng::derive(seed, rng::StreamId::Sampling, static_cast<std::uint64_t>(t));
    std::vector<rng::Index64> batch = rng::random_permutation(stream, data.part.blocks);
    batch.resize(static_cast<std::size_t>(batch_blocks));
    std::sort(batch.begin(), batch.end());

    Vector g = Vector::Zero(x0.size());
    for (rng::Index64 j : batch) {
      const auto [first, last] = data.part.block_range(static_cast<Index>(j));
      const auto aj = data.A.middleRows(first, last - first);
      const auto bj = data.b.segment(first, last - first);
      g.noalias() += 2.0 * (aj.transpose() * (aj * state.x - bj));
    }
    g *= rescale;
    state.x -= (xi / n) * g;
    state.history.push_back(make_record(data, state.x, state.x_star, g, std::move(batch)));
    check_divergence("baseline_minibatch", state);
  }
  return state;
}

double contraction_factor(const Matrix& a, const Matrix& s_explicit, double xi) {
  if (s_explicit.cols() != a.rows())
    throw dimension_error("contraction_factor: sketch columns must match A rows");
  const Matrix sa = s_explicit * a;
  const Index d = a.cols();
  const Matrix b = Matrix::Identity(d, d) - 2.0 * xi * (sa.transpose() * sa);
  // b is symmetric, so its spectral norm is its largest-magnitude eigenvalue.
  return linalg::symmetric_spectral_norm(b);
}

Vector least_squares_solve(const Matrix& a, const Vector& b) {
  if (a.rows() < a.cols() || a.cols() == 0)
    throw dimension_error("least_squares_solve: need N >= d >= 1");
  if (b.size() != a.rows()) throw dimension_error("least_squares_solve: label length mismatch");
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const Matrix& r = qr.matrixR();
  const double top = std::abs(r(0, 0));
  const double low = std::abs(r(a.cols() - 1, a.cols() - 1));
  if (!(top > 0.0) || low < 1e-10 * top)
    throw rank_error("least_squares_solve: numerically rank-deficient system");
  return qr.solve(b);
}

double optimal_step_size(const Matrix& a) {
  // sigma_max(A)^2 is the top eigenvalue of the (small) Gram matrix A^T A.
  const double sigma_sq = linalg::symmetric_spectral_norm(Matrix(a.transpose() * a));
  if (sigma_sq == 0.0) throw precondition_error("optimal_step_size: zero matrix");
  return 2.0 / sigma_sq;
}

Vector sketched_solution_oracle(const Matrix& a, const Vector& b, const sketch::Projection& p) {
  if (!p.orthonormal())
    throw precondition_error("sketched_solution_oracle: projection must be orthonormal");
  if (p.n != a.rows()) throw dimension_error("sketched_solution_oracle: dimension mismatch");
  Matrix stacked(a.rows(), a.cols() + 1);
  stacked.leftCols(a.cols()) = a;
  stacked.col(a.cols()) = b;
  const Matrix projected = p.apply(stacked);
  return least_squares_solve(projected.leftCols(a.cols()), projected.col(a.cols()));
}

}  // namespace blocksketch::sim
