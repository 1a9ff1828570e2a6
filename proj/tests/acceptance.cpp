#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// Acceptance gate: twelve end-to-end checks, one printed PASS/FAIL line
// each.  Every tolerance is pinned here, next to the check that uses it.

#include "blocksketch/experiments.hpp"
#include "blocksketch/linalg.hpp"
#include "blocksketch/rng.hpp"
#include "blocksketch/security.hpp"
#include "blocksketch/sim.hpp"
#include "blocksketch/sketch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace blocksketch;
using sketch::ProjectionKind;

namespace {

void report(int num, const char* name, bool pass) {
  std::printf("[criterion %02d] %-36s %s\n", num, name, pass ? "PASS" : "FAIL");
  std::fflush(stdout);
}

Matrix gaussian(std::uint64_t seed, Index rows, Index cols) {
  rng::Stream s = rng::derive(seed, rng::StreamId::Data);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(s);
  return m;
}

Vector gaussian_vec(std::uint64_t seed, Index n) { return gaussian(seed, n, 1).col(0); }

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

void for_each_subset(Index k, Index q,
                     const std::function<void(const std::vector<rng::Index64>&)>& fn) {
  std::vector<rng::Index64> subset(static_cast<std::size_t>(q));
  std::function<void(Index, Index)> recurse = [&](Index next, Index depth) {
    if (depth == q) {
      fn(subset);
      return;
    }
    for (Index i = next; i < k; ++i) {
      subset[static_cast<std::size_t>(depth)] = i;
      recurse(i + 1, depth + 1);
    }
  };
  recurse(0, 0);
}

// (row-key, column-key) -> numeric cell for the three-column CSV schemas.
std::map<std::pair<std::string, std::string>, double> csv_cells(const std::string& csv) {
  std::map<std::pair<std::string, std::string>, double> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    out[{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1)}] =
        std::stod(line.substr(c2 + 1));
  }
  return out;
}

}  // namespace

TEST_CASE("criterion 01: transform oracle and n-log-n scaling") {
  // Correctness: the O(N log N) transform matches the dense Kronecker
  // construction to 1e-12 across sizes and seeds.
  double worst = 0.0;
  for (Index n = 2; n <= 64; n *= 2) {
    const Matrix h = dense_hadamard(n);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Vector v = gaussian_vec(100 * static_cast<std::uint64_t>(n) + seed, n);
      Vector fast = v;
      linalg::fwht_inplace(fast);
      worst = std::max(worst, (fast - h * v).lpNorm<Eigen::Infinity>());
    }
  }
  const bool exact = worst <= 1e-12;

  // Scaling: per-call time against c * N log2 N, fitted by weighted least
  // squares over N = 2^10 .. 2^16; no size may exceed 1.5x its fit.
  std::vector<double> times, weights;
  double checksum = 0.0;
  for (Index k = 10; k <= 16; ++k) {
    const Index n = Index{1} << k;
    const Index reps = std::max<Index>(1, (Index{1} << 22) / n);
    Vector v = gaussian_vec(9000 + static_cast<std::uint64_t>(k), n);
    double best = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 7; ++trial) {
      const auto start = std::chrono::steady_clock::now();
      for (Index r = 0; r < reps; ++r) linalg::fwht_inplace(v);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      best = std::min(best, elapsed.count() / static_cast<double>(reps));
      checksum += v[0];
    }
    times.push_back(best);
    weights.push_back(static_cast<double>(n) * static_cast<double>(k));
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    num += times[i] * weights[i];
    den += weights[i] * weights[i];
  }
  const double fit = num / den;
  bool scaling = std::isfinite(checksum);
  for (std::size_t i = 0; i < times.size(); ++i)
    scaling = scaling && times[i] <= 1.5 * fit * weights[i];

  const bool pass = exact && scaling;
  report(1, "transform-oracle-and-nlogn-scaling", pass);
  CHECK(exact);
  CHECK(scaling);
}

TEST_CASE("criterion 02: subset-mean Gram identity") {
  // Exact average of S^T S over all block subsets equals I_N.
  double worst = 0.0;
  {
    const auto p = sketch::build_projection(ProjectionKind::HaarOrthonormal, 12, 1001);
    const Matrix mean = sketch::gram_expectation_oracle(p, Partition::contiguous(12, 6), 3);
    worst = std::max(worst, (mean - Matrix::Identity(12, 12)).lpNorm<Eigen::Infinity>());
  }
  {
    const auto p = sketch::build_projection(ProjectionKind::GarbledBlockSrht, 16, 1002);
    const Matrix mean = sketch::gram_expectation_oracle(p, Partition::contiguous(16, 8), 4);
    worst = std::max(worst, (mean - Matrix::Identity(16, 16)).lpNorm<Eigen::Infinity>());
  }
  const bool pass = worst <= 1e-10;
  report(2, "subset-mean-gram-identity", pass);
  CHECK(pass);
}

TEST_CASE("criterion 03: subset-mean gradient and step") {
  // Scale-1 shards: the subset mean of the sketched gradient is (q/K) of the
  // full gradient, and the mean rescaled step is the plain descent step.
  const Index n = 12, d = 4, k = 6, q = 3;
  const Matrix a = gaussian(1101, n, d);
  const Vector b = gaussian_vec(1102, n);
  const Vector x = gaussian_vec(1103, d);
  const auto p = sketch::build_projection(ProjectionKind::HaarOrthonormal, n, 1104);
  const auto shards = sim::encode_distribute(a, b, p, Partition::contiguous(n, k), n);

  const double xi = 0.05;
  const sim::StepRule rule =
      sim::StepRule::fixed_rescaled(xi, static_cast<double>(k) / static_cast<double>(q));
  Vector grad_sum = Vector::Zero(d);
  Vector step_sum = Vector::Zero(d);
  Index count = 0;
  for_each_subset(k, q, [&](const std::vector<rng::Index64>& subset) {
    grad_sum += sim::aggregated_gradient(shards, subset, x);
    step_sum += sim::ssd_step(shards, subset, x, rule);
    ++count;
  });

  const Vector g_ls = 2.0 * a.transpose() * (a * x - b);
  const double grad_err =
      (grad_sum / static_cast<double>(count) - 0.5 * g_ls).lpNorm<Eigen::Infinity>();
  const Vector sd_step = x - (xi / static_cast<double>(n)) * g_ls;
  const double step_err =
      (step_sum / static_cast<double>(count) - sd_step).lpNorm<Eigen::Infinity>();

  const bool pass = grad_err <= 1e-10 && step_err <= 1e-10;
  report(3, "subset-mean-gradient-and-step", pass);
  CHECK(grad_err <= 1e-10);
  CHECK(step_err <= 1e-10);
}

TEST_CASE("criterion 04: sketched solution recovery") {
  // Solving the fully projected system recovers the least-squares solution.
  const Index n = 512, d = 16;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = gaussian(1200 + seed, n, d);
    const Vector b = gaussian_vec(1300 + seed, n);
    const Vector x_star = sim::least_squares_solve(a, b);
    const auto p = sketch::build_projection(ProjectionKind::HaarOrthonormal, n, 1400 + seed);
    const Vector x_hat = sim::sketched_solution_oracle(a, b, p);
    worst = std::max(worst, (x_hat - x_star).norm() / x_star.norm());
  }
  const bool pass = worst <= 1e-8;
  report(4, "sketched-solution-recovery", pass);
  CHECK(pass);
}

TEST_CASE("criterion 05: full-response exact gradient") {
  // q = K and r = N: the aggregated sketched gradient is exactly the
  // least-squares gradient for every orthonormal projection kind.
  const Index n = 64, d = 5, k = 8;
  const Matrix a = gaussian(1501, n, d);
  const Vector b = gaussian_vec(1502, n);
  std::vector<rng::Index64> all;
  for (rng::Index64 j = 0; j < k; ++j) all.push_back(j);

  double worst = 0.0;
  for (ProjectionKind kind : {ProjectionKind::Identity, ProjectionKind::HaarOrthonormal,
                              ProjectionKind::BlockSrht, ProjectionKind::GarbledBlockSrht}) {
    const auto p = sketch::build_projection(kind, n, 1503);
    const auto shards = sim::encode_distribute(a, b, p, Partition::contiguous(n, k), n);
    for (std::uint64_t probe = 0; probe < 20; ++probe) {
      const Vector x = gaussian_vec(1600 + probe, d);
      const Vector g = sim::aggregated_gradient(shards, all, x);
      const Vector exact = 2.0 * a.transpose() * (a * x - b);
      worst = std::max(worst, (g - exact).lpNorm<Eigen::Infinity>());
    }
  }
  const bool pass = worst <= 1e-10;
  report(5, "full-response-exact-gradient", pass);
  CHECK(pass);
}

TEST_CASE("criterion 06: per-round contraction bounds") {
  // Noiseless run: each round's recorded spectral factor dominates the
  // observed error shrinkage, and is itself dominated by the plain-descent
  // factor plus the sketch perturbation term.
  const Index n = 256, d = 8, k = 16, r = 128;
  Dataset data;
  data.A = gaussian(1701, n, d);
  data.b = data.A * gaussian_vec(1702, d);  // exactly consistent labels
  data.part = Partition::contiguous(n, k);

  const auto p = sketch::build_projection(ProjectionKind::HaarOrthonormal, n, 1703);
  const auto shards = sim::encode_distribute(data.A, data.b, p, data.part, r);
  const sim::StragglerModel model{k, r / (n / k), sim::ShiftedExponential{1.0, 1.0}};

  sim::SsdOptions opt;
  opt.steps = 40;
  opt.rule = sim::StepRule::fixed(sim::optimal_step_size(data.A));
  opt.seed = 1704;
  opt.record_contraction = true;
  const auto state = sim::ssd_run(data, shards, model, Vector::Zero(d), opt);

  const double xi_eff = opt.rule.effective() / static_cast<double>(n);
  const double gamma_sd = sim::contraction_factor(data.A, Matrix::Identity(n, n), xi_eff);
  const double sigma_sq =
      linalg::symmetric_spectral_norm(Matrix(data.A.transpose() * data.A));
  const Matrix projected_rows = shards.scale * sketch::materialize(shards.projection);
  const Index tau = data.part.block_rows();

  bool decay_ok = true;
  bool bound_ok = true;
  double prev_err = (Vector::Zero(d) - state.x_star).norm();
  for (const auto& rec : state.history) {
    if (!rec.contraction.has_value()) {
      decay_ok = false;
      break;
    }
    // Observed shrinkage never exceeds the recorded factor.
    decay_ok = decay_ok && rec.residual_error <= *rec.contraction * prev_err + 1e-9;
    prev_err = rec.residual_error;

    // Rebuild this round's operator and bound its factor by the
    // plain-descent factor plus 2 xi sigma_max^2 ||I - S^T S||.
    Matrix s(static_cast<Index>(rec.responders.size()) * tau, n);
    for (std::size_t i = 0; i < rec.responders.size(); ++i) {
      const auto [first, last] =
          data.part.block_range(static_cast<Index>(rec.responders[i]));
      s.middleRows(static_cast<Index>(i) * tau, tau) =
          projected_rows.middleRows(first, last - first);
    }
    const double perturbation = linalg::symmetric_spectral_norm(
        Matrix(Matrix::Identity(n, n) - s.transpose() * s));
    const double cap = gamma_sd + 2.0 * xi_eff * sigma_sq * perturbation + 1e-9;
    bound_ok = bound_ok && *rec.contraction <= cap;
  }

  const bool pass = decay_ok && bound_ok && state.iterations() == 40;
  report(6, "per-round-contraction-bounds", pass);
  CHECK(decay_ok);
  CHECK(bound_ok);
  CHECK(state.iterations() == 40);
}

TEST_CASE("criterion 07: subspace embedding distortion") {
  // Block-subsampled orthonormal sketches at r = N/2 embed a random
  // d-dimensional subspace with distortion < 0.5 in at least 45 of 50 seeds.
  const Index n = 1024, d = 16, k = 64, q = 32;
  sketch::SketchConfig cfg{n, d, k, q * (n / k), 0, ProjectionKind::BlockSrht};

  bool pass = true;
  for (ProjectionKind kind : {ProjectionKind::HaarOrthonormal, ProjectionKind::BlockSrht,
                              ProjectionKind::GarbledBlockSrht}) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Matrix u = linalg::orthonormal_basis(gaussian(1800 + seed, n, d));
      const auto p = sketch::build_projection(kind, n, 1900 + seed);
      const auto sample = sketch::sample_blocks(cfg, 2000 + seed);
      const Matrix s = sketch::explicit_sketch_matrix(p, sample, cfg.partition());
      hits += linalg::embedding_distortion(u, s) < 0.5 ? 1 : 0;
    }
    pass = pass && hits >= 45;
  }
  report(7, "subspace-embedding-distortion", pass);
  CHECK(pass);
}

TEST_CASE("criterion 08: leverage flattening bound") {
  // Worst-case concentrated basis: after a randomized projection, every
  // block leverage score obeys the C^2 d log(Nd/delta) tau / N bound in at
  // least 190 of 200 seeds per kind.
  const Index n = 2048, d = 32, k = 64;
  const Index tau = n / k;
  const double delta = 0.05;
  const double log_term = std::log(static_cast<double>(n * d) / delta);
  const double c_sq = 2.0 + std::log(16.0) / log_term;
  const double bound =
      c_sq * static_cast<double>(d) * log_term * static_cast<double>(tau) / static_cast<double>(n);
  const Matrix u = Matrix::Identity(n, n).leftCols(d);
  const Partition part = Partition::contiguous(n, k);

  bool pass = true;
  for (ProjectionKind kind : {ProjectionKind::BlockSrht, ProjectionKind::GarbledBlockSrht,
                              ProjectionKind::Rademacher}) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto p = sketch::build_projection(kind, n, 2100 + seed);
      const auto scores = linalg::block_squared_norms(p.apply(u), part);
      bool ok = true;
      for (double v : scores) ok = ok && v <= bound;
      hits += ok ? 1 : 0;
    }
    pass = pass && hits >= 190;
  }
  report(8, "leverage-flattening-bound", pass);
  CHECK(pass);
}

TEST_CASE("criterion 09: sign-key distinguisher") {
  // The zero-entry test labels both canonical plaintexts correctly under
  // every sign-only key: 8 out of 8 ciphertexts.
  int correct = 0;
  for (int bits = 0; bits < 4; ++bits) {
    sketch::Projection key;
    key.kind = ProjectionKind::BlockSrht;
    key.n = 2;
    key.signature = Vector(2);
    key.signature << (bits & 1 ? -1.0 : 1.0), (bits & 2 ? -1.0 : 1.0);
    const auto c0 = security::encrypt(key, security::plaintext_u0());
    const auto c1 = security::encrypt(key, security::plaintext_u1());
    correct += security::srht_distinguisher(c0.data) == security::PlaintextLabel::U0 ? 1 : 0;
    correct += security::srht_distinguisher(c1.data) == security::PlaintextLabel::U1 ? 1 : 0;
  }
  const bool pass = correct == 8;
  report(9, "sign-key-distinguisher", pass);
  CHECK(pass);
}

TEST_CASE("criterion 10: group-key secrecy") {
  // Keys drawn from a closed orthonormal group: ciphertext distributions are
  // exactly uniform (enumerated) and empirically uniform (sampled).
  const auto g = security::FiniteOrthogroup::signed_permutations(2);
  const double exact = security::secrecy_exact_test(g);

  const Index trials = 8000;
  const double sampled = security::secrecy_frequency_test(g, trials, 2025);
  const double threshold =
      3.0 * std::sqrt(static_cast<double>(g.size()) / static_cast<double>(trials));

  const bool pass = exact == 0.0 && sampled <= threshold;
  report(10, "group-key-secrecy", pass);
  CHECK(exact == 0.0);
  CHECK(sampled <= threshold);
}

TEST_CASE("criterion 11: per-iteration residual ordering") {
  // Full-scale per-iteration figure on an exactly consistent system: every
  // orthonormal sketch method ends below plain descent and stays below it in
  // at least 80% of the iterations, within a two-minute budget.
  exper::ExperimentConfig cfg;  // n=2000, d=40, K=100, r=1000, steps=100, repeats=6, seed=42
  cfg.dist = exper::DataLaw::StudentT;
  cfg.noise_std = 0.0;
  cfg.fig2_step_factor = 2.0;

  const auto start = std::chrono::steady_clock::now();
  const auto result = exper::run_fig2(cfg);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  const auto cells = csv_cells(result.csv);
  bool ordering = !result.any_divergence;
  for (const std::string method : {"haar", "block-srht", "garbled-block-srht"}) {
    Index below = 0;
    for (Index t = 1; t <= cfg.steps; ++t) {
      const std::string it = std::to_string(t);
      if (cells.at({it, method}) < cells.at({it, "sd"})) ++below;
    }
    const std::string last = std::to_string(cfg.steps);
    ordering = ordering && cells.at({last, method}) < cells.at({last, "sd"});
    ordering = ordering && below >= (cfg.steps * 8) / 10;
  }
  const bool in_budget = elapsed.count() < 120.0;

  const bool pass = ordering && in_budget;
  report(11, "per-iteration-residual-ordering", pass);
  CHECK(ordering);
  CHECK(in_budget);
}

TEST_CASE("criterion 12: byte determinism") {
  // Rerunning every figure and verification suite reproduces identical CSV
  // bytes.
  exper::ExperimentConfig cfg;
  cfg.n = 64;
  cfg.dim = 4;
  cfg.blocks = 8;
  cfg.sketch_rows = 32;
  cfg.dist = exper::DataLaw::GaussianDense;
  cfg.noise_std = 0.5;
  cfg.steps = 10;
  cfg.step_factors = {-1.0, 0.0, 1.0};
  cfg.fig2_step_factor = 0.0;
  cfg.repeats = 2;
  cfg.seed = 7;

  const bool fig1 = exper::run_fig1(cfg).csv == exper::run_fig1(cfg).csv;
  const bool fig2 = exper::run_fig2(cfg).csv == exper::run_fig2(cfg).csv;
  const bool fig3 = exper::run_fig3(cfg).csv == exper::run_fig3(cfg).csv;
  const bool oracle = exper::run_oracle_suite(7).csv == exper::run_oracle_suite(7).csv;
  const bool secrecy = exper::run_secrecy_suite(7).csv == exper::run_secrecy_suite(7).csv;

  const bool pass = fig1 && fig2 && fig3 && oracle && secrecy;
  report(12, "byte-determinism", pass);
  CHECK(fig1);
  CHECK(fig2);
  CHECK(fig3);
  CHECK(oracle);
  CHECK(secrecy);
}
