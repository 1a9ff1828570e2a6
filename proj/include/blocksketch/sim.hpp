#pragma once

// Straggler-aware distributed least squares.
//
// The dataset is projected once (with the sqrt(N/r) variance scale embedded),
// split into K row-block shards, and handed to K workers.  Each round, the
// q fastest workers under a runtime law return their partial gradients; their
// sum is the sketched gradient estimate, and stochastic steepest descent
// iterates on it.
//
// Convention: gradient routines return the unnormalized least-squares
// gradient 2 A^T (A x - b) (and its sketched estimate); the solver loops
// minimize the *mean* squared error, i.e. they step by xi * gradient / N.
// Step sizes quoted anywhere in this library follow that per-sample scale.

#include "blocksketch/sketch.hpp"
#include "blocksketch/types.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace blocksketch::sim {

// Worker runtime laws for the straggler model.
struct ShiftedExponential {
  double shift = 0.0;  // minimum runtime
  double rate = 1.0;   // exponential tail rate
};
struct DeterministicRuntimes {
  std::vector<double> seconds;  // one fixed runtime per worker
};
using RuntimeLaw = std::variant<ShiftedExponential, DeterministicRuntimes>;

struct StragglerModel {
  Index workers = 0;   // m (one worker per block: m = K)
  Index wait_for = 0;  // q: responders collected per round
  RuntimeLaw law;

  void validate() const;
};

// Draws one runtime per worker from the Rounds stream of (seed, iteration)
// and returns the indices of the q smallest runtimes, ties broken by lower
// worker index; the result is sorted ascending by worker index.
std::vector<rng::Index64> simulate_round(const StragglerModel& model, std::uint64_t seed,
                                         Index iteration);

// The K encoded worker shards: block rows of sqrt(N/r) * Pi [A | b].
struct EncodedShards {
  std::vector<Matrix> features;  // K shards, each tau x d
  std::vector<Vector> labels;    // K shards, each tau
  sketch::Projection projection;
  Partition part;
  double scale = 1.0;  // sqrt(N/r), already applied to the shards

  Index count() const { return static_cast<Index>(features.size()); }
  Index dim() const { return features.empty() ? 0 : features.front().cols(); }
};

// Projects [A | b] by Pi, scales by sqrt(N/r), and splits into K shards.
// Requires tau | r (so a responder count q = r / tau exists).
EncodedShards encode_distribute(const Matrix& a, const Vector& b, sketch::Projection p,
                                const Partition& part, Index r);

// Sketched gradient estimate from the responding shards:
//   g_hat = 2 * sum_{j in responders} A_j^T (A_j x - b_j),
// duplicates counted with multiplicity, accumulation in ascending index
// order.  With every shard responding and scale 1 this is exactly
// 2 A^T (A x - b) for orthonormal projections.
Vector aggregated_gradient(const EncodedShards& shards, const std::vector<rng::Index64>& responders,
                           const Vector& x);

// Step-size rule: effective step coefficient is xi * factor; the rescaled
// rule uses factor = K/q so the subset average of a step equals the plain
// descent step.
struct StepRule {
  double xi = 0.0;
  double factor = 1.0;

  static StepRule fixed(double xi) { return {xi, 1.0}; }
  static StepRule fixed_rescaled(double xi, double factor) { return {xi, factor}; }
  double effective() const { return xi * factor; }
};

// One solver step from x with a given responder set (shared by ssd_run and
// the exhaustive expectation oracles): x - (rule.effective()/N) * g_hat.
Vector ssd_step(const EncodedShards& shards, const std::vector<rng::Index64>& responders,
                const Vector& x, const StepRule& rule);

struct IterationRecord {
  std::vector<rng::Index64> responders;  // ascending; empty for plain descent
  double gradient_norm = 0.0;            // ||g_hat||_2
  double residual_error = 0.0;           // ||x - x*||_2 after the step
  double objective = 0.0;                // ||A x - b||^2 after the step
  std::optional<double> contraction;     // spectral factor of this round's map
};

struct SolverState {
  Vector x;
  Vector x_star;
  StepRule rule;
  std::vector<IterationRecord> history;

  Index iterations() const { return static_cast<Index>(history.size()); }
};

// Residual blew past the divergence guard (10^12) or went non-finite; carries
// everything recorded up to and including the diverging step.
struct divergence_error : std::runtime_error {
  SolverState state;
  divergence_error(const std::string& what, SolverState s)
      : std::runtime_error(what), state(std::move(s)) {}
};

struct SsdOptions {
  Index steps = 100;
  StepRule rule;
  std::uint64_t seed = 0;
  std::optional<Vector> x_star;     // computed by direct solve when absent
  bool record_contraction = false;  // materializes the per-round sketch (small runs)
};

// Stochastic steepest descent over the encoded shards; `data` supplies the
// (possibly projected-equivalent) system used for the residual and objective
// metrics and must share the shard partition.
SolverState ssd_run(const Dataset& data, const EncodedShards& shards, const StragglerModel& model,
                    const Vector& x0, const SsdOptions& opt);

// Plain steepest descent on the full gradient.
SolverState baseline_sd(const Dataset& data, const Vector& x0, double xi, Index steps,
                        std::optional<Vector> x_star = std::nullopt);

// Mini-batch descent drawing `batch_blocks` distinct raw blocks per step
// (uniform without replacement), gradient scaled by K / batch_blocks; with
// batch_blocks = K the trajectory is identical to baseline_sd.
SolverState baseline_minibatch(const Dataset& data, Index batch_blocks, const Vector& x0,
                               double xi, Index steps, std::uint64_t seed,
                               std::optional<Vector> x_star = std::nullopt);

// Largest-magnitude eigenvalue of I_d - 2 xi (S A)^T (S A) for an explicit
// sketch operator S; the per-round error map of a fixed-step iteration.
double contraction_factor(const Matrix& a, const Matrix& s_explicit, double xi);

// Direct least-squares solve min ||A x - b|| by column-pivoted Householder
// QR; throws rank_error on numerically rank-deficient A.
Vector least_squares_solve(const Matrix& a, const Vector& b);

// Reference step size 2 / sigma_max(A)^2 (per-sample scale; see the module
// convention above).
double optimal_step_size(const Matrix& a);

// Solves the fully-sketched problem min ||Pi (A x - b)|| for an orthonormal
// projection; equals the unsketched solution A^+ b.  Rejects non-orthonormal
// kinds with precondition_error.
Vector sketched_solution_oracle(const Matrix& a, const Vector& b, const sketch::Projection& p);

}  // namespace blocksketch::sim
