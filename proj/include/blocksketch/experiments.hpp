#pragma once

// Experiment configuration, synthetic data generation, and the figure /
// verification suites behind the command-line tool.
//
// All randomness derives from the config's master seed through the named
// streams in rng.hpp, so every suite is byte-deterministic: rerunning with
// the same config and seed reproduces identical CSV output.

#include "blocksketch/sim.hpp"
#include "blocksketch/sketch.hpp"
#include "blocksketch/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace blocksketch::exper {

enum class DataLaw {
  GaussianSparse,  // N(0,1) entries, 90% zeroed, heavy blocks scaled x10
  GaussianDense,   // N(0,1) entries, heavy blocks scaled x10
  StudentT,        // i.i.d. Student-t entries (heavy tails)
};

std::string to_string(DataLaw law);
DataLaw law_from_string(const std::string& name);

// Flat key = value text config ('#' starts a comment).  emit() writes keys
// in sorted order so parse/emit round-trips are byte-stable.
struct ExperimentConfig {
  Index n = 2000;             // rows of A
  Index dim = 40;             // columns of A
  Index blocks = 100;         // K
  Index sketch_rows = 1000;   // r = q * tau
  sketch::ProjectionKind projection = sketch::ProjectionKind::BlockSrht;
  DataLaw dist = DataLaw::GaussianDense;
  Index t_dof = 3;            // Student-t degrees of freedom
  double noise_std = 1.0;     // label noise standard deviation
  double sparse_density = 0.1;
  Index steps = 100;          // solver iterations per run
  std::vector<double> step_factors = {-3, -2, -1, 0, 1, 2, 3};  // log10 sweep
  double fig2_step_factor = 2.0;  // log10 factor for the per-iteration figure
  Index repeats = 6;
  std::uint64_t seed = 42;
  double runtime_shift = 1.0;  // straggler runtime law: shift + Exp(rate)
  double runtime_rate = 1.0;

  Index tau() const { return n / blocks; }
  Index sample_count() const { return sketch_rows / tau(); }  // q
  Partition partition() const { return Partition::contiguous(n, blocks); }

  void validate() const;
  std::string emit() const;
  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig parse_file(const std::string& path);
};

struct GeneratedData {
  Dataset data;
  Vector weights;  // planted coefficient vector w
  Vector x_star;   // least-squares solution of (A, b)
};

// Draws A by the configured law, plants b = A w + noise_std * eps, and solves
// for x_star.  All draws come from streams of `seed`.
GeneratedData generate_data(const ExperimentConfig& cfg, std::uint64_t seed);

struct SuiteResult {
  std::string csv;
  bool all_pass = true;        // verification suites only
  bool any_divergence = false; // figure sweeps only
};

// Step-size sweep: for each step factor f and method, the mean (over
// repeats) final residual ||x* - x_hat|| after `steps` iterations, reported
// as log10; divergent cells become "inf".  CSV: step_factor,method,log10_residual.
SuiteResult run_fig1(const ExperimentConfig& cfg);

// Per-iteration mean residuals per method at the fixed fig2 step factor.
// CSV: iteration,method,residual.
SuiteResult run_fig2(const ExperimentConfig& cfg);

// Block leverage mass of the data basis before ("raw") and after each
// projection kind.  CSV: block,projection,score.  Hadamard kinds require a
// power-of-two n.
SuiteResult run_fig3(const ExperimentConfig& cfg);

// Exhaustive expectation identities (transform oracle, subset-mean Gram,
// subset-mean gradient and step, exact-gradient mode, fully-sketched
// solution).  CSV: test,param,value,threshold,pass.
SuiteResult run_oracle_suite(std::uint64_t seed);

// Distinguisher, group closure, Shannon-secrecy frequency tests, and
// ensemble counts.  CSV: test,param,value,threshold,pass.
SuiteResult run_secrecy_suite(std::uint64_t seed);

// Per-iteration history of one solver run as CSV:
// t,responders,residual,objective,gradient_norm (responders ';'-joined).
std::string history_csv(const sim::SolverState& state);

}  // namespace blocksketch::exper
