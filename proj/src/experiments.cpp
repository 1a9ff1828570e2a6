#include "blocksketch/experiments.hpp"

#include "blocksketch/linalg.hpp"
#include "blocksketch/matrix_io.hpp"
#include "blocksketch/security.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace blocksketch::exper {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

Index nearest_pow2(Index k) {
  const auto exponent = static_cast<Index>(std::llround(std::log2(static_cast<double>(k))));
  return Index{1} << std::max<Index>(exponent, 0);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<double> parse_factor_list(const std::string& text) {
  std::vector<double> factors;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    cell = trim(cell);
    if (cell.empty()) throw dimension_error("config: empty entry in step_factors");
    std::size_t used = 0;
    factors.push_back(std::stod(cell, &used));
  }
  if (factors.empty()) throw dimension_error("config: step_factors must be non-empty");
  return factors;
}

}  // namespace

std::string to_string(DataLaw law) {
  switch (law) {
    case DataLaw::GaussianSparse: return "gaussian-sparse";
    case DataLaw::GaussianDense: return "gaussian-dense";
    case DataLaw::StudentT: return "student-t";
  }
  throw dimension_error("to_string: unknown data law");
}

DataLaw law_from_string(const std::string& name) {
  if (name == "gaussian-sparse") return DataLaw::GaussianSparse;
  if (name == "gaussian-dense") return DataLaw::GaussianDense;
  if (name == "student-t") return DataLaw::StudentT;
  throw dimension_error("config: unknown data law '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (n <= 0 || dim <= 0 || blocks <= 0 || sketch_rows <= 0)
    throw dimension_error("config: dimensions must be positive");
  if (n < dim) throw dimension_error("config: need n >= d");
  if (n % blocks != 0) throw dimension_error("config: blocks must divide n");
  const Index t = tau();
  if (sketch_rows % t != 0) throw dimension_error("config: tau must divide sketch_rows");
  if (sketch_rows <= dim) throw precondition_error("config: need sketch_rows > d");
  if (sample_count() > blocks)
    throw dimension_error("config: responder count q exceeds block count");
  if (t_dof < 1) throw dimension_error("config: t_dof must be at least 1");
  if (noise_std < 0.0) throw dimension_error("config: noise_std must be non-negative");
  if (sparse_density <= 0.0 || sparse_density > 1.0)
    throw dimension_error("config: sparse_density must lie in (0, 1]");
  if (steps < 0) throw dimension_error("config: steps must be non-negative");
  if (step_factors.empty()) throw dimension_error("config: step_factors must be non-empty");
  if (repeats < 1) throw dimension_error("config: repeats must be at least 1");
  if (runtime_shift < 0.0 || !(runtime_rate > 0.0))
    throw dimension_error("config: need runtime_shift >= 0 and runtime_rate > 0");
}

std::string ExperimentConfig::emit() const {
  std::ostringstream out;
  out << "blocks = " << blocks << '\n';
  out << "d = " << dim << '\n';
  out << "dist = " << to_string(dist) << '\n';
  out << "fig2_step_factor = " << io::format_short(fig2_step_factor) << '\n';
  out << "n = " << n << '\n';
  out << "noise_std = " << io::format_short(noise_std) << '\n';
  out << "projection = " << sketch::to_string(projection) << '\n';
  out << "repeats = " << repeats << '\n';
  out << "runtime_rate = " << io::format_short(runtime_rate) << '\n';
  out << "runtime_shift = " << io::format_short(runtime_shift) << '\n';
  out << "seed = " << seed << '\n';
  out << "sketch_rows = " << sketch_rows << '\n';
  out << "sparse_density = " << io::format_short(sparse_density) << '\n';
  out << "step_factors = ";
  for (std::size_t i = 0; i < step_factors.size(); ++i) {
    if (i > 0) out << ',';
    out << io::format_short(step_factors[i]);
  }
  out << '\n';
  out << "steps = " << steps << '\n';
  out << "t_dof = " << t_dof << '\n';
  return out.str();
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig cfg;
  std::map<std::string, bool> seen;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw dimension_error("config: expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw dimension_error("config: empty key or value in '" + line + "'");
    if (seen[key]) throw dimension_error("config: duplicate key '" + key + "'");
    seen[key] = true;

    if (key == "n") cfg.n = static_cast<Index>(std::stoll(value));
    else if (key == "d") cfg.dim = static_cast<Index>(std::stoll(value));
    else if (key == "blocks") cfg.blocks = static_cast<Index>(std::stoll(value));
    else if (key == "sketch_rows") cfg.sketch_rows = static_cast<Index>(std::stoll(value));
    else if (key == "projection") cfg.projection = sketch::kind_from_string(value);
    else if (key == "dist") cfg.dist = law_from_string(value);
    else if (key == "t_dof") cfg.t_dof = static_cast<Index>(std::stoll(value));
    else if (key == "noise_std") cfg.noise_std = std::stod(value);
    else if (key == "sparse_density") cfg.sparse_density = std::stod(value);
    else if (key == "steps") cfg.steps = static_cast<Index>(std::stoll(value));
    else if (key == "step_factors") cfg.step_factors = parse_factor_list(value);
    else if (key == "fig2_step_factor") cfg.fig2_step_factor = std::stod(value);
    else if (key == "repeats") cfg.repeats = static_cast<Index>(std::stoll(value));
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "runtime_shift") cfg.runtime_shift = std::stod(value);
    else if (key == "runtime_rate") cfg.runtime_rate = std::stod(value);
    else throw dimension_error("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dimension_error("config: cannot open '" + path + "'");
  return parse(in);
}

GeneratedData generate_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Partition part = cfg.partition();
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix a(cfg.n, cfg.dim);
  rng::Stream entries = rng::derive(seed, rng::StreamId::Data, 0);
  if (cfg.dist == DataLaw::StudentT) {
    std::student_t_distribution<double> heavy(static_cast<double>(cfg.t_dof));
    for (Index j = 0; j < cfg.dim; ++j)
      for (Index i = 0; i < cfg.n; ++i) a(i, j) = heavy(entries);
  } else {
    for (Index j = 0; j < cfg.dim; ++j)
      for (Index i = 0; i < cfg.n; ++i) a(i, j) = gauss(entries);
    if (cfg.dist == DataLaw::GaussianSparse) {
      rng::Stream mask = rng::derive(seed, rng::StreamId::Data, 3);
      for (Index j = 0; j < cfg.dim; ++j)
        for (Index i = 0; i < cfg.n; ++i)
          if (mask.next_unit() >= cfg.sparse_density) a(i, j) = 0.0;
    }
    // Scale 10% of the blocks by 10x so block leverage is far from uniform.
    const Index heavy_blocks = (part.blocks + 9) / 10;
    rng::Stream pick = rng::derive(seed, rng::StreamId::Data, 4);
    std::vector<rng::Index64> order = rng::random_permutation(pick, part.blocks);
    for (Index h = 0; h < heavy_blocks; ++h) {
      const auto [first, last] = part.block_range(static_cast<Index>(order[static_cast<std::size_t>(h)]));
      a.middleRows(first, last - first) *= 10.0;
    }
  }

  rng::Stream wstream = rng::derive(seed, rng::StreamId::Data, 1);
  Vector w(cfg.dim);
  for (Index i = 0; i < cfg.dim; ++i) w[i] = gauss(wstream);

  Vector b = a * w;
  if (cfg.noise_std > 0.0) {
    rng::Stream noise = rng::derive(seed, rng::StreamId::Data, 2);
    for (Index i = 0; i < cfg.n; ++i) b[i] += cfg.noise_std * gauss(noise);
  }

  GeneratedData gen;
  gen.data = Dataset{std::move(a), std::move(b), part};
  gen.weights = std::move(w);
  gen.x_star = sim::least_squares_solve(gen.data.A, gen.data.b);
  return gen;
}

namespace {

// Canonical method order for figure CSVs (sorted, so output is stable).
const std::vector<std::string> kMethods = {
    "block-srht", "garbled-block-srht", "gaussian", "haar", "minibatch-ssd", "rademacher", "sd"};

bool is_sketch_method(const std::string& name) {
  return name != "sd" && name != "minibatch-ssd";
}

// A sketch method prepared for one repeat: dataset (padded for Hadamard kinds
// at non-power-of-two n), encoded shards, straggler model, and the K/q step
// rescale factor.
struct PreparedSketch {
  Dataset data;
  sim::EncodedShards shards;
  sim::StragglerModel model;
  double rescale = 1.0;
};

// Hadamard kinds need power-of-two row counts; zero-padding rows changes
// neither the LS solution nor any residual, so pad and re-block.
struct PaddedDims {
  Index n, blocks, q, r;
};

PaddedDims padded_dims(const ExperimentConfig& cfg) {
  PaddedDims dims{cfg.n, cfg.blocks, cfg.sample_count(), cfg.sketch_rows};
  if (is_power_of_two(cfg.n)) return dims;
  dims.n = next_pow2(cfg.n);
  dims.blocks = std::min(nearest_pow2(cfg.blocks), dims.n);
  const Index tau = dims.n / dims.blocks;
  const double ratio = static_cast<double>(cfg.sample_count()) / static_cast<double>(cfg.blocks);
  dims.q = std::clamp<Index>(
      static_cast<Index>(std::llround(ratio * static_cast<double>(dims.blocks))), 1, dims.blocks);
  while (dims.q * tau <= cfg.dim && dims.q < dims.blocks) ++dims.q;
  dims.r = dims.q * tau;
  if (dims.r <= cfg.dim)
    throw precondition_error("padding: cannot satisfy r > d after re-blocking");
  return dims;
}

PreparedSketch prepare_sketch_method(const ExperimentConfig& cfg, const GeneratedData& gen,
                                     sketch::ProjectionKind kind, std::uint64_t projection_seed) {
  const bool pad = sketch::is_hadamard_kind(kind) && !is_power_of_two(cfg.n);
  PreparedSketch prep;
  if (pad) {
    const PaddedDims dims = padded_dims(cfg);
    Matrix a = Matrix::Zero(dims.n, cfg.dim);
    a.topRows(cfg.n) = gen.data.A;
    Vector b = Vector::Zero(dims.n);
    b.head(cfg.n) = gen.data.b;
    const Partition part = Partition::contiguous(dims.n, dims.blocks);
    prep.data = Dataset{std::move(a), std::move(b), part};
    prep.shards = sim::encode_distribute(prep.data.A, prep.data.b,
                                         sketch::build_projection(kind, dims.n, projection_seed),
                                         part, dims.r);
    prep.model = sim::StragglerModel{
        dims.blocks, dims.q, sim::ShiftedExponential{cfg.runtime_shift, cfg.runtime_rate}};
    prep.rescale = static_cast<double>(dims.blocks) / static_cast<double>(dims.q);
  } else {
    const Partition part = cfg.partition();
    prep.data = gen.data;
    prep.shards = sim::encode_distribute(gen.data.A, gen.data.b,
                                         sketch::build_projection(kind, cfg.n, projection_seed),
                                         part, cfg.sketch_rows);
    prep.model = sim::StragglerModel{
        cfg.blocks, cfg.sample_count(),
        sim::ShiftedExponential{cfg.runtime_shift, cfg.runtime_rate}};
    prep.rescale = static_cast<double>(cfg.blocks) / static_cast<double>(cfg.sample_count());
  }
  return prep;
}

// Per-iteration residuals of one run, padded with inf past a divergence.
struct MethodOutcome {
  std::vector<double> residuals;
  bool diverged = false;
};

MethodOutcome outcome_from_state(const sim::SolverState& state, Index steps, double start_residual,
                                 bool diverged) {
  MethodOutcome out;
  out.diverged = diverged;
  out.residuals.reserve(static_cast<std::size_t>(steps));
  for (const auto& rec : state.history) out.residuals.push_back(rec.residual_error);
  while (out.residuals.size() < static_cast<std::size_t>(steps)) out.residuals.push_back(kInf);
  if (steps == 0) out.residuals.push_back(start_residual);
  return out;
}

// One repeat's prepared inputs, reused across the step-factor sweep.
struct RepeatContext {
  GeneratedData gen;
  double xi_opt = 0.0;
  Vector x0;
  std::uint64_t run_seed = 0;        // straggler rounds (shared across methods)
  std::uint64_t minibatch_seed = 0;  // raw-block draws for the mini-batch baseline
  std::map<std::string, PreparedSketch> sketches;
};

RepeatContext make_repeat(const ExperimentConfig& cfg, Index repeat) {
  RepeatContext ctx;
  const std::uint64_t repeat_seed =
      rng::derive(cfg.seed, rng::StreamId::Data, static_cast<std::uint64_t>(repeat))();
  ctx.gen = generate_data(cfg, repeat_seed);
  ctx.xi_opt = sim::optimal_step_size(ctx.gen.data.A);
  ctx.x0 = Vector::Zero(cfg.dim);
  ctx.run_seed = rng::derive(repeat_seed, rng::StreamId::Rounds)();
  ctx.minibatch_seed = rng::derive(repeat_seed, rng::StreamId::Sampling)();
  std::uint64_t kind_index = 0;
  for (const std::string& name : kMethods) {
    if (!is_sketch_method(name)) continue;
    const auto kind = sketch::kind_from_string(name);
    const std::uint64_t pseed = rng::derive(repeat_seed, rng::StreamId::Projection, kind_index)();
    ctx.sketches.emplace(name, prepare_sketch_method(cfg, ctx.gen, kind, pseed));
    ++kind_index;
  }
  return ctx;
}

MethodOutcome run_method(const ExperimentConfig& cfg, const RepeatContext& ctx,
                         const std::string& name, double xi) {
  const double start_residual = (ctx.x0 - ctx.gen.x_star).norm();
  try {
    sim::SolverState state;
    if (name == "sd") {
      state = sim::baseline_sd(ctx.gen.data, ctx.x0, xi, cfg.steps, ctx.gen.x_star);
    } else if (name == "minibatch-ssd") {
      state = sim::baseline_minibatch(ctx.gen.data, cfg.sample_count(), ctx.x0, xi, cfg.steps,
                                      ctx.minibatch_seed, ctx.gen.x_star);
    } else {
      const PreparedSketch& prep = ctx.sketches.at(name);
      sim::SsdOptions opt;
      opt.steps = cfg.steps;
      opt.rule = sim::StepRule::fixed_rescaled(xi, prep.rescale);
      opt.seed = ctx.run_seed;
      opt.x_star = ctx.gen.x_star;
      state = sim::ssd_run(prep.data, prep.shards, prep.model, ctx.x0, opt);
    }
    return outcome_from_state(state, cfg.steps, start_residual, false);
  } catch (const sim::divergence_error& e) {
    return outcome_from_state(e.state, cfg.steps, start_residual, true);
  }
}

}  // namespace

SuiteResult run_fig1(const ExperimentConfig& cfg) {
  cfg.validate();
  // mean over repeats of the final residual, per (factor, method)
  std::map<std::pair<double, std::string>, double> sums;
  bool any_divergence = false;
  for (Index repeat = 0; repeat < cfg.repeats; ++repeat) {
    const RepeatContext ctx = make_repeat(cfg, repeat);
    for (double factor : cfg.step_factors) {
      const double xi = std::pow(10.0, factor) * ctx.xi_opt;
      for (const std::string& name : kMethods) {
        const MethodOutcome out = run_method(cfg, ctx, name, xi);
        any_divergence = any_divergence || out.diverged;
        const double final_residual = out.diverged ? kInf : out.residuals.back();
        sums[{factor, name}] += final_residual;
      }
    }
  }

  std::ostringstream csv;
  csv << "step_factor,method,log10_residual\n";
  std::vector<double> factors = cfg.step_factors;
  std::sort(factors.begin(), factors.end());
  for (double factor : factors) {
    for (const std::string& name : kMethods) {
      const double mean = sums.at({factor, name}) / static_cast<double>(cfg.repeats);
      csv << io::format_short(factor) << ',' << name << ',' << io::format_short(std::log10(mean))
          << '\n';
    }
  }
  SuiteResult result;
  result.csv = csv.str();
  result.any_divergence = any_divergence;
  return result;
}

SuiteResult run_fig2(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.steps < 1) throw dimension_error("fig2: need at least one step");
  std::map<std::string, std::vector<double>> sums;
  for (const std::string& name : kMethods)
    sums[name].assign(static_cast<std::size_t>(cfg.steps), 0.0);

  bool any_divergence = false;
  for (Index repeat = 0; repeat < cfg.repeats; ++repeat) {
    const RepeatContext ctx = make_repeat(cfg, repeat);
    const double xi = std::pow(10.0, cfg.fig2_step_factor) * ctx.xi_opt;
    for (const std::string& name : kMethods) {
      const MethodOutcome out = run_method(cfg, ctx, name, xi);
      any_divergence = any_divergence || out.diverged;
      for (Index t = 0; t < cfg.steps; ++t)
        sums[name][static_cast<std::size_t>(t)] += out.residuals[static_cast<std::size_t>(t)];
    }
  }

  std::ostringstream csv;
  csv << "iteration,method,residual\n";
  for (Index t = 0; t < cfg.steps; ++t) {
    for (const std::string& name : kMethods) {
      const double mean = sums[name][static_cast<std::size_t>(t)] / static_cast<double>(cfg.repeats);
      csv << (t + 1) << ',' << name << ',' << io::format_short(mean) << '\n';
    }
  }
  SuiteResult result;
  result.csv = csv.str();
  result.any_divergence = any_divergence;
  return result;
}

SuiteResult run_fig3(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!is_power_of_two(cfg.n))
    throw precondition_error("fig3: Hadamard kinds require a power-of-two n");
  const std::vector<std::string> kinds = {"block-srht", "garbled-block-srht", "gaussian", "haar",
                                          "rademacher"};
  const GeneratedData gen = generate_data(cfg, cfg.seed);
  const Partition part = cfg.partition();
  const Matrix u = linalg::orthonormal_basis(gen.data.A);

  // scores[label] = per-block mass, emitted per block in label order.
  std::vector<std::pair<std::string, std::vector<double>>> scores;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const auto kind = sketch::kind_from_string(kinds[i]);
    const std::uint64_t pseed =
        rng::derive(cfg.seed, rng::StreamId::Projection, static_cast<std::uint64_t>(i))();
    const sketch::Projection p = sketch::build_projection(kind, cfg.n, pseed);
    scores.emplace_back(kinds[i], linalg::block_squared_norms(p.apply(u), part));
  }
  scores.emplace_back("raw", linalg::block_squared_norms(u, part));

  std::ostringstream csv;
  csv << "block,projection,score\n";
  for (Index k = 0; k < part.blocks; ++k)
    for (const auto& [label, values] : scores)
      csv << k << ',' << label << ',' << io::format_short(values[static_cast<std::size_t>(k)])
          << '\n';
  SuiteResult result;
  result.csv = csv.str();
  return result;
}

namespace {

// Ascending q-subsets of {0..k-1}; invokes fn once per subset.
template <typename Fn>
void for_each_subset(Index k, Index q, Fn fn) {
  std::vector<rng::Index64> subset(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) subset[static_cast<std::size_t>(i)] = i;
  while (true) {
    fn(subset);
    Index pos = q - 1;
    while (pos >= 0 &&
           subset[static_cast<std::size_t>(pos)] == static_cast<rng::Index64>(k - q + pos))
      --pos;
    if (pos < 0) return;
    ++subset[static_cast<std::size_t>(pos)];
    for (Index i = pos + 1; i < q; ++i)
      subset[static_cast<std::size_t>(i)] = subset[static_cast<std::size_t>(i - 1)] + 1;
  }
}

struct SuiteWriter {
  std::ostringstream csv;
  bool all_pass = true;

  SuiteWriter() { csv << "test,param,value,threshold,pass\n"; }

  void row(const std::string& test, const std::string& param, const std::string& value,
           const std::string& threshold, bool pass) {
    csv << test << ',' << param << ',' << value << ',' << threshold << ',' << (pass ? 1 : 0)
        << '\n';
    all_pass = all_pass && pass;
  }

  void bound_row(const std::string& test, const std::string& param, double value,
                 double threshold) {
    row(test, param, io::format_short(value), io::format_short(threshold), value <= threshold);
  }
};

Matrix random_gaussian(std::uint64_t seed, std::uint64_t salt, Index rows, Index cols) {
  rng::Stream stream = rng::derive(seed, rng::StreamId::Data, salt);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(stream);
  return m;
}

// Dense normalized Walsh-Hadamard matrix by Kronecker doubling (oracle).
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

}  // namespace

SuiteResult run_oracle_suite(std::uint64_t seed) {
  SuiteWriter out;

  // Transform vs. dense Kronecker product across sizes and seeds.
  {
    double worst = 0.0;
    for (Index n = 2; n <= 64; n *= 2) {
      const Matrix h = dense_hadamard(n);
      for (std::uint64_t s = 0; s < 50; ++s) {
        const Matrix v = random_gaussian(seed, 100 + s * 7 + static_cast<std::uint64_t>(n), n, 1);
        Vector fast = v.col(0);
        linalg::fwht_inplace(fast);
        worst = std::max(worst, (fast - h * v.col(0)).lpNorm<Eigen::Infinity>());
      }
    }
    out.bound_row("fwht-dense-oracle", "n2-64-seeds50", worst, 1e-12);
  }

  // Exhaustive subset mean of S^T S equals the identity.
  {
    const auto haar = sketch::build_projection(sketch::ProjectionKind::HaarOrthonormal, 12,
                                               rng::derive(seed, rng::StreamId::Projection, 1)());
    const Matrix mean = sketch::gram_expectation_oracle(haar, Partition::contiguous(12, 6), 3);
    out.bound_row("gram-mean-identity", "haar-n12-k6-q3",
                  (mean - Matrix::Identity(12, 12)).lpNorm<Eigen::Infinity>(), 1e-10);
  }
  {
    const auto garbled =
        sketch::build_projection(sketch::ProjectionKind::GarbledBlockSrht, 16,
                                 rng::derive(seed, rng::StreamId::Projection, 2)());
    const Matrix mean = sketch::gram_expectation_oracle(garbled, Partition::contiguous(16, 8), 4);
    out.bound_row("gram-mean-identity", "garbled-n16-k8-q4",
                  (mean - Matrix::Identity(16, 16)).lpNorm<Eigen::Infinity>(), 1e-10);
  }

  // Exhaustive subset means of the sketched gradient and of one rescaled
  // step, on scale-1 shards (r = N): mean gradient is (q/K) of the full
  // gradient; mean rescaled step is the plain descent step.
  {
    const Index n = 12, d = 4, k = 6, q = 3;
    const Partition part = Partition::contiguous(n, k);
    const Matrix a = random_gaussian(seed, 11, n, d);
    const Vector b = random_gaussian(seed, 12, n, 1).col(0);
    const Vector x = random_gaussian(seed, 13, d, 1).col(0);
    const auto haar = sketch::build_projection(sketch::ProjectionKind::HaarOrthonormal, n,
                                               rng::derive(seed, rng::StreamId::Projection, 3)());
    const auto shards = sim::encode_distribute(a, b, haar, part, n);  // scale 1

    const double xi = 0.05;
    const auto rule = sim::StepRule::fixed_rescaled(xi, static_cast<double>(k) / q);
    Vector grad_mean = Vector::Zero(d);
    Vector step_mean = Vector::Zero(d);
    Index subsets = 0;
    for_each_subset(k, q, [&](const std::vector<rng::Index64>& subset) {
      grad_mean += sim::aggregated_gradient(shards, subset, x);
      step_mean += sim::ssd_step(shards, subset, x, rule);
      ++subsets;
    });
    grad_mean /= static_cast<double>(subsets);
    step_mean /= static_cast<double>(subsets);

    const Vector full = 2.0 * (a.transpose() * (a * x - b));
    const Vector expected_grad = (static_cast<double>(q) / k) * full;
    out.bound_row("gradient-mean", "haar-n12-k6-q3-d4",
                  (grad_mean - expected_grad).lpNorm<Eigen::Infinity>(), 1e-10);

    const Vector sd_step = x - (xi / static_cast<double>(n)) * full;
    out.bound_row("step-mean", "haar-n12-k6-q3-d4",
                  (step_mean - sd_step).lpNorm<Eigen::Infinity>(), 1e-10);
  }

  // Exact-gradient mode: q = K responders and scale 1 reproduce the full
  // gradient for every orthonormal kind.
  {
    const Index n = 64, d = 5, k = 8;
    const Partition part = Partition::contiguous(n, k);
    const Matrix a = random_gaussian(seed, 21, n, d);
    const Vector b = random_gaussian(seed, 22, n, 1).col(0);
    std::vector<rng::Index64> all(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) all[static_cast<std::size_t>(i)] = i;
    const std::vector<sketch::ProjectionKind> kinds = {
        sketch::ProjectionKind::Identity, sketch::ProjectionKind::HaarOrthonormal,
        sketch::ProjectionKind::BlockSrht, sketch::ProjectionKind::GarbledBlockSrht};
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      const auto p = sketch::build_projection(
          kinds[i], n, rng::derive(seed, rng::StreamId::Projection, 30 + i)());
      const auto shards = sim::encode_distribute(a, b, p, part, n);
      double worst = 0.0;
      for (std::uint64_t probe = 0; probe < 5; ++probe) {
        const Vector x = random_gaussian(seed, 40 + probe, d, 1).col(0);
        const Vector full = 2.0 * (a.transpose() * (a * x - b));
        worst = std::max(worst, (sim::aggregated_gradient(shards, all, x) - full)
                                    .lpNorm<Eigen::Infinity>());
      }
      out.bound_row("exact-gradient", sketch::to_string(kinds[i]) + "-n64-k8", worst, 1e-10);
    }
  }

  // Fully-sketched solve equals the unsketched LS solution.
  {
    const Index n = 512, d = 16;
    const Matrix a = random_gaussian(seed, 51, n, d);
    const Vector b = random_gaussian(seed, 52, n, 1).col(0);
    const Vector direct = sim::least_squares_solve(a, b);
    const std::vector<sketch::ProjectionKind> kinds = {sketch::ProjectionKind::HaarOrthonormal,
                                                       sketch::ProjectionKind::GarbledBlockSrht};
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      const auto p = sketch::build_projection(
          kinds[i], n, rng::derive(seed, rng::StreamId::Projection, 60 + i)());
      const Vector sketched = sim::sketched_solution_oracle(a, b, p);
      out.bound_row("sketched-solution", sketch::to_string(kinds[i]) + "-n512-d16",
                    (sketched - direct).norm() / direct.norm(), 1e-8);
    }
  }

  SuiteResult result;
  result.csv = out.csv.str();
  result.all_pass = out.all_pass;
  return result;
}

SuiteResult run_secrecy_suite(std::uint64_t seed) {
  SuiteWriter out;

  // The zero-entry distinguisher labels all eight sign-key ciphertexts.
  {
    const Matrix u0 = security::plaintext_u0();
    const Matrix u1 = security::plaintext_u1();
    Index correct_u0 = 0, correct_u1 = 0;
    for (int s0 = -1; s0 <= 1; s0 += 2) {
      for (int s1 = -1; s1 <= 1; s1 += 2) {
        sketch::Projection key;
        key.kind = sketch::ProjectionKind::BlockSrht;
        key.n = 2;
        key.signature = Vector(2);
        key.signature << static_cast<double>(s0), static_cast<double>(s1);
        if (security::srht_distinguisher(security::encrypt(key, u0).data) ==
            security::PlaintextLabel::U0)
          ++correct_u0;
        if (security::srht_distinguisher(security::encrypt(key, u1).data) ==
            security::PlaintextLabel::U1)
          ++correct_u1;
      }
    }
    out.row("distinguisher", "u0-all-sign-keys", std::to_string(correct_u0), "4", correct_u0 == 4);
    out.row("distinguisher", "u1-all-sign-keys", std::to_string(correct_u1), "4", correct_u1 == 4);
  }

  // Group closure and the Shannon-secrecy frequency statistics.
  {
    const auto g2 = security::FiniteOrthogroup::signed_permutations(2);
    bool closed = true;
    try {
      g2.validate();
    } catch (const closure_error&) {
      closed = false;
    }
    out.row("group-closure", "signed-perm-n2", closed ? "1" : "0", "1", closed);

    const double tv_exact = security::secrecy_exact_test(g2);
    out.row("secrecy-exact", "signed-perm-n2", io::format_short(tv_exact), "0", tv_exact == 0.0);

    const Index trials = 8000;
    const double tv = security::secrecy_frequency_test(
        g2, trials, rng::derive(seed, rng::StreamId::Trial, 1)());
    const double bound =
        3.0 * std::sqrt(static_cast<double>(g2.size()) / static_cast<double>(trials));
    out.bound_row("secrecy-sampled", "signed-perm-n2-trials8000", tv, bound);
  }
  {
    // 384 elements; the element lookup inside the exact test doubles as a
    // closure check (any product outside the group raises a closure error).
    const auto g4 = security::FiniteOrthogroup::signed_permutations(4);
    const double tv_exact = security::secrecy_exact_test(g4);
    out.row("secrecy-exact", "signed-perm-n4", io::format_short(tv_exact), "0", tv_exact == 0.0);
  }

  // Exact ensemble counts.
  {
    struct Case {
      sketch::ProjectionKind kind;
      Index n;
      const char* expected;
    };
    const std::vector<Case> cases = {
        {sketch::ProjectionKind::BlockSrht, 2, "4"},
        {sketch::ProjectionKind::GarbledBlockSrht, 3, "48"},
        {sketch::ProjectionKind::Rademacher, 2, "16"},
    };
    for (const Case& c : cases) {
      const std::string value = security::ensemble_size(c.kind, c.n).get_str();
      out.row("ensemble-size", sketch::to_string(c.kind) + "-n" + std::to_string(c.n), value,
              c.expected, value == c.expected);
    }
  }

  SuiteResult result;
  result.csv = out.csv.str();
  result.all_pass = out.all_pass;
  return result;
}

std::string history_csv(const sim::SolverState& state) {
  std::ostringstream csv;
  csv << "t,responders,residual,objective,gradient_norm\n";
  for (std::size_t t = 0; t < state.history.size(); ++t) {
    const auto& rec = state.history[t];
    csv << (t + 1) << ',';
    for (std::size_t i = 0; i < rec.responders.size(); ++i) {
      if (i > 0) csv << ';';
      csv << rec.responders[i];
    }
    csv << ',' << io::format_short(rec.residual_error) << ',' << io::format_short(rec.objective)
        << ',' << io::format_short(rec.gradient_norm) << '\n';
  }
  return csv.str();
}

}  // namespace blocksketch::exper
