// Command-line front end: data generation, the three figure suites, and the
// oracle / secrecy verification suites.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 at least one
// solver run diverged (figures only), 1 any other failure (including failed
// verification rows).

#include "CLI11.hpp"
#include "blocksketch/experiments.hpp"
#include "blocksketch/matrix_io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

namespace {

namespace fs = std::filesystem;
using blocksketch::exper::ExperimentConfig;
using blocksketch::exper::SuiteResult;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Path to a key = value config file")
      ->check(CLI::ExistingFile);
  auto* seed_opt = cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--out", opts.out_dir, "Output directory (created if missing)");
  cmd->parse_complete_callback([&opts, seed_opt] { opts.seed_given = seed_opt->count() > 0; });
}

ExperimentConfig load_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = ExperimentConfig::parse_file(opts.config_path);
  if (opts.seed_given) cfg.seed = opts.seed;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  std::cout << "wrote " << path.string() << '\n';
}

fs::path prepare_out_dir(const CommonOpts& opts) {
  fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  return dir;
}

int run_gen_data(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts);
  const auto gen = blocksketch::exper::generate_data(cfg, cfg.seed);
  const fs::path dir = prepare_out_dir(opts);
  blocksketch::io::write_matrix_csv((dir / "A.csv").string(), gen.data.A);
  blocksketch::io::write_matrix_csv((dir / "b.csv").string(), gen.data.b);
  blocksketch::io::write_matrix_csv((dir / "weights.csv").string(), gen.weights);
  blocksketch::io::write_matrix_csv((dir / "x_star.csv").string(), gen.x_star);
  std::cout << "wrote " << (dir / "A.csv").string() << " and companion files\n";
  write_text(dir / "config.txt", cfg.emit());
  return 0;
}

int run_figure(const CommonOpts& opts, const std::string& name,
               SuiteResult (*runner)(const ExperimentConfig&)) {
  const ExperimentConfig cfg = load_config(opts);
  const SuiteResult result = runner(cfg);
  const fs::path dir = prepare_out_dir(opts);
  write_text(dir / (name + ".csv"), result.csv);
  write_text(dir / "config.txt", cfg.emit());
  if (result.any_divergence) {
    std::cout << name << ": some runs diverged (cells reported as inf)\n";
    return 3;
  }
  return 0;
}

int run_suite(const CommonOpts& opts, const std::string& name,
              SuiteResult (*runner)(std::uint64_t)) {
  const ExperimentConfig cfg = load_config(opts);
  const SuiteResult result = runner(cfg.seed);
  const fs::path dir = prepare_out_dir(opts);
  write_text(dir / (name + ".csv"), result.csv);
  std::cout << name << ": " << (result.all_pass ? "PASS" : "FAIL") << '\n';
  return result.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-subsampled orthonormal sketching: simulator and experiment runner"};
  app.require_subcommand(1);

  CommonOpts opts;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a regression dataset as CSV");
  CLI::App* fig1 = app.add_subcommand("fig1", "Final residual vs. step-size factor sweep");
  CLI::App* fig2 = app.add_subcommand("fig2", "Residual vs. iteration at a fixed step factor");
  CLI::App* fig3 = app.add_subcommand("fig3", "Per-block leverage mass before/after projection");
  CLI::App* oracle = app.add_subcommand("oracle-suite", "Exhaustive-expectation checks");
  CLI::App* secrecy = app.add_subcommand("secrecy-suite", "Distinguisher and secrecy checks");
  for (CLI::App* cmd : {gen, fig1, fig2, fig3, oracle, secrecy}) add_common(cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return run_gen_data(opts);
    if (fig1->parsed()) return run_figure(opts, "fig1", blocksketch::exper::run_fig1);
    if (fig2->parsed()) return run_figure(opts, "fig2", blocksketch::exper::run_fig2);
    if (fig3->parsed()) return run_figure(opts, "fig3", blocksketch::exper::run_fig3);
    if (oracle->parsed())
      return run_suite(opts, "oracle_suite", blocksketch::exper::run_oracle_suite);
    if (secrecy->parsed())
      return run_suite(opts, "secrecy_suite", blocksketch::exper::run_secrecy_suite);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
