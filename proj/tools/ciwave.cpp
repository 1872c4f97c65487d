// Command-line front end: experiment dispatch over flat key=value configs.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ciwave/config.hpp"
#include "ciwave/harness.hpp"
#include "ciwave/simplex_projection.hpp"
#include "ciwave/version.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ciwave;

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kConfigSyntax = 3,
  kConfigInvariant = 4,
  kRuntime = 5,
};

int exit_code_for(const ConfigError& e) {
  switch (e.kind) {
    case ConfigError::Kind::MissingFile: return kUsage;
    case ConfigError::Kind::Syntax: return kConfigSyntax;
    case ConfigError::Kind::Invariant: return kConfigInvariant;
  }
  return kRuntime;
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir = ".";
  bool emit_config = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  cmd->add_option("--config", args.config_path, "key=value config file")
      ->required(config_required);
  cmd->add_option("--set", args.overrides, "override, key=value (repeatable)");
  cmd->add_option("--output-dir", args.output_dir, "directory for CSV outputs");
  cmd->add_flag("--emit-config", args.emit_config,
                "print the canonical config and exit");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
  return load_config(args.config_path, args.overrides);
}

void write_provenance(const fs::path& dir, const std::string& stem,
                      const ExperimentConfig& cfg) {
  std::ofstream out(dir / (stem + ".provenance.txt"));
  out << "artifact_version=" << kVersion << "\n";
  out << "master_seed=" << cfg.master_seed << "\n";
  out << "# config snapshot\n" << emit_config(cfg);
}

template <typename Rows, typename Writer>
void write_csv(const fs::path& dir, const std::string& stem, const Rows& rows,
               Writer writer, const ExperimentConfig& cfg) {
  fs::create_directories(dir);
  const fs::path file = dir / (stem + ".csv");
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  writer(out, rows);
  write_provenance(dir, stem, cfg);
  std::cout << stem << ": " << rows.size() << " records -> " << file.string() << "\n";
}

std::string format_vector(const RealVector& v) {
  std::ostringstream os;
  os.precision(12);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v(i);
  }
  return os.str();
}

int run_solve(const CommonArgs& args, bool dump) {
  // `--set method=...` picks the solver for this one-shot run.
  std::vector<std::string> overrides;
  for (const auto& o : args.overrides) {
    const auto kv = parse_override(o);
    overrides.push_back(kv.first == "method" ? "methods=" + kv.second : o);
  }
  CommonArgs fixed = args;
  fixed.overrides = overrides;
  const ExperimentConfig cfg = resolve_config(fixed);

  const Constellation c = make_constellation(cfg.modulation, cfg.normalize_qam);
  const Channel ch = rayleigh_channel(cfg.antennas, cfg.users,
                                      seed_split(cfg.master_seed, 0, SeedPurpose::Channel),
                                      cfg.cond_threshold);
  const SymbolBlock blk = draw_block(c, cfg.users, cfg.slots,
                                     seed_split(cfg.master_seed, 0, SeedPurpose::Symbols));

  const std::string method = cfg.methods.front();
  SolveMethod sm = SolveMethod::Admm;
  if (method == "nonlinear-epigraph") sm = SolveMethod::Epigraph;
  else if (method == "nonlinear-qp") sm = SolveMethod::QpReference;
  else if (method != "nonlinear-admm") {
    std::cerr << "solve supports the nonlinear-* methods, got '" << method << "'\n";
    return kUsage;
  }

  Real t_star = 0.0, power = 0.0, violation = 0.0;
  int iterations = 0;
  bool converged = false;
  RealVector head;
  if (c.is_psk()) {
    PskSolveOptions opts;
    opts.method = sm;
    opts.admm = cfg.resolved_admm(false);
    opts.tol = cfg.solver_tol;
    const PskSolution s = solve_psk(ch.H, blk.symbols, cfg.p0, c.theta_t, opts);
    t_star = s.t_star;
    power = s.X.squaredNorm();
    violation = s.diag.max_violation;
    iterations = s.diag.iterations;
    converged = s.diag.converged;
    head = s.lambda_hat.head(std::min<Eigen::Index>(8, s.lambda_hat.size()));
  } else {
    QamSolveOptions opts;
    opts.method = sm;
    opts.sign_mode = cfg.qam_sign_mode;
    opts.admm = cfg.resolved_admm(true);
    opts.tol = cfg.solver_tol;
    const QamSolution s = solve_qam(ch.H, blk.symbols, cfg.p0, c, opts);
    t_star = s.t_star;
    power = s.X.squaredNorm();
    violation = s.diag.max_violation;
    iterations = s.diag.iterations;
    converged = s.diag.converged;
    head = s.gamma.head(std::min<Eigen::Index>(8, s.gamma.size()));
  }
  std::cout.precision(12);
  std::cout << "method=" << method << " t_star=" << t_star << " power=" << power
            << " max_violation=" << violation << " iterations=" << iterations
            << " converged=" << (converged ? 1 : 0) << "\n";
  if (dump) std::cout << "scalings_head=" << format_vector(head) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constructive-interference waveform design experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ciwave::kVersion);

  CommonArgs ser_args, sweep_args, conv_args, timing_args, solve_args;
  bool dump = false;
  std::string project_vector;

  auto* ser = app.add_subcommand("ser", "SER-vs-SNR Monte Carlo sweep");
  add_common(ser, ser_args);
  auto* sweep = app.add_subcommand("blocksweep", "SER vs block length");
  add_common(sweep, sweep_args);
  auto* conv = app.add_subcommand("convergence", "ADMM per-iteration traces");
  add_common(conv, conv_args);
  auto* timing = app.add_subcommand("timing", "method wall-time vs block length");
  add_common(timing, timing_args);
  auto* solve = app.add_subcommand("solve", "solve one seeded instance and print diagnostics");
  add_common(solve, solve_args);
  solve->add_flag("--dump", dump, "also print the leading scaling entries");
  auto* project = app.add_subcommand("project", "project a vector onto the probability simplex");
  project->add_option("--vector", project_vector, "comma-separated entries")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (project->parsed()) {
      const std::vector<Real> values = parse_real_grid(project_vector);
      RealVector q(static_cast<Eigen::Index>(values.size()));
      for (std::size_t i = 0; i < values.size(); ++i) q(static_cast<Eigen::Index>(i)) = values[i];
      std::cout << format_vector(project_simplex(q)) << "\n";
      return kOk;
    }
    const auto handle = [&](const CommonArgs& args, auto runner) -> int {
      const ExperimentConfig cfg = resolve_config(args);
      if (args.emit_config) {
        std::cout << emit_config(cfg);
        return kOk;
      }
      runner(cfg, fs::path(args.output_dir));
      return kOk;
    };
    if (ser->parsed()) {
      return handle(ser_args, [](const ExperimentConfig& cfg, const fs::path& dir) {
        write_csv(dir, "ser", run_ser_sweep(cfg),
                  [](std::ostream& os, const auto& r) { write_ser_csv(os, r); }, cfg);
      });
    }
    if (sweep->parsed()) {
      return handle(sweep_args, [](const ExperimentConfig& cfg, const fs::path& dir) {
        write_csv(dir, "blocksweep", run_block_length_sweep(cfg, cfg.n_list),
                  [](std::ostream& os, const auto& r) { write_ser_csv(os, r); }, cfg);
      });
    }
    if (conv->parsed()) {
      return handle(conv_args, [](const ExperimentConfig& cfg, const fs::path& dir) {
        write_csv(dir, "convergence", run_convergence(cfg),
                  [](std::ostream& os, const auto& r) { write_convergence_csv(os, r); }, cfg);
      });
    }
    if (timing->parsed()) {
      return handle(timing_args, [](const ExperimentConfig& cfg, const fs::path& dir) {
        write_csv(dir, "timing", run_timing(cfg, cfg.n_list),
                  [](std::ostream& os, const auto& r) { write_timing_csv(os, r); }, cfg);
      });
    }
    if (solve->parsed()) return run_solve(solve_args, dump);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
