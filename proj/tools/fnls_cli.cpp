// Batch front end: fnls_cli <command> [options]. See docs/cli.md.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "fnls/runner.hpp"

namespace {

void print_summary(const fnls::RunRecord& r, bool quiet) {
  if (quiet) return;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    std::printf("[%zu] %s s=%g N=%g beta=%g theta=%.12g residual=%.3g %s\n", i, p.label.c_str(), p.s, p.N, p.beta,
                p.theta, p.residual, p.passed() ? "PASS" : "FAIL");
    if (!p.error.empty()) std::printf("    error: %s\n", p.error.c_str());
    for (const auto& c : p.checks) {
      if (!c.pass)
        std::printf("    failed %s: %.6g %s %.6g\n", c.name.c_str(), c.measured, c.relation.c_str(), c.threshold);
    }
  }
  for (const auto& c : r.checks) {
    std::printf("[run] %s: %.6g %s %.6g %s\n", c.name.c_str(), c.measured, c.relation.c_str(), c.threshold,
                c.pass ? "PASS" : "FAIL");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional NLS ground states: solves, sweeps and verification runs"};
  app.set_version_flag("--version", FNLS_VERSION);
  app.set_config("--config", "", "Flat key = value configuration file (command-line flags take precedence)");

  fnls::RunConfig cfg;
  std::string command;
  bool quiet = false;

  app.add_option("--s", cfg.s_list, "Dispersion exponents in (1, 2); s = 2 only for gn-constant")->delimiter(',');
  app.add_option("--N", cfg.n_list, "Masses (normalized problem)")->delimiter(',');
  app.add_option("--beta", cfg.beta_list, "Group-velocity parameters")->delimiter(',');
  app.add_option("--L", cfg.length, "Torus length; 0 selects the default for each s");
  app.add_option("--M", cfg.points, "Grid points (power of two)");
  app.add_option("--linear-M", cfg.linear_points, "Grid points for the linearized operator");
  app.add_option("--tol", cfg.tol, "Relative Euler-Lagrange residual tolerance");
  app.add_option("--method", cfg.method, "Solver")->check(CLI::IsMember({"petviashvili", "gradient-flow"}));
  app.add_option("--trials", cfg.trials, "Random initializations for verify-th3");
  app.add_option("--seed", cfg.seed, "Base seed for random initializations");
  app.add_option("--cache-dir", cfg.cache_dir, "Solve cache directory (empty disables caching)")->envname("FNLS_CACHE_DIR");
  app.add_option("--out-dir", cfg.out_dir, "Output directory");
  app.add_option("--format", cfg.format, "Record format")->check(CLI::IsMember({"csv", "json", "both"}));
  app.add_option("--workers", cfg.workers, "Worker threads for independent points");
  app.add_flag("--quiet", quiet, "Only report the exit status");

  for (const auto& [name, value] : fnls::command_names()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " pipeline");
    sub->fallthrough();
    sub->callback([&command, n = name] { command = n; });
  }
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.command = fnls::parse_command(command);
    const fnls::RunRecord record = fnls::run(cfg);
    const fnls::EmittedFiles files = fnls::emit_outputs(record);
    print_summary(record, quiet);
    const int status = fnls::exit_status(record);
    if (!quiet) {
      std::printf("wrote %zu files under %s (prefix %s)\n", files.paths.size(), cfg.out_dir.c_str(), files.prefix.c_str());
      std::printf("exit status %d\n", status);
    }
    return status;
  } catch (const fnls::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
