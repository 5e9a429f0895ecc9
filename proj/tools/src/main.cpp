#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace mpct::cli;
  CLI::App app{"mpct: design, simulate and analyse MPC-for-tracking controllers"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("-c,--config", opts.config, "experiment config (JSON, \"schema\": 1)");
    if (config_required) c->required();
    sub->add_option("-o,--output-dir", out_dir, "override the config's output directory");
  };

  auto* design = app.add_subcommand("design", "compute terminal ingredients and validate the design");
  add_common(design, true);

  auto* simulate = app.add_subcommand("simulate", "run closed loops and write traces and convergence reports");
  add_common(simulate, true);
  simulate->add_flag("--dump-qp", opts.dump_qp, "write the program solved at t = 0");

  auto* doa = app.add_subcommand("doa", "grid scan of the domain of attraction for each listed formulation");
  add_common(doa, true);

  auto* solve = app.add_subcommand("solve", "solve one program built from a config or read from --program");
  add_common(solve, false);
  std::string program;
  solve->add_option("-p,--program", program, "program JSON written by --dump-qp");
  solve->add_flag("--dump-qp", opts.dump_qp, "write the program before solving");
  solve->add_flag("--check", opts.check, "compare against the interior-point reference solver");

  auto* bench = app.add_subcommand("bench", "time the solver on the configured formulation");
  add_common(bench, true);
  bench->add_option("--horizons", opts.horizons, "horizons to sweep")->delimiter(',');
  bench->add_option("--repeats", opts.repeats, "solves per horizon")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  if (!out_dir.empty()) opts.output_dir = out_dir;
  if (!program.empty()) opts.program = program;

  if (design->parsed()) return cmd_design(opts, std::cout, std::cerr);
  if (simulate->parsed()) return cmd_simulate(opts, std::cout, std::cerr);
  if (doa->parsed()) return cmd_doa(opts, std::cout, std::cerr);
  if (solve->parsed()) {
    if (!opts.program && opts.config.empty()) {
      std::cerr << "solve: give --config or --program\n";
      return kSchemaOrIo;
    }
    return cmd_solve(opts, std::cout, std::cerr);
  }
  return cmd_bench(opts, std::cout, std::cerr);
}
