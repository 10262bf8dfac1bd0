// stratheat: command-line runner for the spectral heat-equation laboratory.
//
// Usage:
//   stratheat <simulate|converge|moments|roughness|couple>
//             --config PATH [--seed U64] [--out DIR] [--threads INT]
//
// Every run writes results.csv (plot-shaped: series,x,y band) and
// manifest.json (config echo, version, base seed, metrics, verdicts) into the
// output directory. Exit codes: 0 all verdicts pass, 1 some verdict failed,
// 2 configuration error.

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stratheat/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 1;
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment configuration")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory (default out/<tag>-<command>)");
  cmd->add_option("--seed", args.seed, "override the config base seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads, "worker threads (results are thread-count invariant)")
      ->check(CLI::Range(1u, 64u));
}

int run_command(const std::string& command, const CommonArgs& args,
                const std::string& moment_kind) {
  stratheat::ExperimentConfig cfg = stratheat::load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;

  const std::filesystem::path out =
      args.out_dir.empty() ? std::filesystem::path("out") / (cfg.tag + "-" + command)
                           : std::filesystem::path(args.out_dir);

  const auto start = std::chrono::steady_clock::now();
  stratheat::RunReport report;
  if (command == "simulate") report = stratheat::run_simulate(cfg, args.threads);
  else if (command == "converge") report = stratheat::run_converge(cfg, args.threads);
  else if (command == "moments") report = stratheat::run_moments(cfg, moment_kind, args.threads);
  else if (command == "roughness") report = stratheat::run_roughness(cfg, args.threads);
  else if (command == "couple") report = stratheat::run_couple(cfg, args.threads);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const int code = stratheat::write_outputs(out, cfg, command, report, wall, args.threads);
  for (const auto& [name, ok] : report.verdicts)
    std::cout << name << ": " << (ok ? "PASS" : "FAIL") << '\n';
  std::cout << "outputs: " << out.string() << " (" << (code == 0 ? "PASS" : "FAIL") << ")\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral laboratory for the stochastic heat equation"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string moment_kind = "i";
  CLI::App* simulate = app.add_subcommand("simulate", "solve an ensemble and summarize it");
  CLI::App* converge = app.add_subcommand(
      "converge", "approximation-family convergence study (family from config)");
  CLI::App* moments = app.add_subcommand("moments", "moment-condition and oracle checks");
  CLI::App* roughness =
      app.add_subcommand("roughness", "remainder exponents and algebraic residues");
  CLI::App* couple = app.add_subcommand("couple", "pathwise coupling-quality sweep");
  for (CLI::App* cmd : {simulate, converge, moments, roughness, couple})
    attach_common(cmd, args);
  moments->add_option("--kind", moment_kind, "which check: i | ii | interp | rosenthal")
      ->check(CLI::IsMember({"i", "ii", "interp", "rosenthal"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints help or the parse diagnostic
    return 2;     // bad invocation is a configuration error
  }

  try {
    return run_command(app.get_subcommands().front()->get_name(), args, moment_kind);
  } catch (const stratheat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
