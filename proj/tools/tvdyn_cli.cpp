#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "tvdyn/commands.hpp"

int main(int argc, char** argv) {
  using namespace tvdyn;
  CLI::App app{"Boundary dynamics driven by a total-variation bulk problem"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> tol;
  const std::map<std::string, std::string> about{
      {"resolvent", "one implicit step from omega0 + eps * g, with its certificate"},
      {"evolve", "implicit Euler trajectory: boundary series, norms, bulk snapshots"},
      {"verify", "property suites, or checks on an exported evolve directory"},
      {"converge", "refinement tables in eps (and optionally in cells)"},
      {"oracle", "scalar reference dynamics for constant data on an interval"},
  };
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    sub->add_option("--config", config_path, "INI run descriptor")->required();
    sub->add_option("--out", out_dir, "output directory (default $TVDYN_OUT or ./out)");
    sub->add_option("--seed", seed, "seed for random instances");
    sub->add_option("--threads", threads, "worker threads for verify")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "solver tolerance")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (!out_dir.empty()) {
    cfg.out_dir = out_dir;
  } else if (const char* env = std::getenv("TVDYN_OUT"); env && *env) {
    cfg.out_dir = env;
  }
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  if (tol) cfg.tolerance = *tol;

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run_command(name, cfg, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
