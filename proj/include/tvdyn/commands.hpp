#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tvdyn/config.hpp"
#include "tvdyn/props.hpp"

namespace tvdyn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Each command writes its files under cfg.out_dir and a short summary to `out`.
// Config and IO problems surface as ConfigError / IoError.
int cmd_resolvent(const RunConfig& cfg, std::ostream& out);
int cmd_evolve(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const RunConfig& cfg, std::ostream& out);
int cmd_converge(const RunConfig& cfg, std::ostream& out);
int cmd_oracle(const RunConfig& cfg, std::ostream& out);

// Runs a subcommand by name, mapping config, IO and validation errors to exit code 2.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out, std::ostream& err);

const std::vector<std::string>& command_names();

// Checks on an exported evolve directory (boundary_series.csv + norms.csv):
// flux identity, flux bound, L2 estimate, BV estimate, convergence flags.
std::vector<PropertyReport> check_exported_run(const RunConfig& cfg, const std::string& dir);

}  // namespace tvdyn
