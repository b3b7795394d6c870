#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvdyn/stepper.hpp"

namespace tvdyn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parsed run descriptor. Sections and keys (all optional unless a command
// needs them):
//
//   [mesh]      dimension, lengths, cells, tv (isotropic | anisotropic)
//   [equation]  lambda
//   [time]      T, eps, sample_mode
//   [data]      omega0, g            (constant C | formula NAME ARGS... | table PATH | random SEED AMPLITUDE)
//   [solver]    tolerance, max_iterations, check_every, step_ratio, accelerated, restart_every
//   [output]    snapshot_every
//   [verify]    suites, instances, trajectory, cells_1d, cells_2d, T, eps
//   [converge]  eps_list, cells_list
//   [oracle]    dt
struct RunConfig {
  int dimension = 1;
  std::vector<double> lengths{1.0};
  std::vector<int> cells{64};
  TvNorm tv = TvNorm::isotropic;
  double lambda = 1.0;
  double T = 1.0;
  double eps = 0.1;
  SampleMode sample_mode = SampleMode::right_endpoint;
  std::string omega0 = "constant 0";
  std::string g = "constant 0";

  double tolerance = 1e-8;
  int max_iterations = 200000;
  int check_every = 50;
  double step_ratio = 0.0;
  bool accelerated = true;
  int restart_every = 2000;

  int snapshot_every = 0;

  std::vector<std::string> suites{"comparison", "contraction", "estimates", "certificates", "decay"};
  int instances = 2;
  std::string trajectory;  // evolve output directory to verify
  int verify_cells_1d = 12;
  int verify_cells_2d = 6;
  double verify_T = 0.3;
  double verify_eps = 0.05;

  std::vector<double> eps_list;
  std::vector<int> cells_list;

  double oracle_dt = 0.0;  // 0: eps / 10

  // Command line.
  std::filesystem::path base_dir = ".";
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  Mesh mesh() const;
  SolverConfig solver() const;
};

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

// Data descriptors.
BoundaryField make_boundary_field(const std::string& spec, const Mesh& mesh);
Forcing make_forcing(const std::string& spec, const Mesh& mesh, const std::filesystem::path& base_dir);
// Constant value when the descriptor is `constant C`.
std::optional<double> constant_value(const std::string& spec);

}  // namespace tvdyn
