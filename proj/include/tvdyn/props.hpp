#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvdyn/stepper.hpp"

namespace tvdyn {

// Tolerance classes.
inline constexpr double kIdentityTol = 1e-12;   // machine-exact constructs
inline constexpr double kInequalitySlack = 1e-6;
inline constexpr double kOrderSlack = 1e-7;     // pointwise ordering

struct PropertyReport {
  std::string property;
  std::string instance;
  double left = 0.0;
  double right = 0.0;
  double slack = 0.0;  // right - left
  double tolerance = 0.0;
  bool passed = true;
  // Informational reports are never counted as failures.
  bool informational = false;
  int worst_step = -1;
  int worst_site = -1;
};

class MismatchedGrids : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Pointwise ordering omega^1_i <= omega^2_i and u^1_i <= u^2_i (data ordered).
// Asserted in 1D and for anisotropic TV; 2D isotropic yields an informational
// "comparison-isotropic" report.
PropertyReport check_comparison(const Trajectory& lower, const Trajectory& upper, const std::string& instance = "");

// Continuous dependence on data:
//  [0] sup_i ||omega1_i - omega2_i|| <= ||omega01 - omega02|| + sum eps ||g1_i - g2_i||
//  [1] lambda sum_i eps ||u1_i - u2_i||^2 <= 1/2 ||omega01 - omega02||^2 + 1/2 (sum eps ||g1_i - g2_i||)^2
//  [2] 2 lambda sum_i eps ||u1_i - u2_i||^2 + ||omega1_n - omega2_n||^2
//        <= ||omega01 - omega02||^2 + 2 sum eps ||g1_i - g2_i|| ||omega1_i - omega2_i||
// [1] is only claimed for pairs that differ in the initial state alone or in
// the forcing alone; [2] holds for every pair.
std::vector<PropertyReport> check_contraction(const Trajectory& a, const Trajectory& b, const std::string& instance = "");

// A priori estimates and the exact per-step structure:
//  est-l2     ||omega_i|| <= ||omega_0|| + sum_{k<=i} eps ||g_k||
//  est-bv     lambda ||u_i||^2 + ||u_i||_BV <= 2 ||omega_i||_L1
//  flux-bound |zeta_i| <= 1
//  flux-identity (omega_i - omega_{i-1})/eps + zeta_i = g_i
//  est-bv-unit (informational) the same with constant 1
std::vector<PropertyReport> check_estimates(const Trajectory& traj, const std::string& instance = "");

// Every step's certificate within `tol` (see Certificate::passes).
PropertyReport check_certificates(const Trajectory& traj, double tol, const std::string& instance = "");

// Nonincreasing ||omega_i||_{L2(boundary)} for zero forcing.
PropertyReport check_decay(const Trajectory& traj, const std::string& instance = "");

// ---- Seeded instance families ----

struct InstanceShape {
  int dim = 1;
  int cells = 12;        // per axis
  double length = 1.0;   // per axis
  double lambda = 1.0;
  double T = 0.5;
  double eps = 0.05;
  TvNorm tv = TvNorm::isotropic;  // 2D only
};

struct EvolutionInput {
  Mesh mesh;
  double lambda;
  TimeGrid grid;
  Forcing forcing;
  BoundaryField omega0;
  std::string description;
};

// Random piecewise-constant-in-time, per-site forcing and random initial state.
EvolutionInput random_instance(std::uint64_t seed, const InstanceShape& shape);
// (lower, upper) with omega0 and g ordered pointwise.
std::pair<EvolutionInput, EvolutionInput> ordered_pair(std::uint64_t seed, const InstanceShape& shape);
// Pairs for continuous dependence: perturb_forcing == false differs only in
// omega0 (by a random field), true differs only in g on a time subinterval.
std::pair<EvolutionInput, EvolutionInput> perturbed_pair(std::uint64_t seed, const InstanceShape& shape,
                                                         bool perturb_forcing);

Trajectory run(const EvolutionInput& input, const EvolveOptions& options);

struct SuiteOptions {
  std::vector<std::string> suites{"comparison", "contraction", "estimates", "certificates"};
  int instances = 4;  // per suite and dimension
  std::uint64_t seed = 1;
  double tol = 1e-8;
  int threads = 1;
  InstanceShape shape_1d{1, 12, 1.0, 1.0, 0.5, 0.05};
  InstanceShape shape_2d{2, 6, 1.0, 1.0, 0.3, 0.05};
};

const std::vector<std::string>& known_suites();

// Runs the selected suites; reports in deterministic order.
std::vector<PropertyReport> run_suites(const SuiteOptions& options);

// Line-delimited JSON record per report.
void write_report_lines(std::ostream& os, const std::vector<PropertyReport>& reports);
// Aggregated table: property, count, failures, min slack.
void write_summary(std::ostream& os, const std::vector<PropertyReport>& reports);
bool all_passed(const std::vector<PropertyReport>& reports);

}  // namespace tvdyn
