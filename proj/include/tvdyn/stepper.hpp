#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvdyn/mesh.hpp"
#include "tvdyn/resolvent.hpp"

namespace tvdyn {

enum class SampleMode { right_endpoint, cell_average };

SampleMode parse_sample_mode(const std::string& text);
std::string to_string(SampleMode mode);

// Uniform partition t_i = i * eps of [0, T], i = 0..n_steps.
struct TimeGrid {
  double T;
  double eps;
  int n_steps;
  SampleMode sample_mode = SampleMode::right_endpoint;

  double time(int i) const { return i * eps; }
};

TimeGrid make_time_grid(double T, double eps, SampleMode mode = SampleMode::right_endpoint);

// Boundary forcing g(t, x). The callable receives the time, the site index
// and the site itself.
class Forcing {
 public:
  using Fn = std::function<double(double t, std::size_t site, const BoundarySite&)>;

  Forcing() : Forcing(constant(0.0)) {}
  explicit Forcing(Fn fn, bool time_independent = false) : fn_(std::move(fn)), static_(time_independent) {}

  static Forcing constant(double value);
  // Time independent, one value per site.
  static Forcing field(BoundaryField values);
  // Piecewise constant in time: value rows[k] on [breaks[k], breaks[k+1]),
  // the last row extends to +infinity. Each row holds one value (applied to
  // every site) or one value per site.
  static Forcing table(std::vector<double> breaks, std::vector<std::vector<double>> rows);

  double operator()(double t, std::size_t site, const BoundarySite& s) const { return fn_(t, site, s); }
  BoundaryField at(const Mesh& mesh, double t) const;
  bool time_independent() const { return static_; }

 private:
  Fn fn_;
  bool static_;
};

// Step datum g_i for step i (1 <= i <= n_steps).
BoundaryField sample_forcing(const Mesh& mesh, const Forcing& forcing, const TimeGrid& grid, int i);

struct StepNorms {
  double omega_l2 = 0.0;
  double omega_l1 = 0.0;
  double u_l2 = 0.0;
  double tv = 0.0;
  double bv = 0.0;
};

StepNorms compute_norms(const Mesh& mesh, const BoundaryField& omega, const BulkField& u);

struct StepRecord {
  double t;
  BoundaryField g;      // sampled datum g_i
  BoundaryField omega;  // omega_i
  BulkField u;          // u_i
  BoundaryField zeta;   // zeta_i = [z_i, nu]
  Certificate certificate;
  StepNorms norms;
  int iterations = 0;
  bool converged = true;
};

struct Trajectory {
  Mesh mesh;
  double lambda;
  TimeGrid grid;
  BoundaryField omega0;
  std::vector<StepRecord> steps;  // steps[i - 1] holds step i

  const BoundaryField& omega_at(int i) const { return i == 0 ? omega0 : steps[static_cast<std::size_t>(i - 1)].omega; }
  bool all_converged() const;
  // -1 when every step converged.
  int first_unconverged_step() const;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(int step, const std::string& what) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct EvolveOptions {
  SolverConfig solver;
  // Throw NonConvergence at the first unconverged step instead of recording it.
  bool strict = true;
};

// Implicit Euler (epsilon-discretisation) of omega_t + B(omega) = g: each
// step solves the resolvent with d = omega_{i-1} + eps g_i, warm-started from
// the previous step.
Trajectory evolve(const Mesh& mesh, double lambda, const TimeGrid& grid, const Forcing& forcing,
                  const BoundaryField& omega0, const EvolveOptions& options = {});

// Reference boundary state for refinement studies.
using ReferenceFn = std::function<BoundaryField(double t)>;

struct RefineCase {
  Mesh mesh;
  double lambda;
  double T;
  Forcing forcing;
  BoundaryField omega0;
  SampleMode sample_mode = SampleMode::right_endpoint;
  EvolveOptions options;
  ReferenceFn reference;  // empty: compare consecutive refinements
};

struct RefineRow {
  double eps;
  double error;  // sup_t L2(boundary) error against reference or next refinement
  double order;  // NaN where undefined
};

struct RefineTable {
  bool against_reference;
  std::vector<RefineRow> rows;
};

// Boundary state at time t, linear in time between grid points.
BoundaryField interpolate_omega(const Trajectory& traj, double t);

RefineTable refine_study(const RefineCase& problem, const std::vector<double>& eps_list);

}  // namespace tvdyn
