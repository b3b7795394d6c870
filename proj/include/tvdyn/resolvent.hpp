#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "tvdyn/mesh.hpp"

namespace tvdyn {

// T_k(s) = min(|s|, k) sign(s).
double truncate(double k, double s);

// Huber function F_eps(s): s^2/(2 eps) for |s| <= eps, |s| - eps/2 beyond.
// It is the value of min_w |s - w| + w^2/(2 eps), i.e. the boundary gap
// |u - omega| partially minimised against the implicit Euler quadratic.
double huber(double eps, double s);
// F_eps'(s) = T_1(s / eps).
double huber_prime(double eps, double s);

// One implicit Euler step for the boundary state: find omega with
// (omega - d)/eps + B(omega) = 0, realised through the Robin-type problem
//   min_u  TV(u) + lambda/2 |u|^2 + sum_b w_b F_eps(u_b - d_b).
struct ResolventProblem {
  Mesh mesh;
  double lambda;
  double eps;
  BoundaryField d;
};

class InvalidProblem : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidStepSizes : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate(const ResolventProblem& problem);

struct SolverConfig {
  int max_iterations = 200000;
  double tolerance = 1e-8;
  // Step sizes; non-positive values select tau = ratio/L, sigma = 1/(ratio L)
  // with L^2 the gradient operator norm bound.
  double tau = 0.0;
  double sigma = 0.0;
  double step_ratio = 0.0;  // 0 selects a mesh-dependent default
  double theta = 1.0;
  int check_every = 50;
  // Strong-convexity accelerated step sequence (tau_k -> 0). The plain
  // scheme stalls on the pairing gap for some 2D steps.
  bool accelerated = true;
  int restart_every = 2000;  // accelerated only; 0 never resets the step sizes
  int history_stride = 10;  // keep every n-th certificate evaluation in the history
};

// Discrete form of the conditions defining the boundary operator:
// equation (lambda u - div z = boundary flux), |z| <= 1, (z, Du) = |Du|,
// [z, nu] in sign(omega - u), and the weak formulation on probe fields.
struct Certificate {
  double equation_residual = 0.0;     // || lambda u - div z - lift(zeta) ||_{L2(Omega)}
  double dual_feasibility = 0.0;      // max(0, max |z| - 1)
  double pairing_gap = 0.0;           // TV(u) - <z, grad u>
  double sign_violation = 0.0;        // max_b dist(zeta_b, sign(omega_b - u_b))
  double variational_residual = 0.0;  // max over probes of the weak-form defect
  double equation_scale = 1.0;        // 1 + ||lambda u|| + ||lift(zeta)||
  double tv_scale = 1.0;              // 1 + TV(u) + sum_b w_b |zeta_b u_b|

  // Relative certificate test: equation and pairing gap against `tol`,
  // feasibility against 1e-9, sign condition against 1e-6.
  bool passes(double tol) const;
  // Largest normalised component, used to rank iterates.
  double worst(double tol) const;
};

Certificate evaluate_certificate(const Mesh& mesh, double lambda, const BulkField& u, const DualField& z,
                                 const BoundaryField& zeta, const BoundaryField& omega);

struct ResolventDiagnostics {
  int iterations = 0;
  bool converged = false;
  std::vector<int> history_iterations;
  std::vector<double> history_equation;
  std::vector<double> history_gap;
  std::vector<double> history_energy;
};

struct ResolventSolution {
  BulkField u;
  BoundaryField omega;
  BoundaryField zeta;  // discrete normal trace [z, nu]
  DualField z;
  Certificate certificate;
  ResolventDiagnostics diagnostics;
};

struct WarmStart {
  BulkField u;
  DualField z;
};

// Per-step energy TV(u) + lambda/2 |u|^2 + sum_b w_b F_eps(u_b - d_b).
double resolvent_energy(const ResolventProblem& problem, const BulkField& u);

// zeta_b = T_1((d_b - u_b)/eps), omega = d - eps zeta (omega_b = u_b on
// attached sites, |u_b - d_b| <= eps).
void recover_boundary(const ResolventProblem& problem, const BulkField& u, BoundaryField& zeta, BoundaryField& omega);

// Proximal map of G(u) = lambda/2 |u|^2 + sum_b w_b F_eps(u_b - d_b) in the
// cell-volume weighted norm, with step tau.
BulkField prox_step(const Mesh& mesh, double lambda, double eps, const BoundaryField& d, double tau,
                    const BulkField& u_bar);

// Scalar minimiser of (u - center)^2/(2 tau) + lambda u^2/2 + sum_k weight_k F_eps(u - anchor_k).
double prox_scalar(double center, double tau, double lambda, double eps, std::span<const double> weights,
                   std::span<const double> anchors);

// Primal-dual solve of the step problem. Never throws on non-convergence:
// the best iterate is returned with diagnostics.converged == false.
ResolventSolution solve_resolvent(const ResolventProblem& problem, const SolverConfig& config = {},
                                  const WarmStart* warm_start = nullptr);

}  // namespace tvdyn
