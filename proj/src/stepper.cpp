#include "tvdyn/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvdyn {

SampleMode parse_sample_mode(const std::string& text) {
  if (text == "right_endpoint") return SampleMode::right_endpoint;
  if (text == "cell_average") return SampleMode::cell_average;
  throw std::invalid_argument("unknown sample_mode '" + text + "' (right_endpoint | cell_average)");
}

std::string to_string(SampleMode mode) {
  return mode == SampleMode::right_endpoint ? "right_endpoint" : "cell_average";
}

TimeGrid make_time_grid(double T, double eps, SampleMode mode) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("time step must be positive");
  if (!(T >= eps) || !std::isfinite(T)) throw std::invalid_argument("time step must not exceed the horizon");
  // Tolerate T/eps landing a hair above an integer.
  const double ratio = T / eps;
  const int n = static_cast<int>(std::ceil(ratio - 1e-9 * ratio));
  return {T, eps, std::max(1, n), mode};
}

Forcing Forcing::constant(double value) {
  return Forcing([value](double, std::size_t, const BoundarySite&) { return value; }, true);
}

Forcing Forcing::field(BoundaryField values) {
  return Forcing(
      [v = std::move(values)](double, std::size_t site, const BoundarySite&) { return v.values.at(site); }, true);
}

Forcing Forcing::table(std::vector<double> breaks, std::vector<std::vector<double>> rows) {
  if (breaks.empty() || breaks.size() != rows.size()) {
    throw std::invalid_argument("forcing table needs one row per breakpoint");
  }
  if (!std::is_sorted(breaks.begin(), breaks.end()) ||
      std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end()) {
    throw std::invalid_argument("forcing table breakpoints must be strictly increasing");
  }
  for (const auto& r : rows) {
    if (r.empty()) throw std::invalid_argument("forcing table row is empty");
    for (double v : r) {
      if (!std::isfinite(v)) throw std::invalid_argument("forcing table values must be finite");
    }
  }
  return Forcing([b = std::move(breaks), r = std::move(rows)](double t, std::size_t site, const BoundarySite&) {
    const auto it = std::upper_bound(b.begin(), b.end(), t);
    const std::size_t k = it == b.begin() ? 0 : static_cast<std::size_t>(it - b.begin()) - 1;
    const auto& row = r[k];
    return row.size() == 1 ? row[0] : row.at(site);
  });
}

BoundaryField Forcing::at(const Mesh& mesh, double t) const {
  BoundaryField out = mesh.boundary();
  const auto& sites = mesh.boundary_sites();
  for (std::size_t b = 0; b < sites.size(); ++b) out.values[b] = fn_(t, b, sites[b]);
  return out;
}

BoundaryField sample_forcing(const Mesh& mesh, const Forcing& forcing, const TimeGrid& grid, int i) {
  if (i < 1 || i > grid.n_steps) throw std::out_of_range("step index out of range");
  const double t1 = grid.time(i);
  if (grid.sample_mode == SampleMode::right_endpoint || forcing.time_independent()) return forcing.at(mesh, t1);
  // Midpoint rule on 8 sub-intervals of (t_{i-1}, t_i].
  constexpr int kSub = 8;
  const double t0 = grid.time(i - 1);
  const double dt = (t1 - t0) / kSub;
  BoundaryField out = mesh.boundary();
  for (int s = 0; s < kSub; ++s) {
    const BoundaryField g = forcing.at(mesh, t0 + (s + 0.5) * dt);
    for (std::size_t b = 0; b < out.values.size(); ++b) out.values[b] += g.values[b] / kSub;
  }
  return out;
}

StepNorms compute_norms(const Mesh& mesh, const BoundaryField& omega, const BulkField& u) {
  StepNorms n;
  n.omega_l2 = integrate_boundary(mesh, omega, 2);
  n.omega_l1 = integrate_boundary(mesh, omega, 1);
  n.u_l2 = integrate_bulk(mesh, u, 2);
  n.tv = total_variation(mesh, u);
  n.bv = n.tv + integrate_boundary(mesh, trace(mesh, u), 1);
  return n;
}

bool Trajectory::all_converged() const { return first_unconverged_step() < 0; }

int Trajectory::first_unconverged_step() const {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!steps[i].converged) return static_cast<int>(i) + 1;
  }
  return -1;
}

Trajectory evolve(const Mesh& mesh, double lambda, const TimeGrid& grid, const Forcing& forcing,
                  const BoundaryField& omega0, const EvolveOptions& options) {
  check_shape(mesh, omega0);
  for (double v : omega0.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("initial boundary state must be finite");
  }
  Trajectory traj{mesh, lambda, grid, omega0, {}};
  traj.steps.reserve(static_cast<std::size_t>(grid.n_steps));

  ResolventProblem problem{mesh, lambda, grid.eps, mesh.boundary()};
  validate(problem);
  WarmStart warm{mesh.bulk(), mesh.dual()};
  const BoundaryField* prev = &traj.omega0;
  for (int i = 1; i <= grid.n_steps; ++i) {
    StepRecord rec;
    rec.t = grid.time(i);
    rec.g = sample_forcing(mesh, forcing, grid, i);
    for (std::size_t b = 0; b < problem.d.values.size(); ++b) {
      problem.d.values[b] = prev->values[b] + grid.eps * rec.g.values[b];
    }
    ResolventSolution sol = solve_resolvent(problem, options.solver, &warm);
    if (!sol.diagnostics.converged && options.strict) {
      throw NonConvergence(i, "resolvent solve did not converge at step " + std::to_string(i));
    }
    rec.omega = std::move(sol.omega);
    rec.zeta = std::move(sol.zeta);
    rec.u = sol.u;
    rec.certificate = sol.certificate;
    rec.iterations = sol.diagnostics.iterations;
    rec.converged = sol.diagnostics.converged;
    rec.norms = compute_norms(mesh, rec.omega, rec.u);
    warm.u = std::move(sol.u);
    warm.z = std::move(sol.z);
    traj.steps.push_back(std::move(rec));
    prev = &traj.steps.back().omega;
  }
  return traj;
}

BoundaryField interpolate_omega(const Trajectory& traj, double t) {
  const double eps = traj.grid.eps;
  const int n = traj.grid.n_steps;
  const double s = std::clamp(t / eps, 0.0, static_cast<double>(n));
  int i = static_cast<int>(std::floor(s));
  double frac = s - i;
  if (i >= n) {
    i = n - 1;
    frac = 1.0;
  }
  // Snap grid-aligned times to avoid round-off blending.
  if (frac < 1e-9) frac = 0.0;
  if (frac > 1.0 - 1e-9) frac = 1.0;
  const BoundaryField& a = traj.omega_at(i);
  const BoundaryField& b = traj.omega_at(i + 1);
  BoundaryField out = a;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = (1.0 - frac) * a.values[k] + frac * b.values[k];
  return out;
}

namespace {

double sup_difference(const Trajectory& coarse, const std::function<BoundaryField(double)>& other) {
  double worst = 0.0;
  for (int i = 0; i <= coarse.grid.n_steps; ++i) {
    const BoundaryField& a = coarse.omega_at(i);
    BoundaryField diff = other(coarse.grid.time(i));
    for (std::size_t k = 0; k < diff.values.size(); ++k) diff.values[k] -= a.values[k];
    worst = std::max(worst, integrate_boundary(coarse.mesh, diff, 2));
  }
  return worst;
}

double observed_order(double e_coarse, double e_fine, double eps_coarse, double eps_fine) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(e_coarse / e_fine) / std::log(eps_coarse / eps_fine);
}

}  // namespace

RefineTable refine_study(const RefineCase& problem, const std::vector<double>& eps_list) {
  if (eps_list.size() < 3) throw std::invalid_argument("refinement study needs at least 3 time steps");
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    if (!(eps_list[k] < eps_list[k - 1])) throw std::invalid_argument("refinement time steps must decrease");
  }
  std::vector<Trajectory> runs;
  runs.reserve(eps_list.size());
  for (double eps : eps_list) {
    const TimeGrid grid = make_time_grid(problem.T, eps, problem.sample_mode);
    runs.push_back(evolve(problem.mesh, problem.lambda, grid, problem.forcing, problem.omega0, problem.options));
  }

  RefineTable table;
  table.against_reference = static_cast<bool>(problem.reference);
  if (table.against_reference) {
    for (std::size_t k = 0; k < runs.size(); ++k) {
      table.rows.push_back({eps_list[k], sup_difference(runs[k], problem.reference),
                            std::numeric_limits<double>::quiet_NaN()});
    }
  } else {
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
      const Trajectory& fine = runs[k + 1];
      table.rows.push_back({eps_list[k], sup_difference(runs[k], [&](double t) { return interpolate_omega(fine, t); }),
                            std::numeric_limits<double>::quiet_NaN()});
    }
  }
  for (std::size_t k = 1; k < table.rows.size(); ++k) {
    table.rows[k].order =
        observed_order(table.rows[k - 1].error, table.rows[k].error, table.rows[k - 1].eps, table.rows[k].eps);
  }
  return table;
}

}  // namespace tvdyn
