#include "tvdyn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "tvdyn/io.hpp"
#include "tvdyn/oracle.hpp"

namespace tvdyn {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string() + ": " + ec.message());
  const fs::path path = cfg.out_dir / name;
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

template <class Fn>
void write_to(const RunConfig& cfg, const std::string& name, Fn&& fn) {
  std::ofstream os = open_output(cfg, name);
  fn(os);
  os.flush();
  if (!os) throw IoError("write failed: " + (cfg.out_dir / name).string());
}

TimeGrid grid_of(const RunConfig& cfg) {
  try {
    return make_time_grid(cfg.T, cfg.eps, cfg.sample_mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("time: ") + e.what());
  }
}

EvolveOptions evolve_options(const RunConfig& cfg) {
  EvolveOptions o;
  o.solver = cfg.solver();
  o.strict = false;
  return o;
}

void print_certificate(std::ostream& out, const Certificate& c) {
  out << "  equation_residual    " << format_double(c.equation_residual) << '\n'
      << "  dual_feasibility     " << format_double(c.dual_feasibility) << '\n'
      << "  pairing_gap          " << format_double(c.pairing_gap) << '\n'
      << "  sign_violation       " << format_double(c.sign_violation) << '\n'
      << "  variational_residual " << format_double(c.variational_residual) << '\n';
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"resolvent", "evolve", "verify", "converge", "oracle"};
  return names;
}

int cmd_resolvent(const RunConfig& cfg, std::ostream& out) {
  const Mesh mesh = cfg.mesh();
  const TimeGrid grid = grid_of(cfg);
  const BoundaryField omega0 = make_boundary_field(cfg.omega0, mesh);
  const Forcing forcing = make_forcing(cfg.g, mesh, cfg.base_dir);
  const BoundaryField g1 = sample_forcing(mesh, forcing, grid, 1);

  ResolventProblem problem{mesh, cfg.lambda, cfg.eps, omega0};
  for (std::size_t b = 0; b < omega0.values.size(); ++b) problem.d.values[b] += cfg.eps * g1.values[b];
  const ResolventSolution sol = solve_resolvent(problem, cfg.solver());

  write_to(cfg, "bulk_u.csv", [&](std::ostream& os) { write_bulk_csv(os, mesh, sol.u); });
  write_to(cfg, "boundary_d.csv", [&](std::ostream& os) { write_boundary_csv(os, mesh, problem.d); });
  write_to(cfg, "boundary_omega.csv", [&](std::ostream& os) { write_boundary_csv(os, mesh, sol.omega); });
  write_to(cfg, "boundary_zeta.csv", [&](std::ostream& os) { write_boundary_csv(os, mesh, sol.zeta); });
  write_to(cfg, "diagnostics.json", [&](std::ostream& os) { write_diagnostics_json(os, sol, cfg.tolerance); });

  const bool ok = sol.diagnostics.converged && sol.certificate.passes(cfg.tolerance);
  out << "resolvent: " << (ok ? "converged" : "NOT converged") << " after " << sol.diagnostics.iterations
      << " iterations, energy " << format_double(resolvent_energy(problem, sol.u)) << '\n';
  print_certificate(out, sol.certificate);
  return ok ? kExitOk : kExitFailure;
}

int cmd_evolve(const RunConfig& cfg, std::ostream& out) {
  const Mesh mesh = cfg.mesh();
  const TimeGrid grid = grid_of(cfg);
  const BoundaryField omega0 = make_boundary_field(cfg.omega0, mesh);
  const Forcing forcing = make_forcing(cfg.g, mesh, cfg.base_dir);
  const Trajectory traj = evolve(mesh, cfg.lambda, grid, forcing, omega0, evolve_options(cfg));

  write_to(cfg, "boundary_series.csv", [&](std::ostream& os) { write_boundary_series(os, traj); });
  write_to(cfg, "norms.csv", [&](std::ostream& os) { write_norms_csv(os, traj); });
  if (cfg.snapshot_every > 0) {
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
      const std::size_t step = i + 1;
      if (step % static_cast<std::size_t>(cfg.snapshot_every) != 0 && step != traj.steps.size()) continue;
      char name[64];
      std::snprintf(name, sizeof(name), "bulk_u_step_%06zu.csv", step);
      write_to(cfg, name, [&](std::ostream& os) { write_bulk_csv(os, mesh, traj.steps[i].u); });
    }
  }
  const int bad = traj.first_unconverged_step();
  const auto& last = traj.steps.back();
  out << "evolve: " << traj.steps.size() << " steps to t = " << format_double(last.t)
      << ", |omega|_L2 = " << format_double(last.norms.omega_l2) << '\n';
  if (bad >= 0) {
    out << "evolve: step " << bad << " did not converge\n";
    return kExitFailure;
  }
  return kExitOk;
}

std::vector<PropertyReport> check_exported_run(const RunConfig& cfg, const std::string& dir) {
  fs::path base = dir;
  if (base.is_relative()) base = cfg.base_dir / base;
  const Mesh mesh = cfg.mesh();
  const auto levels = read_boundary_series(base / "boundary_series.csv");
  const auto norms = read_norms_csv(base / "norms.csv");
  if (levels.size() < 2 || norms.size() + 1 != levels.size()) {
    throw IoError(base.string() + ": series and norms files disagree on the number of steps");
  }
  const std::string instance = base.string();
  auto report = [&](const char* name, double tol) {
    PropertyReport r;
    r.property = name;
    r.instance = instance;
    r.tolerance = tol;
    r.slack = std::numeric_limits<double>::infinity();
    return r;
  };
  PropertyReport identity = report("flux-identity", kIdentityTol);
  PropertyReport bound = report("flux-bound", 0.0);
  PropertyReport l2 = report("est-l2", kInequalitySlack);
  PropertyReport bv = report("est-bv", kInequalitySlack);
  PropertyReport conv = report("converged", 0.0);
  auto observe = [](PropertyReport& r, double left, double right, int step, int site) {
    if (right - left < r.slack) {
      r.left = left;
      r.right = right;
      r.slack = right - left;
      r.worst_step = step;
      r.worst_site = site;
    }
  };

  BoundaryField w = mesh.boundary();
  auto boundary_l2 = [&](const std::vector<double>& v) {
    if (v.size() != mesh.site_count()) throw IoError(instance + ": site count does not match the configured mesh");
    w.values = v;
    return integrate_boundary(mesh, w, 2);
  };
  const double w0 = boundary_l2(levels[0].omega);
  double forcing_l1 = 0.0;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const auto& prev = levels[i - 1];
    const auto& cur = levels[i];
    const int step = static_cast<int>(i);
    const double dt = cur.t - prev.t;
    for (std::size_t b = 0; b < cur.omega.size(); ++b) {
      const double defect = cur.omega[b] - prev.omega[b] + dt * cur.zeta[b] - dt * cur.g[b];
      const double scale = std::max({1.0, std::abs(prev.omega[b]), std::abs(cur.omega[b]), std::abs(dt * cur.g[b])});
      observe(identity, std::abs(defect) / scale, 0.0, step, static_cast<int>(b));
      observe(bound, std::abs(cur.zeta[b]), 1.0, step, static_cast<int>(b));
    }
    forcing_l1 += dt * boundary_l2(cur.g);
    observe(l2, boundary_l2(cur.omega), w0 + forcing_l1, step, -1);
    const StepNorms& n = norms[i - 1].norms;
    observe(bv, cfg.lambda * n.u_l2 * n.u_l2 + n.bv, 2.0 * n.omega_l1, step, -1);
    observe(conv, norms[i - 1].converged ? 0.0 : 1.0, 0.0, step, -1);
  }
  std::vector<PropertyReport> out{identity, bound, l2, bv, conv};
  for (auto& r : out) r.passed = r.slack >= -r.tolerance;
  return out;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  std::vector<PropertyReport> reports;
  if (!cfg.trajectory.empty()) {
    reports = check_exported_run(cfg, cfg.trajectory);
  } else {
    if (cfg.suites.empty() || cfg.instances < 1) throw ConfigError("verify: empty suite selection");
    SuiteOptions opt;
    opt.suites = cfg.suites;
    opt.instances = cfg.instances;
    opt.seed = cfg.seed;
    opt.tol = cfg.tolerance;
    opt.threads = cfg.threads;
    opt.shape_1d = {1, cfg.verify_cells_1d, 1.0, cfg.lambda, cfg.verify_T, cfg.verify_eps};
    opt.shape_2d = {2, cfg.verify_cells_2d, 1.0, cfg.lambda, cfg.verify_T, cfg.verify_eps};
    try {
      reports = run_suites(opt);
    } catch (const MeshError& e) {
      throw ConfigError(std::string("verify: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("verify: ") + e.what());
    }
  }
  write_to(cfg, "reports.jsonl", [&](std::ostream& os) { write_report_lines(os, reports); });
  write_summary(out, reports);
  const bool ok = all_passed(reports);
  out << "verify: " << (ok ? "all properties hold" : "FAILURES present") << '\n';
  return ok ? kExitOk : kExitFailure;
}

int cmd_converge(const RunConfig& cfg, std::ostream& out) {
  const Mesh mesh = cfg.mesh();
  const BoundaryField omega0 = make_boundary_field(cfg.omega0, mesh);
  const Forcing forcing = make_forcing(cfg.g, mesh, cfg.base_dir);
  std::vector<double> eps_list = cfg.eps_list;
  if (eps_list.empty()) eps_list = {4.0 * cfg.eps, 2.0 * cfg.eps, cfg.eps};

  RefineCase rc{mesh, cfg.lambda, cfg.T, forcing, omega0, cfg.sample_mode, evolve_options(cfg), {}};
  const auto w0 = constant_value(cfg.omega0);
  const auto g0 = constant_value(cfg.g);
  const bool constant_data = w0.has_value() && g0.has_value();
  if (constant_data && mesh.dim() == 1) {
    RadialOracleSpec spec;
    spec.interval = {mesh.length(0)};
    spec.lambda = cfg.lambda;
    spec.omega0 = *w0;
    spec.g = [g = *g0](double) { return g; };
    spec.T = cfg.T;
    spec.dt = cfg.oracle_dt > 0.0 ? cfg.oracle_dt : eps_list.back() / 10.0;
    const OracleTrajectory oracle = radial_ode(spec);
    rc.reference = [oracle, &mesh](double t) { return mesh.boundary(oracle.omega_at(t)); };
  }
  RefineTable table;
  try {
    table = refine_study(rc, eps_list);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("converge: ") + e.what());
  }

  auto eps_csv = open_output(cfg, "converge_eps.csv");
  eps_csv << "eps,error,order\n";
  out << (table.against_reference ? "time refinement against the scalar ODE reference\n"
                                  : "time refinement, successive differences\n");
  out << std::setw(14) << "eps" << std::setw(16) << "error" << std::setw(10) << "order\n";
  bool ok = true;
  for (const auto& row : table.rows) {
    eps_csv << format_double(row.eps) << ',' << format_double(row.error) << ','
            << (std::isnan(row.order) ? std::string("nan") : format_double(row.order)) << '\n';
    out << std::setw(14) << row.eps << std::setw(16) << row.error << std::setw(10) << row.order << '\n';
    if (table.against_reference && std::isfinite(row.order) && (row.order < 0.7 || row.order > 1.3)) ok = false;
  }

  if (!cfg.cells_list.empty()) {
    // Mesh refinement: sup over time of the difference in boundary L2 norms.
    const TimeGrid grid = grid_of(cfg);
    std::vector<Trajectory> runs;
    for (int n : cfg.cells_list) {
      RunConfig c = cfg;
      c.cells.assign(static_cast<std::size_t>(cfg.dimension), n);
      const Mesh m = c.mesh();
      runs.push_back(evolve(m, cfg.lambda, grid, make_forcing(cfg.g, m, cfg.base_dir),
                            make_boundary_field(cfg.omega0, m), evolve_options(cfg)));
      if (!runs.back().all_converged()) ok = false;
    }
    auto h_csv = open_output(cfg, "converge_h.csv");
    h_csv << "cells,next_cells,difference\n";
    out << "mesh refinement, sup_t | |omega_h|_L2 - |omega_h'|_L2 |\n";
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
      double diff = 0.0;
      for (std::size_t i = 0; i < runs[k].steps.size(); ++i) {
        diff = std::max(diff, std::abs(runs[k].steps[i].norms.omega_l2 - runs[k + 1].steps[i].norms.omega_l2));
      }
      h_csv << cfg.cells_list[k] << ',' << cfg.cells_list[k + 1] << ',' << format_double(diff) << '\n';
      out << std::setw(6) << cfg.cells_list[k] << " -> " << std::setw(6) << cfg.cells_list[k + 1] << std::setw(16)
          << diff << '\n';
    }
  }
  out << "converge: " << (ok ? "ok" : "FAILED") << '\n';
  return ok ? kExitOk : kExitFailure;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  const Mesh mesh = cfg.mesh();
  if (mesh.dim() != 1) throw ConfigError("oracle: the scalar reference needs a 1D interval mesh");
  const auto w0 = constant_value(cfg.omega0);
  if (!w0) throw ConfigError("oracle: omega0 must be 'constant C'");
  const Forcing forcing = make_forcing(cfg.g, mesh, cfg.base_dir);
  const BoundarySite site0 = mesh.boundary_sites().front();
  RadialOracleSpec spec;
  spec.interval = {mesh.length(0)};
  spec.lambda = cfg.lambda;
  spec.omega0 = *w0;
  spec.g = [forcing, site0](double t) { return forcing(t, 0, site0); };
  spec.T = cfg.T;
  spec.dt = cfg.oracle_dt > 0.0 ? cfg.oracle_dt : cfg.eps / 10.0;
  const OracleTrajectory oracle = radial_ode(spec);

  const TimeGrid grid = grid_of(cfg);
  std::vector<double> times;
  for (int i = 0; i <= grid.n_steps; ++i) times.push_back(std::min(grid.time(i), cfg.T));
  write_to(cfg, "oracle_series.csv",
           [&](std::ostream& os) { write_oracle_series(os, oracle, times, mesh.site_count()); });

  out << "oracle: kappa = " << format_double(oracle.kappa) << ", omega(T) = " << format_double(oracle.omega.back())
      << '\n';
  for (double te : oracle.event_times) out << "  regime change at t = " << format_double(te) << '\n';
  return kExitOk;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (name == "resolvent") return cmd_resolvent(cfg, out);
    if (name == "evolve") return cmd_evolve(cfg, out);
    if (name == "verify") return cmd_verify(cfg, out);
    if (name == "converge") return cmd_converge(cfg, out);
    if (name == "oracle") return cmd_oracle(cfg, out);
    err << "unknown command '" << name << "'\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    // Mesh, problem and step-size validation: bad input values.
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace tvdyn
