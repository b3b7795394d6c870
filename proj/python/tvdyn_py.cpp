#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tvdyn/brute_force.hpp"
#include "tvdyn/oracle.hpp"
#include "tvdyn/props.hpp"

namespace py = pybind11;
using namespace tvdyn;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

// Rows of equal length stacked into a 2D array.
template <class Get>
py::array_t<double> stack(std::size_t rows, std::size_t cols, Get get) {
  py::array_t<double> out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::vector<double>& row = get(r);
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<py::ssize_t>(r), static_cast<py::ssize_t>(c)) = row[c];
  }
  return out;
}

std::vector<double> sized(const py::array_t<double, py::array::c_style | py::array::forcecast>& a, std::size_t n,
                          const char* what) {
  if (static_cast<std::size_t>(a.size()) != n) {
    throw py::value_error(std::string(what) + " has " + std::to_string(a.size()) + " entries, expected " +
                          std::to_string(n));
  }
  return {a.data(), a.data() + a.size()};
}

BoundaryField boundary_arg(const Mesh& mesh, const py::object& value, const char* what) {
  if (py::isinstance<py::float_>(value) || py::isinstance<py::int_>(value)) return mesh.boundary(value.cast<double>());
  return {sized(value.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>(), mesh.site_count(), what)};
}

// Number, per-site array, or callable g(t, site).
Forcing forcing_arg(const Mesh& mesh, const py::object& g) {
  if (py::isinstance<py::float_>(g) || py::isinstance<py::int_>(g)) return Forcing::constant(g.cast<double>());
  if (PyCallable_Check(g.ptr())) {
    auto fn = g.cast<std::function<double(double, std::size_t)>>();
    return Forcing([fn](double t, std::size_t site, const BoundarySite&) { return fn(t, site); });
  }
  return Forcing::field(boundary_arg(mesh, g, "g"));
}

py::dict certificate_dict(const Certificate& c) {
  py::dict d;
  d["equation_residual"] = c.equation_residual;
  d["dual_feasibility"] = c.dual_feasibility;
  d["pairing_gap"] = c.pairing_gap;
  d["sign_violation"] = c.sign_violation;
  d["variational_residual"] = c.variational_residual;
  d["equation_scale"] = c.equation_scale;
  d["tv_scale"] = c.tv_scale;
  return d;
}

py::dict report_dict(const PropertyReport& r) {
  py::dict d;
  d["property"] = r.property;
  d["instance"] = r.instance;
  d["left"] = r.left;
  d["right"] = r.right;
  d["slack"] = r.slack;
  d["tolerance"] = r.tolerance;
  d["passed"] = r.passed;
  d["informational"] = r.informational;
  d["worst_step"] = r.worst_step;
  d["worst_site"] = r.worst_site;
  return d;
}

py::list report_list(const std::vector<PropertyReport>& reports) {
  py::list out;
  for (const auto& r : reports) out.append(report_dict(r));
  return out;
}

py::dict solution_dict(const ResolventSolution& s) {
  py::dict d;
  d["u"] = to_array(s.u.values);
  d["omega"] = to_array(s.omega.values);
  d["zeta"] = to_array(s.zeta.values);
  d["z"] = to_array(s.z.values);
  d["converged"] = s.diagnostics.converged;
  d["iterations"] = s.diagnostics.iterations;
  d["certificate"] = certificate_dict(s.certificate);
  return d;
}

SolverConfig solver_config(double tolerance, int max_iterations, bool accelerated) {
  SolverConfig c;
  c.tolerance = tolerance;
  c.max_iterations = max_iterations;
  c.accelerated = accelerated;
  return c;
}

}  // namespace

PYBIND11_MODULE(tvdyn, m) {
  m.doc() = "Boundary dynamics driven by the total variation flow resolvent";

  py::register_exception<MeshError>(m, "MeshError", PyExc_ValueError);
  py::register_exception<InvalidProblem>(m, "InvalidProblem", PyExc_ValueError);
  py::register_exception<GridTooLarge>(m, "GridTooLarge", PyExc_ValueError);
  py::register_exception<MismatchedGrids>(m, "MismatchedGrids", PyExc_ValueError);

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("dim", &Mesh::dim)
      .def_property_readonly("tv", [](const Mesh& mesh) { return std::string(to_string(mesh.tv_norm())); })
      .def_property_readonly("cell_count", &Mesh::cell_count)
      .def_property_readonly("site_count", &Mesh::site_count)
      .def_property_readonly("cell_volume", &Mesh::cell_volume)
      .def_property_readonly("perimeter", &Mesh::perimeter)
      .def("spacing", &Mesh::spacing, py::arg("axis"))
      .def("cells_along", &Mesh::cells_along, py::arg("axis"))
      .def("centers",
           [](const Mesh& mesh) {
             std::vector<std::vector<double>> rows;
             for (std::size_t c = 0; c < mesh.cell_count(); ++c) rows.push_back({mesh.center(c)[0], mesh.center(c)[1]});
             return stack(rows.size(), 2, [&](std::size_t r) -> const std::vector<double>& { return rows[r]; });
           })
      .def("site_positions",
           [](const Mesh& mesh) {
             std::vector<std::vector<double>> rows;
             for (const auto& s : mesh.boundary_sites()) rows.push_back({s.position[0], s.position[1]});
             return stack(rows.size(), 2, [&](std::size_t r) -> const std::vector<double>& { return rows[r]; });
           })
      .def("site_weights",
           [](const Mesh& mesh) {
             std::vector<double> w;
             for (const auto& s : mesh.boundary_sites()) w.push_back(s.weight);
             return to_array(w);
           })
      .def("site_cells", [](const Mesh& mesh) {
        std::vector<std::size_t> c;
        for (const auto& s : mesh.boundary_sites()) c.push_back(s.cell);
        return c;
      });

  m.def("interval", &build_interval, py::arg("length"), py::arg("cells"));
  m.def(
      "rectangle",
      [](double lx, double ly, int nx, int ny, const std::string& tv) {
        return build_rectangle(lx, ly, nx, ny, parse_tv_norm(tv));
      },
      py::arg("lx"), py::arg("ly"), py::arg("nx"), py::arg("ny"), py::arg("tv") = "isotropic");

  m.def(
      "total_variation",
      [](const Mesh& mesh, const py::array_t<double, py::array::c_style | py::array::forcecast>& u) {
        return total_variation(mesh, BulkField{sized(u, mesh.cell_count(), "u")});
      },
      py::arg("mesh"), py::arg("u"));

  m.def(
      "solve_resolvent",
      [](const Mesh& mesh, double lam, double eps, const py::object& d, double tolerance, int max_iterations,
         bool accelerated) {
        const ResolventProblem p{mesh, lam, eps, boundary_arg(mesh, d, "d")};
        return solution_dict(solve_resolvent(p, solver_config(tolerance, max_iterations, accelerated)));
      },
      py::arg("mesh"), py::arg("lam"), py::arg("eps"), py::arg("d"), py::arg("tolerance") = 1e-8,
      py::arg("max_iterations") = 200000, py::arg("accelerated") = true,
      "One resolvent step for datum d; returns u, omega, zeta, z, convergence flags and the certificate.");

  m.def(
      "brute_force_resolvent",
      [](const Mesh& mesh, double lam, double eps, const py::object& d) {
        const ResolventSolution s = brute_force_resolvent({mesh, lam, eps, boundary_arg(mesh, d, "d")});
        py::dict out;
        out["u"] = to_array(s.u.values);
        out["omega"] = to_array(s.omega.values);
        out["zeta"] = to_array(s.zeta.values);
        return out;
      },
      py::arg("mesh"), py::arg("lam"), py::arg("eps"), py::arg("d"),
      "Reference minimiser of the step energy for small grids.");

  m.def(
      "single_step_closed_form",
      [](double lam, double eps, double length, double d) {
        const ConstantStep s = single_step_closed_form(lam, eps, length, d);
        py::dict out;
        out["u"] = s.u;
        out["omega"] = s.omega;
        out["zeta"] = s.zeta;
        return out;
      },
      py::arg("lam"), py::arg("eps"), py::arg("length"), py::arg("d"));

  m.def(
      "radial_ode",
      [](double lam, double omega0, const py::object& g, double T, double dt, double length) {
        RadialOracleSpec spec;
        spec.interval.length = length;
        spec.lambda = lam;
        spec.omega0 = omega0;
        if (PyCallable_Check(g.ptr())) {
          spec.g = g.cast<std::function<double(double)>>();
        } else {
          const double c = g.cast<double>();
          spec.g = [c](double) { return c; };
        }
        spec.T = T;
        spec.dt = dt;
        const OracleTrajectory o = radial_ode(spec);
        py::dict out;
        out["kappa"] = o.kappa;
        out["times"] = to_array(o.times);
        out["omega"] = to_array(o.omega);
        out["u"] = to_array(o.u);
        out["zeta"] = to_array(o.zeta);
        std::vector<std::string> regimes;
        for (Regime r : o.regime) regimes.emplace_back(to_string(r));
        out["regime"] = regimes;
        out["event_times"] = to_array(o.event_times);
        return out;
      },
      py::arg("lam"), py::arg("omega0"), py::arg("g") = 0.0, py::arg("T") = 1.0, py::arg("dt") = 1e-4,
      py::arg("length") = 1.0, "Scalar reference dynamics for constant data on an interval.");

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("mesh", [](const Trajectory& t) { return t.mesh; })
      .def_property_readonly("lam", [](const Trajectory& t) { return t.lambda; })
      .def_property_readonly("eps", [](const Trajectory& t) { return t.grid.eps; })
      .def_property_readonly("n_steps", [](const Trajectory& t) { return t.grid.n_steps; })
      .def_property_readonly("times",
                             [](const Trajectory& t) {
                               std::vector<double> v;
                               for (int i = 0; i <= t.grid.n_steps; ++i) v.push_back(t.grid.time(i));
                               return to_array(v);
                             })
      .def_property_readonly("omega",
                             [](const Trajectory& t) {
                               return stack(t.steps.size() + 1, t.mesh.site_count(),
                                            [&](std::size_t r) -> const std::vector<double>& {
                                              return t.omega_at(static_cast<int>(r)).values;
                                            });
                             })
      .def_property_readonly("u",
                             [](const Trajectory& t) {
                               return stack(t.steps.size(), t.mesh.cell_count(),
                                            [&](std::size_t r) -> const std::vector<double>& { return t.steps[r].u.values; });
                             })
      .def_property_readonly("zeta",
                             [](const Trajectory& t) {
                               return stack(t.steps.size(), t.mesh.site_count(), [&](std::size_t r) -> const std::vector<double>& {
                                 return t.steps[r].zeta.values;
                               });
                             })
      .def_property_readonly("g",
                             [](const Trajectory& t) {
                               return stack(t.steps.size(), t.mesh.site_count(),
                                            [&](std::size_t r) -> const std::vector<double>& { return t.steps[r].g.values; });
                             })
      .def_property_readonly("iterations",
                             [](const Trajectory& t) {
                               std::vector<int> v;
                               for (const auto& s : t.steps) v.push_back(s.iterations);
                               return v;
                             })
      .def("all_converged", &Trajectory::all_converged)
      .def("certificates", [](const Trajectory& t) {
        py::list out;
        for (const auto& s : t.steps) out.append(certificate_dict(s.certificate));
        return out;
      });

  m.def(
      "evolve",
      [](const Mesh& mesh, double lam, double T, double eps, const py::object& omega0, const py::object& g,
         double tolerance, bool strict) {
        EvolveOptions options;
        options.strict = strict;
        options.solver.tolerance = tolerance;
        const BoundaryField w0 = boundary_arg(mesh, omega0, "omega0");
        const Forcing forcing = forcing_arg(mesh, g);
        return evolve(mesh, lam, make_time_grid(T, eps), forcing, w0, options);
      },
      py::arg("mesh"), py::arg("lam"), py::arg("T"), py::arg("eps"), py::arg("omega0") = 0.0, py::arg("g") = 0.0,
      py::arg("tolerance") = 1e-8, py::arg("strict") = false,
      "Implicit Euler evolution. g is a number, a per-site array or a callable g(t, site).");

  m.def(
      "check_comparison",
      [](const Trajectory& lower, const Trajectory& upper) { return report_dict(check_comparison(lower, upper)); },
      py::arg("lower"), py::arg("upper"));
  m.def(
      "check_contraction", [](const Trajectory& a, const Trajectory& b) { return report_list(check_contraction(a, b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "check_estimates", [](const Trajectory& t) { return report_list(check_estimates(t)); }, py::arg("trajectory"));
  m.def(
      "check_certificates",
      [](const Trajectory& t, double tol) { return report_dict(check_certificates(t, tol)); }, py::arg("trajectory"),
      py::arg("tol") = 1e-8);
  m.def(
      "check_decay", [](const Trajectory& t) { return report_dict(check_decay(t)); }, py::arg("trajectory"));

  m.def(
      "run_suites",
      [](const std::vector<std::string>& suites, int instances, std::uint64_t seed, double tol, int threads) {
        SuiteOptions o;
        o.suites = suites;
        o.instances = instances;
        o.seed = seed;
        o.tol = tol;
        o.threads = threads;
        std::vector<PropertyReport> reports;
        {
          py::gil_scoped_release release;
          reports = run_suites(o);
        }
        return report_list(reports);
      },
      py::arg("suites") = known_suites(), py::arg("instances") = 1, py::arg("seed") = 1, py::arg("tol") = 1e-8,
      py::arg("threads") = 1);
}
