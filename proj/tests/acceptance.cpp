// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tvdyn/brute_force.hpp"
#include "tvdyn/oracle.hpp"
#include "tvdyn/props.hpp"

using namespace tvdyn;

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double time_limit, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = body();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < time_limit;
  const bool ok = o.passed && in_time;
  if (!ok) ++failures;
  std::printf("%s %d %s: %s [%.2f s, limit %.0f s%s]\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs,
              time_limit, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// Trajectories produced by the ordering and data-dependence criteria are
// reused by the estimate and certificate criteria.
std::vector<Trajectory> pool;

const InstanceShape kShape1d{1, 12, 1.0, 1.0, 0.5, 0.05};
const InstanceShape kShape2d{2, 6, 1.0, 1.0, 0.3, 0.05};

EvolveOptions lenient() {
  EvolveOptions o;
  o.strict = false;
  return o;
}

// Pointwise ordering is checked at 1e-7, below what the default residual
// tolerance guarantees for individual values.
EvolveOptions precise() {
  EvolveOptions o = lenient();
  o.solver.tolerance = 1e-10;
  return o;
}

Outcome green_identity() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  int pairs = 0;
  for (const Mesh& m : {build_interval(1.0, 64), build_rectangle(1.0, 1.0, 32, 32)}) {
    BulkField u = m.bulk();
    DualField z = m.dual();
    const double gnorm = std::sqrt(m.gradient_norm_bound_sq());
    for (int k = 0; k < 1000; ++k) {
      for (double& v : u.values) v = U(rng);
      for (double& v : z.values) v = U(rng);
      const double a = inner_bulk(m, divergence(m, z), u);
      const double b = inner_dual(m, z, gradient(m, u));
      const double scale = gnorm * std::sqrt(inner_bulk(m, u, u) * inner_dual(m, z, z));
      worst = std::max(worst, std::abs(a + b) / scale);
      ++pairs;
    }
  }
  return {worst <= 1e-12, fmt("worst relative defect %.2e", worst) + " over " + std::to_string(pairs) +
                              " pairs (1D n=64, 2D 32x32), bound 1e-12"};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lam(0.5, 2.0), eps(0.02, 0.3), len(0.5, 2.0), amp(-2.5, 2.5);
  SolverConfig tight;
  tight.tolerance = 1e-10;
  double worst = 0.0;
  int unconverged = 0;
  auto run_case = [&](const Mesh& m) {
    // piecewise constant datum with up to 3 pieces along the site order
    BoundaryField d = m.boundary();
    const double a = amp(rng), b = amp(rng), c = amp(rng);
    const std::size_t n = d.values.size();
    for (std::size_t k = 0; k < n; ++k) d.values[k] = k < n / 3 ? a : (k < 2 * n / 3 ? b : c);
    const ResolventProblem p{m, lam(rng), eps(rng), d};
    const ResolventSolution s = solve_resolvent(p, tight);
    if (!s.diagnostics.converged) ++unconverged;
    worst = std::max(worst, sup_diff(s.u.values, brute_force_resolvent(p).u.values));
  };
  std::uniform_int_distribution<int> n1(4, 32), n2(3, 6);
  for (int k = 0; k < 25; ++k) run_case(build_interval(len(rng), n1(rng)));
  for (int k = 0; k < 10; ++k) run_case(build_rectangle(len(rng), len(rng), n2(rng), n2(rng)));
  return {worst <= 1e-5 && unconverged == 0,
          fmt("sup |u_solver - u_reference| = %.2e", worst) + " over 25 1D + 10 2D instances, bound 1e-5" +
              (unconverged ? ", " + std::to_string(unconverged) + " unconverged" : "")};
}

Outcome closed_forms() {
  const Mesh m = build_interval(1.0, 64);
  double worst = 0.0;
  double detachment = 0.0;
  bool converged = true;
  auto check = [&](double d, double u, double w, double zeta) {
    const ResolventSolution s = solve_resolvent({m, 1.0, 0.1, m.boundary(d)});
    converged = converged && s.diagnostics.converged;
    for (double v : s.u.values) worst = std::max(worst, std::abs(v - u));
    for (double v : s.omega.values) worst = std::max(worst, std::abs(v - w));
    for (double v : s.zeta.values) worst = std::max(worst, std::abs(v - zeta));
    return s;
  };
  check(1.0, 1.0 / 1.05, 1.0 / 1.05, 0.5 / 1.05);
  const ResolventSolution det = check(3.0, 2.0, 2.9, 1.0);
  detachment = det.omega.values[0] - det.u.values[0];
  const bool ok = converged && worst <= 1e-6 && std::abs(detachment - 0.9) <= 1e-6;
  return {ok, fmt("attached (0.952381, 0.952381, 0.476190) and detached (2, 2.9, 1): max error %.2e", worst) +
                  fmt(", |omega - u| = %.7f", detachment) + ", bound 1e-6"};
}

Outcome scalar_reference() {
  const Mesh m = build_interval(1.0, 16);
  bool ok = true;
  std::string detail;

  // (a) attached decay
  {
    const Trajectory tr = evolve(m, 1.0, make_time_grid(2.0, 1e-3), Forcing::constant(0.0), m.boundary(1.0), lenient());
    double worst = 0.0;
    for (const auto& s : tr.steps) {
      for (double w : s.omega.values) worst = std::max(worst, std::abs(w - std::exp(-s.t / 2)));
    }
    ok = ok && tr.all_converged() && worst <= 2e-3;
    detail += fmt("(a) sup|omega - exp(-t/2)| = %.2e (2e-3)", worst);
  }
  // (b) detached start
  {
    const double eps = 1e-3;
    const Trajectory tr = evolve(m, 1.0, make_time_grid(2.0, eps), Forcing::constant(0.0), m.boundary(3.0), lenient());
    double event = -1.0;
    for (const auto& s : tr.steps) {
      if (event < 0.0 && s.zeta.values[0] < 1.0) event = s.t;
    }
    const double w2 = tr.steps.back().omega.values[0];
    const bool b_ok = tr.all_converged() && std::abs(event - 1.0) <= 2 * eps && std::abs(w2 - 1.213061) <= 3e-3;
    ok = ok && b_ok;
    detail += fmt("; (b) event t = %.4f", event) + fmt(", omega(2) = %.6f", w2);
  }
  // observed order against the scalar ODE, attached and detach-then-attach
  for (double w0 : {1.0, 3.0}) {
    RadialOracleSpec spec;
    spec.omega0 = w0;
    spec.T = 2.0;
    spec.dt = 1e-4;
    const OracleTrajectory ref = radial_ode(spec);
    const RefineCase rc{m, 1.0, 2.0, Forcing::constant(0.0), m.boundary(w0), SampleMode::right_endpoint, lenient(),
                        [&](double t) { return m.boundary(ref.omega_at(t)); }};
    const RefineTable t = refine_study(rc, {4e-3, 2e-3, 1e-3});
    detail += fmt("; orders (omega0=%g):", w0);
    for (std::size_t k = 1; k < t.rows.size(); ++k) {
      ok = ok && t.rows[k].order >= 0.7 && t.rows[k].order <= 1.3;
      detail += fmt(" %.3f", t.rows[k].order);
    }
  }
  return {ok, detail + " (window [0.7, 1.3])"};
}

Outcome comparison() {
  // Ordering is asserted in 1D and for anisotropic TV in 2D. Isotropic TV is
  // not submodular, so its 2D ordering is reported but not asserted; its
  // violations are far above solver error, so default settings suffice.
  InstanceShape aniso = kShape2d;
  aniso.tv = TvNorm::anisotropic;
  double worst = std::numeric_limits<double>::infinity();
  double worst_iso = worst;
  int failed = 0, failed_iso = 0;
  for (int k = 0; k < 50; ++k) {
    const std::uint64_t seed = 5000 + static_cast<std::uint64_t>(k);
    const InstanceShape& shape = k % 2 == 0 ? kShape1d : aniso;
    const auto [lo, hi] = ordered_pair(seed, shape);
    Trajectory a = run(lo, precise()), b = run(hi, precise());
    const PropertyReport r = check_comparison(a, b, lo.description);
    worst = std::min(worst, r.slack);
    if (r.slack < -1e-7) ++failed;
    pool.push_back(std::move(a));
    pool.push_back(std::move(b));
    if (k % 2 == 1) {
      const auto [ilo, ihi] = ordered_pair(seed, kShape2d);
      Trajectory ia = run(ilo, lenient()), ib = run(ihi, lenient());
      const PropertyReport ir = check_comparison(ia, ib, ilo.description);
      worst_iso = std::min(worst_iso, ir.slack);
      if (ir.slack < -1e-7) ++failed_iso;
      pool.push_back(std::move(ia));
      pool.push_back(std::move(ib));
    }
  }
  return {failed == 0, fmt("min over steps/sites of (omega2 - omega1, u2 - u1) = %.2e", worst) +
                           " over 50 ordered pairs (25 1D, 25 2D anisotropic, solver tol 1e-10), bound -1e-7;" +
                           fmt(" 2D isotropic (not asserted) min %.2e", worst_iso) +
                           fmt(", %.0f of 25 pairs out of order", failed_iso)};
}

Outcome contraction() {
  double worst_l2 = std::numeric_limits<double>::infinity();
  double worst_bulk = worst_l2, worst_energy = worst_l2;
  for (int k = 0; k < 20; ++k) {
    const InstanceShape& shape = (k / 2) % 2 == 0 ? kShape1d : kShape2d;
    const auto [x, y] = perturbed_pair(7000 + static_cast<std::uint64_t>(k), shape, k % 2 == 1);
    Trajectory a = run(x, lenient()), b = run(y, lenient());
    for (const auto& r : check_contraction(a, b, x.description)) {
      if (r.property == "contraction-l2") worst_l2 = std::min(worst_l2, r.slack);
      if (r.property == "contraction-bulk") worst_bulk = std::min(worst_bulk, r.slack);
      if (r.property == "contraction-energy") worst_energy = std::min(worst_energy, r.slack);
    }
    pool.push_back(std::move(a));
    pool.push_back(std::move(b));
  }
  const bool ok = worst_l2 >= -1e-6 && worst_bulk >= -1e-6 && worst_energy >= -1e-6;
  return {ok, fmt("min slack: L-inf/L2 bound %.2e", worst_l2) + fmt(", integrated bulk bound %.2e", worst_bulk) +
                  fmt(", energy form %.2e", worst_energy) +
                  " over 20 pairs (initial-state or forcing perturbations), bound -1e-6"};
}

Outcome estimates() {
  double l2 = std::numeric_limits<double>::infinity(), bv = l2, bound = l2, unit = l2;
  double identity = 0.0;
  for (const Trajectory& tr : pool) {
    for (const auto& r : check_estimates(tr)) {
      if (r.property == "est-l2") l2 = std::min(l2, r.slack);
      if (r.property == "est-bv") bv = std::min(bv, r.slack);
      if (r.property == "flux-bound") bound = std::min(bound, r.slack);
      if (r.property == "flux-identity") identity = std::max(identity, -r.slack);
      if (r.property == "est-bv-unit") unit = std::min(unit, r.slack);
    }
  }
  const bool ok = l2 >= -1e-6 && bv >= -1e-6 && bound >= 0.0 && identity <= 1e-12;
  return {ok, fmt("min slack: L2 estimate %.2e", l2) + fmt(", BV estimate (factor 2) %.2e", bv) +
                  fmt(", 1 - max|zeta| %.2e", bound) + fmt(", flux identity defect %.2e", identity) + " over " +
                  std::to_string(pool.size()) + " trajectories" +
                  fmt("; factor-1 BV bound min slack %.3f (reported only)", unit)};
}

Outcome certificates() {
  const double tol = 1e-8;
  double worst = 0.0;
  std::size_t steps = 0, unconverged = 0;
  for (const Trajectory& tr : pool) {
    for (const auto& s : tr.steps) {
      ++steps;
      if (!s.converged) {
        ++unconverged;
        continue;
      }
      worst = std::max(worst, s.certificate.worst(tol));
    }
  }
  return {worst <= 1.0 && unconverged == 0,
          fmt("worst normalised certificate component %.3f (<= 1 passes)", worst) + " over " + std::to_string(steps) +
              " steps, " + std::to_string(unconverged) + " unconverged"};
}

Outcome long_term() {
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    EvolutionInput in = random_instance(9000 + static_cast<std::uint64_t>(k), k % 2 == 0 ? kShape1d : kShape2d);
    in.forcing = Forcing::constant(0.0);
    worst = std::min(worst, check_decay(run(in, lenient())).slack);
  }
  const Mesh m = build_interval(1.0, 16);
  const Trajectory tr = evolve(m, 1.0, make_time_grid(20.0, 0.01), Forcing::constant(0.0), m.boundary(1.0), lenient());
  const double final_norm = tr.steps.back().norms.omega_l2;
  const double mono = check_decay(tr).slack;
  const bool ok = worst >= -1e-6 && mono >= -1e-6 && final_norm <= 1e-3 && tr.all_converged();
  return {ok, fmt("min decrease slack %.2e", std::min(worst, mono)) + " over 20 unforced runs" +
                  fmt("; constant run |omega(20)|_L2 = %.2e (bound 1e-3)", final_norm)};
}

}  // namespace

int main() {
  criterion(1, "discrete Green identity", 1, green_identity);
  criterion(2, "resolvent vs independent reference minimiser", 120, oracle_equivalence);
  criterion(3, "closed-form constant states", 10, closed_forms);
  criterion(4, "evolution vs scalar ODE reference", 120, scalar_reference);
  criterion(5, "comparison principle", 300, comparison);
  criterion(6, "continuous dependence on data", 300, contraction);
  criterion(7, "a priori estimates and flux identity", 60, estimates);
  criterion(8, "optimality certificates", 60, certificates);
  criterion(9, "long-term decay", 120, long_term);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
