#include "tvdyn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvdyn {

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::attached:
      return "attached";
    case Regime::detached_positive:
      return "detached+";
    case Regime::detached_negative:
      return "detached-";
  }
  return "?";
}

double RadialOracleSpec::kappa() const {
  return ball ? lambda * ball_geometry.radius / ball_geometry.dim : lambda * interval.length / 2.0;
}

namespace {

Regime classify(double kappa, double omega) {
  const double s = kappa * omega;
  if (s > 1.0) return Regime::detached_positive;
  if (s < -1.0) return Regime::detached_negative;
  return Regime::attached;
}

double rk4(const std::function<double(double, double)>& f, double t, double y, double h) {
  const double k1 = f(t, y);
  const double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const double k4 = f(t + h, y + h * k3);
  return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

OracleTrajectory radial_ode(const RadialOracleSpec& spec) {
  if (!(spec.lambda > 0.0)) throw std::invalid_argument("oracle lambda must be positive");
  if (!(spec.dt > 0.0) || !(spec.T > 0.0)) throw std::invalid_argument("oracle T and dt must be positive");
  if (spec.ball ? !(spec.ball_geometry.radius > 0.0) || spec.ball_geometry.dim < 1 : !(spec.interval.length > 0.0)) {
    throw std::invalid_argument("oracle geometry must be nondegenerate");
  }
  const double kappa = spec.kappa();
  const auto g = spec.g;
  const auto rhs = [kappa, g](double t, double w) { return g(t) - truncate(1.0, kappa * w); };

  OracleTrajectory out;
  out.kappa = kappa;
  out.g = g;
  auto record = [&](double t, double w) {
    out.times.push_back(t);
    out.omega.push_back(w);
    out.u.push_back(truncate(1.0 / kappa, w));
    out.zeta.push_back(truncate(1.0, kappa * w));
    out.regime.push_back(classify(kappa, w));
  };

  double t = 0.0;
  double w = spec.omega0;
  record(t, w);
  const double threshold = 1.0 / kappa;
  const auto n_steps = static_cast<long>(std::ceil(spec.T / spec.dt - 1e-9));
  for (long k = 1; k <= n_steps; ++k) {
    const double t_end = std::min(spec.T, k * spec.dt);
    while (t < t_end) {
      const double h = t_end - t;
      const double next = rk4(rhs, t, w, h);
      const bool on_kink = std::abs(std::abs(w) - threshold) <= 1e-15 * threshold;
      if (on_kink || classify(kappa, next) == classify(kappa, w)) {
        t = t_end;
        w = next;
        break;
      }
      // Locate the crossing within the step.
      double lo = 0.0;
      double hi = h;
      const Regime start = classify(kappa, w);
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (classify(kappa, rk4(rhs, t, w, mid)) == start) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double crossing = rk4(rhs, t, w, hi);
      t += hi;
      w = std::copysign(threshold, crossing);
      out.event_times.push_back(t);
      record(t, w);
    }
    record(t, w);
  }
  return out;
}

double OracleTrajectory::omega_at(double t) const {
  if (times.empty()) throw std::logic_error("empty oracle trajectory");
  if (t <= times.front()) return omega.front();
  if (t >= times.back()) return omega.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto i1 = static_cast<std::size_t>(it - times.begin());
  const std::size_t i0 = i1 - 1;
  const double t0 = times[i0], t1 = times[i1];
  const double h = t1 - t0;
  if (h <= 0.0) return omega[i1];
  const double s = (t - t0) / h;
  const double y0 = omega[i0], y1 = omega[i1];
  const double f0 = g(t0) - truncate(1.0, kappa * y0);
  const double f1 = g(t1) - truncate(1.0, kappa * y1);
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1;
}

ConstantStep single_step_closed_form(double lambda, double eps, double length, double d) {
  if (!(lambda > 0.0) || !(eps > 0.0) || !(length > 0.0)) {
    throw std::invalid_argument("closed form needs positive lambda, eps and length");
  }
  const double kappa = lambda * length / 2.0;
  const double attached = d / (1.0 + eps * kappa);
  if (std::abs(attached) <= 1.0 / kappa) return {attached, attached, kappa * attached};
  const double s = d > 0.0 ? 1.0 : -1.0;
  return {s / kappa, d - eps * s, s};
}

ResolventSolution interval_certificate_state(const Mesh& mesh, double lambda, double u_value, double omega_value) {
  if (mesh.dim() != 1) throw std::invalid_argument("interval certificate needs a 1D mesh");
  const double length = mesh.length(0);
  const double h = mesh.spacing(0);
  const int n = mesh.cells_along(0);
  ResolventSolution s;
  s.u = mesh.bulk(u_value);
  s.z = mesh.dual();
  for (int j = 0; j + 1 < n; ++j) s.z.values[static_cast<std::size_t>(j)] = lambda * u_value * ((j + 1) * h - length / 2.0);
  s.zeta = mesh.boundary(lambda * u_value * length / 2.0);
  s.omega = mesh.boundary(omega_value);
  s.certificate = evaluate_certificate(mesh, lambda, s.u, s.z, s.zeta, s.omega);
  s.diagnostics.converged = true;
  return s;
}

}  // namespace tvdyn
