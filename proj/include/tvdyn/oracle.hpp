#pragma once

#include <functional>
#include <vector>

#include "tvdyn/resolvent.hpp"

namespace tvdyn {

// Reference solutions for spatially constant data. For u = c constant the
// field z(x) = lambda c (x - L/2) on an interval (z = lambda c x / N on a
// ball of radius R) satisfies lambda u = div z with normal trace kappa c,
// kappa = lambda L / 2 (resp. lambda R / N), and |z| <= 1 iff |kappa c| <= 1.
// The boundary dynamics then reduce to omega' = g(t) - T_1(kappa omega).

struct IntervalGeometry {
  double length;
};

struct BallGeometry {
  int dim;
  double radius;
};

enum class Regime { attached, detached_positive, detached_negative };

const char* to_string(Regime regime);

struct RadialOracleSpec {
  bool ball = false;
  IntervalGeometry interval{1.0};
  BallGeometry ball_geometry{2, 1.0};
  double lambda = 1.0;
  double omega0 = 0.0;
  std::function<double(double)> g = [](double) { return 0.0; };
  double T = 1.0;
  double dt = 1e-4;

  double kappa() const;
};

struct OracleTrajectory {
  double kappa;
  std::vector<double> times;
  std::vector<double> omega;
  std::vector<double> u;
  std::vector<double> zeta;
  std::vector<Regime> regime;
  std::vector<double> event_times;  // attach / detach crossings
  std::function<double(double)> g;

  // Cubic Hermite interpolation of omega using omega' = g - T_1(kappa omega).
  double omega_at(double t) const;
};

// Classical RK4 at step dt with bisection (to 1e-12 in t) onto each crossing
// of |omega| = 1/kappa, where the right-hand side has a kink.
OracleTrajectory radial_ode(const RadialOracleSpec& spec);

struct ConstantStep {
  double u;
  double omega;
  double zeta;
};

// One resolvent step for constant data on an interval of length L.
ConstantStep single_step_closed_form(double lambda, double eps, double length, double d);

// The exact certificate state for u = u_value constant on a 1D mesh:
// z at the faces x_{j+1/2} equal to lambda u (x - L/2), zeta = lambda u L / 2,
// and the supplied omega. The certificate is evaluated before returning.
ResolventSolution interval_certificate_state(const Mesh& mesh, double lambda, double u_value, double omega_value);

}  // namespace tvdyn
