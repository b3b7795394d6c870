#include "tvdyn/resolvent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace tvdyn {

double truncate(double k, double s) { return std::clamp(s, -k, k); }

double huber(double eps, double s) {
  const double a = std::abs(s);
  return a <= eps ? s * s / (2.0 * eps) : a - 0.5 * eps;
}

double huber_prime(double eps, double s) { return truncate(1.0, s / eps); }

void validate(const ResolventProblem& problem) {
  if (!(problem.lambda > 0.0) || !std::isfinite(problem.lambda)) {
    throw InvalidProblem("lambda must be positive and finite");
  }
  if (!(problem.eps > 0.0) || !std::isfinite(problem.eps)) throw InvalidProblem("eps must be positive and finite");
  if (problem.d.values.size() != problem.mesh.site_count()) throw InvalidProblem("datum size does not match mesh");
  for (double v : problem.d.values) {
    if (!std::isfinite(v)) throw InvalidProblem("datum must be finite");
  }
}

bool Certificate::passes(double tol) const { return worst(tol) <= 1.0; }

double Certificate::worst(double tol) const {
  double w = 0.0;
  w = std::max(w, equation_residual / (tol * equation_scale));
  w = std::max(w, variational_residual / (tol * equation_scale));
  w = std::max(w, pairing_gap / (tol * tv_scale));
  w = std::max(w, dual_feasibility / 1e-9);
  w = std::max(w, sign_violation / 1e-6);
  return std::isfinite(w) ? w : std::numeric_limits<double>::infinity();
}

namespace {

double sign_distance(double zeta, double gap) {
  if (gap > 0.0) return std::abs(zeta - 1.0);
  if (gap < 0.0) return std::abs(zeta + 1.0);
  return std::max(0.0, std::abs(zeta) - 1.0);
}

// Probe set for the weak formulation, each scaled to unit L2 norm.
std::vector<BulkField> probe_fields(const Mesh& mesh) {
  std::vector<BulkField> probes;
  const double pi = std::acos(-1.0);
  auto add = [&](auto fn) {
    BulkField f = mesh.bulk();
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
      const auto x = mesh.center(c);
      f.values[c] = fn(x[0] / mesh.length(0), x[1] / mesh.length(1));
    }
    const double n = integrate_bulk(mesh, f, 2);
    for (double& v : f.values) v /= n;
    probes.push_back(std::move(f));
  };
  add([](double, double) { return 1.0; });
  add([](double x, double) { return x - 0.5; });
  add([&](double x, double) { return std::cos(pi * x); });
  add([&](double x, double) { return std::cos(3.0 * pi * x) + 0.5 * std::sin(2.0 * pi * x); });
  if (mesh.dim() == 2) {
    add([](double, double y) { return y - 0.5; });
    add([&](double, double y) { return std::cos(pi * y); });
    add([](double x, double y) { return (x - 0.5) * (y - 0.5); });
    add([&](double x, double y) { return std::cos(pi * x) * std::cos(2.0 * pi * y); });
  }
  return probes;
}

}  // namespace

Certificate evaluate_certificate(const Mesh& mesh, double lambda, const BulkField& u, const DualField& z,
                                 const BoundaryField& zeta, const BoundaryField& omega) {
  check_shape(mesh, u);
  check_shape(mesh, z);
  check_shape(mesh, zeta);
  check_shape(mesh, omega);
  Certificate cert;

  const BulkField div = divergence(mesh, z);
  const BulkField lift = lift_boundary(mesh, zeta);
  BulkField residual = mesh.bulk();
  BulkField lu = mesh.bulk();
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    lu.values[c] = lambda * u.values[c];
    residual.values[c] = lu.values[c] - div.values[c] - lift.values[c];
  }
  cert.equation_residual = integrate_bulk(mesh, residual, 2);
  cert.equation_scale = 1.0 + integrate_bulk(mesh, lu, 2) + integrate_bulk(mesh, lift, 2);

  DualField zn = z;
  zn.norm = mesh.tv_norm();
  double zmax = 0.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) zmax = std::max(zmax, zn.dual_norm_at(c));
  cert.dual_feasibility = std::max(0.0, zmax - 1.0);

  const double tv = total_variation(mesh, u);
  const DualField grad = gradient(mesh, u);
  cert.pairing_gap = std::max(0.0, tv - inner_dual(mesh, z, grad));

  const BoundaryField tr = trace(mesh, u);
  double boundary_pairing = 0.0;
  const auto& sites = mesh.boundary_sites();
  for (std::size_t b = 0; b < sites.size(); ++b) {
    cert.sign_violation =
        std::max(cert.sign_violation, sign_distance(zeta.values[b], omega.values[b] - tr.values[b]));
    boundary_pairing += sites[b].weight * std::abs(zeta.values[b] * tr.values[b]);
  }
  cert.tv_scale = 1.0 + tv + boundary_pairing;

  // lambda <u, phi> + <z, grad phi> - sum_b w_b zeta_b phi_b, evaluated directly.
  for (const BulkField& phi : probe_fields(mesh)) {
    const double value = lambda * inner_bulk(mesh, u, phi) + inner_dual(mesh, z, gradient(mesh, phi)) -
                         inner_boundary(mesh, zeta, trace(mesh, phi));
    cert.variational_residual = std::max(cert.variational_residual, std::abs(value));
  }
  return cert;
}

double resolvent_energy(const ResolventProblem& problem, const BulkField& u) {
  const Mesh& mesh = problem.mesh;
  double e = total_variation(mesh, u) + 0.5 * problem.lambda * std::pow(integrate_bulk(mesh, u, 2), 2);
  const auto& sites = mesh.boundary_sites();
  for (std::size_t b = 0; b < sites.size(); ++b) {
    e += sites[b].weight * huber(problem.eps, u.values[sites[b].cell] - problem.d.values[b]);
  }
  return e;
}

void recover_boundary(const ResolventProblem& problem, const BulkField& u, BoundaryField& zeta,
                      BoundaryField& omega) {
  const auto& sites = problem.mesh.boundary_sites();
  zeta.values.resize(sites.size());
  omega.values.resize(sites.size());
  for (std::size_t b = 0; b < sites.size(); ++b) {
    const double d = problem.d.values[b];
    const double ub = u.values[sites[b].cell];
    zeta.values[b] = truncate(1.0, (d - ub) / problem.eps);
    // Attached sites carry omega = u exactly so that sign(omega - u) is the
    // whole interval [-1, 1]; d - eps zeta agrees to rounding.
    omega.values[b] = std::abs(d - ub) <= problem.eps ? ub : d - problem.eps * zeta.values[b];
  }
}

double prox_scalar(double center, double tau, double lambda, double eps, std::span<const double> weights,
                   std::span<const double> anchors) {
  // The derivative
  //   phi(u) = (u - center)/tau + lambda u + sum_k weight_k T_1((u - anchor_k)/eps)
  // is strictly increasing and affine between the breakpoints anchor_k +- eps,
  // so the root is found exactly by locating its piece.
  const std::size_t m = anchors.size();
  auto phi = [&](double u) {
    double v = (u - center) / tau + lambda * u;
    for (std::size_t k = 0; k < m; ++k) v += weights[k] * truncate(1.0, (u - anchors[k]) / eps);
    return v;
  };
  auto solve_piece = [&](double probe) {
    // Affine form of phi on the piece containing `probe`.
    double slope = 1.0 / tau + lambda;
    double offset = -center / tau;
    for (std::size_t k = 0; k < m; ++k) {
      const double s = (probe - anchors[k]) / eps;
      if (s >= 1.0) {
        offset += weights[k];
      } else if (s <= -1.0) {
        offset -= weights[k];
      } else {
        slope += weights[k] / eps;
        offset -= weights[k] * anchors[k] / eps;
      }
    }
    return -offset / slope;
  };

  std::array<double, 8> knots{};
  std::size_t n_knots = 0;
  for (std::size_t k = 0; k < m && n_knots + 2 <= knots.size(); ++k) {
    knots[n_knots++] = anchors[k] - eps;
    knots[n_knots++] = anchors[k] + eps;
  }
  std::sort(knots.begin(), knots.begin() + static_cast<std::ptrdiff_t>(n_knots));

  // Find the first knot where phi >= 0; the root lies in the piece just left of it.
  std::size_t idx = 0;
  while (idx < n_knots && phi(knots[idx]) < 0.0) ++idx;
  if (idx < n_knots && phi(knots[idx]) == 0.0) return knots[idx];
  double probe;
  if (n_knots == 0) {
    probe = 0.0;
  } else if (idx == 0) {
    probe = knots[0] - 1.0;
  } else if (idx == n_knots) {
    probe = knots[n_knots - 1] + 1.0;
  } else {
    probe = 0.5 * (knots[idx - 1] + knots[idx]);
  }
  double u = solve_piece(probe);
  // Guard against round-off pushing the affine root just outside its piece.
  if (n_knots > 0) {
    const double lo = idx == 0 ? -std::numeric_limits<double>::infinity() : knots[idx - 1];
    const double hi = idx == n_knots ? std::numeric_limits<double>::infinity() : knots[idx];
    u = std::clamp(u, lo, hi);
  }
  return u;
}

BulkField prox_step(const Mesh& mesh, double lambda, double eps, const BoundaryField& d, double tau,
                    const BulkField& u_bar) {
  check_shape(mesh, d);
  check_shape(mesh, u_bar);
  BulkField out = mesh.bulk();
  const auto& sites = mesh.boundary_sites();
  const double inv_vol = 1.0 / mesh.cell_volume();
  std::array<double, 4> w{};
  std::array<double, 4> a{};
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto attached = mesh.sites_of_cell(c);
    if (attached.empty()) {
      out.values[c] = u_bar.values[c] / (1.0 + tau * lambda);
      continue;
    }
    std::size_t m = 0;
    for (std::size_t b : attached) {
      w[m] = sites[b].weight * inv_vol;
      a[m] = d.values[b];
      ++m;
    }
    out.values[c] = prox_scalar(u_bar.values[c], tau, lambda, eps, std::span<const double>(w.data(), m),
                                std::span<const double>(a.data(), m));
  }
  return out;
}

namespace {

// Allocation-free kernels for the iteration.
class Operators {
 public:
  explicit Operators(const Mesh& mesh)
      : mesh_(mesh), nx_(mesh.cells_along(0)), ny_(mesh.cells_along(1)), dim_(mesh.dim()) {
    ihx_ = 1.0 / mesh.spacing(0);
    ihy_ = 1.0 / mesh.spacing(1);
    anisotropic_ = mesh.tv_norm() == TvNorm::anisotropic;
  }

  // z <- proj(z + sigma grad(u_bar))
  void dual_ascent(std::vector<double>& z, const std::vector<double>& ub, double sigma) const {
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const std::size_t c = mesh_.index(i, j);
        double* zc = &z[c * dim_];
        const double gx = i + 1 < nx_ ? (ub[c + 1] - ub[c]) * ihx_ : 0.0;
        double zx = zc[0] + sigma * gx;
        if (dim_ == 1) {
          zc[0] = std::clamp(zx, -1.0, 1.0);
        } else {
          const double gy = j + 1 < ny_ ? (ub[c + nx_] - ub[c]) * ihy_ : 0.0;
          double zy = zc[1] + sigma * gy;
          if (anisotropic_) {
            zx = std::clamp(zx, -1.0, 1.0);
            zy = std::clamp(zy, -1.0, 1.0);
          } else if (const double n = std::hypot(zx, zy); n > 1.0) {
            zx /= n;
            zy /= n;
          }
          zc[0] = zx;
          zc[1] = zy;
        }
      }
    }
  }

  void divergence(const std::vector<double>& z, std::vector<double>& out) const {
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const std::size_t c = mesh_.index(i, j);
        const double own_x = i + 1 < nx_ ? z[c * dim_] : 0.0;
        const double back_x = i > 0 ? z[(c - 1) * dim_] : 0.0;
        double acc = (own_x - back_x) * ihx_;
        if (dim_ == 2) {
          const double own_y = j + 1 < ny_ ? z[c * dim_ + 1] : 0.0;
          const double back_y = j > 0 ? z[(c - nx_) * dim_ + 1] : 0.0;
          acc += (own_y - back_y) * ihy_;
        }
        out[c] = acc;
      }
    }
  }

 private:
  const Mesh& mesh_;
  int nx_, ny_, dim_;
  bool anisotropic_ = false;
  double ihx_, ihy_;
};

struct Iterate {
  BulkField u;
  DualField z;
};

}  // namespace

ResolventSolution solve_resolvent(const ResolventProblem& problem, const SolverConfig& config,
                                  const WarmStart* warm_start) {
  validate(problem);
  const Mesh& mesh = problem.mesh;
  const double op_norm_sq = mesh.gradient_norm_bound_sq();
  const double op_norm = std::sqrt(op_norm_sq);

  double ratio = config.step_ratio > 0.0 ? config.step_ratio : 1.0;
  double tau = config.tau > 0.0 ? config.tau : ratio / op_norm;
  double sigma = config.sigma > 0.0 ? config.sigma : 1.0 / (ratio * op_norm);
  if (config.tau <= 0.0 && config.sigma <= 0.0) {
    tau *= 0.99;
    sigma *= 0.99;
  } else if (config.tau > 0.0 && config.sigma <= 0.0) {
    sigma = 0.99 / (tau * op_norm_sq);
  } else if (config.tau <= 0.0 && config.sigma > 0.0) {
    tau = 0.99 / (sigma * op_norm_sq);
  }
  if (!(tau > 0.0) || !(sigma > 0.0) || tau * sigma * op_norm_sq > 1.0 + 1e-12) {
    throw InvalidStepSizes("step sizes violate tau * sigma * ||grad||^2 <= 1");
  }
  if (config.theta < 0.0 || config.theta > 1.0) throw InvalidStepSizes("theta must lie in [0, 1]");
  if (config.max_iterations < 1 || config.check_every < 1 || config.restart_every < 0) {
    throw InvalidStepSizes("iteration counts must be positive");
  }
  const double tau0 = tau;
  const double sigma0 = sigma;

  Iterate cur{mesh.bulk(), mesh.dual()};
  if (warm_start != nullptr) {
    check_shape(mesh, warm_start->u);
    check_shape(mesh, warm_start->z);
    cur.u = warm_start->u;
    cur.z = warm_start->z;
    cur.z.norm = mesh.tv_norm();
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) cur.z.project_at(c);
  }

  const Operators ops(mesh);
  std::vector<double> u_bar = cur.u.values;
  std::vector<double> div(mesh.cell_count());
  BulkField step_point = mesh.bulk();
  BoundaryField zeta = mesh.boundary();
  BoundaryField omega = mesh.boundary();

  ResolventSolution best;
  double best_score = std::numeric_limits<double>::infinity();
  ResolventDiagnostics diag;
  int checks = 0;

  auto assess = [&](int iteration) {
    recover_boundary(problem, cur.u, zeta, omega);
    const Certificate cert = evaluate_certificate(mesh, problem.lambda, cur.u, cur.z, zeta, omega);
    const double score = cert.worst(config.tolerance);
    if (checks++ % std::max(1, config.history_stride) == 0) {
      diag.history_iterations.push_back(iteration);
      diag.history_equation.push_back(cert.equation_residual);
      diag.history_gap.push_back(cert.pairing_gap);
      diag.history_energy.push_back(resolvent_energy(problem, cur.u));
    }
    if (score < best_score) {
      best_score = score;
      best.u = cur.u;
      best.z = cur.z;
      best.zeta = zeta;
      best.omega = omega;
      best.certificate = cert;
      diag.iterations = iteration;
    }
    return score <= 1.0;
  };

  bool done = assess(0);
  int k = 0;
  while (!done && k < config.max_iterations) {
    ++k;
    ops.dual_ascent(cur.z.values, u_bar, sigma);
    ops.divergence(cur.z.values, div);
    for (std::size_t c = 0; c < div.size(); ++c) step_point.values[c] = cur.u.values[c] + tau * div[c];
    BulkField next = prox_step(mesh, problem.lambda, problem.eps, problem.d, tau, step_point);

    double theta = config.theta;
    if (config.accelerated) {
      theta = 1.0 / std::sqrt(1.0 + 2.0 * problem.lambda * tau);
    }
    for (std::size_t c = 0; c < div.size(); ++c) {
      u_bar[c] = next.values[c] + theta * (next.values[c] - cur.u.values[c]);
    }
    cur.u = std::move(next);
    if (config.accelerated) {
      tau *= theta;
      sigma /= theta;
      // tau_k -> 0 eventually freezes the primal variable; restart the step sequence.
      if (config.restart_every > 0 && k % config.restart_every == 0) {
        tau = tau0;
        sigma = sigma0;
        u_bar = cur.u.values;
      }
    }
    if (k % config.check_every == 0 || k == config.max_iterations) done = assess(k);
  }

  best.diagnostics = std::move(diag);
  best.diagnostics.converged = done;
  if (done) best.diagnostics.iterations = k;
  return best;
}

}  // namespace tvdyn
