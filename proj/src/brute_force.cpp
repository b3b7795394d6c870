#include "tvdyn/brute_force.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace tvdyn {

namespace {

// Sparse rows of the forward-difference gradient: for each cell and axis the
// pair (forward cell, 1/h), or no entry when the forward cell is outside.
struct Stencil {
  std::size_t cell;
  int axis;
  std::size_t forward;
  double inv_h;
};

std::vector<Stencil> build_stencil(const Mesh& mesh) {
  std::vector<Stencil> rows;
  const int nx = mesh.cells_along(0);
  const int ny = mesh.cells_along(1);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = mesh.index(i, j);
      if (i + 1 < nx) rows.push_back({c, 0, c + 1, 1.0 / mesh.spacing(0)});
      if (mesh.dim() == 2 && j + 1 < ny) rows.push_back({c, 1, mesh.index(i, j + 1), 1.0 / mesh.spacing(1)});
    }
  }
  return rows;
}

class SmoothedEnergy {
 public:
  SmoothedEnergy(const ResolventProblem& problem)
      : p_(problem),
        stencil_(build_stencil(problem.mesh)),
        anisotropic_(problem.mesh.tv_norm() == TvNorm::anisotropic) {}

  std::size_t size() const { return p_.mesh.cell_count(); }

  Eigen::MatrixXd cell_gradients(const Eigen::VectorXd& u) const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()), 2);
    for (const auto& s : stencil_) {
      g(static_cast<Eigen::Index>(s.cell), s.axis) =
          (u[static_cast<Eigen::Index>(s.forward)] - u[static_cast<Eigen::Index>(s.cell)]) * s.inv_h;
    }
    return g;
  }

  double value(const Eigen::VectorXd& u, double mu) const {
    const double vol = p_.mesh.cell_volume();
    const Eigen::MatrixXd g = cell_gradients(u);
    double e = 0.0;
    // sqrt(n2 + mu^2) - mu, written to stay accurate for tiny n2.
    auto smooth = [mu](double n2) { return mu > 0.0 ? n2 / (std::sqrt(n2 + mu * mu) + mu) : std::sqrt(n2); };
    for (Eigen::Index c = 0; c < g.rows(); ++c) {
      if (anisotropic_) {
        e += vol * (smooth(g(c, 0) * g(c, 0)) + smooth(g(c, 1) * g(c, 1)));
      } else {
        e += vol * smooth(g.row(c).squaredNorm());
      }
    }
    e += 0.5 * p_.lambda * vol * u.squaredNorm();
    const auto& sites = p_.mesh.boundary_sites();
    for (std::size_t b = 0; b < sites.size(); ++b) {
      e += sites[b].weight * huber(p_.eps, u[static_cast<Eigen::Index>(sites[b].cell)] - p_.d.values[b]);
    }
    return e;
  }

  // Gradient (mu > 0) or a subgradient (mu == 0) in Euclidean coordinates.
  Eigen::VectorXd gradient(const Eigen::VectorXd& u, double mu) const {
    const double vol = p_.mesh.cell_volume();
    const Eigen::MatrixXd g = cell_gradients(u);
    Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(g.rows(), 2);
    for (Eigen::Index c = 0; c < g.rows(); ++c) {
      if (anisotropic_) {
        for (int k = 0; k < 2; ++k) {
          const double n = std::sqrt(g(c, k) * g(c, k) + mu * mu);
          if (n > 0.0) unit(c, k) = g(c, k) / n;
        }
      } else {
        const double n = std::sqrt(g.row(c).squaredNorm() + mu * mu);
        if (n > 0.0) unit.row(c) = g.row(c) / n;
      }
    }
    Eigen::VectorXd out = p_.lambda * vol * u;
    for (const auto& s : stencil_) {
      const double v = vol * unit(static_cast<Eigen::Index>(s.cell), s.axis) * s.inv_h;
      out[static_cast<Eigen::Index>(s.forward)] += v;
      out[static_cast<Eigen::Index>(s.cell)] -= v;
    }
    const auto& sites = p_.mesh.boundary_sites();
    for (std::size_t b = 0; b < sites.size(); ++b) {
      const auto c = static_cast<Eigen::Index>(sites[b].cell);
      out[c] += sites[b].weight * huber_prime(p_.eps, u[c] - p_.d.values[b]);
    }
    return out;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& u, double mu) const {
    const double vol = p_.mesh.cell_volume();
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n) * (p_.lambda * vol);
    const Eigen::MatrixXd g = cell_gradients(u);
    // Per cell: J_c^T M J_c with J_c the 2 x n gradient rows and M the Hessian
    // of the smoothed norm: I/s - g g^T / s^3, or diag(mu^2 / s_k^3) per axis.
    std::vector<std::vector<const Stencil*>> rows_of(size());
    for (const auto& s : stencil_) rows_of[s.cell].push_back(&s);
    for (std::size_t c = 0; c < size(); ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
      if (anisotropic_) {
        for (int k = 0; k < 2; ++k) {
          const double s = std::sqrt(g(ci, k) * g(ci, k) + mu * mu);
          if (s > 0.0) m(k, k) = mu * mu / (s * s * s);
        }
      } else {
        const double s = std::sqrt(g.row(ci).squaredNorm() + mu * mu);
        if (s <= 0.0) continue;
        m = Eigen::Matrix2d::Identity() / s - g.row(ci).transpose() * g.row(ci) / (s * s * s);
      }
      for (const Stencil* a : rows_of[c]) {
        for (const Stencil* b : rows_of[c]) {
          const double coeff = vol * m(a->axis, b->axis) * a->inv_h * b->inv_h;
          const auto af = static_cast<Eigen::Index>(a->forward);
          const auto bf = static_cast<Eigen::Index>(b->forward);
          h(af, bf) += coeff;
          h(af, ci) -= coeff;
          h(ci, bf) -= coeff;
          h(ci, ci) += coeff;
        }
      }
    }
    const auto& sites = p_.mesh.boundary_sites();
    for (std::size_t b = 0; b < sites.size(); ++b) {
      const auto c = static_cast<Eigen::Index>(sites[b].cell);
      if (std::abs(u[c] - p_.d.values[b]) <= p_.eps) h(c, c) += sites[b].weight / p_.eps;
    }
    return h;
  }

 private:
  const ResolventProblem& p_;
  std::vector<Stencil> stencil_;
  bool anisotropic_;
};

Eigen::VectorXd subgradient_phase(const SmoothedEnergy& energy, double bound, const BruteForceOptions& opt) {
  const auto n = static_cast<Eigen::Index>(energy.size());
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(-bound, bound);
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double best_value = energy.value(best, 0.0);
  for (int r = 0; r < opt.restarts; ++r) {
    Eigen::VectorXd u(n);
    for (Eigen::Index c = 0; c < n; ++c) u[c] = r == 0 ? 0.0 : uni(rng);
    const double step0 = 0.5 * bound + 0.1;
    for (int k = 1; k <= opt.subgradient_iterations; ++k) {
      const Eigen::VectorXd g = energy.gradient(u, 0.0);
      const double gn = g.norm();
      if (gn == 0.0) break;
      u -= (step0 / std::sqrt(static_cast<double>(k))) * g / gn;
      u = u.cwiseMax(-bound).cwiseMin(bound);
      const double v = energy.value(u, 0.0);
      if (v < best_value) {
        best_value = v;
        best = u;
      }
    }
  }
  return best;
}

void newton_polish(const SmoothedEnergy& energy, Eigen::VectorXd& u, double mu) {
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd g = energy.gradient(u, mu);
    const Eigen::MatrixXd h = energy.hessian(u, mu);
    const Eigen::VectorXd step = -h.ldlt().solve(g);
    const double decrement = -g.dot(step);
    if (!(decrement > 1e-30) || !step.allFinite()) return;
    const double f0 = energy.value(u, mu);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = u + t * step;
      if (energy.value(trial, mu) <= f0 - 1e-4 * t * decrement) {
        u = trial;
        moved = true;
        break;
      }
    }
    if (!moved || t * step.lpNorm<Eigen::Infinity>() < 1e-15) return;
  }
}

}  // namespace

ResolventSolution brute_force_resolvent(const ResolventProblem& problem, const BruteForceOptions& options) {
  validate(problem);
  const Mesh& mesh = problem.mesh;
  if (mesh.cell_count() > options.grid_limit) {
    throw GridTooLarge("brute force limited to " + std::to_string(options.grid_limit) + " unknowns, got " +
                       std::to_string(mesh.cell_count()));
  }
  // Order preservation bounds the minimiser by max |d|.
  double bound = 0.0;
  for (double v : problem.d.values) bound = std::max(bound, std::abs(v));

  const SmoothedEnergy energy(problem);
  Eigen::VectorXd u = subgradient_phase(energy, bound, options);
  for (double mu = options.mu_start; mu >= options.mu_end * 0.999; mu *= 0.1) newton_polish(energy, u, mu);

  ResolventSolution out;
  out.u = mesh.bulk();
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) out.u.values[c] = u[static_cast<Eigen::Index>(c)];
  out.z = mesh.dual();
  recover_boundary(problem, out.u, out.zeta, out.omega);
  out.diagnostics.converged = true;
  return out;
}

}  // namespace tvdyn
