#pragma once

#include <cstdint>
#include <stdexcept>

#include "tvdyn/resolvent.hpp"

namespace tvdyn {

class GridTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BruteForceOptions {
  std::size_t grid_limit = 64;
  int restarts = 8;
  int subgradient_iterations = 4000;
  std::uint64_t seed = 7;
  // Smoothing schedule for the Newton polish: |p| ~ sqrt(|p|^2 + mu^2).
  double mu_start = 1e-2;
  double mu_end = 1e-13;
};

// Reference minimiser of the step energy, independent of the primal-dual
// solver: projected subgradient descent from random starts, then damped
// Newton on a smoothed energy with the smoothing driven to ~0. Only the
// primal u is computed from scratch; omega and zeta follow from u, and z is
// left at zero (the certificate is not meaningful for this route).
ResolventSolution brute_force_resolvent(const ResolventProblem& problem, const BruteForceOptions& options = {});

}  // namespace tvdyn
