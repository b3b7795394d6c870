#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvdyn/oracle.hpp"
#include "tvdyn/stepper.hpp"

namespace tvdyn {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bulk: `i,x,value` (1D) or `i,j,x,y,value` (2D), one row per cell.
void write_bulk_csv(std::ostream& os, const Mesh& mesh, const BulkField& f);
// Boundary: `site,x,nu_x,weight,value` (1D) or `site,x,y,nu_x,nu_y,weight,value` (2D).
void write_boundary_csv(std::ostream& os, const Mesh& mesh, const BoundaryField& f);

// Boundary time series `t,site,omega,zeta,g`. The t = 0 rows hold the
// initial state with zero flux and forcing columns.
void write_boundary_series(std::ostream& os, const Trajectory& traj);
// Per-step norms `step,t,omega_l2,omega_l1,u_l2,tv,bv,iterations,converged`.
void write_norms_csv(std::ostream& os, const Trajectory& traj);
// Oracle trajectory in the boundary series schema, sampled at `times`,
// replicated over `sites` boundary sites.
void write_oracle_series(std::ostream& os, const OracleTrajectory& oracle, const std::vector<double>& times,
                         std::size_t sites);

void write_diagnostics_json(std::ostream& os, const ResolventSolution& sol, double tol);

// Boundary series read back: rows grouped per time level.
struct SeriesLevel {
  double t;
  std::vector<double> omega;
  std::vector<double> zeta;
  std::vector<double> g;
};
std::vector<SeriesLevel> read_boundary_series(const std::filesystem::path& path);

struct NormsRow {
  int step;
  double t;
  StepNorms norms;
  int iterations;
  bool converged;
};
std::vector<NormsRow> read_norms_csv(const std::filesystem::path& path);

// Plain numeric CSV (header line optional, skipped when non-numeric).
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace tvdyn
