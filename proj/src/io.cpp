#include "tvdyn/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace tvdyn {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

bool parse_number(std::string text, double& out) {
  const auto first = text.find_first_not_of(" \t\r");
  const auto last = text.find_last_not_of(" \t\r");
  if (first == std::string::npos) return false;
  text = text.substr(first, last - first + 1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace

void write_bulk_csv(std::ostream& os, const Mesh& mesh, const BulkField& f) {
  check_shape(mesh, f);
  const int nx = mesh.cells_along(0);
  os << (mesh.dim() == 1 ? "i,x,value\n" : "i,j,x,y,value\n");
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto x = mesh.center(c);
    const auto i = c % static_cast<std::size_t>(nx);
    const auto j = c / static_cast<std::size_t>(nx);
    if (mesh.dim() == 1) {
      os << i << ',' << format_double(x[0]) << ',' << format_double(f.values[c]) << '\n';
    } else {
      os << i << ',' << j << ',' << format_double(x[0]) << ',' << format_double(x[1]) << ','
         << format_double(f.values[c]) << '\n';
    }
  }
}

void write_boundary_csv(std::ostream& os, const Mesh& mesh, const BoundaryField& f) {
  check_shape(mesh, f);
  os << (mesh.dim() == 1 ? "site,x,nu_x,weight,value\n" : "site,x,y,nu_x,nu_y,weight,value\n");
  const auto& sites = mesh.boundary_sites();
  for (std::size_t b = 0; b < sites.size(); ++b) {
    const auto& s = sites[b];
    os << b << ',' << format_double(s.position[0]) << ',';
    if (mesh.dim() == 2) os << format_double(s.position[1]) << ',';
    os << format_double(s.normal[0]) << ',';
    if (mesh.dim() == 2) os << format_double(s.normal[1]) << ',';
    os << format_double(s.weight) << ',' << format_double(f.values[b]) << '\n';
  }
}

void write_boundary_series(std::ostream& os, const Trajectory& traj) {
  os << "t,site,omega,zeta,g\n";
  for (std::size_t b = 0; b < traj.omega0.values.size(); ++b) {
    os << "0," << b << ',' << format_double(traj.omega0.values[b]) << ",0,0\n";
  }
  for (const StepRecord& s : traj.steps) {
    for (std::size_t b = 0; b < s.omega.values.size(); ++b) {
      os << format_double(s.t) << ',' << b << ',' << format_double(s.omega.values[b]) << ','
         << format_double(s.zeta.values[b]) << ',' << format_double(s.g.values[b]) << '\n';
    }
  }
}

void write_norms_csv(std::ostream& os, const Trajectory& traj) {
  os << "step,t,omega_l2,omega_l1,u_l2,tv,bv,iterations,converged\n";
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const StepRecord& s = traj.steps[i];
    os << i + 1 << ',' << format_double(s.t) << ',' << format_double(s.norms.omega_l2) << ','
       << format_double(s.norms.omega_l1) << ',' << format_double(s.norms.u_l2) << ',' << format_double(s.norms.tv)
       << ',' << format_double(s.norms.bv) << ',' << s.iterations << ',' << (s.converged ? 1 : 0) << '\n';
  }
}

void write_oracle_series(std::ostream& os, const OracleTrajectory& oracle, const std::vector<double>& times,
                         std::size_t sites) {
  os << "t,site,omega,zeta,g\n";
  for (double t : times) {
    const double w = oracle.omega_at(t);
    const double zeta = truncate(1.0, oracle.kappa * w);
    const double g = t > 0.0 ? oracle.g(t) : 0.0;
    for (std::size_t b = 0; b < sites; ++b) {
      os << format_double(t) << ',' << b << ',' << format_double(w) << ',' << format_double(t > 0.0 ? zeta : 0.0)
         << ',' << format_double(g) << '\n';
    }
  }
}

void write_diagnostics_json(std::ostream& os, const ResolventSolution& sol, double tol) {
  nlohmann::ordered_json j;
  const auto& d = sol.diagnostics;
  j["iterations"] = d.iterations;
  j["converged"] = d.converged;
  const auto& c = sol.certificate;
  j["certificate"] = {{"equation_residual", c.equation_residual},
                      {"dual_feasibility", c.dual_feasibility},
                      {"pairing_gap", c.pairing_gap},
                      {"sign_violation", c.sign_violation},
                      {"variational_residual", c.variational_residual},
                      {"equation_scale", c.equation_scale},
                      {"tv_scale", c.tv_scale},
                      {"tolerance", tol},
                      {"passes", c.passes(tol)}};
  j["history"] = {{"iteration", d.history_iterations},
                  {"equation_residual", d.history_equation},
                  {"pairing_gap", d.history_gap},
                  {"energy", d.history_energy}};
  os << j.dump(2) << '\n';
}

std::vector<SeriesLevel> read_boundary_series(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,site,omega,zeta,g", 0) != 0) {
    throw IoError(path.string() + ": missing boundary series header");
  }
  std::vector<SeriesLevel> levels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    double v[5];
    if (cells.size() != 5) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 5 columns");
    for (int k = 0; k < 5; ++k) {
      if (!parse_number(cells[static_cast<std::size_t>(k)], v[k])) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
      }
    }
    const auto site = static_cast<std::size_t>(v[1]);
    if (levels.empty() || levels.back().t != v[0]) {
      if (site != 0) throw IoError(path.string() + ":" + std::to_string(line_no) + ": time level must start at site 0");
      levels.push_back({v[0], {}, {}, {}});
    }
    SeriesLevel& lvl = levels.back();
    if (site != lvl.omega.size()) throw IoError(path.string() + ":" + std::to_string(line_no) + ": sites out of order");
    lvl.omega.push_back(v[2]);
    lvl.zeta.push_back(v[3]);
    lvl.g.push_back(v[4]);
  }
  return levels;
}

std::vector<NormsRow> read_norms_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  std::getline(in, line);
  std::vector<NormsRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    double v[9];
    if (cells.size() != 9) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 9 columns");
    for (int k = 0; k < 9; ++k) {
      if (!parse_number(cells[static_cast<std::size_t>(k)], v[k])) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
      }
    }
    rows.push_back({static_cast<int>(v[0]), v[1], {v[2], v[3], v[4], v[5], v[6]}, static_cast<int>(v[7]), v[8] != 0.0});
  }
  return rows;
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    bool numeric = true;
    for (const auto& cell : split_csv(line)) {
      double v;
      if (!parse_number(cell, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tvdyn
