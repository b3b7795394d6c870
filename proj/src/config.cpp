#include "tvdyn/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "tvdyn/io.hpp"

namespace tvdyn {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"mesh", {"dimension", "lengths", "cells", "tv"}},
      {"equation", {"lambda"}},
      {"time", {"T", "eps", "sample_mode"}},
      {"data", {"omega0", "g"}},
      {"solver", {"tolerance", "max_iterations", "check_every", "step_ratio", "accelerated", "restart_every"}},
      {"output", {"snapshot_every"}},
      {"verify", {"suites", "instances", "trajectory", "cells_1d", "cells_2d", "T", "eps"}},
      {"converge", {"eps_list", "cells_list"}},
      {"oracle", {"dt"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  std::istringstream is(trim(text));
  double v;
  if (!(is >> v) || !is.eof() || !std::isfinite(v)) throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  std::istringstream is(trim(text));
  long long v;
  if (!(is >> v) || !is.eof()) throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key + ": expected at least one number");
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(to_int(key, item));
  if (out.empty()) throw ConfigError(key + ": expected at least one integer");
  return out;
}

std::vector<std::string> tokens(const std::string& spec) {
  std::istringstream is(spec);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<double> params(const std::vector<std::string>& tok, std::size_t first, std::size_t count,
                           const std::string& spec) {
  if (tok.size() != first + count) {
    throw ConfigError("'" + spec + "': expected " + std::to_string(count) + " parameters");
  }
  std::vector<double> out;
  for (std::size_t k = first; k < tok.size(); ++k) out.push_back(to_double(spec, tok[k]));
  return out;
}

}  // namespace

Mesh RunConfig::mesh() const {
  if (lengths.size() != static_cast<std::size_t>(dimension) || cells.size() != static_cast<std::size_t>(dimension)) {
    throw ConfigError("mesh: lengths and cells need one entry per axis");
  }
  try {
    return build_mesh(dimension, lengths, cells, tv);
  } catch (const MeshError& e) {
    throw ConfigError(std::string("mesh: ") + e.what());
  }
}

SolverConfig RunConfig::solver() const {
  SolverConfig c;
  c.tolerance = tolerance;
  c.max_iterations = max_iterations;
  c.check_every = check_every;
  c.step_ratio = step_ratio;
  c.accelerated = accelerated;
  c.restart_every = restart_every;
  return c;
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  cfg.base_dir = base_dir;
  for (const auto& [section, body] : tree) {
    const auto sec = schema().find(section);
    if (sec == schema().end()) {
      if (!body.data().empty()) throw ConfigError("config: key '" + section + "' outside of a section");
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      if (!sec->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      const std::string name = section + "." + key;
      const std::string v = trim(node.data());
      if (section == "mesh") {
        if (key == "dimension") cfg.dimension = to_int(name, v);
        if (key == "lengths") cfg.lengths = to_doubles(name, v);
        if (key == "cells") cfg.cells = to_ints(name, v);
        if (key == "tv") {
          try {
            cfg.tv = parse_tv_norm(v);
          } catch (const MeshError& e) {
            throw ConfigError(name + ": " + e.what());
          }
        }
      } else if (section == "equation") {
        cfg.lambda = to_double(name, v);
      } else if (section == "time") {
        if (key == "T") cfg.T = to_double(name, v);
        if (key == "eps") cfg.eps = to_double(name, v);
        if (key == "sample_mode") {
          try {
            cfg.sample_mode = parse_sample_mode(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(name + ": " + e.what());
          }
        }
      } else if (section == "data") {
        if (v.empty()) throw ConfigError(name + ": empty data descriptor");
        if (key == "omega0") cfg.omega0 = v;
        if (key == "g") cfg.g = v;
      } else if (section == "solver") {
        if (key == "tolerance") cfg.tolerance = to_double(name, v);
        if (key == "max_iterations") cfg.max_iterations = to_int(name, v);
        if (key == "check_every") cfg.check_every = to_int(name, v);
        if (key == "step_ratio") cfg.step_ratio = to_double(name, v);
        if (key == "accelerated") cfg.accelerated = to_bool(name, v);
        if (key == "restart_every") cfg.restart_every = to_int(name, v);
      } else if (section == "output") {
        cfg.snapshot_every = to_int(name, v);
      } else if (section == "verify") {
        if (key == "suites") cfg.suites = split_list(v);
        if (key == "instances") cfg.instances = to_int(name, v);
        if (key == "trajectory") cfg.trajectory = v;
        if (key == "cells_1d") cfg.verify_cells_1d = to_int(name, v);
        if (key == "cells_2d") cfg.verify_cells_2d = to_int(name, v);
        if (key == "T") cfg.verify_T = to_double(name, v);
        if (key == "eps") cfg.verify_eps = to_double(name, v);
      } else if (section == "converge") {
        if (key == "eps_list") cfg.eps_list = to_doubles(name, v);
        if (key == "cells_list") cfg.cells_list = to_ints(name, v);
      } else if (section == "oracle") {
        cfg.oracle_dt = to_double(name, v);
      }
    }
  }
  if (cfg.dimension != 1 && cfg.dimension != 2) throw ConfigError("mesh.dimension must be 1 or 2");
  if (!(cfg.lambda > 0.0)) throw ConfigError("equation.lambda must be positive");
  if (!(cfg.eps > 0.0) || !(cfg.T >= cfg.eps)) throw ConfigError("time: need 0 < eps <= T");
  if (!(cfg.tolerance > 0.0)) throw ConfigError("solver.tolerance must be positive");
  if (cfg.max_iterations < 1 || cfg.check_every < 1) throw ConfigError("solver: iteration counts must be positive");
  if (cfg.snapshot_every < 0) throw ConfigError("output.snapshot_every must be nonnegative");
  if (cfg.instances < 0) throw ConfigError("verify.instances must be nonnegative");
  if (cfg.oracle_dt < 0.0) throw ConfigError("oracle.dt must be nonnegative");
  cfg.mesh();  // validates mesh keys
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::optional<double> constant_value(const std::string& spec) {
  const auto tok = tokens(spec);
  if (tok.size() == 2 && tok[0] == "constant") return to_double(spec, tok[1]);
  return std::nullopt;
}

Forcing make_forcing(const std::string& spec, const Mesh& mesh, const std::filesystem::path& base_dir) {
  const auto tok = tokens(spec);
  if (tok.empty()) throw ConfigError("empty data descriptor");
  const std::string& kind = tok[0];
  if (kind == "constant") return Forcing::constant(params(tok, 1, 1, spec)[0]);
  if (kind == "random") {
    const auto p = params(tok, 1, 2, spec);
    std::mt19937_64 rng(static_cast<std::uint64_t>(p[0]));
    std::uniform_real_distribution<double> uni(-p[1], p[1]);
    BoundaryField f = mesh.boundary();
    for (double& v : f.values) v = uni(rng);
    return Forcing::field(std::move(f));
  }
  if (kind == "table") {
    if (tok.size() != 2) throw ConfigError("'" + spec + "': expected table PATH");
    std::filesystem::path path = tok[1];
    if (path.is_relative()) path = base_dir / path;
    std::vector<std::vector<double>> rows;
    try {
      rows = read_numeric_csv(path);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    std::vector<double> breaks;
    std::vector<std::vector<double>> values;
    for (const auto& r : rows) {
      if (r.size() != 2 && r.size() != mesh.site_count() + 1) {
        throw ConfigError(path.string() + ": rows need t and one value or one value per boundary site");
      }
      breaks.push_back(r[0]);
      values.emplace_back(r.begin() + 1, r.end());
    }
    try {
      return Forcing::table(std::move(breaks), std::move(values));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  if (kind == "formula") {
    if (tok.size() < 2) throw ConfigError("'" + spec + "': expected formula NAME ARGS...");
    const std::string& name = tok[1];
    const double lx = mesh.length(0);
    const double ly = mesh.length(1);
    const double pi = std::acos(-1.0);
    if (name == "linear") {
      const auto p = params(tok, 2, 3, spec);
      return Forcing(
          [=](double, std::size_t, const BoundarySite& s) {
            return p[0] + p[1] * s.position[0] / lx + p[2] * s.position[1] / ly;
          },
          true);
    }
    if (name == "cosine") {
      const auto p = params(tok, 2, 2, spec);
      return Forcing([=](double, std::size_t, const BoundarySite& s) { return p[0] * std::cos(p[1] * pi * s.position[0] / lx); },
                     true);
    }
    if (name == "pulse") {
      const auto p = params(tok, 2, 3, spec);
      return Forcing([=](double t, std::size_t, const BoundarySite&) { return t >= p[1] && t < p[2] ? p[0] : 0.0; });
    }
    if (name == "sine") {
      const auto p = params(tok, 2, 2, spec);
      return Forcing([=](double t, std::size_t, const BoundarySite&) { return p[0] * std::sin(p[1] * t); });
    }
    if (name == "ramp") {
      const auto p = params(tok, 2, 2, spec);
      return Forcing([=](double t, std::size_t, const BoundarySite&) { return p[0] + p[1] * t; });
    }
    if (name == "wave") {
      const auto p = params(tok, 2, 3, spec);
      return Forcing([=](double t, std::size_t, const BoundarySite& s) {
        return p[0] * std::cos(p[1] * pi * s.position[0] / lx) * std::sin(p[2] * t);
      });
    }
    throw ConfigError("unknown formula '" + name + "' (linear | cosine | pulse | sine | ramp | wave)");
  }
  throw ConfigError("unknown data descriptor '" + spec + "' (constant | random | table | formula)");
}

BoundaryField make_boundary_field(const std::string& spec, const Mesh& mesh) {
  const auto tok = tokens(spec);
  if (!tok.empty() && tok[0] == "table") throw ConfigError("omega0 cannot be a table");
  return make_forcing(spec, mesh, ".").at(mesh, 0.0);
}

}  // namespace tvdyn
