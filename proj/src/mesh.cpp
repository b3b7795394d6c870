#include "tvdyn/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvdyn {

double DualField::norm_at(std::size_t cell) const {
  const std::size_t base = cell * static_cast<std::size_t>(dim);
  if (dim == 1) return std::abs(values[base]);
  if (norm == TvNorm::anisotropic) return std::abs(values[base]) + std::abs(values[base + 1]);
  return std::hypot(values[base], values[base + 1]);
}

double DualField::dual_norm_at(std::size_t cell) const {
  const std::size_t base = cell * static_cast<std::size_t>(dim);
  if (dim == 1) return std::abs(values[base]);
  if (norm == TvNorm::anisotropic) return std::max(std::abs(values[base]), std::abs(values[base + 1]));
  return std::hypot(values[base], values[base + 1]);
}

void DualField::project_at(std::size_t cell) {
  const std::size_t base = cell * static_cast<std::size_t>(dim);
  if (dim == 1 || norm == TvNorm::anisotropic) {
    for (int k = 0; k < dim; ++k) values[base + k] = std::clamp(values[base + k], -1.0, 1.0);
    return;
  }
  const double n = std::hypot(values[base], values[base + 1]);
  if (n > 1.0) {
    values[base] /= n;
    values[base + 1] /= n;
  }
}

const char* to_string(TvNorm tv) { return tv == TvNorm::anisotropic ? "anisotropic" : "isotropic"; }

TvNorm parse_tv_norm(const std::string& name) {
  if (name == "isotropic") return TvNorm::isotropic;
  if (name == "anisotropic") return TvNorm::anisotropic;
  throw MeshError("unknown TV norm '" + name + "' (expected isotropic or anisotropic)");
}

Mesh::Mesh(int dim, std::span<const double> lengths, std::span<const int> cells_per_axis, TvNorm tv)
    : dim_(dim), tv_(tv) {
  if (dim != 1 && dim != 2) throw MeshError("mesh dimension must be 1 or 2, got " + std::to_string(dim));
  if (lengths.size() < static_cast<std::size_t>(dim) || cells_per_axis.size() < static_cast<std::size_t>(dim)) {
    throw MeshError("mesh needs one length and one cell count per axis");
  }
  for (int k = 0; k < dim; ++k) {
    if (!(lengths[k] > 0.0) || !std::isfinite(lengths[k])) throw MeshError("mesh lengths must be positive");
    if (cells_per_axis[k] < 2) throw MeshError("mesh needs at least 2 cells per axis");
    lengths_[k] = lengths[k];
    cells_[k] = cells_per_axis[k];
    h_[k] = lengths[k] / cells_per_axis[k];
  }
  if (dim == 1) {
    lengths_[1] = 1.0;
    cells_[1] = 1;
    h_[1] = 1.0;
  }
  n_cells_ = static_cast<std::size_t>(cells_[0]) * static_cast<std::size_t>(cells_[1]);
  volume_ = dim == 1 ? h_[0] : h_[0] * h_[1];

  if (dim == 1) {
    sites_.push_back({index(0), {-1.0, 0.0}, 1.0, {0.0, 0.0}});
    sites_.push_back({index(cells_[0] - 1), {1.0, 0.0}, 1.0, {lengths_[0], 0.0}});
  } else {
    const int nx = cells_[0], ny = cells_[1];
    for (int j = 0; j < ny; ++j) sites_.push_back({index(0, j), {-1.0, 0.0}, h_[1], {0.0, (j + 0.5) * h_[1]}});
    for (int j = 0; j < ny; ++j)
      sites_.push_back({index(nx - 1, j), {1.0, 0.0}, h_[1], {lengths_[0], (j + 0.5) * h_[1]}});
    for (int i = 0; i < nx; ++i) sites_.push_back({index(i, 0), {0.0, -1.0}, h_[0], {(i + 0.5) * h_[0], 0.0}});
    for (int i = 0; i < nx; ++i)
      sites_.push_back({index(i, ny - 1), {0.0, 1.0}, h_[0], {(i + 0.5) * h_[0], lengths_[1]}});
  }

  std::vector<std::size_t> counts(n_cells_ + 1, 0);
  for (const auto& s : sites_) ++counts[s.cell + 1];
  for (std::size_t c = 0; c < n_cells_; ++c) counts[c + 1] += counts[c];
  cell_site_offsets_ = counts;
  cell_site_list_.assign(sites_.size(), 0);
  std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t b = 0; b < sites_.size(); ++b) cell_site_list_[fill[sites_[b].cell]++] = b;
}

double Mesh::measure() const { return dim_ == 1 ? lengths_[0] : lengths_[0] * lengths_[1]; }

std::array<double, 2> Mesh::center(std::size_t cell) const {
  const auto nx = static_cast<std::size_t>(cells_[0]);
  const double i = static_cast<double>(cell % nx);
  const double j = static_cast<double>(cell / nx);
  return {(i + 0.5) * h_[0], dim_ == 1 ? 0.0 : (j + 0.5) * h_[1]};
}

double Mesh::perimeter() const {
  double total = 0.0;
  for (const auto& s : sites_) total += s.weight;
  return total;
}

std::span<const std::size_t> Mesh::sites_of_cell(std::size_t cell) const {
  const std::size_t begin = cell_site_offsets_[cell];
  const std::size_t end = cell_site_offsets_[cell + 1];
  return {cell_site_list_.data() + begin, end - begin};
}

double Mesh::gradient_norm_bound_sq() const {
  double total = 0.0;
  for (int k = 0; k < dim_; ++k) total += 4.0 / (h_[k] * h_[k]);
  return total;
}

bool Mesh::operator==(const Mesh& other) const {
  return dim_ == other.dim_ && tv_ == other.tv_ && lengths_ == other.lengths_ && cells_ == other.cells_;
}

Mesh build_mesh(int dim, std::span<const double> lengths, std::span<const int> cells_per_axis, TvNorm tv) {
  return Mesh(dim, lengths, cells_per_axis, tv);
}

Mesh build_interval(double length, int cells) {
  const double l[] = {length};
  const int n[] = {cells};
  return Mesh(1, l, n);
}

Mesh build_rectangle(double lx, double ly, int nx, int ny, TvNorm tv) {
  const double l[] = {lx, ly};
  const int n[] = {nx, ny};
  return Mesh(2, l, n, tv);
}

void check_shape(const Mesh& mesh, const BulkField& f) {
  if (f.values.size() != mesh.cell_count()) throw MeshError("bulk field size does not match mesh");
}
void check_shape(const Mesh& mesh, const BoundaryField& f) {
  if (f.values.size() != mesh.site_count()) throw MeshError("boundary field size does not match mesh");
}
void check_shape(const Mesh& mesh, const DualField& f) {
  if (f.dim != mesh.dim() || f.values.size() != mesh.cell_count() * static_cast<std::size_t>(mesh.dim())) {
    throw MeshError("dual field shape does not match mesh");
  }
}

DualField gradient(const Mesh& mesh, const BulkField& u) {
  check_shape(mesh, u);
  DualField g = mesh.dual();
  const int nx = mesh.cells_along(0);
  const int ny = mesh.cells_along(1);
  const int dim = mesh.dim();
  const double ihx = 1.0 / mesh.spacing(0);
  const double ihy = 1.0 / mesh.spacing(1);
  const auto& v = u.values;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = mesh.index(i, j);
      double* out = &g.values[c * dim];
      out[0] = i + 1 < nx ? (v[c + 1] - v[c]) * ihx : 0.0;
      if (dim == 2) out[1] = j + 1 < ny ? (v[c + nx] - v[c]) * ihy : 0.0;
    }
  }
  return g;
}

BulkField divergence(const Mesh& mesh, const DualField& z) {
  check_shape(mesh, z);
  BulkField d = mesh.bulk();
  const int nx = mesh.cells_along(0);
  const int ny = mesh.cells_along(1);
  const int dim = mesh.dim();
  const double ihx = 1.0 / mesh.spacing(0);
  const double ihy = 1.0 / mesh.spacing(1);
  const auto& zv = z.values;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = mesh.index(i, j);
      // Only components that gradient() can produce enter the adjoint.
      const double own_x = i + 1 < nx ? zv[c * dim] : 0.0;
      const double back_x = i > 0 ? zv[(c - 1) * dim] : 0.0;
      double acc = (own_x - back_x) * ihx;
      if (dim == 2) {
        const double own_y = j + 1 < ny ? zv[c * dim + 1] : 0.0;
        const double back_y = j > 0 ? zv[(c - nx) * dim + 1] : 0.0;
        acc += (own_y - back_y) * ihy;
      }
      d.values[c] = acc;
    }
  }
  return d;
}

double inner_bulk(const Mesh& mesh, const BulkField& a, const BulkField& b) {
  check_shape(mesh, a);
  check_shape(mesh, b);
  double s = 0.0;
  for (std::size_t c = 0; c < a.values.size(); ++c) s += a.values[c] * b.values[c];
  return s * mesh.cell_volume();
}

double inner_dual(const Mesh& mesh, const DualField& a, const DualField& b) {
  check_shape(mesh, a);
  check_shape(mesh, b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) s += a.values[k] * b.values[k];
  return s * mesh.cell_volume();
}

double inner_boundary(const Mesh& mesh, const BoundaryField& a, const BoundaryField& b) {
  check_shape(mesh, a);
  check_shape(mesh, b);
  const auto& sites = mesh.boundary_sites();
  double s = 0.0;
  for (std::size_t k = 0; k < sites.size(); ++k) s += sites[k].weight * a.values[k] * b.values[k];
  return s;
}

namespace {

void check_power(int p) {
  if (p != 1 && p != 2) throw MeshError("only p = 1 and p = 2 norms are supported, got p = " + std::to_string(p));
}

}  // namespace

double integrate_bulk(const Mesh& mesh, const BulkField& f, int p) {
  check_power(p);
  check_shape(mesh, f);
  double s = 0.0;
  for (double v : f.values) s += p == 1 ? std::abs(v) : v * v;
  s *= mesh.cell_volume();
  return p == 1 ? s : std::sqrt(s);
}

double integrate_boundary(const Mesh& mesh, const BoundaryField& f, int p) {
  check_power(p);
  check_shape(mesh, f);
  const auto& sites = mesh.boundary_sites();
  double s = 0.0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const double v = f.values[k];
    s += sites[k].weight * (p == 1 ? std::abs(v) : v * v);
  }
  return p == 1 ? s : std::sqrt(s);
}

double sum_bulk(const Mesh& mesh, const BulkField& f) {
  check_shape(mesh, f);
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * mesh.cell_volume();
}

double sum_boundary(const Mesh& mesh, const BoundaryField& f) {
  check_shape(mesh, f);
  const auto& sites = mesh.boundary_sites();
  double s = 0.0;
  for (std::size_t k = 0; k < sites.size(); ++k) s += sites[k].weight * f.values[k];
  return s;
}

double total_variation(const Mesh& mesh, const BulkField& u) {
  const DualField g = gradient(mesh, u);
  double s = 0.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) s += g.norm_at(c);
  return s * mesh.cell_volume();
}

double bv_norm(const Mesh& mesh, const BulkField& u) {
  return total_variation(mesh, u) + integrate_boundary(mesh, trace(mesh, u), 1);
}

BoundaryField trace(const Mesh& mesh, const BulkField& u) {
  check_shape(mesh, u);
  BoundaryField t = mesh.boundary();
  const auto& sites = mesh.boundary_sites();
  for (std::size_t b = 0; b < sites.size(); ++b) t.values[b] = u.values[sites[b].cell];
  return t;
}

BulkField lift_boundary(const Mesh& mesh, const BoundaryField& f) {
  check_shape(mesh, f);
  BulkField out = mesh.bulk();
  const auto& sites = mesh.boundary_sites();
  const double inv_vol = 1.0 / mesh.cell_volume();
  for (std::size_t b = 0; b < sites.size(); ++b) out.values[sites[b].cell] += sites[b].weight * f.values[b] * inv_vol;
  return out;
}

}  // namespace tvdyn
