#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvdyn {

// Cell-centered scalar field on the domain.
struct BulkField {
  std::vector<double> values;
};

// One scalar per boundary site.
struct BoundaryField {
  std::vector<double> values;
};

// Pointwise norm of the gradient inside the total variation. Isotropic uses
// |p|_2 (dual ball |z|_2 <= 1); anisotropic uses |p|_1 (dual box |z|_inf <= 1).
// The two agree in 1D. Only the anisotropic variant is submodular in 2D, so
// only it satisfies the discrete comparison principle there.
enum class TvNorm { isotropic, anisotropic };

// One vector of `dim` components per cell, stored interleaved
// (values[cell * dim + axis]), collocated with the forward-difference stencil.
struct DualField {
  int dim = 1;
  std::vector<double> values;
  TvNorm norm = TvNorm::isotropic;

  std::size_t cells() const { return values.size() / static_cast<std::size_t>(dim); }
  // TV integrand at a cell.
  double norm_at(std::size_t cell) const;
  // Norm whose unit ball is the dual constraint set.
  double dual_norm_at(std::size_t cell) const;
  // Projects the vector at a cell onto the dual unit ball.
  void project_at(std::size_t cell);
};

struct BoundarySite {
  std::size_t cell;               // adjacent cell
  std::array<double, 2> normal;   // outward unit axis vector
  double weight;                  // H^{N-1} weight
  std::array<double, 2> position; // point on the boundary
};

class MeshError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Uniform cell-centered grid on an interval (dim 1) or rectangle (dim 2).
//
// Boundary sites are enumerated left then right in 1D, and in 2D as
// west edge (south to north), east edge (south to north), south edge
// (west to east), north edge (west to east). Corner cells therefore own two
// sites. 1D sites carry weight 1 (counting measure), 2D sites the edge length.
class Mesh {
 public:
  Mesh(int dim, std::span<const double> lengths, std::span<const int> cells_per_axis,
       TvNorm tv = TvNorm::isotropic);

  int dim() const { return dim_; }
  TvNorm tv_norm() const { return tv_; }
  double length(int axis) const { return lengths_[axis]; }
  int cells_along(int axis) const { return cells_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  std::size_t cell_count() const { return n_cells_; }
  double cell_volume() const { return volume_; }
  double measure() const;  // |Omega|
  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(cells_[0]) * static_cast<std::size_t>(j);
  }
  std::array<double, 2> center(std::size_t cell) const;

  const std::vector<BoundarySite>& boundary_sites() const { return sites_; }
  std::size_t site_count() const { return sites_.size(); }
  double perimeter() const;  // sum of boundary weights

  // Sites attached to a cell, as indices into boundary_sites(). Empty for interior cells.
  std::span<const std::size_t> sites_of_cell(std::size_t cell) const;

  // Upper bound on ||gradient||^2 in the cell-volume weighted norms: 4 * sum_k 1/h_k^2.
  double gradient_norm_bound_sq() const;

  BulkField bulk(double value = 0.0) const { return {std::vector<double>(n_cells_, value)}; }
  BoundaryField boundary(double value = 0.0) const { return {std::vector<double>(sites_.size(), value)}; }
  DualField dual(double value = 0.0) const {
    return {dim_, std::vector<double>(n_cells_ * static_cast<std::size_t>(dim_), value), tv_};
  }

  bool operator==(const Mesh& other) const;

 private:
  int dim_;
  TvNorm tv_;
  std::array<double, 2> lengths_{1.0, 1.0};
  std::array<int, 2> cells_{1, 1};
  std::array<double, 2> h_{1.0, 1.0};
  std::size_t n_cells_ = 0;
  double volume_ = 0.0;
  std::vector<BoundarySite> sites_;
  std::vector<std::size_t> cell_site_offsets_;  // CSR over cells
  std::vector<std::size_t> cell_site_list_;
};

Mesh build_mesh(int dim, std::span<const double> lengths, std::span<const int> cells_per_axis,
                TvNorm tv = TvNorm::isotropic);
Mesh build_interval(double length, int cells);
Mesh build_rectangle(double lx, double ly, int nx, int ny, TvNorm tv = TvNorm::isotropic);

const char* to_string(TvNorm tv);
TvNorm parse_tv_norm(const std::string& name);  // throws MeshError

// Forward differences with zero extension: the component along an axis is 0
// on cells whose forward neighbour lies outside the domain.
DualField gradient(const Mesh& mesh, const BulkField& u);

// Exact negative adjoint of gradient():
//   <divergence(z), u> + <z, gradient(u)> = 0 for all u, z.
BulkField divergence(const Mesh& mesh, const DualField& z);

// Cell-volume weighted pairings.
double inner_bulk(const Mesh& mesh, const BulkField& a, const BulkField& b);
double inner_dual(const Mesh& mesh, const DualField& a, const DualField& b);
double inner_boundary(const Mesh& mesh, const BoundaryField& a, const BoundaryField& b);

// p-norms (p in {1, 2}) against Lebesgue / boundary measure.
double integrate_bulk(const Mesh& mesh, const BulkField& f, int p);
double integrate_boundary(const Mesh& mesh, const BoundaryField& f, int p);
// Signed integrals.
double sum_bulk(const Mesh& mesh, const BulkField& f);
double sum_boundary(const Mesh& mesh, const BoundaryField& f);

// Total variation of the interior: sum_cells |cell| * |grad u|, in the mesh's TV norm.
double total_variation(const Mesh& mesh, const BulkField& u);
// TV plus the L1 norm of the trace.
double bv_norm(const Mesh& mesh, const BulkField& u);

BoundaryField trace(const Mesh& mesh, const BulkField& u);

// Spreads a boundary flux onto the adjacent cells as a volume density:
// (1/|cell|) * sum_{b at cell} w_b * f_b.
BulkField lift_boundary(const Mesh& mesh, const BoundaryField& f);

void check_shape(const Mesh& mesh, const BulkField& f);
void check_shape(const Mesh& mesh, const BoundaryField& f);
void check_shape(const Mesh& mesh, const DualField& f);

}  // namespace tvdyn
