#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "random_fields.hpp"
#include "tvdyn/mesh.hpp"

using namespace tvdyn;
using tvdyn::testing::random_bulk;
using tvdyn::testing::random_dual;

TEST_CASE("interval construction") {
  const Mesh m = build_interval(1.0, 4);
  CHECK(m.spacing(0) == doctest::Approx(0.25));
  REQUIRE(m.site_count() == 2);
  CHECK(m.boundary_sites()[0].weight == 1.0);
  CHECK(m.boundary_sites()[1].weight == 1.0);
  CHECK(m.boundary_sites()[0].normal[0] == -1.0);
  CHECK(m.boundary_sites()[1].normal[0] == 1.0);
  CHECK(m.perimeter() == 2.0);

  const Mesh m2 = build_interval(2.0, 8);
  CHECK(m2.spacing(0) == doctest::Approx(0.25));
  CHECK(m2.boundary_sites()[0].cell == 0);
  CHECK(m2.boundary_sites()[1].cell == 7);
}

TEST_CASE("unit square construction and site order") {
  const Mesh m = build_rectangle(1.0, 1.0, 4, 4);
  CHECK(m.spacing(0) == doctest::Approx(0.25));
  REQUIRE(m.site_count() == 16);
  for (const auto& s : m.boundary_sites()) CHECK(s.weight == doctest::Approx(0.25));
  CHECK(m.perimeter() == doctest::Approx(4.0));

  const auto& s = m.boundary_sites();
  for (int j = 0; j < 4; ++j) {
    CHECK(s[j].cell == m.index(0, j));  // west, south to north
    CHECK(s[j].normal == std::array<double, 2>{-1.0, 0.0});
    CHECK(s[4 + j].cell == m.index(3, j));  // east
    CHECK(s[8 + j].cell == m.index(j, 0));  // south, west to east
    CHECK(s[8 + j].normal == std::array<double, 2>{0.0, -1.0});
    CHECK(s[12 + j].cell == m.index(j, 3));  // north
  }
  // Corner cell (0,0) owns a west and a south site.
  CHECK(m.sites_of_cell(m.index(0, 0)).size() == 2);
  CHECK(m.sites_of_cell(m.index(1, 1)).empty());
}

TEST_CASE("invalid meshes are rejected") {
  const double len[] = {1.0, 1.0};
  const int cells[] = {4, 4};
  const int one[] = {1};
  const double bad_len[] = {-1.0};
  CHECK_THROWS_AS(build_mesh(3, len, cells), MeshError);
  CHECK_THROWS_AS(build_mesh(0, len, cells), MeshError);
  CHECK_THROWS_AS(build_mesh(1, len, one), MeshError);
  CHECK_THROWS_AS(build_mesh(1, bad_len, cells), MeshError);
  CHECK_THROWS_AS(build_mesh(2, std::span<const double>(len, 1), cells), MeshError);
}

TEST_CASE("gradient of constant and linear fields") {
  const Mesh m = build_interval(1.0, 4);
  for (double v : gradient(m, m.bulk(3.0)).values) CHECK(v == 0.0);

  BulkField x = m.bulk();
  for (std::size_t c = 0; c < 4; ++c) x.values[c] = m.center(c)[0];
  const DualField g = gradient(m, x);
  CHECK(g.values[0] == doctest::Approx(1.0));
  CHECK(g.values[1] == doctest::Approx(1.0));
  CHECK(g.values[2] == doctest::Approx(1.0));
  CHECK(g.values[3] == 0.0);
}

TEST_CASE("divergence of constant field telescopes to the ends") {
  const Mesh m = build_interval(1.0, 4);
  for (double v : divergence(m, m.dual()).values) CHECK(v == 0.0);
  // Zero extension: the last face carries no flux, so both end cells are hit.
  const BulkField d = divergence(m, m.dual(2.0));
  CHECK(d.values[0] == doctest::Approx(2.0 / 0.25));
  CHECK(d.values[1] == doctest::Approx(0.0));
  CHECK(d.values[2] == doctest::Approx(0.0));
  CHECK(d.values[3] == doctest::Approx(-2.0 / 0.25));
}

TEST_CASE("gradient and divergence against naive loops") {
  std::mt19937_64 rng(11);
  const Mesh m = build_rectangle(1.5, 0.75, 5, 3);
  const BulkField u = random_bulk(m, rng);
  const DualField z = random_dual(m, rng);
  const double hx = m.spacing(0), hy = m.spacing(1);
  const DualField g = gradient(m, u);
  const BulkField d = divergence(m, z);
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 5; ++i) {
      const std::size_t c = m.index(i, j);
      const double gx = i + 1 < 5 ? (u.values[m.index(i + 1, j)] - u.values[c]) / hx : 0.0;
      const double gy = j + 1 < 3 ? (u.values[m.index(i, j + 1)] - u.values[c]) / hy : 0.0;
      CHECK(g.values[2 * c] == doctest::Approx(gx).epsilon(1e-14));
      CHECK(g.values[2 * c + 1] == doctest::Approx(gy).epsilon(1e-14));
      // -grad^T: incoming face minus outgoing face
      double dx = (i + 1 < 5 ? -z.values[2 * c] : 0.0) + (i > 0 ? z.values[2 * m.index(i - 1, j)] : 0.0);
      double dy = (j + 1 < 3 ? -z.values[2 * c + 1] : 0.0) + (j > 0 ? z.values[2 * m.index(i, j - 1) + 1] : 0.0);
      CHECK(d.values[c] == doctest::Approx(-(dx / hx + dy / hy)).epsilon(1e-13));
    }
  }
}

TEST_CASE("discrete Green identity") {
  std::mt19937_64 rng(5);
  for (const Mesh& m : {build_interval(1.0, 64), build_rectangle(1.0, 2.0, 9, 7)}) {
    for (int trial = 0; trial < 50; ++trial) {
      const BulkField u = random_bulk(m, rng);
      const DualField z = random_dual(m, rng);
      const double a = inner_bulk(m, divergence(m, z), u);
      const double b = inner_dual(m, z, gradient(m, u));
      const double scale = std::sqrt(inner_bulk(m, u, u) * inner_dual(m, z, z) * m.gradient_norm_bound_sq());
      CHECK(std::abs(a + b) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("integrals") {
  const Mesh sq = build_rectangle(1.0, 1.0, 8, 8);
  CHECK(integrate_boundary(sq, sq.boundary(1.0), 1) == doctest::Approx(4.0));
  const Mesh line = build_interval(2.0, 10);
  CHECK(integrate_bulk(line, line.bulk(-3.0), 2) == doctest::Approx(3.0 * std::sqrt(2.0)));
  CHECK(sum_bulk(line, line.bulk(-3.0)) == doctest::Approx(-6.0));
  CHECK_THROWS(integrate_bulk(line, line.bulk(), 3));

  std::mt19937_64 rng(3);
  const BulkField f = random_bulk(sq, rng);
  const BoundaryField b = tvdyn::testing::random_boundary(sq, rng);
  double l1 = 0.0, l2 = 0.0, bl1 = 0.0, bl2 = 0.0;
  for (double v : f.values) {
    l1 += std::abs(v) / 64.0;
    l2 += v * v / 64.0;
  }
  for (double v : b.values) {
    bl1 += std::abs(v) / 8.0;
    bl2 += v * v / 8.0;
  }
  CHECK(integrate_bulk(sq, f, 1) == doctest::Approx(l1).epsilon(1e-14));
  CHECK(integrate_bulk(sq, f, 2) == doctest::Approx(std::sqrt(l2)).epsilon(1e-14));
  CHECK(integrate_boundary(sq, b, 1) == doctest::Approx(bl1).epsilon(1e-14));
  CHECK(integrate_boundary(sq, b, 2) == doctest::Approx(std::sqrt(bl2)).epsilon(1e-14));
}

TEST_CASE("total variation") {
  const Mesh m = build_interval(1.0, 4);
  CHECK(total_variation(m, m.bulk(7.0)) == 0.0);
  CHECK(total_variation(m, BulkField{{0, 0, 1, 1}}) == doctest::Approx(1.0));
  CHECK(bv_norm(m, BulkField{{0, 0, 1, 1}}) == doctest::Approx(2.0));

  std::mt19937_64 rng(8);
  const Mesh sq = build_rectangle(1.0, 1.0, 6, 5);
  const double h2 = sq.cell_volume();
  for (int trial = 0; trial < 10; ++trial) {
    const BulkField u = random_bulk(sq, rng);
    const BulkField v = random_bulk(sq, rng);
    double naive = 0.0;
    for (int j = 0; j < 5; ++j) {
      for (int i = 0; i < 6; ++i) {
        const double c = u.values[sq.index(i, j)];
        const double gx = i < 5 ? (u.values[sq.index(i + 1, j)] - c) / sq.spacing(0) : 0.0;
        const double gy = j < 4 ? (u.values[sq.index(i, j + 1)] - c) / sq.spacing(1) : 0.0;
        naive += h2 * std::hypot(gx, gy);
      }
    }
    const double tv = total_variation(sq, u);
    CHECK(tv == doctest::Approx(naive).epsilon(1e-13));

    BulkField scaled = u, mid = u, shifted = u;
    for (std::size_t c = 0; c < u.values.size(); ++c) {
      scaled.values[c] *= -2.5;
      mid.values[c] = 0.5 * (u.values[c] + v.values[c]);
      shifted.values[c] += 4.0;
    }
    CHECK(total_variation(sq, scaled) == doctest::Approx(2.5 * tv).epsilon(1e-13));
    CHECK(total_variation(sq, shifted) == doctest::Approx(tv).epsilon(1e-12));
    CHECK(total_variation(sq, mid) <= 0.5 * (tv + total_variation(sq, v)) + 1e-13);
    CHECK(tv > 0.0);
  }
}

TEST_CASE("anisotropic total variation") {
  CHECK(parse_tv_norm("anisotropic") == TvNorm::anisotropic);
  CHECK(parse_tv_norm("isotropic") == TvNorm::isotropic);
  CHECK_THROWS_AS(parse_tv_norm("l3"), MeshError);
  CHECK(std::string(to_string(TvNorm::anisotropic)) == "anisotropic");

  const Mesh iso = build_rectangle(1.0, 1.0, 6, 5);
  const Mesh aniso = build_rectangle(1.0, 1.0, 6, 5, TvNorm::anisotropic);
  CHECK_FALSE(iso == aniso);
  CHECK(aniso.dual().norm == TvNorm::anisotropic);

  // u = x + y: interior cells carry |(1, 1)|_1 = 2 versus sqrt(2).
  BulkField plane = aniso.bulk();
  for (std::size_t c = 0; c < aniso.cell_count(); ++c) plane.values[c] = aniso.center(c)[0] + aniso.center(c)[1];
  const double interior = 5 * 4 * aniso.cell_volume();
  const double edges = (4 + 5) * aniso.cell_volume();  // one component zeroed
  CHECK(total_variation(aniso, plane) == doctest::Approx(2.0 * interior + edges).epsilon(1e-13));
  CHECK(total_variation(iso, plane) == doctest::Approx(std::sqrt(2.0) * interior + edges).epsilon(1e-13));

  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 10; ++trial) {
    const BulkField u = random_bulk(aniso, rng);
    double naive = 0.0;
    for (int j = 0; j < 5; ++j) {
      for (int i = 0; i < 6; ++i) {
        const double c = u.values[aniso.index(i, j)];
        const double gx = i < 5 ? (u.values[aniso.index(i + 1, j)] - c) / aniso.spacing(0) : 0.0;
        const double gy = j < 4 ? (u.values[aniso.index(i, j + 1)] - c) / aniso.spacing(1) : 0.0;
        naive += aniso.cell_volume() * (std::abs(gx) + std::abs(gy));
      }
    }
    CHECK(total_variation(aniso, u) == doctest::Approx(naive).epsilon(1e-13));
    // |p|_2 <= |p|_1 <= sqrt(2) |p|_2
    CHECK(total_variation(iso, u) <= naive + 1e-12);
    CHECK(naive <= std::sqrt(2.0) * total_variation(iso, u) + 1e-12);
  }

  // The discrete TV is unchanged in 1D.
  const Mesh line = build_interval(1.0, 4);
  CHECK(line.tv_norm() == TvNorm::isotropic);
  CHECK(total_variation(line, BulkField{{0, 2, 1, 1}}) == doctest::Approx(3.0));
}

TEST_CASE("dual norms and projection") {
  DualField z{2, {0.6, -0.8, 1.5, 0.5, -3.0, -4.0}, TvNorm::isotropic};
  CHECK(z.dual_norm_at(0) == doctest::Approx(1.0));
  CHECK(z.norm_at(2) == doctest::Approx(5.0));
  DualField box = z;
  box.norm = TvNorm::anisotropic;
  CHECK(box.dual_norm_at(1) == 1.5);
  CHECK(box.norm_at(1) == 2.0);

  z.project_at(2);
  CHECK(z.values[4] == doctest::Approx(-0.6));
  CHECK(z.values[5] == doctest::Approx(-0.8));
  box.project_at(1);
  box.project_at(2);
  CHECK(box.values[2] == 1.0);
  CHECK(box.values[3] == 0.5);
  CHECK(box.values[4] == -1.0);
  CHECK(box.values[5] == -1.0);
}

TEST_CASE("trace") {
  const Mesh m = build_interval(1.0, 4);
  const BoundaryField t = trace(m, BulkField{{1, 2, 3, 4}});
  CHECK(t.values == std::vector<double>{1, 4});
  for (double v : trace(m, m.bulk(2.5)).values) CHECK(v == 2.5);

  const Mesh sq = build_rectangle(1.0, 1.0, 4, 3);
  BulkField x = sq.bulk();
  for (std::size_t c = 0; c < sq.cell_count(); ++c) x.values[c] = 3.0 * sq.center(c)[0] + 1.0;
  const BoundaryField tr = trace(sq, x);
  for (int j = 0; j < 3; ++j) CHECK(tr.values[j] == x.values[sq.index(0, j)]);
}

TEST_CASE("shape mismatches throw") {
  const Mesh m = build_interval(1.0, 4);
  CHECK_THROWS_AS(gradient(m, BulkField{{1, 2}}), MeshError);
  CHECK_THROWS_AS(trace(m, BulkField{{1, 2, 3}}), MeshError);
  CHECK_THROWS_AS(integrate_boundary(m, BoundaryField{{1, 2, 3}}, 1), MeshError);
}
