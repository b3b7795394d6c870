#include <cmath>
#include <random>

#include "doctest.h"
#include "random_fields.hpp"
#include "tvdyn/oracle.hpp"
#include "tvdyn/stepper.hpp"

using namespace tvdyn;

namespace {

Forcing linear_in_time() {
  return Forcing([](double t, std::size_t, const BoundarySite&) { return t; });
}

}  // namespace

TEST_CASE("time grid") {
  const TimeGrid g = make_time_grid(1.0, 0.1);
  CHECK(g.n_steps == 10);
  CHECK(g.time(10) == doctest::Approx(1.0));
  CHECK(make_time_grid(1.0, 0.3).n_steps == 4);
  CHECK(make_time_grid(2.0, 1e-3).n_steps == 2000);
  CHECK_THROWS(make_time_grid(1.0, 0.0));
  CHECK_THROWS(make_time_grid(0.05, 0.1));
  CHECK(parse_sample_mode("cell_average") == SampleMode::cell_average);
  CHECK_THROWS(parse_sample_mode("left"));
}

TEST_CASE("forcing samples") {
  const Mesh m = build_interval(1.0, 4);
  TimeGrid g = make_time_grid(1.0, 0.1);
  CHECK(sample_forcing(m, linear_in_time(), g, 1).values[0] == doctest::Approx(0.1));
  CHECK(sample_forcing(m, Forcing::constant(2.5), g, 3).values[1] == 2.5);
  g.sample_mode = SampleMode::cell_average;
  CHECK(sample_forcing(m, linear_in_time(), g, 1).values[0] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(sample_forcing(m, Forcing::constant(2.5), g, 3).values[1] == 2.5);
  CHECK_THROWS(sample_forcing(m, linear_in_time(), g, 0));
  CHECK_THROWS(sample_forcing(m, linear_in_time(), g, 11));

  const Forcing tab = Forcing::table({0.0, 0.5}, {{1.0}, {2.0, 3.0}});
  CHECK(tab.at(m, 0.2).values == std::vector<double>{1.0, 1.0});
  CHECK(tab.at(m, 0.5).values == std::vector<double>{2.0, 3.0});
  CHECK(tab.at(m, 9.0).values == std::vector<double>{2.0, 3.0});
  CHECK_THROWS(Forcing::table({0.5, 0.0}, {{1.0}, {2.0}}));
  CHECK_THROWS(Forcing::table({0.0}, {{1.0}, {2.0}}));
}

TEST_CASE("zero data stays at rest") {
  const Mesh m = build_rectangle(1.0, 1.0, 4, 4);
  const Trajectory tr = evolve(m, 1.0, make_time_grid(0.5, 0.1), Forcing::constant(0.0), m.boundary());
  REQUIRE(tr.steps.size() == 5);
  for (const auto& s : tr.steps) {
    for (double v : s.omega.values) CHECK(v == 0.0);
    for (double v : s.u.values) CHECK(v == 0.0);
  }
}

TEST_CASE("attached decay follows exp(-t/2)") {
  const Mesh m = build_interval(1.0, 16);
  const Trajectory tr = evolve(m, 1.0, make_time_grid(1.0, 1e-3), Forcing::constant(0.0), m.boundary(1.0));
  REQUIRE(tr.all_converged());
  double worst = 0.0;
  for (const auto& s : tr.steps) worst = std::max(worst, std::abs(s.omega.values[0] - std::exp(-s.t / 2)));
  CHECK(worst <= 2e-3);
  CHECK(tr.steps.back().omega.values[1] == doctest::Approx(0.606531).epsilon(2e-3));
}

TEST_CASE("detached start saturates then decays") {
  const Mesh m = build_interval(1.0, 16);
  const double eps = 1e-3;
  const Trajectory tr = evolve(m, 1.0, make_time_grid(2.0, eps), Forcing::constant(0.0), m.boundary(3.0));
  REQUIRE(tr.all_converged());
  // unit-rate descent with u pinned at 2 while detached
  const StepRecord& early = tr.steps[499];
  CHECK(early.omega.values[0] == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(early.zeta.values[0] == 1.0);
  for (double u : early.u.values) CHECK(u == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(tr.steps.back().omega.values[0] == doctest::Approx(1.213061).epsilon(3e-3));
  // first attached step
  int first = -1;
  for (std::size_t i = 0; i < tr.steps.size() && first < 0; ++i) {
    if (tr.steps[i].zeta.values[0] < 1.0) first = static_cast<int>(i) + 1;
  }
  CHECK(std::abs(first * eps - 1.0) <= 2 * eps);
}

TEST_CASE("per-step identities on a forced 2D run") {
  std::mt19937_64 rng(6);
  const Mesh m = build_rectangle(1.0, 1.0, 6, 6);
  const Forcing g([](double t, std::size_t site, const BoundarySite& s) {
    return std::sin(3 * t + static_cast<double>(site)) + s.position[0];
  });
  const TimeGrid grid = make_time_grid(0.3, 0.05);
  const Trajectory tr = evolve(m, 1.0, grid, g, tvdyn::testing::random_boundary(m, rng, 2.0));
  REQUIRE(tr.all_converged());
  for (int i = 1; i <= grid.n_steps; ++i) {
    const StepRecord& s = tr.steps[static_cast<std::size_t>(i - 1)];
    const BoundaryField& prev = tr.omega_at(i - 1);
    for (std::size_t b = 0; b < m.site_count(); ++b) {
      const double rate = (s.omega.values[b] - prev.values[b]) / grid.eps;
      CHECK(rate + s.zeta.values[b] == doctest::Approx(s.g.values[b]).epsilon(1e-12));
      CHECK(std::abs(rate - s.g.values[b]) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("strict mode reports the failing step") {
  const Mesh m = build_rectangle(1.0, 1.0, 6, 6);
  EvolveOptions o;
  o.solver.max_iterations = 5;
  o.solver.check_every = 5;
  try {
    evolve(m, 1.0, make_time_grid(0.3, 0.1), Forcing::constant(1.0), m.boundary(0.5), o);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.step() == 1);
  }
  o.strict = false;
  const Trajectory tr = evolve(m, 1.0, make_time_grid(0.3, 0.1), Forcing::constant(1.0), m.boundary(0.5), o);
  CHECK(tr.first_unconverged_step() == 1);
}

TEST_CASE("interpolation in time") {
  const Mesh m = build_interval(1.0, 8);
  const Trajectory tr = evolve(m, 1.0, make_time_grid(0.2, 0.1), Forcing::constant(0.0), m.boundary(1.0));
  const BoundaryField mid = interpolate_omega(tr, 0.05);
  CHECK(mid.values[0] == doctest::Approx(0.5 * (1.0 + tr.steps[0].omega.values[0])));
  CHECK(interpolate_omega(tr, 0.2).values[1] == tr.steps[1].omega.values[1]);
}

TEST_CASE("refinement study") {
  const Mesh m = build_interval(1.0, 8);
  SUBCASE("zero data") {
    const RefineCase rc{m, 1.0, 0.5, Forcing::constant(0.0), m.boundary(), SampleMode::right_endpoint, {}, {}};
    const RefineTable t = refine_study(rc, {0.1, 0.05, 0.025});
    CHECK_FALSE(t.against_reference);
    for (const auto& r : t.rows) CHECK(r.error == 0.0);
  }
  SUBCASE("attached case is first order") {
    RadialOracleSpec spec;
    spec.omega0 = 1.0;
    spec.dt = 1e-4;
    const OracleTrajectory ref = radial_ode(spec);
    const RefineCase rc{m, 1.0, 1.0, Forcing::constant(0.0), m.boundary(1.0), SampleMode::right_endpoint, {},
                        [&](double t) { return m.boundary(ref.omega_at(t)); }};
    const RefineTable t = refine_study(rc, {4e-3, 2e-3, 1e-3});
    REQUIRE(t.against_reference);
    REQUIRE(t.rows.size() == 3);
    for (std::size_t k = 1; k < 3; ++k) {
      CHECK(t.rows[k].order >= 0.7);
      CHECK(t.rows[k].order <= 1.3);
    }
  }
  SUBCASE("successive differences halve") {
    const RefineCase rc{m, 1.0, 1.0, Forcing::constant(0.3), m.boundary(1.5), SampleMode::right_endpoint, {}, {}};
    const RefineTable t = refine_study(rc, {0.04, 0.02, 0.01, 0.005});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[2].order == doctest::Approx(1.0).epsilon(0.3));
  }
  SUBCASE("bad lists") {
    const RefineCase rc{m, 1.0, 1.0, Forcing::constant(0.0), m.boundary(), SampleMode::right_endpoint, {}, {}};
    CHECK_THROWS(refine_study(rc, {0.1, 0.05}));
    CHECK_THROWS(refine_study(rc, {0.1, 0.1, 0.05}));
  }
}
