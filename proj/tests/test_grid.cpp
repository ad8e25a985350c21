#include <set>
#include <stdexcept>

#include "doctest.h"
#include "locrb/grid.hpp"

using namespace locrb;

TEST_CASE("build_grids counts") {
  SUBCASE("8x8 with 32 fine cells") {
    const auto g = build_grids(8, 8, 32);
    CHECK(g.num_subdomains() == 64);
    CHECK(g.num_coarse_nodes() == 81);
    CHECK(g.num_inner_faces() == 112);
    CHECK(g.num_boundary_faces() == 32);
    CHECK(g.dofs_per_subdomain() == 1089);
    CHECK(g.fine_hx() == doctest::Approx(1.0 / 256));
  }
  SUBCASE("single subdomain") {
    const auto g = build_grids(1, 1, 4);
    CHECK(g.num_subdomains() == 1);
    CHECK(g.num_inner_faces() == 0);
    CHECK(g.num_boundary_faces() == 4);
    CHECK(g.dofs_per_subdomain() == 25);
  }
  SUBCASE("2x1") {
    const auto g = build_grids(2, 1, 2);
    CHECK(g.num_subdomains() == 2);
    CHECK(g.num_inner_faces() == 1);
    CHECK(g.num_boundary_faces() == 6);
  }
  SUBCASE("general formula") {
    for (int nx = 1; nx <= 4; ++nx)
      for (int ny = 1; ny <= 4; ++ny) {
        const auto g = build_grids(nx, ny, 3);
        CHECK(g.num_inner_faces() == nx * (ny - 1) + (nx - 1) * ny);
        CHECK(g.num_boundary_faces() == 2 * (nx + ny));
      }
  }
}

TEST_CASE("build_grids rejects zero counts") {
  CHECK_THROWS_AS(build_grids(0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_grids(1, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_grids(1, 1, 0), std::invalid_argument);
}

TEST_CASE("inner face traces match physically") {
  const auto g = build_grids(3, 2, 5);
  for (const auto& f : g.faces()) {
    if (!f.is_inner()) {
      CHECK(f.boundary_side.has_value());
      continue;
    }
    CHECK(f.minus != f.plus);
    REQUIRE(f.minus_trace.size() == f.plus_trace.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < f.minus_trace.size(); ++k) {
      const auto a = g.dof_coordinate(f.minus, f.minus_trace[k]);
      const auto b = g.dof_coordinate(f.plus, f.plus_trace[k]);
      worst = std::max({worst, std::abs(a.x - b.x), std::abs(a.y - b.y)});
    }
    CHECK(worst < 1e-14);
    // The normal points away from T⁻.
    const auto cm = g.subdomain(f.minus).box, cp = g.subdomain(f.plus).box;
    const double dm = f.axis == 0 ? cm.xmin : cm.ymin, dp = f.axis == 0 ? cp.xmin : cp.ymin;
    CHECK((dp - dm) * f.normal_sign > 0.0);
  }
}

TEST_CASE("oversampling domains") {
  const auto g = build_grids(4, 4, 2);
  CHECK(oversampling_domain(g, g.subdomain_at(1, 2)).size() == 9);
  CHECK(oversampling_domain(g, g.subdomain_at(0, 0)).size() == 4);
  CHECK(oversampling_domain(g, g.subdomain_at(3, 3)).size() == 4);
  CHECK(oversampling_domain(g, g.subdomain_at(0, 2)).size() == 6);
  CHECK(oversampling_domain(g, g.subdomain_at(2, 3)).size() == 6);
  for (int T = 0; T < g.num_subdomains(); ++T) CHECK(oversampling_domain(g, T).contains(T));
  CHECK(oversampling_domain(g, g.subdomain_at(1, 1), 2).size() == 16);
}

TEST_CASE("indicator and estimator domains") {
  const auto g = build_grids(4, 3, 2);
  const int interior = g.coarse_node_index(2, 1);
  const int edge = g.coarse_node_index(2, 0);
  const int corner = g.coarse_node_index(0, 0);
  CHECK(indicator_domain(g, interior).size() == 4);
  CHECK(indicator_domain(g, edge).size() == 2);
  CHECK(indicator_domain(g, corner).size() == 1);
  CHECK(estimator_domain(g, interior).size() == 10);
  CHECK(estimator_domain(g, corner).size() == 3);
  CHECK(estimator_domain(g, edge).size() == 6);

  std::vector<int> appearances(g.num_subdomains(), 0);
  for (int eta = 0; eta < g.num_coarse_nodes(); ++eta) {
    const auto ind = indicator_domain(g, eta);
    const auto est = estimator_domain(g, eta);
    for (int T : ind.subdomains()) {
      CHECK(est.contains(T));
      ++appearances[T];
    }
  }
  for (int c : appearances) CHECK(c == 4);
}

TEST_CASE("patch boundary classification") {
  const auto g = build_grids(3, 3, 2);
  const auto centre = oversampling_domain(g, g.subdomain_at(1, 1));
  CHECK_FALSE(centre.has_artificial_boundary());
  CHECK(centre.internal_faces().size() == 12);
  const auto corner = oversampling_domain(g, g.subdomain_at(0, 0));
  CHECK(corner.has_artificial_boundary());
  int artificial = 0;
  for (const auto& s : corner.boundary_segments()) artificial += s.artificial;
  CHECK(artificial == 4);
  CHECK(corner.trace_size() == static_cast<int>(corner.boundary_segments().size()) * 3);
  CHECK(corner.global_dof(corner.offset(g.subdomain_at(1, 1)) + 2) == g.subdomain_at(1, 1) * 9 + 2);
}

TEST_CASE("coarse hats form a partition of unity") {
  const auto g = build_grids(3, 2, 4);
  for (double x : {0.0, 0.13, 0.5, 0.77, 1.0})
    for (double y : {0.0, 0.21, 0.5, 0.99}) {
      double s = 0.0;
      for (int eta = 0; eta < g.num_coarse_nodes(); ++eta) s += g.coarse_hat(eta, {x, y});
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
}
