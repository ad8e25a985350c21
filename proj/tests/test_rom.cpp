#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "locrb/errors.hpp"
#include "locrb/estimator.hpp"
#include "locrb/rom.hpp"

using namespace locrb;

namespace {

const ParameterVector kMu{4.4, 5.6, 5.1};

struct Setup {
  Discretization disc{preset("tiny-channels")};
  FomSolver fom{disc};
  ReducedBasis rb;

  Setup() {
    Trainer tr(disc, fom);
    RangeFinderOptions opt;
    opt.tol = 1e-1;
    rb = tr.build_initial_rb({ParameterVector{4.0, 4.0, 4.0}}, opt, 5).basis;
  }
};

// Every unit vector: V_rb = V_h.
ReducedBasis full_basis(const Discretization& d) {
  ReducedBasis rb(d);
  const int n = d.grid().dofs_per_subdomain();
  for (int T = 0; T < d.grid().num_subdomains(); ++T)
    for (int i = 0; i < n; ++i) rb.add(T, Vector::Unit(n, i), BasisTag::offline);
  return rb;
}

}  // namespace

TEST_CASE("reduced system structure") {
  Setup s;
  const ReducedModel model(s.disc, s.rb);
  CHECK(model.is_affine());
  const auto sys = model.project(kMu);
  CHECK(sys.matrix.rows() == s.rb.total_size());
  CHECK(sys.offsets.back() == s.rb.total_size());
  CHECK((sys.matrix - sys.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * sys.matrix.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sys.matrix);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  const auto direct = model.project_direct(kMu);
  CHECK((sys.matrix - direct.matrix).cwiseAbs().maxCoeff() <= 1e-11 * direct.matrix.cwiseAbs().maxCoeff());
  CHECK((sys.rhs - direct.rhs).norm() <= 1e-11 * direct.rhs.norm());
}

TEST_CASE("Galerkin orthogonality") {
  Setup s;
  const ReducedModel model(s.disc, s.rb);
  const auto sol = model.solve(kMu);
  const Vector b = s.fom.global_rhs(kMu);
  const Vector r = b - s.fom.global_operator(kMu) * sol.u_rb.flat();
  const int n = s.disc.grid().dofs_per_subdomain();
  for (int T = 0; T < s.disc.grid().num_subdomains(); ++T) {
    const Vector pair = s.rb.vectors(T).transpose() * r.segment(T * n, n);
    CHECK(pair.cwiseAbs().maxCoeff() <= 1e-9 * b.norm());
  }
  CHECK((model.reconstruct(sol.coefficients).flat() - sol.u_rb.flat()).norm() == 0.0);
  CHECK_THROWS_AS(model.reconstruct(Vector::Ones(2)), std::invalid_argument);
}

TEST_CASE("full basis reproduces the full-order solution") {
  const Discretization d(preset("tiny-channels"));
  FomSolver fom(d);
  const ReducedModel model(d, full_basis(d));
  const Vector u = fom.solve_fom(kMu).flat();
  CHECK((model.solve(kMu).u_rb.flat() - u).norm() <= 1e-8 * u.norm());
}

TEST_CASE("energy error decreases for nested bases") {
  Setup s;
  Estimator est(s.disc, s.fom);
  const auto u = s.fom.solve_fom(kMu);
  double previous = std::numeric_limits<double>::infinity();
  const auto sizes = s.rb.sizes();
  const int kmax = *std::max_element(sizes.begin(), sizes.end());
  for (int k = 4; k <= kmax; ++k) {
    const ReducedModel model(s.disc, s.rb.truncated(std::vector<int>(9, k)));
    const double err = est.energy_norm(u - model.solve(kMu).u_rb, kMu);
    CHECK(err <= previous * (1.0 + 1e-10));
    previous = err;
  }
}

TEST_CASE("incremental update matches a fresh model") {
  Setup s;
  ReducedModel model(s.disc, s.rb);
  ReducedBasis bigger = s.rb;
  const int n = s.disc.grid().dofs_per_subdomain();
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = std::sin(1.0 + i);
  REQUIRE(bigger.add(3, v, BasisTag::online));
  REQUIRE(bigger.add(7, v, BasisTag::online));
  model.update(bigger, {3, 7});
  const ReducedModel fresh(s.disc, bigger);
  const auto a = model.project(kMu), b = fresh.project(kMu);
  CHECK(a.offsets == b.offsets);
  CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() <= 1e-13 * b.matrix.cwiseAbs().maxCoeff());
  CHECK((a.rhs - b.rhs).norm() <= 1e-13 * b.rhs.norm());
}

TEST_CASE("non-affine problems take the direct route") {
  ProblemDef p = preset("tiny-channels");
  p.kappa_fn = [](Point x, const ParameterVector& mu) { return 1.0 + x.x * mu[0]; };
  const Discretization d(p);
  ReducedBasis rb(d);
  for (int T = 0; T < 9; ++T) rb.add(T, Vector::Ones(d.grid().dofs_per_subdomain()), BasisTag::pou);
  const ReducedModel model(d, rb);
  CHECK_FALSE(model.is_affine());
  const auto a = model.project(kMu), b = model.project_direct(kMu);
  CHECK((a.matrix - b.matrix).norm() == 0.0);
}

TEST_CASE("reduced solver") {
  ReducedSystem sys;
  sys.matrix = Matrix::Identity(2, 2);
  sys.matrix(1, 1) = -1.0;
  sys.rhs = Vector::Ones(2);
  CHECK_THROWS_AS(solve_reduced(sys), SolverError);
  sys.matrix(1, 1) = 4.0;
  CHECK(solve_reduced(sys)[1] == doctest::Approx(0.25));
  CHECK(solve_reduced(ReducedSystem{}).size() == 0);
}
