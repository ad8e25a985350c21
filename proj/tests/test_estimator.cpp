#include <cmath>

#include "doctest.h"
#include "locrb/estimator.hpp"
#include "locrb/rom.hpp"

using namespace locrb;

namespace {

const ParameterVector kMu{5.2, 4.1, 5.9};

struct Setup {
  Discretization disc{preset("tiny-channels")};
  FomSolver fom{disc};
  ReducedBasis rb;

  Setup() {
    Trainer tr(disc, fom);
    RangeFinderOptions opt;
    opt.tol = 1e-1;
    rb = tr.build_initial_rb({ParameterVector{4.0, 4.0, 4.0}}, opt, 2).basis;
  }
};

// Dual norm with a dense principal submatrix of the global Gram: the h-norm of a function
// extended by zero outside O_η.
double dense_local_dual(const Discretization& d, const SparseMatrix& global_gram, int eta, const Vector& r) {
  const auto patch = indicator_domain(d.grid(), eta);
  const int n = d.grid().dofs_per_subdomain();
  std::vector<int> dofs;
  for (int T : patch.subdomains())
    for (int i = 0; i < n; ++i) dofs.push_back(T * n + i);
  const Matrix G = Matrix(global_gram);
  Matrix Gs(dofs.size(), dofs.size());
  Vector rs(dofs.size());
  for (std::size_t a = 0; a < dofs.size(); ++a) {
    rs[a] = r[dofs[a]];
    for (std::size_t b = 0; b < dofs.size(); ++b) Gs(a, b) = G(dofs[a], dofs[b]);
  }
  return std::sqrt(rs.dot(Gs.llt().solve(rs)));
}

}  // namespace

TEST_CASE("residual") {
  Setup s;
  Estimator est(s.disc, s.fom);
  const auto u = ReducedModel(s.disc, s.rb).solve(kMu).u_rb;
  const auto res = est.assemble_residual(u, kMu);
  const Vector b = s.fom.global_rhs(kMu);
  CHECK((res.r - (b - s.fom.global_operator(kMu) * u.flat())).norm() <= 1e-12 * b.norm());
  CHECK(res.rhs_norm == doctest::Approx(b.norm()));

  // Orthogonal to every broken coarse hat: they all belong to V_rb.
  const auto& g = s.disc.grid();
  for (int eta = 0; eta < g.num_coarse_nodes(); ++eta) {
    BlockVector hat(g.num_subdomains(), g.dofs_per_subdomain());
    const auto patch = indicator_domain(g, eta);
    for (int T : patch.subdomains()) hat[T] = s.disc.coarse_hat_on(eta, T);
    CHECK(std::abs(res.r.dot(hat.flat())) <= 1e-9 * b.norm());
  }
}

TEST_CASE("local dual norms") {
  Setup s;
  Estimator est(s.disc, s.fom);
  const auto u = ReducedModel(s.disc, s.rb).solve(kMu).u_rb;
  const auto res = est.assemble_residual(u, kMu);
  const double global = est.global_dual_norm(res);
  const auto& g = s.disc.grid();
  for (int eta = 0; eta < g.num_coarse_nodes(); ++eta) {
    const double local = est.local_dual_norm(eta, res);
    CHECK(local == doctest::Approx(dense_local_dual(s.disc, est.global_gram(), eta, res.r)).epsilon(1e-9));
    CHECK(local <= global * (1.0 + 1e-10));
  }
  // Excluding the artificial jumps weakens the norm, so the dual norm grows.
  Estimator ex(s.disc, s.fom, ArtificialFaces::excluded);
  const int centre = g.coarse_node_index(1, 1);
  CHECK(ex.local_dual_norm(centre, res) >= est.local_dual_norm(centre, res) * (1.0 - 1e-12));
}

TEST_CASE("estimate bookkeeping") {
  Setup s;
  Estimator est(s.disc, s.fom);
  const auto u = ReducedModel(s.disc, s.rb).solve(kMu).u_rb;
  const auto e = est.global_estimate(u, kMu, 2.0);
  const auto& g = s.disc.grid();
  REQUIRE(e.node_duals.size() == static_cast<std::size_t>(g.num_coarse_nodes()));
  REQUIRE(e.indicators.size() == static_cast<std::size_t>(g.num_subdomains()));
  double duals = 0.0, deltas = 0.0;
  for (double x : e.node_duals) duals += x * x;
  for (double x : e.indicators) deltas += x * x;
  CHECK(deltas == doctest::Approx(duals).epsilon(1e-13));
  CHECK(e.dual_sum_sq == doctest::Approx(duals).epsilon(1e-13));
  CHECK(e.alpha == doctest::Approx(coercivity_lb(s.disc, kMu)));
  CHECK(e.estimate == doctest::Approx(2.0 * std::sqrt(duals) / e.alpha).epsilon(1e-13));
  const auto j = to_json(e);
  CHECK(j.at("indicators").size() == 9);
  CHECK(j.at("c_pu") == 2.0);
  CHECK_THROWS_AS(est.global_estimate(u, kMu, 0.0), std::invalid_argument);
}

TEST_CASE("norms") {
  Setup s;
  Estimator est(s.disc, s.fom);
  const auto u = s.fom.solve_fom(kMu);
  const Vector x = u.flat();
  CHECK(est.h_norm(u) == doctest::Approx(std::sqrt(x.dot(est.global_gram() * x))));
  CHECK(est.energy_norm(u, kMu) == doctest::Approx(std::sqrt(x.dot(s.fom.global_operator(kMu) * x))));
  CHECK(min_theta(s.disc, s.disc.mu_star()) == doctest::Approx(1.0));
  CHECK(coercivity_lb(s.disc, kMu) < min_theta(s.disc, kMu));
}

TEST_CASE("reliability with the brute-force constant") {
  ProblemDef p = preset("tiny-channels");
  const Discretization d(p);
  FomSolver fom(d);
  Trainer tr(d, fom);
  RangeFinderOptions opt;
  opt.tol = 1e-1;
  const auto rb = tr.build_initial_rb({ParameterVector{4.0, 4.0, 4.0}}, opt, 8).basis;
  Estimator est(d, fom);
  for (const ParameterVector& mu : {ParameterVector{4.0, 4.0, 4.0}, kMu, ParameterVector{6.0, 6.0, 6.0}}) {
    const auto u = fom.solve_fom(mu);
    for (int k : {4, 5, 6}) {
      const auto trunc = rb.truncated(std::vector<int>(9, k));
      const double cpu = brute_force_cpu(d, trunc);
      CHECK(cpu > 0.0);
      const auto u_rb = ReducedModel(d, trunc).solve(mu).u_rb;
      const auto e = est.global_estimate(u_rb, mu, cpu);
      CHECK(e.estimate >= est.h_norm(u - u_rb));
    }
  }
}

TEST_CASE("brute-force constant") {
  ProblemDef p = preset("unit-poisson");
  p.m = 2;
  const Discretization d(p);
  ReducedBasis full(d);
  const int n = d.grid().dofs_per_subdomain();
  for (int T = 0; T < 4; ++T)
    for (int i = 0; i < n; ++i) full.add(T, Vector::Unit(n, i), BasisTag::offline);
  CHECK(brute_force_cpu(d, full) < 1e-6);
  ReducedBasis empty(d);
  CHECK(brute_force_cpu(d, empty) > 0.5);
  CHECK_THROWS_AS(brute_force_cpu(d, empty, ArtificialFaces::zero_extension, 10), std::invalid_argument);
}
