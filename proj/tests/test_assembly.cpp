#include <random>

#include "doctest.h"
#include "locrb/estimator.hpp"
#include "support/oracles.hpp"

using namespace locrb;

namespace {

ProblemDef constant_problem(int nx, int ny, int m, double kappa, double reaction) {
  ProblemDef p = preset("unit-poisson");
  p.nx = nx;
  p.ny = ny;
  p.m = m;
  p.kappa_background = kappa;
  p.reaction = reaction;
  return p;
}

double quad(const SparseMatrix& A, const Vector& v, const Vector& w) { return v.dot(A * w); }

}  // namespace

TEST_CASE("volume block") {
  const Discretization d(constant_problem(2, 2, 3, 1.0, 1.0));
  const auto blk = d.assemble_volume(1, ParameterVector{});
  const Vector one = Vector::Ones(d.grid().dofs_per_subdomain());
  CHECK(quad(blk.matrix, one, one) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(Matrix(blk.matrix - SparseMatrix(blk.matrix.transpose())).cwiseAbs().maxCoeff() == 0.0);

  const Discretization d2(constant_problem(2, 2, 3, 2.0, 2.0));
  const auto blk2 = d2.assemble_volume(1, ParameterVector{});
  CHECK(Matrix(blk2.matrix - 2.0 * blk.matrix).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("face blocks") {
  const Discretization d(constant_problem(2, 1, 4, 1.0, 1.0));
  const auto& g = d.grid();
  const int inner = 0;
  REQUIRE(g.face(inner).is_inner());
  const auto blocks = d.assemble_face(inner, ParameterVector{});
  REQUIRE(blocks.size() == 4);
  const Vector one = Vector::Ones(g.dofs_per_subdomain());
  double total = 0.0;
  for (const auto& b : blocks) total += quad(b.matrix, one, one);
  CHECK(std::abs(total) < 1e-12);
  // Symmetry across the block pairs.
  CHECK(Matrix(blocks[1].matrix - SparseMatrix(blocks[2].matrix.transpose())).cwiseAbs().maxCoeff() < 1e-12);

  // Indicator of T⁻ in the h-norm: mass |T⁻| = 1/2 plus penalized jumps. The inner face carries
  // {κ*} = 1/2, the Dirichlet sides use h = hx on the left and h = hy at the bottom and top.
  Vector ind_minus = Vector::Zero(g.num_dofs());
  ind_minus.head(g.dofs_per_subdomain()).setOnes();
  const auto gram = d.assemble_h_gram(whole_domain(g));
  const double sigma = d.penalty(), hx = g.fine_hx(), hy = g.fine_hy();
  const double expected = 0.5 + sigma * (0.5 * 1.0 / hx + 1.0 / hx + 2.0 * 0.5 / hy);
  CHECK(quad(gram, ind_minus, ind_minus) == doctest::Approx(expected).epsilon(1e-12));

  // Dirichlet boundary face, v = w = 1, κ* = 1: only the penalty σ|γ|/h survives.
  for (const auto& bf : g.faces()) {
    if (bf.is_inner()) continue;
    const auto b = d.assemble_face(bf.index, ParameterVector{});
    REQUIRE(b.size() == 1);
    const double h = bf.axis == 0 ? g.fine_hx() : g.fine_hy();
    CHECK(quad(b[0].matrix, one, one) == doctest::Approx(d.penalty() * bf.length / h).epsilon(1e-12));
  }
}

TEST_CASE("h-Gram examples") {
  SUBCASE("single subdomain, v = c") {
    ProblemDef p = constant_problem(1, 1, 4, 1.0, 1.0);
    const Discretization d(p);
    const auto patch = whole_domain(d.grid());
    const auto G = d.assemble_h_gram(patch, ArtificialFaces::excluded);
    // All four sides are Dirichlet and carry jump terms; the interior part alone is c²|T|.
    const SparseMatrix M = d.local_gram(0);
    const Vector c = Vector::Constant(25, 3.0);
    CHECK(std::sqrt(quad(M, c, c)) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(quad(G, c, c) == doctest::Approx(9.0 * (1.0 + 4.0 * d.penalty() / d.grid().fine_hx())).epsilon(1e-12));
  }
  SUBCASE("two subdomains, indicator of T1, Neumann outer boundary") {
    ProblemDef p = constant_problem(2, 1, 4, 1.0, 1.0);
    for (auto& b : p.boundary) b = BoundaryCondition::neumann();
    const Discretization d(p);
    const auto& g = d.grid();
    const auto G = d.assemble_h_gram(whole_domain(g));
    Vector v = Vector::Zero(g.num_dofs());
    v.head(g.dofs_per_subdomain()).setOnes();
    const double sigma = d.penalty(), h = g.fine_hx();
    // {κ*} = 1/2 on the face for κ* ≡ 1.
    CHECK(quad(G, v, v) == doctest::Approx(0.5 + sigma * 0.5 * 1.0 / h).epsilon(1e-12));
  }
  SUBCASE("continuous functions have no inner jump energy") {
    ProblemDef p = constant_problem(3, 2, 4, 1.0, 1.0);
    for (auto& b : p.boundary) b = BoundaryCondition::neumann();
    const Discretization d(p);
    const auto u = d.interpolate([](Point x) { return std::sin(3 * x.x) * std::cos(2 * x.y); });
    const auto G = d.assemble_h_gram(whole_domain(d.grid()));
    double interior = 0.0;
    for (int T = 0; T < d.grid().num_subdomains(); ++T) interior += quad(d.local_gram(T), u[T], u[T]);
    const Vector x = u.flat();
    CHECK(std::abs(quad(G, x, x) - interior) < 1e-12 * interior);
  }
}

TEST_CASE("right-hand side") {
  ProblemDef p = constant_problem(3, 3, 4, 1.0, 1.0);
  p.source = 0.0;
  const Discretization d0(p);
  CHECK(d0.assemble_rhs(4, ParameterVector{}).norm() == 0.0);

  p.source = 2.5;
  const Discretization d(p);
  const Vector b = d.assemble_rhs(4, ParameterVector{});
  CHECK(b.sum() == doctest::Approx(2.5 / 9.0).epsilon(1e-13));
  const SparseMatrix M = d.assemble_volume(4, ParameterVector{}).matrix;  // κ = r = 1
  // Mass row sums: the stiffness rows of a constant vanish, so (K + M)·1 = M·1.
  const Vector rows = M * Vector::Ones(25);
  CHECK((b - 2.5 * rows).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("assembled global operator is symmetric") {
  const Discretization d(preset("tiny-channels"));
  const auto A = d.assemble_operator(whole_domain(d.grid()), ParameterVector{4.5, 5, 6}, ArtificialFaces::nitsche);
  CHECK(Matrix(A - SparseMatrix(A.transpose())).cwiseAbs().maxCoeff() <= 1e-12 * Matrix(A).cwiseAbs().maxCoeff());
}

TEST_CASE("affine components reassemble the operator") {
  const Discretization d(preset("tiny-channels"));
  const auto patch = oversampling_domain(d.grid(), 0);
  const ParameterVector mu{4.2, 5.7, 4.9};
  for (auto mode : {ArtificialFaces::nitsche, ArtificialFaces::zero_extension}) {
    const SparseMatrix A = d.assemble_operator(patch, mu, mode);
    const auto theta = d.theta(mu);
    SparseMatrix S(A.rows(), A.cols());
    for (int q = 0; q < d.num_components(); ++q) S += theta[q] * d.assemble_component(patch, q, mode);
    CHECK(Matrix(S - A).cwiseAbs().maxCoeff() <= 1e-12 * Matrix(A).cwiseAbs().maxCoeff());
  }
  const auto whole = whole_domain(d.grid());
  Vector b = Vector::Zero(whole.num_dofs());
  const auto theta = d.theta(mu);
  for (int q = 0; q < d.num_components(); ++q) b += theta[q] * d.assemble_rhs_component(whole, q);
  const Vector direct = d.assemble_source(whole, mu) + d.assemble_boundary_rhs(whole, mu, d.dirichlet_data(whole));
  CHECK((b - direct).norm() <= 1e-12 * direct.norm());
}

TEST_CASE("coercivity lower bound against the dense eigenvalue") {
  ProblemDef p = preset("tiny-channels");
  p.nx = p.ny = 2;
  p.m = 4;
  const Discretization d(p);
  FomSolver fom(d);
  const Matrix G = Matrix(d.assemble_h_gram(whole_domain(d.grid())));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(4.0, 6.0);
  for (int i = 0; i < 10; ++i) {
    const ParameterVector mu{u(rng), u(rng), u(rng)};
    const double lambda = oracle::min_generalized_eigenvalue(Matrix(fom.global_operator(mu)), G);
    const double lb = coercivity_lb(d, mu);
    CHECK(lb > 0.0);
    CHECK(lambda >= lb);
  }
}
