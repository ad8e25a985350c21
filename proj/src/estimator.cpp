#include "locrb/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace locrb {

nlohmann::json to_json(const EstimateBreakdown& e) {
  return {{"estimate", e.estimate},     {"alpha", e.alpha},           {"c_pu", e.c_pu},
          {"node_duals", e.node_duals}, {"indicators", e.indicators}, {"dual_sum_sq", e.dual_sum_sq}};
}

double min_theta(const Discretization& disc, const ParameterVector& mu) {
  disc.problem().check_admissible(mu);
  const auto kappa = disc.kappa_field(mu);
  const auto reaction = disc.reaction_field(mu);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t T = 0; T < kappa.size(); ++T)
    for (std::size_t c = 0; c < kappa[T].size(); ++c)
      lo = std::min({lo, kappa[T][c] / disc.kappa_star()[T][c], reaction[T][c] / disc.reaction_star()[T][c]});
  return lo;
}

double coercivity_lb(const Discretization& disc, const ParameterVector& mu) {
  disc.problem().check_admissible(mu);
  const auto kappa = disc.kappa_field(mu);
  const auto reaction = disc.reaction_field(mu);
  double t_min = std::numeric_limits<double>::infinity(), t_max = 0.0;
  double r_min = std::numeric_limits<double>::infinity();
  for (std::size_t T = 0; T < kappa.size(); ++T) {
    for (std::size_t c = 0; c < kappa[T].size(); ++c) {
      const double t = kappa[T][c] / disc.kappa_star()[T][c];
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
      r_min = std::min(r_min, reaction[T][c] / disc.reaction_star()[T][c]);
    }
  }
  const double k = disc.grid().m() == 1 ? 2.0 : 1.0;
  const double sigma = disc.penalty();
  const double lo = 2.0 / sigma, hi = 1.0 / (k * t_max);
  if (!(lo < hi)) return 0.0;
  // (1 − δkt)t is concave in t, so its minimum over the cells sits at t_min or t_max.
  auto bound = [&](double delta) {
    const double vol = std::min((1.0 - delta * k * t_min) * t_min, (1.0 - delta * k * t_max) * t_max);
    return std::min({vol, r_min, 1.0 - 2.0 / (delta * sigma)});
  };
  // The bound is concave in δ: golden-section search.
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = bound(x1), f2 = bound(x2);
  for (int it = 0; it < 200 && b - a > 1e-15 * hi; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = bound(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = bound(x1);
    }
  }
  return std::max(0.0, std::max(f1, f2));
}

// ---------------------------------------------------------------------------

Estimator::Estimator(const Discretization& disc, FomSolver& fom, ArtificialFaces mode)
    : disc_(&disc), fom_(&fom), mode_(mode), nodes_(disc.grid().num_coarse_nodes()) {
  gram_ = disc.assemble_h_gram(whole_domain(disc.grid()));
}

ResidualData Estimator::assemble_residual(const BlockVector& u_rb, const ParameterVector& mu) {
  const SparseMatrix& A = fom_->global_operator(mu);
  const Vector b = fom_->global_rhs(mu);
  ResidualData res;
  res.r = b - A * u_rb.flat();
  res.mu = mu;
  res.u_rb = u_rb;
  res.rhs_norm = b.norm();
  return res;
}

const Estimator::NodeGram& Estimator::node(int eta) const {
  std::lock_guard lock(mutex_);
  auto& slot = nodes_.at(eta);
  if (!slot) {
    auto ng = std::make_unique<NodeGram>();
    ng->patch = indicator_domain(disc_->grid(), eta);
    ng->ldlt.compute(disc_->assemble_h_gram(ng->patch, mode_));
    if (ng->ldlt.info() != Eigen::Success)
      throw SolverError("h-Gram of indicator domain " + std::to_string(eta) + " is not positive definite");
    slot = std::move(ng);
  }
  return *slot;
}

double Estimator::local_dual_norm(int eta, const ResidualData& res) const {
  const auto& ng = node(eta);
  const Vector r_eta = gather(ng.patch, res.r, disc_->grid().dofs_per_subdomain());
  if (r_eta.squaredNorm() == 0.0) return 0.0;
  return std::sqrt(std::max(0.0, r_eta.dot(ng.ldlt.solve(r_eta))));
}

EstimateBreakdown Estimator::estimate(const ResidualData& res, double c_pu) const {
  if (!(c_pu > 0.0)) throw std::invalid_argument("C_pu must be positive");
  const auto& g = disc_->grid();
  EstimateBreakdown e;
  e.c_pu = c_pu;
  e.alpha = coercivity_lb(*disc_, res.mu);
  e.indicators.assign(g.num_subdomains(), 0.0);
  for (int eta = 0; eta < g.num_coarse_nodes(); ++eta) {
    const double d = local_dual_norm(eta, res);
    e.node_duals.push_back(d);
    e.dual_sum_sq += d * d;
    const auto& patch = node(eta).patch;
    for (int T : patch.subdomains()) e.indicators[T] += d * d / patch.size();
  }
  for (double& v : e.indicators) v = std::sqrt(v);
  e.estimate = e.alpha > 0.0 ? c_pu * std::sqrt(e.dual_sum_sq) / e.alpha : std::numeric_limits<double>::infinity();
  return e;
}

EstimateBreakdown Estimator::global_estimate(const BlockVector& u_rb, const ParameterVector& mu, double c_pu) {
  return estimate(assemble_residual(u_rb, mu), c_pu);
}

double Estimator::global_dual_norm(const ResidualData& res) const {
  std::call_once(gram_factorized_, [this] {
    gram_ldlt_.compute(gram_);
    if (gram_ldlt_.info() != Eigen::Success) throw SolverError("global h-Gram is not positive definite");
  });
  return std::sqrt(std::max(0.0, res.r.dot(gram_ldlt_.solve(res.r))));
}

double Estimator::h_norm(const BlockVector& v) const {
  const Vector x = v.flat();
  return std::sqrt(std::max(0.0, x.dot(gram_ * x)));
}

double Estimator::energy_norm(const BlockVector& v, const ParameterVector& mu) {
  const Vector x = v.flat();
  return std::sqrt(std::max(0.0, x.dot(fom_->global_operator(mu) * x)));
}

// ---------------------------------------------------------------------------

double brute_force_cpu(const Discretization& disc, const ReducedBasis& rb, ArtificialFaces mode, int max_dofs) {
  const auto& g = disc.grid();
  const int N = g.num_dofs();
  if (N > max_dofs)
    throw std::invalid_argument("instance has " + std::to_string(N) + " DOFs, dense oracle cap is " +
                                std::to_string(max_dofs));
  const int n = g.dofs_per_subdomain();
  const Matrix G = Matrix(disc.assemble_h_gram(whole_domain(g)));
  Matrix K = Matrix::Zero(N, N);
  for (int eta = 0; eta < g.num_coarse_nodes(); ++eta) {
    const auto patch = indicator_domain(g, eta);
    const int np = patch.num_dofs();
    const Matrix Ge = Matrix(disc.assemble_h_gram(patch, mode));
    // D: nodal interpolant of φ_η v restricted to O_η.
    Matrix D = Matrix::Zero(np, N);
    int k = 0;
    for (int T : patch.subdomains()) k += rb.size(T);
    Matrix B = Matrix::Zero(np, k);
    int col = 0;
    for (int T : patch.subdomains()) {
      const Vector hat = disc.coarse_hat_on(eta, T);
      for (int i = 0; i < n; ++i) D(patch.offset(T) + i, T * n + i) = hat[i];
      B.block(patch.offset(T), col, n, rb.size(T)) = rb.vectors(T);
      col += rb.size(T);
    }
    Matrix W = Ge;
    if (k > 0) {
      const Matrix GB = Ge * B;
      const Matrix BGB = B.transpose() * GB;
      W -= GB * Eigen::LDLT<Matrix>(BGB).solve(GB.transpose());
    }
    K += D.transpose() * W * D;
  }
  K = 0.5 * (K + K.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(K, G, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("generalized eigensolver failed in brute_force_cpu");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace locrb
