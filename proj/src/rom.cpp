#include "locrb/rom.hpp"

#include <algorithm>
#include <cmath>

namespace locrb {

ReducedModel::ReducedModel(const Discretization& disc, const ReducedBasis& rb)
    : disc_(&disc), rb_(rb), affine_(disc.problem().is_affine()) {
  const auto& g = disc.grid();
  for (int T = 0; T < g.num_subdomains(); ++T) {
    auto c = g.face_neighbours(T);
    c.push_back(T);
    std::sort(c.begin(), c.end());
    coupled_.push_back(std::move(c));
  }
  if (!affine_) return;
  const auto patch = whole_domain(g);
  for (int q = 0; q < disc.num_components(); ++q) {
    components_.push_back(disc.assemble_component(patch, q, ArtificialFaces::nitsche));
    rhs_components_.push_back(disc.assemble_rhs_component(patch, q));
  }
  blocks_.assign(components_.size(), {});
  rhs_blocks_.assign(components_.size(), std::vector<Vector>(g.num_subdomains()));
  for (int T = 0; T < g.num_subdomains(); ++T) compute_blocks(T);
}

void ReducedModel::compute_blocks(int T) {
  const int n = rb_.dofs_per_subdomain();
  const Matrix& BT = rb_.vectors(T);
  for (std::size_t q = 0; q < components_.size(); ++q) {
    for (int S : coupled_[T]) {
      const SparseMatrix A_ST = components_[q].block(S * n, T * n, n, n);
      Matrix blk = rb_.vectors(S).transpose() * (A_ST * BT);
      blocks_[q][{T, S}] = blk.transpose();
      blocks_[q][{S, T}] = std::move(blk);
    }
    rhs_blocks_[q][T] = BT.transpose() * rhs_components_[q].segment(T * n, n);
  }
}

void ReducedModel::update(const ReducedBasis& rb, const std::vector<int>& changed) {
  if (rb.num_subdomains() != rb_.num_subdomains()) throw std::invalid_argument("basis layout mismatch");
  rb_ = rb;
  if (!affine_) return;
  for (int T : changed) compute_blocks(T);
}

std::vector<int> ReducedModel::offsets() const {
  std::vector<int> off{0};
  for (int T = 0; T < rb_.num_subdomains(); ++T) off.push_back(off.back() + rb_.size(T));
  return off;
}

ReducedSystem ReducedModel::project(const ParameterVector& mu) const {
  if (!affine_) return project_direct(mu);
  disc_->problem().check_admissible(mu);
  const auto theta = disc_->theta(mu);
  ReducedSystem sys;
  sys.offsets = offsets();
  const int dim = sys.offsets.back();
  sys.matrix = Matrix::Zero(dim, dim);
  sys.rhs = Vector::Zero(dim);
  for (std::size_t q = 0; q < blocks_.size(); ++q) {
    for (const auto& [st, blk] : blocks_[q]) {
      const auto [S, T] = st;
      sys.matrix.block(sys.offsets[S], sys.offsets[T], blk.rows(), blk.cols()) += theta[q] * blk;
    }
    for (int T = 0; T < rb_.num_subdomains(); ++T)
      sys.rhs.segment(sys.offsets[T], rb_.size(T)) += theta[q] * rhs_blocks_[q][T];
  }
  return sys;
}

ReducedSystem ReducedModel::project_direct(const ParameterVector& mu) const {
  disc_->problem().check_admissible(mu);
  const auto patch = whole_domain(disc_->grid());
  const SparseMatrix A = disc_->assemble_operator(patch, mu, ArtificialFaces::nitsche);
  const Vector b =
      disc_->assemble_source(patch, mu) + disc_->assemble_boundary_rhs(patch, mu, disc_->dirichlet_data(patch));
  const int n = rb_.dofs_per_subdomain();
  ReducedSystem sys;
  sys.offsets = offsets();
  const int dim = sys.offsets.back();
  sys.matrix = Matrix::Zero(dim, dim);
  sys.rhs = Vector::Zero(dim);
  for (int T = 0; T < rb_.num_subdomains(); ++T) {
    const Matrix& BT = rb_.vectors(T);
    for (int S : coupled_[T]) {
      const SparseMatrix A_ST = A.block(S * n, T * n, n, n);
      sys.matrix.block(sys.offsets[S], sys.offsets[T], rb_.size(S), rb_.size(T)) =
          rb_.vectors(S).transpose() * (A_ST * BT);
    }
    sys.rhs.segment(sys.offsets[T], rb_.size(T)) = BT.transpose() * b.segment(T * n, n);
  }
  return sys;
}

Vector solve_reduced(const ReducedSystem& sys) {
  if (sys.matrix.rows() == 0) return Vector();
  Eigen::LLT<Matrix> llt(sys.matrix);
  if (llt.info() == Eigen::Success) return llt.solve(sys.rhs);
  Eigen::LDLT<Matrix> ldlt(sys.matrix);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SolverError("reduced system is singular or indefinite (dependent basis?)");
  Vector x = ldlt.solve(sys.rhs);
  if (!x.allFinite()) throw SolverError("reduced solve produced non-finite values");
  return x;
}

Vector ReducedModel::solve_coefficients(const ParameterVector& mu) const { return solve_reduced(project(mu)); }

BlockVector ReducedModel::reconstruct(const Vector& coefficients) const {
  const auto off = offsets();
  if (coefficients.size() != off.back()) throw std::invalid_argument("coefficient vector has wrong length");
  BlockVector u(rb_.num_subdomains(), rb_.dofs_per_subdomain());
  for (int T = 0; T < rb_.num_subdomains(); ++T) {
    if (rb_.size(T) == 0) continue;
    u[T] = rb_.vectors(T) * coefficients.segment(off[T], rb_.size(T));
  }
  return u;
}

RomSolution ReducedModel::solve(const ParameterVector& mu) const {
  RomSolution sol;
  sol.coefficients = solve_coefficients(mu);
  sol.u_rb = reconstruct(sol.coefficients);
  return sol;
}

}  // namespace locrb
