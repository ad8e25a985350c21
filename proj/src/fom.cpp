#include "locrb/fom.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace locrb {

namespace {

constexpr double kResidualTol = 1e-10;

const char* mode_tag(ArtificialFaces mode) {
  switch (mode) {
    case ArtificialFaces::nitsche: return "n";
    case ArtificialFaces::zero_extension: return "z";
    case ArtificialFaces::excluded: return "x";
  }
  return "?";
}

double relative_residual(const SparseMatrix& A, const Vector& x, const Vector& b) {
  const double nb = b.norm();
  const double nr = (b - A * x).norm();
  return nb > 0.0 ? nr / nb : nr;
}

}  // namespace

std::string parameter_key(const ParameterVector& mu) {
  std::string key;
  char buf[20];
  for (double v : mu.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
    key += buf;
    key += ',';
  }
  return key;
}

Vector restrict_to(const DomainPatch& patch, const Vector& x, int T) {
  return x.segment(patch.offset(T), patch.dofs_per_subdomain());
}

Vector gather(const DomainPatch& patch, const BlockVector& u) {
  Vector x(patch.num_dofs());
  for (int T : patch.subdomains()) x.segment(patch.offset(T), patch.dofs_per_subdomain()) = u[T];
  return x;
}

Vector gather(const DomainPatch& patch, const Vector& flat, int block_size) {
  Vector x(patch.num_dofs());
  for (int T : patch.subdomains()) x.segment(patch.offset(T), block_size) = flat.segment(T * block_size, block_size);
  return x;
}

// ---------------------------------------------------------------------------

PatchSystem::PatchSystem(const Discretization& disc, DomainPatch patch, ParameterVector mu, ArtificialFaces mode,
                         SolverKind solver)
    : disc_(&disc), patch_(std::move(patch)), mu_(std::move(mu)), solver_(solver) {
  matrix_ = disc.assemble_operator(patch_, mu_, mode);
}

Vector PatchSystem::rhs(const BoundaryData& data, const PatchRhs& mode) const {
  Vector b = disc_->assemble_boundary_rhs(patch_, mu_, data);
  switch (mode.kind) {
    case PatchRhs::Kind::zero: break;
    case PatchRhs::Kind::source: b += disc_->assemble_source(patch_, mu_); break;
    case PatchRhs::Kind::functional:
      if (mode.functional.size() != b.size())
        throw std::invalid_argument("functional has " + std::to_string(mode.functional.size()) +
                                    " entries, patch has " + std::to_string(b.size()) + " DOFs");
      b += mode.functional;
      break;
  }
  return b;
}

void PatchSystem::factorize() const {
  std::call_once(factorized_, [this] {
    if (solver_ == SolverKind::direct) {
      ldlt_.compute(matrix_);
      if (ldlt_.info() != Eigen::Success)
        throw SolverError("sparse factorization failed at mu = " + to_string(mu_));
      return;
    }
    const int n = patch_.dofs_per_subdomain();
    for (int i = 0; i < patch_.size(); ++i) {
      SparseMatrix blk = matrix_.block(i * n, i * n, n, n);
      block_ldlt_.push_back(std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(blk));
      if (block_ldlt_.back()->info() != Eigen::Success)
        throw SolverError("block preconditioner factorization failed at mu = " + to_string(mu_));
    }
  });
}

Vector PatchSystem::solve(const Vector& b) const {
  if (b.size() != matrix_.rows()) throw std::invalid_argument("right-hand side dimension mismatch");
  if (b.norm() == 0.0) return Vector::Zero(b.size());
  factorize();
  return solver_ == SolverKind::direct ? solve_direct(b) : solve_pcg(b);
}

Vector PatchSystem::solve_direct(const Vector& b) const {
  Vector x = ldlt_.solve(b);
  double res = relative_residual(matrix_, x, b);
  // A few steps of iterative refinement absorb the round-off of high-contrast systems.
  for (int it = 0; it < 4 && res > 0.01 * kResidualTol; ++it) {
    x += ldlt_.solve(b - matrix_ * x);
    res = relative_residual(matrix_, x, b);
  }
  if (!std::isfinite(res) || res > kResidualTol)
    throw SolverError("direct solve residual " + std::to_string(res) + " above tolerance at mu = " + to_string(mu_));
  return x;
}

Vector PatchSystem::solve_pcg(const Vector& b) const {
  const int n = patch_.dofs_per_subdomain();
  auto precondition = [&](const Vector& r) {
    Vector z(r.size());
    for (int i = 0; i < patch_.size(); ++i) z.segment(i * n, n) = block_ldlt_[i]->solve(r.segment(i * n, n));
    return z;
  };
  const double nb = b.norm();
  Vector x = Vector::Zero(b.size());
  Vector r = b;
  Vector z = precondition(r);
  Vector p = z;
  double rz = r.dot(z);
  const int max_iter = 20 * static_cast<int>(b.size()) + 100;
  for (int it = 0; it < max_iter; ++it) {
    if (r.norm() <= 0.1 * kResidualTol * nb) break;
    const Vector Ap = matrix_ * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) throw SolverError("conjugate gradients broke down at mu = " + to_string(mu_));
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    z = precondition(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  const double res = relative_residual(matrix_, x, b);
  if (!std::isfinite(res) || res > kResidualTol)
    throw SolverError("conjugate gradients did not reach the residual tolerance at mu = " + to_string(mu_));
  return x;
}

// ---------------------------------------------------------------------------

FomSolver::FomSolver(const Discretization& disc, SolverKind solver) : disc_(&disc), solver_(solver) {}

std::shared_ptr<const PatchSystem> FomSolver::system(const DomainPatch& patch, const ParameterVector& mu,
                                                     ArtificialFaces mode) {
  disc_->problem().check_admissible(mu);
  const std::string key = patch.key() + '|' + mode_tag(mode) + '|' + parameter_key(mu);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto sys = std::make_shared<PatchSystem>(*disc_, patch, mu, mode, solver_);
  std::lock_guard lock(mutex_);
  return cache_.emplace(key, std::move(sys)).first->second;
}

const SparseMatrix& FomSolver::global_operator(const ParameterVector& mu) {
  return system(whole_domain(disc_->grid()), mu)->matrix();
}

Vector FomSolver::global_rhs(const ParameterVector& mu) const {
  const auto patch = whole_domain(disc_->grid());
  return disc_->assemble_source(patch, mu) + disc_->assemble_boundary_rhs(patch, mu, disc_->dirichlet_data(patch));
}

BlockVector FomSolver::solve_fom(const ParameterVector& mu) {
  const auto patch = whole_domain(disc_->grid());
  auto sys = system(patch, mu);
  const Vector x = sys->solve(sys->rhs(disc_->dirichlet_data(patch), PatchRhs::source()));
  ++global_solves_;
  return BlockVector::from_flat(x, disc_->grid().dofs_per_subdomain());
}

Vector FomSolver::solve_patch(const DomainPatch& patch, const ParameterVector& mu, const BoundaryData& data,
                              const PatchRhs& rhs, ArtificialFaces mode) {
  auto sys = system(patch, mu, mode);
  return sys->solve(sys->rhs(data, rhs));
}

std::size_t FomSolver::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

void FomSolver::clear_cache() {
  std::lock_guard lock(mutex_);
  cache_.clear();
}

}  // namespace locrb
