#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <Eigen/SparseCholesky>

#include "locrb/assembly.hpp"

namespace locrb {

enum class SolverKind { direct, pcg };

/// Right-hand side mode of a patch solve.
struct PatchRhs {
  enum class Kind { zero, source, functional };
  Kind kind = Kind::zero;
  Vector functional;  ///< patch-local load vector for Kind::functional

  static PatchRhs zero() { return {}; }
  static PatchRhs source() { return {Kind::source, {}}; }
  static PatchRhs from_functional(Vector f) { return {Kind::functional, std::move(f)}; }
};

/// Assembled operator of a patch at a fixed μ plus a lazily built factorization.
class PatchSystem {
public:
  PatchSystem(const Discretization& disc, DomainPatch patch, ParameterVector mu, ArtificialFaces mode,
              SolverKind solver = SolverKind::direct);

  const DomainPatch& patch() const { return patch_; }
  const ParameterVector& mu() const { return mu_; }
  const SparseMatrix& matrix() const { return matrix_; }

  /// Load vector: weak boundary data (all patch segments) plus the selected source mode.
  Vector rhs(const BoundaryData& data, const PatchRhs& mode) const;
  /// Solves A x = b; throws SolverError if the relative residual stays above 1e-10.
  Vector solve(const Vector& b) const;

private:
  void factorize() const;
  Vector solve_direct(const Vector& b) const;
  Vector solve_pcg(const Vector& b) const;

  const Discretization* disc_;
  DomainPatch patch_;
  ParameterVector mu_;
  SolverKind solver_;
  SparseMatrix matrix_;
  mutable std::once_flag factorized_;
  mutable Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  mutable std::vector<std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>>> block_ldlt_;
};

/// Global and patch-local full-order solves with a (patch, μ)-keyed system cache.
class FomSolver {
public:
  explicit FomSolver(const Discretization& disc, SolverKind solver = SolverKind::direct);

  const Discretization& discretization() const { return *disc_; }

  /// u_h(μ) on the whole domain.
  BlockVector solve_fom(const ParameterVector& mu);
  /// Patch solve; `data` holds values for every boundary segment of the patch (artificial and ∂Ω).
  /// Neumann segments ignore their entries.
  Vector solve_patch(const DomainPatch& patch, const ParameterVector& mu, const BoundaryData& data,
                     const PatchRhs& rhs, ArtificialFaces mode = ArtificialFaces::nitsche);

  std::shared_ptr<const PatchSystem> system(const DomainPatch& patch, const ParameterVector& mu,
                                            ArtificialFaces mode = ArtificialFaces::nitsche);
  /// Global operator and load vector at μ (no factorization).
  const SparseMatrix& global_operator(const ParameterVector& mu);
  Vector global_rhs(const ParameterVector& mu) const;

  int num_global_solves() const { return global_solves_; }
  std::size_t cache_size() const;
  void clear_cache();

private:
  const Discretization* disc_;
  SolverKind solver_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<PatchSystem>> cache_;
  int global_solves_ = 0;
};

/// Stable text key of a parameter vector (bit-exact).
std::string parameter_key(const ParameterVector& mu);

/// Restriction of a patch vector to one of its subdomains.
Vector restrict_to(const DomainPatch& patch, const Vector& x, int T);
/// Gathers a broken global function onto the patch numbering.
Vector gather(const DomainPatch& patch, const BlockVector& u);
/// Gathers a flat global vector onto the patch numbering.
Vector gather(const DomainPatch& patch, const Vector& flat, int block_size);

}  // namespace locrb
