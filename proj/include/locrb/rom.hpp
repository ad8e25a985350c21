#pragma once

#include <map>
#include <utility>
#include <vector>

#include "locrb/training.hpp"

namespace locrb {

/// Galerkin projection of the DG system onto V_rb, blocked by subdomain.
struct ReducedSystem {
  Matrix matrix;
  Vector rhs;
  std::vector<int> offsets;  ///< offsets[T] = first reduced index of subdomain T; back() = dimension
};

struct RomSolution {
  Vector coefficients;
  BlockVector u_rb;
};

class ReducedModel {
public:
  /// Precomputes reduced affine components when the problem is affine.
  ReducedModel(const Discretization& disc, const ReducedBasis& rb);

  const ReducedBasis& basis() const { return rb_; }
  bool is_affine() const { return affine_; }
  int dimension() const { return rb_.total_size(); }

  /// Replaces the basis and refreshes the reduced blocks touching the changed subdomains.
  void update(const ReducedBasis& rb, const std::vector<int>& changed);

  /// Σ_q θ_q(μ) × reduced components (or the direct route for non-affine problems).
  ReducedSystem project(const ParameterVector& mu) const;
  /// Bᵀ A(μ) B and Bᵀ b(μ) from the assembled full-order system.
  ReducedSystem project_direct(const ParameterVector& mu) const;

  Vector solve_coefficients(const ParameterVector& mu) const;
  RomSolution solve(const ParameterVector& mu) const;
  BlockVector reconstruct(const Vector& coefficients) const;

private:
  void compute_blocks(int T);
  std::vector<int> offsets() const;

  const Discretization* disc_;
  ReducedBasis rb_;
  bool affine_ = false;
  std::vector<SparseMatrix> components_;
  std::vector<Vector> rhs_components_;
  std::vector<std::vector<int>> coupled_;  // T itself and its face neighbours, sorted
  // Per component: reduced block (S, T) for coupled pairs.
  std::vector<std::map<std::pair<int, int>, Matrix>> blocks_;
  std::vector<std::vector<Vector>> rhs_blocks_;
};

/// Dense symmetric solve: Cholesky, falling back to pivoted LDLᵀ.
Vector solve_reduced(const ReducedSystem& sys);

}  // namespace locrb
