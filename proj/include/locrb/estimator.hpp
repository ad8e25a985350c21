#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "json.hpp"
#include "locrb/fom.hpp"
#include "locrb/training.hpp"

namespace locrb {

/// r = b(μ) − A(μ) u_rb over all broken DOFs.
struct ResidualData {
  Vector r;
  ParameterVector mu;
  BlockVector u_rb;
  double rhs_norm = 0.0;
};

struct EstimateBreakdown {
  std::vector<double> node_duals;  ///< ‖R‖ on each indicator domain O_η
  std::vector<double> indicators;  ///< δ_T per subdomain
  double alpha = 0.0;
  double c_pu = 1.0;
  double estimate = 0.0;  ///< Δ = α⁻¹ C_pu (Σ_η dual²)^{1/2}
  double dual_sum_sq = 0.0;
};

nlohmann::json to_json(const EstimateBreakdown& e);

/// Lower bound of the coercivity constant of a_DG(·,·;μ) with respect to ‖·‖_h.
///
/// Splits the consistency terms with Young's inequality and the exact Q1 identity
/// h‖∂_n v‖²_edge = ‖∂_n v‖²_cell, then maximizes over the splitting parameter δ:
///   α ≥ max_δ min( min_c (1 − δ k t_c) t_c, min_c r_μ/r*, 1 − 2/(δσ) ),  t_c = κ_μ/κ*,
/// with k = 2 when a fine cell touches two opposite coarse faces (m = 1) and 1 otherwise.
double coercivity_lb(const Discretization& disc, const ParameterVector& mu);
/// min over fine cells of min(κ_μ/κ*, r_μ/r*).
double min_theta(const Discretization& disc, const ParameterVector& mu);

class Estimator {
public:
  Estimator(const Discretization& disc, FomSolver& fom, ArtificialFaces mode = ArtificialFaces::zero_extension);

  ArtificialFaces mode() const { return mode_; }

  ResidualData assemble_residual(const BlockVector& u_rb, const ParameterVector& mu);
  /// sqrt(r_ηᵀ G_η⁻¹ r_η) on the indicator domain of node η.
  double local_dual_norm(int eta, const ResidualData& res) const;
  EstimateBreakdown estimate(const ResidualData& res, double c_pu = 1.0) const;
  EstimateBreakdown global_estimate(const BlockVector& u_rb, const ParameterVector& mu, double c_pu = 1.0);

  /// sqrt(rᵀ G⁻¹ r) with the global h-Gram.
  double global_dual_norm(const ResidualData& res) const;
  double h_norm(const BlockVector& v) const;
  /// sqrt(a_DG(v, v; μ)).
  double energy_norm(const BlockVector& v, const ParameterVector& mu);

  const SparseMatrix& global_gram() const { return gram_; }

private:
  struct NodeGram {
    DomainPatch patch;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  };
  const NodeGram& node(int eta) const;

  const Discretization* disc_;
  FomSolver* fom_;
  ArtificialFaces mode_;
  SparseMatrix gram_;
  mutable std::once_flag gram_factorized_;
  mutable Eigen::SimplicialLDLT<SparseMatrix> gram_ldlt_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<NodeGram>> nodes_;
};

/// Partition-of-unity stability constant of V_rb, by a dense generalized eigenproblem:
/// sup_v Σ_η inf_{w ∈ V_rb(O_η)} ‖I_h(φ_η v) − w‖²_{h,O_η} / ‖v‖²_h, square-rooted.
/// Throws std::invalid_argument above `max_dofs` fine DOFs.
double brute_force_cpu(const Discretization& disc, const ReducedBasis& rb,
                       ArtificialFaces mode = ArtificialFaces::zero_extension, int max_dofs = 2000);

}  // namespace locrb
