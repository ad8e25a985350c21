#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "locrb/grid.hpp"
#include "locrb/problem.hpp"

namespace locrb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Fine-DOF couplings between two subdomains.
struct SparseBlock {
  int row_subdomain = 0;
  int col_subdomain = 0;
  SparseMatrix matrix;
};

/// A function of the broken space V_h = ⊕_T V_h(T): one coefficient vector per subdomain.
class BlockVector {
public:
  BlockVector() = default;
  BlockVector(int num_blocks, int block_size);

  static BlockVector from_flat(const Vector& flat, int block_size);
  Vector flat() const;

  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int block_size() const { return block_size_; }
  Vector& operator[](int T) { return blocks_.at(T); }
  const Vector& operator[](int T) const { return blocks_.at(T); }

  BlockVector& operator+=(const BlockVector& o);
  BlockVector& operator-=(const BlockVector& o);
  friend BlockVector operator-(BlockVector a, const BlockVector& b) { return a -= b; }
  friend BlockVector operator+(BlockVector a, const BlockVector& b) { return a += b; }

private:
  std::vector<Vector> blocks_;
  int block_size_ = 0;
};

/// Per-subdomain, per-fine-cell scalar values (cell-centre samples).
using CellField = std::vector<std::vector<double>>;

/// How a patch treats coarse faces on its boundary that are interior to Ω.
enum class ArtificialFaces {
  nitsche,         ///< weak Dirichlet, boundary-face conventions (w = 1, {κ*} = inside value)
  zero_extension,  ///< functions extended by zero: one-sided jump with the global face weights
  excluded,        ///< no face terms at all
};

/// Dirichlet data on the boundary segments of a patch: (m+1) nodal values per
/// segment, in DomainPatch::boundary_segments() order. Linear between nodes.
struct BoundaryData {
  Vector values;
};

struct FaceTerms {
  bool consistency = true;
  bool penalty = true;
};

/// Symmetric weighted interior penalty DG discretization of a ProblemDef on its
/// GridHierarchy: Q1 on each subdomain, coupled weakly across coarse faces.
///
/// Face terms follow the SWIPDG form
///   −∫⟨κ_μ∇v·n⟩[w] − ∫⟨κ_μ∇w·n⟩[v] + ∫ σ{κ_μ*}/h_γ [v][w]
/// with weights w⁻ = κ*⁺/(κ*⁻+κ*⁺), w⁺ = κ*⁻/(κ*⁻+κ*⁺) and {κ*} half the harmonic
/// mean, evaluated pointwise from the adjacent fine cells. h_γ is the fine mesh size
/// normal to the face. Homogeneous Neumann sides carry no face terms.
class Discretization {
public:
  explicit Discretization(ProblemDef problem);

  const GridHierarchy& grid() const { return grid_; }
  const ProblemDef& problem() const { return problem_; }
  const ParameterVector& mu_star() const { return problem_.mu_star; }
  double penalty() const { return problem_.penalty; }
  bool is_dirichlet(const CoarseFace& f) const;

  CellField kappa_field(const ParameterVector& mu) const;
  CellField reaction_field(const ParameterVector& mu) const;
  const CellField& kappa_star() const { return kappa_star_; }
  const CellField& reaction_star() const { return reaction_star_; }

  SparseBlock assemble_volume(int T, const ParameterVector& mu) const;
  /// Inner face: blocks (−,−), (−,+), (+,−), (+,+). Dirichlet boundary face: one block.
  /// Neumann boundary face: empty.
  std::vector<SparseBlock> assemble_face(int face, const ParameterVector& mu) const;
  /// ∫_T f_μ v plus the weak Dirichlet terms of T's Dirichlet boundary faces.
  Vector assemble_rhs(int T, const ParameterVector& mu) const;

  /// Gram matrix of ‖·‖_h restricted to the patch (jumps on internal and Dirichlet faces,
  /// artificial faces per `mode`).
  SparseMatrix assemble_h_gram(const DomainPatch& patch, ArtificialFaces mode = ArtificialFaces::zero_extension) const;
  /// Subdomain-interior part of the h-norm on T: κ* stiffness + r* mass.
  SparseMatrix local_gram(int T) const;

  SparseMatrix assemble_operator(const DomainPatch& patch, const ParameterVector& mu, ArtificialFaces mode) const;
  /// Same, with explicit coefficient fields and selectable face terms (used for affine components).
  SparseMatrix assemble_operator(const DomainPatch& patch, const CellField& kappa, const CellField* reaction,
                                 ArtificialFaces mode, FaceTerms terms) const;

  Vector assemble_source(const DomainPatch& patch, const ParameterVector& mu) const;
  /// Weak imposition terms ∫ σ{κ*}/h g v − ∫ κ_μ∂_n v g for the data on all Dirichlet-type
  /// segments of the patch (artificial ones and Dirichlet sides of ∂Ω).
  Vector assemble_boundary_rhs(const DomainPatch& patch, const ParameterVector& mu, const BoundaryData& data) const;
  Vector assemble_boundary_rhs(const DomainPatch& patch, const CellField& kappa, const BoundaryData& data,
                               FaceTerms terms) const;
  /// Global Dirichlet data g on ∂Ω Dirichlet segments; zero on artificial and Neumann segments.
  BoundaryData dirichlet_data(const DomainPatch& patch) const;
  BoundaryData zero_data(const DomainPatch& patch) const;

  /// Affine expansion A(μ) = Σ_q θ_q(μ) A_q and b(μ) = Σ_q θ_q(μ) b_q. Component 0 is
  /// the parameter-independent remainder; component k ≥ 1 is κ component k−1.
  int num_components() const { return static_cast<int>(component_kappa_.size()) + 1; }
  std::vector<double> theta(const ParameterVector& mu) const;
  SparseMatrix assemble_component(const DomainPatch& patch, int q, ArtificialFaces mode) const;
  Vector assemble_rhs_component(const DomainPatch& patch, int q) const;

  /// Nodal interpolant of a function on every subdomain.
  BlockVector interpolate(const std::function<double(Point)>& fn) const;
  /// Interpolant of the coarse hat φ_η restricted to subdomain T.
  Vector coarse_hat_on(int eta, int T) const;
  /// Value of a broken function at a point of subdomain T.
  double evaluate(const BlockVector& u, int T, Point p) const;

private:
  void add_volume(std::vector<Eigen::Triplet<double>>& out, int offset, int T, std::span<const double> kappa,
                  const std::vector<double>* reaction) const;

  ProblemDef problem_;
  GridHierarchy grid_;
  CellField kappa_star_;
  CellField reaction_star_;
  std::vector<int> cell_component_;  // flattened (T, cell) → κ component
  std::vector<CellField> component_kappa_;
};

}  // namespace locrb
