#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "locrb/fom.hpp"

namespace locrb {

enum class BasisTag : std::uint8_t { pou = 0, offline = 1, online = 2 };
std::string to_string(BasisTag tag);

/// Per-subdomain local reduced spaces, orthonormal in the local inner product
/// (κ* stiffness + r* mass on the subdomain).
class ReducedBasis {
public:
  ReducedBasis() = default;
  explicit ReducedBasis(const Discretization& disc, std::uint64_t seed = 0);

  int num_subdomains() const { return static_cast<int>(vectors_.size()); }
  int dofs_per_subdomain() const { return n_loc_; }
  int size(int T) const { return static_cast<int>(vectors_.at(T).cols()); }
  int total_size() const;
  int count(int T, BasisTag tag) const;
  std::vector<int> sizes() const;

  const Matrix& vectors(int T) const { return vectors_.at(T); }
  const std::vector<BasisTag>& tags(int T) const { return tags_.at(T); }
  const SparseMatrix& gram(int T) const { return grams_.at(T); }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t s) { seed_ = s; }

  /// Orthonormalizes v against V_rb(T) (two Gram-Schmidt passes) and appends it.
  /// Returns false, leaving the basis unchanged, if v is numerically dependent.
  bool add(int T, const Vector& v, BasisTag tag);
  /// Appends an already orthonormal vector without checks (deserialization).
  void append_raw(int T, const Vector& v, BasisTag tag);
  /// Coefficients of the local-inner-product projection of v onto V_rb(T).
  Vector project(int T, const Vector& v) const;
  double local_norm(int T, const Vector& v) const;
  /// max |BᵀMB − I| on subdomain T.
  double orthonormality_error(int T) const;
  /// Keeps the first `k[T]` vectors per subdomain.
  ReducedBasis truncated(const std::vector<int>& k) const;

private:
  std::vector<Matrix> vectors_;
  std::vector<std::vector<BasisTag>> tags_;
  std::vector<SparseMatrix> grams_;
  int n_loc_ = 0;
  std::uint64_t seed_ = 0;
};

/// Relative threshold below which a vector counts as dependent on the current basis.
inline constexpr double kDeflationTol = 1e-10;

/// Modified Gram-Schmidt with one re-orthogonalization pass in the M-inner product.
/// Returns false if the remaining norm drops below kDeflationTol times the input norm.
bool orthonormalize_against(const Matrix& basis, const SparseMatrix& M, Vector& v);

struct RangeFinderOptions {
  double tol = 1e-2;
  double eps_fail = 1e-15;
  int n_test = 15;
  int max_dim = -1;  ///< -1: local space dimension
};

struct RangeFinderReport {
  int subdomain = 0;
  int mu_index = 0;
  ParameterVector mu;
  int dimension = 0;  ///< vectors added by this run
  int draws = 0;
  std::vector<double> estimates;
  double tol = 0.0;
  double eps_fail = 0.0;
  int n_test = 0;
  double c_est = 0.0;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const RangeFinderReport& r);

/// Constant turning the maximum of n_test Gaussian test norms into an upper bound of the
/// operator norm that fails with probability at most eps_fail over up to max_checks checks.
double range_finder_constant(double eps_fail, int n_test, int max_checks);
/// Inverse error function on (−1, 1).
double erfinv(double y);

/// Seeded generator for the stream (seed, subdomain, training-parameter index).
std::mt19937_64 make_rng(std::uint64_t seed, int subdomain, int mu_index);

class Trainer {
public:
  Trainer(const Discretization& disc, FomSolver& fom);

  /// Standard normal values on the artificial boundary segments, zero on ∂Ω segments.
  BoundaryData random_boundary_sample(const DomainPatch& patch, std::mt19937_64& rng) const;
  /// Number of artificial trace values of the oversampling domain of T.
  int transfer_domain_size(int T) const;
  /// Solution on O_T with data g (∂Ω segments homogeneous) and zero source, restricted to T.
  Vector apply_transfer(int T, const ParameterVector& mu, const BoundaryData& g);
  /// Embeds artificial-boundary values (transfer_domain_size entries) into full segment data.
  BoundaryData embed_artificial(int T, const Vector& values) const;
  /// Solution on O_T driven by f and the global Dirichlet data with zero artificial data.
  Vector source_snapshot(int T, const ParameterVector& mu, bool include_boundary_data = true);
  /// Dense transfer matrix: artificial trace values → fine DOFs of T.
  Matrix transfer_matrix(int T, const ParameterVector& mu);

  /// Adapts `basis` (orthonormal in the local product, may start nonempty) until the test
  /// estimate drops below tol. New vectors are returned as columns.
  Matrix adaptive_range_finder(int T, const ParameterVector& mu, const RangeFinderOptions& opt, std::mt19937_64& rng,
                               RangeFinderReport& report, const Matrix& initial = Matrix());

  struct InitialBasis {
    ReducedBasis basis;
    std::vector<RangeFinderReport> reports;
  };
  InitialBasis build_initial_rb(const std::vector<ParameterVector>& training_set, const RangeFinderOptions& opt,
                                std::uint64_t seed);

private:
  const Discretization* disc_;
  FomSolver* fom_;
  std::vector<DomainPatch> oversampling_;
};

}  // namespace locrb
