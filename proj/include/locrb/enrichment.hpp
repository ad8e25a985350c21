#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "locrb/estimator.hpp"
#include "locrb/rom.hpp"

namespace locrb {

enum class MarkingRule { squared, linear };

/// Smallest prefix of the indicators sorted descending (ties by index) whose squared (or plain)
/// sum reaches θ² (or θ) of the total. All-zero indicators give an empty set.
std::vector<int> mark(const std::vector<double>& indicators, double theta, MarkingRule rule = MarkingRule::squared);

struct StopCriterion {
  enum class Kind { estimator, true_error };
  Kind kind = Kind::true_error;
  double tol = 1e-3;

  /// Parses "estimator:VALUE" or "true-error:VALUE".
  static StopCriterion parse(const std::string& spec);
  std::string to_string() const;
};

struct AdaptiveOptions {
  StopCriterion stop;
  double theta = 0.5;
  MarkingRule rule = MarkingRule::squared;
  int max_iter = 50;
  double c_pu = 1.0;
};

struct IterationRecord {
  int iteration = 0;
  ParameterVector mu;
  double estimate = 0.0;
  double relative_estimate = 0.0;
  double alpha = 0.0;
  std::vector<double> indicators;
  std::vector<int> marked;
  std::vector<int> enriched;
  std::vector<int> basis_sizes;
  std::vector<int> online_counts;
  std::optional<double> true_error;    ///< ‖u_h − u_rb‖_h / ‖u_h‖_h
  std::optional<double> energy_error;  ///< same in the a_DG(·,·;μ) energy norm
  double seconds = 0.0;
};

nlohmann::json to_json(const IterationRecord& r);

struct AdaptiveResult {
  BlockVector u_rb;
  ReducedBasis basis;
  std::vector<IterationRecord> log;
  bool converged = false;
  int fom_solves = 0;
  std::string reason;
};

class Enricher {
public:
  Enricher(const Discretization& disc, FomSolver& fom, Estimator& estimator);

  /// Solves on O_T with the residual as load and homogeneous artificial data, then adds the
  /// restriction of the correction to V_rb(T). Returns false if the correction is numerically zero
  /// or dependent.
  bool enrich(int T, const ParameterVector& mu, const ResidualData& res, ReducedBasis& rb);
  bool enrich(int T, const ParameterVector& mu, const BlockVector& u_rb, ReducedBasis& rb);
  /// The patch correction Ψ restricted to T.
  Vector correction(int T, const ParameterVector& mu, const ResidualData& res);

  AdaptiveResult adaptive_solve(const ReducedBasis& initial, const ParameterVector& mu, const AdaptiveOptions& opt);

private:
  const Discretization* disc_;
  FomSolver* fom_;
  Estimator* est_;
};

}  // namespace locrb
