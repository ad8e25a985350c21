#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "locrb/errors.hpp"
#include "locrb/grid.hpp"

namespace locrb {

/// A point μ of the parameter space P ⊂ R^q.
struct ParameterVector {
  std::vector<double> values;

  ParameterVector() = default;
  explicit ParameterVector(std::vector<double> v) : values(std::move(v)) {}
  ParameterVector(std::initializer_list<double> v) : values(v) {}

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values.at(i); }
  double& operator[](int i) { return values.at(i); }
  bool operator==(const ParameterVector&) const = default;
};

std::string to_string(const ParameterVector& mu);

/// Axis-aligned high-conductivity region with κ = 10^{μ_{param_index}}.
struct Channel {
  Box rect;
  int param_index = 0;
};

/// Boundary condition on one side of the rectangular domain. Dirichlet data is
/// linear along the side, from `start` at the lower tangential coordinate to `end`.
struct BoundaryCondition {
  enum class Kind { dirichlet, neumann };
  Kind kind = Kind::dirichlet;
  double start = 0.0;
  double end = 0.0;

  bool is_dirichlet() const { return kind == Kind::dirichlet; }
  static BoundaryCondition dirichlet(double value) { return {Kind::dirichlet, value, value}; }
  static BoundaryCondition linear(double a, double b) { return {Kind::dirichlet, a, b}; }
  static BoundaryCondition neumann() { return {Kind::neumann, 0.0, 0.0}; }
};

struct Coefficients {
  double kappa = 0.0;
  double reaction = 0.0;
  double source = 0.0;
};

/// Parametric diffusion-reaction problem −∇·(κ_μ∇u) + r_μ u = f_μ on a rectangle.
///
/// κ_μ is κ_bg outside the channels and 10^{μ_i} inside channel i (the first
/// channel containing a point wins). r and f are constants unless overridden by the
/// optional callables, which make the problem non-affine.
struct ProblemDef {
  std::string name = "custom";
  Box domain;
  int nx = 1, ny = 1, m = 1;

  double kappa_background = 1.0;
  std::vector<Channel> channels;
  double reaction = 1.0;
  double source = 0.0;
  std::array<BoundaryCondition, 4> boundary{BoundaryCondition::dirichlet(0.0), BoundaryCondition::dirichlet(0.0),
                                            BoundaryCondition::dirichlet(0.0), BoundaryCondition::dirichlet(0.0)};

  ParameterVector mu_star;
  std::vector<std::array<double, 2>> parameter_box;
  std::vector<ParameterVector> training_set;

  double penalty = 16.0;

  std::function<double(Point, const ParameterVector&)> kappa_fn;
  std::function<double(Point, const ParameterVector&)> reaction_fn;
  std::function<double(Point, const ParameterVector&)> source_fn;
  std::function<double(Point)> dirichlet_fn;

  int q() const { return static_cast<int>(parameter_box.size()); }
  const BoundaryCondition& bc(Side s) const { return boundary[static_cast<int>(s)]; }
  bool is_affine() const { return !kappa_fn && !reaction_fn && !source_fn; }

  /// Index of the κ component a point belongs to: 0 background, i + 1 for channel i.
  int kappa_component(Point p) const;
  double dirichlet_value(Side s, Point p) const;

  /// Throws ParameterError unless μ has length q and lies in the parameter box.
  void check_admissible(const ParameterVector& mu) const;
  bool admissible(const ParameterVector& mu) const;
  /// Throws ConfigError on inconsistent definitions.
  void validate() const;
};

ProblemDef load_problem(const nlohmann::json& config);
ProblemDef load_problem_file(const std::string& path);
ProblemDef preset(const std::string& name);
std::vector<std::string> preset_names();
nlohmann::json to_json(const ProblemDef& p);

Coefficients eval_coefficients(const ProblemDef& p, const ParameterVector& mu, Point x);

/// One term θ_k(μ)·field_k(x) of an affine expansion.
struct AffineTerm {
  std::string label;
  std::function<double(const ParameterVector&)> theta;
  std::function<double(Point)> field;
};

struct AffineDecomposition {
  std::vector<AffineTerm> kappa;
  std::vector<AffineTerm> reaction;
  std::vector<AffineTerm> source;

  static double evaluate(const std::vector<AffineTerm>& terms, const ParameterVector& mu, Point x);
};

/// Throws NotAffineError for problems defined through callables.
AffineDecomposition affine_decomposition(const ProblemDef& p);

}  // namespace locrb
