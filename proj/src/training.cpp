#include "locrb/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace locrb {

std::string to_string(BasisTag tag) {
  switch (tag) {
    case BasisTag::pou: return "pou";
    case BasisTag::offline: return "offline";
    case BasisTag::online: return "online";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ReducedBasis

ReducedBasis::ReducedBasis(const Discretization& disc, std::uint64_t seed)
    : n_loc_(disc.grid().dofs_per_subdomain()), seed_(seed) {
  const int n = disc.grid().num_subdomains();
  vectors_.assign(n, Matrix(n_loc_, 0));
  tags_.assign(n, {});
  grams_.reserve(n);
  for (int T = 0; T < n; ++T) grams_.push_back(disc.local_gram(T));
}

int ReducedBasis::total_size() const {
  int s = 0;
  for (const auto& v : vectors_) s += static_cast<int>(v.cols());
  return s;
}

int ReducedBasis::count(int T, BasisTag tag) const {
  return static_cast<int>(std::count(tags_.at(T).begin(), tags_.at(T).end(), tag));
}

std::vector<int> ReducedBasis::sizes() const {
  std::vector<int> s;
  for (int T = 0; T < num_subdomains(); ++T) s.push_back(size(T));
  return s;
}

bool orthonormalize_against(const Matrix& basis, const SparseMatrix& M, Vector& v) {
  const double n0 = std::sqrt(std::max(0.0, v.dot(M * v)));
  if (!(n0 > 0.0) || !std::isfinite(n0)) return false;
  if (basis.cols() > 0) {
    const Matrix MB = M * basis;
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < basis.cols(); ++j) v -= MB.col(j).dot(v) * basis.col(j);
  }
  const double n1 = std::sqrt(std::max(0.0, v.dot(M * v)));
  if (n1 < kDeflationTol * n0) return false;
  v /= n1;
  return true;
}

bool ReducedBasis::add(int T, const Vector& v, BasisTag tag) {
  if (v.size() != n_loc_) throw std::invalid_argument("basis vector has wrong length");
  Vector w = v;
  if (!orthonormalize_against(vectors_.at(T), grams_.at(T), w)) return false;
  append_raw(T, w, tag);
  return true;
}

void ReducedBasis::append_raw(int T, const Vector& v, BasisTag tag) {
  Matrix& B = vectors_.at(T);
  B.conservativeResize(Eigen::NoChange, B.cols() + 1);
  B.col(B.cols() - 1) = v;
  tags_.at(T).push_back(tag);
}

Vector ReducedBasis::project(int T, const Vector& v) const {
  return vectors_.at(T).transpose() * (grams_.at(T) * v);
}

double ReducedBasis::local_norm(int T, const Vector& v) const {
  return std::sqrt(std::max(0.0, v.dot(grams_.at(T) * v)));
}

double ReducedBasis::orthonormality_error(int T) const {
  const Matrix& B = vectors_.at(T);
  if (B.cols() == 0) return 0.0;
  const Matrix G = B.transpose() * (grams_.at(T) * B);
  return (G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

ReducedBasis ReducedBasis::truncated(const std::vector<int>& k) const {
  if (static_cast<int>(k.size()) != num_subdomains()) throw std::invalid_argument("truncation size mismatch");
  ReducedBasis out = *this;
  for (int T = 0; T < num_subdomains(); ++T) {
    const int keep = std::clamp(k[T], 0, size(T));
    out.vectors_[T] = vectors_[T].leftCols(keep);
    out.tags_[T].resize(keep);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probabilistic constants

double erfinv(double y) {
  if (!(y > -1.0 && y < 1.0)) throw std::domain_error("erfinv argument outside (-1, 1)");
  if (y == 0.0) return 0.0;
  // Winitzki's approximation, polished by Newton steps on erf.
  constexpr double a = 0.147;
  const double ln = std::log((1.0 - y) * (1.0 + y));
  const double t = 2.0 / (std::numbers::pi * a) + 0.5 * ln;
  double x = std::copysign(std::sqrt(std::sqrt(t * t - ln / a) - t), y);
  for (int it = 0; it < 50; ++it) {
    const double step = (std::erf(x) - y) / (2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x));
    x -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

// A Gaussian test vector ω satisfies ‖Eω‖ ≥ |⟨ω, v₁⟩|·‖E‖ for the top right singular vector v₁,
// and P(|⟨ω, v₁⟩| < x) = erf(x/√2). All n tests falling below x happens with probability
// erf(x/√2)^n; equating that with eps_fail / max_checks gives ‖E‖ ≤ max‖Eω_i‖ / x.
double range_finder_constant(double eps_fail, int n_test, int max_checks) {
  if (!(eps_fail > 0.0 && eps_fail < 1.0)) throw std::invalid_argument("eps_fail must lie in (0, 1)");
  if (n_test < 1) throw std::invalid_argument("n_test must be positive");
  const double per_check = eps_fail / std::max(1, max_checks);
  const double x = std::sqrt(2.0) * erfinv(std::pow(per_check, 1.0 / n_test));
  return 1.0 / x;
}

std::mt19937_64 make_rng(std::uint64_t seed, int subdomain, int mu_index) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t s = splitmix(seed);
  s = splitmix(s ^ static_cast<std::uint64_t>(subdomain + 1));
  s = splitmix(s ^ (static_cast<std::uint64_t>(mu_index + 1) << 32));
  return std::mt19937_64(s);
}

nlohmann::json to_json(const RangeFinderReport& r) {
  return {{"subdomain", r.subdomain}, {"mu_index", r.mu_index}, {"mu", r.mu.values},
          {"dimension", r.dimension}, {"draws", r.draws},       {"estimates", r.estimates},
          {"tol", r.tol},             {"eps_fail", r.eps_fail}, {"n_test", r.n_test},
          {"c_est", r.c_est},         {"seed", r.seed}};
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const Discretization& disc, FomSolver& fom) : disc_(&disc), fom_(&fom) {
  for (int T = 0; T < disc.grid().num_subdomains(); ++T) oversampling_.push_back(oversampling_domain(disc.grid(), T));
}

BoundaryData Trainer::random_boundary_sample(const DomainPatch& patch, std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  BoundaryData data = disc_->zero_data(patch);
  const int per = patch.trace_per_segment();
  const auto& segs = patch.boundary_segments();
  for (std::size_t si = 0; si < segs.size(); ++si) {
    if (!segs[si].artificial) continue;
    for (int k = 0; k < per; ++k) data.values[si * per + k] = normal(rng);
  }
  return data;
}

int Trainer::transfer_domain_size(int T) const {
  const auto& patch = oversampling_.at(T);
  int n = 0;
  for (const auto& s : patch.boundary_segments()) n += s.artificial ? patch.trace_per_segment() : 0;
  return n;
}

BoundaryData Trainer::embed_artificial(int T, const Vector& values) const {
  const auto& patch = oversampling_.at(T);
  if (values.size() != transfer_domain_size(T)) throw std::invalid_argument("artificial trace size mismatch");
  BoundaryData data = disc_->zero_data(patch);
  const int per = patch.trace_per_segment();
  int k = 0;
  const auto& segs = patch.boundary_segments();
  for (std::size_t si = 0; si < segs.size(); ++si) {
    if (!segs[si].artificial) continue;
    data.values.segment(si * per, per) = values.segment(k, per);
    k += per;
  }
  return data;
}

Vector Trainer::apply_transfer(int T, const ParameterVector& mu, const BoundaryData& g) {
  const auto& patch = oversampling_.at(T);
  BoundaryData data = g;
  if (data.values.size() != patch.trace_size())
    throw std::invalid_argument("boundary data does not match the oversampling domain of subdomain " +
                                std::to_string(T));
  const int per = patch.trace_per_segment();
  const auto& segs = patch.boundary_segments();
  for (std::size_t si = 0; si < segs.size(); ++si)
    if (!segs[si].artificial) data.values.segment(si * per, per).setZero();
  return restrict_to(patch, fom_->solve_patch(patch, mu, data, PatchRhs::zero()), T);
}

Vector Trainer::source_snapshot(int T, const ParameterVector& mu, bool include_boundary_data) {
  const auto& patch = oversampling_.at(T);
  const BoundaryData data = include_boundary_data ? disc_->dirichlet_data(patch) : disc_->zero_data(patch);
  return restrict_to(patch, fom_->solve_patch(patch, mu, data, PatchRhs::source()), T);
}

Matrix Trainer::transfer_matrix(int T, const ParameterVector& mu) {
  const int n = transfer_domain_size(T);
  Matrix P(disc_->grid().dofs_per_subdomain(), n);
  for (int j = 0; j < n; ++j) P.col(j) = apply_transfer(T, mu, embed_artificial(T, Vector::Unit(n, j)));
  return P;
}

Matrix Trainer::adaptive_range_finder(int T, const ParameterVector& mu, const RangeFinderOptions& opt,
                                      std::mt19937_64& rng, RangeFinderReport& report, const Matrix& initial) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const int n_loc = disc_->grid().dofs_per_subdomain();
  const int max_dim = opt.max_dim < 0 ? n_loc : opt.max_dim;
  const SparseMatrix M = disc_->local_gram(T);
  const auto& patch = oversampling_.at(T);

  report = {};
  report.subdomain = T;
  report.mu = mu;
  report.tol = opt.tol;
  report.eps_fail = opt.eps_fail;
  report.n_test = opt.n_test;
  report.c_est = range_finder_constant(opt.eps_fail, opt.n_test, max_dim + 1);

  Matrix basis = initial.cols() > 0 ? initial : Matrix(n_loc, 0);
  const int k0 = static_cast<int>(basis.cols());

  auto project_out = [&](Vector& t, const Matrix& B) {
    if (B.cols() == 0) return;
    const Matrix MB = M * B;
    for (int pass = 0; pass < 2; ++pass) t -= B * (MB.transpose() * t);
  };

  std::vector<Vector> tests;
  for (int i = 0; i < opt.n_test; ++i) {
    Vector t = apply_transfer(T, mu, random_boundary_sample(patch, rng));
    project_out(t, basis);
    tests.push_back(std::move(t));
  }
  auto estimate = [&] {
    double mx = 0.0;
    for (const auto& t : tests) mx = std::max(mx, std::sqrt(std::max(0.0, t.dot(M * t))));
    return report.c_est * mx;
  };

  const int max_draws = 2 * max_dim + opt.n_test;
  while (true) {
    const double est = estimate();
    report.estimates.push_back(est);
    if (est <= opt.tol) break;
    if (report.dimension >= max_dim || report.draws >= max_draws)
      throw ConvergenceError("range finder on subdomain " + std::to_string(T) + " did not reach tol " +
                             std::to_string(opt.tol) + " within " + std::to_string(max_dim) + " basis vectors");
    Vector v = apply_transfer(T, mu, random_boundary_sample(patch, rng));
    ++report.draws;
    if (!orthonormalize_against(basis, M, v)) continue;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v;
    ++report.dimension;
    const Vector Mv = M * v;
    for (auto& t : tests) t -= Mv.dot(t) * v;
  }
  return basis.rightCols(basis.cols() - k0);
}

Trainer::InitialBasis Trainer::build_initial_rb(const std::vector<ParameterVector>& training_set,
                                                const RangeFinderOptions& opt, std::uint64_t seed) {
  if (training_set.empty()) throw std::invalid_argument("training set is empty");
  const auto& g = disc_->grid();
  InitialBasis out{ReducedBasis(*disc_, seed), {}};
  for (int T = 0; T < g.num_subdomains(); ++T) {
    const auto& sd = g.subdomain(T);
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        out.basis.add(T, disc_->coarse_hat_on(g.coarse_node_index(sd.ix + i, sd.iy + k), T), BasisTag::pou);
  }
  for (std::size_t j = 0; j < training_set.size(); ++j) {
    const auto& mu = training_set[j];
    disc_->problem().check_admissible(mu);
    for (int T = 0; T < g.num_subdomains(); ++T) {
      auto rng = make_rng(seed, T, static_cast<int>(j));
      RangeFinderReport report;
      const Matrix added = adaptive_range_finder(T, mu, opt, rng, report, out.basis.vectors(T));
      report.mu_index = static_cast<int>(j);
      report.seed = seed;
      for (Eigen::Index c = 0; c < added.cols(); ++c) out.basis.add(T, added.col(c), BasisTag::offline);
      out.basis.add(T, source_snapshot(T, mu), BasisTag::offline);
      out.reports.push_back(std::move(report));
    }
  }
  return out;
}

}  // namespace locrb
