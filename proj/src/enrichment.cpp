#include "locrb/enrichment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace locrb {

std::vector<int> mark(const std::vector<double>& indicators, double theta, MarkingRule rule) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("marking fraction must lie in (0, 1]");
  std::vector<int> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return indicators[a] > indicators[b]; });
  auto weight = [&](double d) { return rule == MarkingRule::squared ? d * d : d; };
  double total = 0.0;
  for (double d : indicators) total += weight(d);
  if (!(total > 0.0)) return {};
  const double target = (rule == MarkingRule::squared ? theta * theta : theta) * total;
  // Relative slack keeps exact ties (e.g. equal indicators) from being lost to round-off.
  const double slack = 1e-12 * total;
  std::vector<int> marked;
  double acc = 0.0;
  for (int T : order) {
    if (indicators[T] <= 0.0) break;
    marked.push_back(T);
    acc += weight(indicators[T]);
    if (acc >= target - slack) break;
  }
  return marked;
}

StopCriterion StopCriterion::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("stop criterion must look like KIND:VALUE");
  const std::string kind = spec.substr(0, colon);
  StopCriterion s;
  if (kind == "estimator") {
    s.kind = Kind::estimator;
  } else if (kind == "true-error") {
    s.kind = Kind::true_error;
  } else {
    throw std::invalid_argument("unknown stop criterion '" + kind + "'");
  }
  std::size_t used = 0;
  const std::string value = spec.substr(colon + 1);
  try {
    s.tol = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || !(s.tol > 0.0))
    throw std::invalid_argument("stop tolerance must be a positive number, got '" + value + "'");
  return s;
}

std::string StopCriterion::to_string() const {
  return std::string(kind == Kind::estimator ? "estimator" : "true-error") + ":" + std::to_string(tol);
}

nlohmann::json to_json(const IterationRecord& r) {
  nlohmann::json j = {{"iteration", r.iteration},
                      {"mu", r.mu.values},
                      {"estimate", r.estimate},
                      {"relative_estimate", r.relative_estimate},
                      {"alpha", r.alpha},
                      {"indicators", r.indicators},
                      {"marked", r.marked},
                      {"enriched", r.enriched},
                      {"basis_sizes", r.basis_sizes},
                      {"online_counts", r.online_counts}};
  j["true_error"] = r.true_error ? nlohmann::json(*r.true_error) : nlohmann::json(nullptr);
  j["energy_error"] = r.energy_error ? nlohmann::json(*r.energy_error) : nlohmann::json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------

Enricher::Enricher(const Discretization& disc, FomSolver& fom, Estimator& estimator)
    : disc_(&disc), fom_(&fom), est_(&estimator) {}

Vector Enricher::correction(int T, const ParameterVector& mu, const ResidualData& res) {
  const auto patch = oversampling_domain(disc_->grid(), T);
  const Vector r = gather(patch, res.r, disc_->grid().dofs_per_subdomain());
  if (r.norm() <= 1e-11 * res.rhs_norm) return Vector::Zero(disc_->grid().dofs_per_subdomain());
  const Vector psi = fom_->solve_patch(patch, mu, disc_->zero_data(patch), PatchRhs::from_functional(r));
  return restrict_to(patch, psi, T);
}

bool Enricher::enrich(int T, const ParameterVector& mu, const ResidualData& res, ReducedBasis& rb) {
  return rb.add(T, correction(T, mu, res), BasisTag::online);
}

bool Enricher::enrich(int T, const ParameterVector& mu, const BlockVector& u_rb, ReducedBasis& rb) {
  return enrich(T, mu, est_->assemble_residual(u_rb, mu), rb);
}

AdaptiveResult Enricher::adaptive_solve(const ReducedBasis& initial, const ParameterVector& mu,
                                        const AdaptiveOptions& opt) {
  disc_->problem().check_admissible(mu);
  using clock = std::chrono::steady_clock;
  AdaptiveResult out;
  out.basis = initial;
  ReducedModel model(*disc_, out.basis);

  BlockVector u_h;
  double uh_h = 0.0, uh_a = 0.0;
  const bool validate = opt.stop.kind == StopCriterion::Kind::true_error;
  if (validate) {
    u_h = fom_->solve_fom(mu);
    ++out.fom_solves;
    uh_h = est_->h_norm(u_h);
    uh_a = est_->energy_norm(u_h, mu);
  }

  for (int it = 0;; ++it) {
    const auto t0 = clock::now();
    IterationRecord rec;
    rec.iteration = it;
    rec.mu = mu;
    const auto sol = model.solve(mu);
    const auto res = est_->assemble_residual(sol.u_rb, mu);
    const auto e = est_->estimate(res, opt.c_pu);
    rec.estimate = e.estimate;
    rec.alpha = e.alpha;
    rec.indicators = e.indicators;
    const double urb_h = est_->h_norm(sol.u_rb);
    rec.relative_estimate = urb_h > 0.0 ? e.estimate / urb_h : e.estimate;
    if (validate) {
      const BlockVector diff = u_h - sol.u_rb;
      rec.true_error = uh_h > 0.0 ? est_->h_norm(diff) / uh_h : est_->h_norm(diff);
      rec.energy_error = uh_a > 0.0 ? est_->energy_norm(diff, mu) / uh_a : est_->energy_norm(diff, mu);
    }
    const double measure = validate ? *rec.true_error : rec.relative_estimate;
    out.u_rb = sol.u_rb;

    auto finish = [&](bool converged, std::string reason) {
      rec.basis_sizes = out.basis.sizes();
      for (int T = 0; T < out.basis.num_subdomains(); ++T)
        rec.online_counts.push_back(out.basis.count(T, BasisTag::online));
      rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      out.log.push_back(std::move(rec));
      out.converged = converged;
      out.reason = std::move(reason);
    };

    if (measure <= opt.stop.tol) {
      finish(true, "tolerance reached");
      break;
    }
    if (it >= opt.max_iter) {
      finish(false, "maximum number of iterations reached");
      break;
    }
    rec.marked = mark(e.indicators, opt.theta, opt.rule);
    for (int T : rec.marked)
      if (enrich(T, mu, res, out.basis)) rec.enriched.push_back(T);
    if (rec.enriched.empty()) {
      finish(false, "no marked subdomain produced a new basis vector");
      break;
    }
    model.update(out.basis, rec.enriched);
    rec.basis_sizes = out.basis.sizes();
    for (int T = 0; T < out.basis.num_subdomains(); ++T)
      rec.online_counts.push_back(out.basis.count(T, BasisTag::online));
    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.log.push_back(std::move(rec));
  }
  return out;
}

}  // namespace locrb
