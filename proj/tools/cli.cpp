#include "locrb/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "locrb/basis_io.hpp"
#include "locrb/enrichment.hpp"
#include "locrb/run_io.hpp"

namespace fs = std::filesystem;

namespace locrb {

namespace {

struct CommonArgs {
  std::string config;
  std::string preset;
  std::uint64_t seed = 0;
  std::string out;
  std::string solver = "direct";
};

struct OfflineArgs {
  double tol = 1e-2;
  double eps_fail = 1e-15;
  int n_test = 15;
};

struct OnlineArgs {
  std::string basis;
  std::vector<std::string> mu;
  std::string stop = "true-error:1e-3";
  double theta = 0.5;
  int max_iter = 50;
  double c_pu = 1.0;
  bool linear_marking = false;
};

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  auto* cfg = cmd->add_option("--config", a.config, "problem configuration (JSON)")->check(CLI::ExistingFile);
  auto* pre = cmd->add_option("--preset", a.preset, "built-in problem preset");
  cfg->excludes(pre);
  cmd->add_option("--seed", a.seed, "seed of all random streams");
  cmd->add_option("--out", a.out, "output directory")->required();
  cmd->add_option("--solver", a.solver, "full-order solver")->check(CLI::IsMember({"direct", "pcg"}));
}

void add_offline(CLI::App* cmd, OfflineArgs& a) {
  cmd->add_option("--tol", a.tol, "range finder tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--eps-fail", a.eps_fail, "range finder failure probability")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--n-test", a.n_test, "range finder test vectors")->check(CLI::PositiveNumber);
}

ProblemDef load(const CommonArgs& a) {
  if (a.config.empty() && a.preset.empty()) throw UsageError("one of --config or --preset is required");
  return a.config.empty() ? preset(a.preset) : load_problem_file(a.config);
}

nlohmann::json offline_config(const ProblemDef& p, const OfflineArgs& o) {
  return {{"problem", to_json(p)}, {"range_finder", {{"tol", o.tol}, {"eps_fail", o.eps_fail}, {"n_test", o.n_test}}}};
}

std::uint64_t problem_fingerprint(const ProblemDef& p) { return fingerprint(to_json(p)); }

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path.string(), j.dump(2) + "\n"); }

std::vector<int> tag_counts(const ReducedBasis& rb, BasisTag tag) {
  std::vector<int> c;
  for (int T = 0; T < rb.num_subdomains(); ++T) c.push_back(rb.count(T, tag));
  return c;
}

SolverKind solver_kind(const CommonArgs& a) { return a.solver == "pcg" ? SolverKind::pcg : SolverKind::direct; }

// ---------------------------------------------------------------------------

int cmd_offline(const CommonArgs& c, const OfflineArgs& o, std::ostream& out) {
  RunManifest man;
  man.started = utc_timestamp();
  const ProblemDef p = load(c);
  const Discretization disc(p);
  FomSolver fom(disc, solver_kind(c));
  Trainer trainer(disc, fom);
  const RangeFinderOptions opt{o.tol, o.eps_fail, o.n_test, -1};
  const auto init = trainer.build_initial_rb(p.training_set, opt, c.seed);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  save_basis((dir / "basis.lrb").string(), init.basis, disc.grid(), problem_fingerprint(p));
  const auto offline = tag_counts(init.basis, BasisTag::offline);
  write_text((dir / "offline_basis_counts.csv").string(), csv_grid(offline, p.nx, p.ny));
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : init.reports) reports.push_back(to_json(r));
  write_json(dir / "range_finder_reports.json", reports);

  man.command = "offline";
  man.config = offline_config(p, o);
  man.fingerprint = fingerprint(man.config);
  man.seed = c.seed;
  man.files = {"basis.lrb", "offline_basis_counts.csv", "range_finder_reports.json", "manifest.json"};
  man.extra = {{"problem_fingerprint", hex64(problem_fingerprint(p))},
               {"max_offline", *std::max_element(offline.begin(), offline.end())},
               {"total_basis_size", init.basis.total_size()}};
  man.finished = utc_timestamp();
  write_json(dir / "manifest.json", man.to_json());
  out << "offline: " << init.basis.total_size() << " basis vectors, max offline per subdomain "
      << *std::max_element(offline.begin(), offline.end()) << "\n";
  return kExitOk;
}

ParameterVector online_mu(const ProblemDef& p, const std::vector<std::string>& specs) {
  ParameterVector mu = p.training_set.empty() ? p.mu_star : p.training_set.front();
  for (const auto& s : specs) mu = parse_mu_spec(s, mu);
  p.check_admissible(mu);
  return mu;
}

int cmd_online(const CommonArgs& c, const OnlineArgs& o, std::ostream& out) {
  RunManifest man;
  man.started = utc_timestamp();
  const ProblemDef p = load(c);
  const ParameterVector mu = online_mu(p, o.mu);
  AdaptiveOptions opt;
  try {
    opt.stop = StopCriterion::parse(o.stop);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(o.theta > 0.0)) throw UsageError("--theta must lie in (0, 1]");
  opt.theta = o.theta;
  opt.max_iter = o.max_iter;
  opt.c_pu = o.c_pu;
  opt.rule = o.linear_marking ? MarkingRule::linear : MarkingRule::squared;

  const Discretization disc(p);
  auto file = load_basis(o.basis, disc);
  if (file.fingerprint != problem_fingerprint(p))
    throw ConfigError("basis fingerprint " + hex64(file.fingerprint) + " does not match the problem (" +
                      hex64(problem_fingerprint(p)) + ")");
  FomSolver fom(disc, solver_kind(c));
  Estimator est(disc, fom);
  Enricher enricher(disc, fom, est);
  const auto result = enricher.adaptive_solve(file.basis, mu, opt);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::string log;
  for (const auto& rec : result.log) log += to_json(rec).dump() + "\n";
  write_text((dir / "enrichment_log.jsonl").string(), log);
  write_text((dir / "online_basis_counts.csv").string(),
             csv_grid(tag_counts(result.basis, BasisTag::online), p.nx, p.ny));
  const auto& g = disc.grid();
  std::vector<std::vector<double>> lattice;
  for (int iy = 0; iy < g.ny() * g.m(); ++iy) {
    std::vector<double> row;
    for (int ix = 0; ix < g.nx() * g.m(); ++ix) {
      const int T = g.subdomain_at(ix / g.m(), iy / g.m());
      row.push_back(disc.evaluate(result.u_rb, T, g.cell_center(T, ix % g.m() + g.m() * (iy % g.m()))));
    }
    lattice.push_back(std::move(row));
  }
  write_text((dir / "solution.csv").string(), csv_table(lattice));
  save_basis((dir / "basis.lrb").string(), result.basis, g, file.fingerprint);

  man.command = "online";
  man.config = {{"problem", to_json(p)},
                {"mu", mu.values},
                {"stop", opt.stop.to_string()},
                {"theta", opt.theta},
                {"marking", o.linear_marking ? "linear" : "squared"},
                {"max_iter", opt.max_iter},
                {"c_pu", opt.c_pu},
                {"basis_fingerprint", hex64(file.fingerprint)}};
  man.fingerprint = fingerprint(man.config);
  man.seed = c.seed;
  man.files = {"enrichment_log.jsonl", "online_basis_counts.csv", "solution.csv", "basis.lrb", "manifest.json"};
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& rec : result.log) timings.push_back(rec.seconds);
  man.extra = {{"fom_solves", result.fom_solves},
               {"converged", result.converged},
               {"reason", result.reason},
               {"iterations", static_cast<int>(result.log.size()) - 1},
               {"iteration_seconds", timings}};
  man.finished = utc_timestamp();
  write_json(dir / "manifest.json", man.to_json());

  const auto& last = result.log.back();
  out << "online: " << (result.converged ? "converged" : "not converged") << " after " << result.log.size() - 1
      << " iterations, relative estimate " << format_double(last.relative_estimate);
  if (last.true_error) out << ", true error " << format_double(*last.true_error);
  out << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

// Dense oracle for one subdomain: σ_{k+1} of the transfer operator (trace Euclidean → local h-norm)
// and the true error of the range finder space of dimension k.
nlohmann::json svd_check(Trainer& trainer, const Discretization& disc, int T, const ParameterVector& mu,
                         const RangeFinderOptions& opt, std::uint64_t seed) {
  const Matrix P = trainer.transfer_matrix(T, mu);
  // No artificial boundary: the transfer operator is zero.
  if (P.cols() == 0)
    return {{"subdomain", T}, {"dimension", 0}, {"true_error", 0.0}, {"sigma_next", 0.0}, {"within_tol", true}};
  const Matrix M = Matrix(disc.local_gram(T));
  const Eigen::LLT<Matrix> llt(M);
  const Matrix LtP = llt.matrixU() * P;
  const Eigen::JacobiSVD<Matrix> svd(LtP);
  auto rng = make_rng(seed, T, 0);
  RangeFinderReport report;
  const Matrix Q = trainer.adaptive_range_finder(T, mu, opt, rng, report);
  const Matrix E = llt.matrixU() * (P - Q * (Q.transpose() * (M * P)));
  const double err = E.cols() > 0 ? Eigen::JacobiSVD<Matrix>(E).singularValues()(0) : 0.0;
  const auto& s = svd.singularValues();
  const int k = static_cast<int>(Q.cols());
  return {{"subdomain", T},
          {"dimension", k},
          {"true_error", err},
          {"sigma_next", k < s.size() ? s(k) : 0.0},
          {"within_tol", err <= opt.tol}};
}

int cmd_validate(const CommonArgs& c, const OfflineArgs& o, const OnlineArgs& v, std::ostream& out) {
  RunManifest man;
  man.started = utc_timestamp();
  const ProblemDef p = load(c);
  std::vector<ParameterVector> mus;
  const ParameterVector base = p.training_set.empty() ? p.mu_star : p.training_set.front();
  for (const auto& s : v.mu) mus.push_back(parse_mu_spec(s, base));
  if (mus.empty()) mus = p.training_set;
  for (const auto& mu : mus) p.check_admissible(mu);

  const Discretization disc(p);
  FomSolver fom(disc, solver_kind(c));
  Trainer trainer(disc, fom);
  const RangeFinderOptions opt{o.tol, o.eps_fail, o.n_test, -1};
  ReducedBasis rb;
  if (!v.basis.empty()) {
    auto file = load_basis(v.basis, disc);
    if (file.fingerprint != problem_fingerprint(p)) throw ConfigError("basis fingerprint does not match the problem");
    rb = std::move(file.basis);
  } else {
    rb = trainer.build_initial_rb(p.training_set, opt, c.seed).basis;
  }
  Estimator est(disc, fom);
  ReducedModel model(disc, rb);

  constexpr int kDenseCap = 2000;
  const bool small = disc.grid().num_dofs() <= kDenseCap;
  std::optional<double> cpu;
  if (small) cpu = brute_force_cpu(disc, rb, est.mode(), kDenseCap);

  nlohmann::json rows = nlohmann::json::array();
  bool reliable = true;
  for (const auto& mu : mus) {
    const BlockVector u_h = fom.solve_fom(mu);
    const auto sol = model.solve(mu);
    const auto res = est.assemble_residual(sol.u_rb, mu);
    const auto e = est.estimate(res, v.c_pu);
    const double err = est.h_norm(u_h - sol.u_rb);
    const double norm_uh = est.h_norm(u_h);
    nlohmann::json row = {{"mu", mu.values},
                          {"error", err},
                          {"relative_error", norm_uh > 0.0 ? err / norm_uh : err},
                          {"estimate", e.estimate},
                          {"alpha", e.alpha},
                          {"effectivity", err > 0.0 ? e.estimate / err : 0.0},
                          {"global_dual_norm", est.global_dual_norm(res)}};
    if (cpu) {
      const double bound = e.estimate / v.c_pu * *cpu;
      row["estimate_bf"] = bound;
      row["reliable"] = err <= bound * (1.0 + 1e-10) + 1e-14;
      reliable = reliable && row["reliable"].get<bool>();
    }
    rows.push_back(std::move(row));
  }

  nlohmann::json report = {{"rows", rows}, {"dense_oracles", small}, {"num_dofs", disc.grid().num_dofs()}};
  if (small) {
    report["c_pu_bf"] = *cpu;
    report["reliability"] = reliable ? "pass" : "fail";
    nlohmann::json svd = nlohmann::json::array();
    FomSolver oracle_fom(disc);
    Trainer oracle(disc, oracle_fom);
    for (int T = 0; T < disc.grid().num_subdomains(); ++T)
      svd.push_back(svd_check(oracle, disc, T, p.training_set.empty() ? p.mu_star : p.training_set.front(), opt, c.seed));
    report["range_finder_svd"] = svd;
  } else {
    report["dense_oracles_skipped"] = "instance above the dense oracle cap of " + std::to_string(kDenseCap) + " DOFs";
  }

  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_json(dir / "validation_report.json", report);
  man.command = "validate";
  man.config = offline_config(p, o);
  man.config["c_pu"] = v.c_pu;
  man.fingerprint = fingerprint(man.config);
  man.seed = c.seed;
  man.files = {"validation_report.json", "manifest.json"};
  man.extra = {{"fom_solves", fom.num_global_solves()}};
  man.finished = utc_timestamp();
  write_json(dir / "manifest.json", man.to_json());
  out << "validate: " << mus.size() << " parameters";
  if (small) out << ", reliability " << (reliable ? "pass" : "fail");
  out << "\n";
  return kExitOk;
}

}  // namespace

ParameterVector parse_mu_spec(const std::string& spec, ParameterVector base) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParameterError("parameter override '" + item + "' must look like k=v");
    std::size_t used_k = 0, used_v = 0;
    int k = -1;
    double value = 0.0;
    try {
      k = std::stoi(item.substr(0, eq), &used_k);
      value = std::stod(item.substr(eq + 1), &used_v);
    } catch (const std::exception&) {
      throw ParameterError("cannot parse parameter override '" + item + "'");
    }
    if (used_k != eq || used_v != item.size() - eq - 1)
      throw ParameterError("cannot parse parameter override '" + item + "'");
    if (k < 0 || k >= base.size())
      throw ParameterError("parameter index " + std::to_string(k) + " out of range (q = " + std::to_string(base.size()) + ")");
    base[k] = value;
  }
  return base;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive localized reduced basis solver", "locrb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonArgs off_c, on_c, val_c;
  OfflineArgs off_o, val_o;
  OnlineArgs on_o, val_v;

  auto* offline = app.add_subcommand("offline", "randomized offline training of the local bases");
  add_common(offline, off_c);
  add_offline(offline, off_o);

  auto* online = app.add_subcommand("online", "adaptive online enrichment for one parameter");
  add_common(online, on_c);
  online->add_option("--basis", on_o.basis, "basis container from the offline phase")->required()->check(CLI::ExistingFile);
  online->add_option("--mu", on_o.mu, "parameter overrides k=v,... (0-based)");
  online->add_option("--stop", on_o.stop, "stopping rule {estimator|true-error}:VALUE");
  online->add_option("--theta", on_o.theta, "marking fraction")->check(CLI::Range(0.0, 1.0));
  online->add_option("--max-iter", on_o.max_iter, "maximum enrichment iterations")->check(CLI::NonNegativeNumber);
  online->add_option("--c-pu", on_o.c_pu, "partition of unity constant")->check(CLI::PositiveNumber);
  online->add_flag("--linear-marking", on_o.linear_marking, "mark on sums of indicators instead of squares");

  auto* validate = app.add_subcommand("validate", "full-order comparisons and dense oracles");
  add_common(validate, val_c);
  add_offline(validate, val_o);
  validate->add_option("--mu", val_v.mu, "parameter overrides k=v,... (one per parameter, repeatable)");
  validate->add_option("--basis", val_v.basis, "basis container (default: train a fresh one)")->check(CLI::ExistingFile);
  validate->add_option("--c-pu", val_v.c_pu, "partition of unity constant")->check(CLI::PositiveNumber);

  std::vector<const char*> argv{"locrb"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*offline) return cmd_offline(off_c, off_o, out);
    if (*online) return cmd_online(on_c, on_o, out);
    if (*validate) return cmd_validate(val_c, val_o, val_v, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConvergenceError& e) {
    err << "not converged: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace locrb
