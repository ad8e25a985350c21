#include <memory>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "locrb/basis_io.hpp"
#include "locrb/cli.hpp"
#include "locrb/enrichment.hpp"
#include "locrb/errors.hpp"
#include "locrb/run_io.hpp"

namespace py = pybind11;
using namespace locrb;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

ParameterVector as_mu(const std::vector<double>& v) { return ParameterVector(v); }

BasisTag parse_tag(const std::string& s) {
  if (s == "pou") return BasisTag::pou;
  if (s == "offline") return BasisTag::offline;
  if (s == "online") return BasisTag::online;
  throw py::value_error("unknown basis tag '" + s + "'");
}

// Owns the discretization and the solvers that point into it.
class Model {
public:
  Model(ProblemDef p, const std::string& solver)
      : disc_(std::make_unique<Discretization>(std::move(p))),
        fom_(std::make_unique<FomSolver>(*disc_, solver == "pcg" ? SolverKind::pcg : SolverKind::direct)),
        est_(std::make_unique<Estimator>(*disc_, *fom_)) {
    if (solver != "direct" && solver != "pcg") throw py::value_error("solver must be 'direct' or 'pcg'");
  }

  const Discretization& disc() const { return *disc_; }
  FomSolver& fom() { return *fom_; }
  Estimator& est() { return *est_; }

  Matrix blocks(const BlockVector& u) const {
    Matrix out(u.num_blocks(), u.block_size());
    for (int T = 0; T < u.num_blocks(); ++T) out.row(T) = u[T].transpose();
    return out;
  }

private:
  std::unique_ptr<Discretization> disc_;
  std::unique_ptr<FomSolver> fom_;
  std::unique_ptr<Estimator> est_;
};

}  // namespace

PYBIND11_MODULE(_locrb, m) {
  m.doc() = "Localized reduced basis methods with online enrichment.";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<NotAffineError>(m, "NotAffineError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<ProblemDef>(m, "Problem")
      .def_static("preset", &preset, py::arg("name"))
      .def_static("from_config", [](const py::object& cfg) { return load_problem(from_python(cfg)); },
                  py::arg("config"))
      .def_static("from_file", &load_problem_file, py::arg("path"))
      .def_readonly("name", &ProblemDef::name)
      .def_readwrite("nx", &ProblemDef::nx)
      .def_readwrite("ny", &ProblemDef::ny)
      .def_readwrite("m", &ProblemDef::m)
      .def_property_readonly("q", &ProblemDef::q)
      .def_property_readonly("mu_star", [](const ProblemDef& p) { return p.mu_star.values; })
      .def_property_readonly("training_set",
                             [](const ProblemDef& p) {
                               std::vector<std::vector<double>> out;
                               for (const auto& mu : p.training_set) out.push_back(mu.values);
                               return out;
                             })
      .def("admissible", [](const ProblemDef& p, const std::vector<double>& mu) { return p.admissible(as_mu(mu)); })
      .def("to_config", [](const ProblemDef& p) { return to_python(to_json(p)); })
      .def("__repr__", [](const ProblemDef& p) {
        std::ostringstream s;
        s << "<Problem " << p.name << " " << p.nx << "x" << p.ny << " m=" << p.m << " q=" << p.q() << ">";
        return s.str();
      });

  m.def("preset_names", &preset_names);

  py::class_<ReducedBasis>(m, "Basis")
      .def_property_readonly("sizes", &ReducedBasis::sizes)
      .def_property_readonly("total_size", &ReducedBasis::total_size)
      .def_property_readonly("seed", &ReducedBasis::seed)
      .def("count", [](const ReducedBasis& rb, int T, const std::string& tag) { return rb.count(T, parse_tag(tag)); })
      .def("counts",
           [](const ReducedBasis& rb, const std::string& tag) {
             std::vector<int> out;
             for (int T = 0; T < rb.num_subdomains(); ++T) out.push_back(rb.count(T, parse_tag(tag)));
             return out;
           })
      .def("vectors", &ReducedBasis::vectors, py::arg("subdomain"))
      .def("orthonormality_error", &ReducedBasis::orthonormality_error, py::arg("subdomain"))
      .def("truncated", &ReducedBasis::truncated, py::arg("sizes"));

  py::class_<Model>(m, "Model")
      .def(py::init<ProblemDef, std::string>(), py::arg("problem"), py::arg("solver") = "direct")
      .def_property_readonly("num_dofs", [](const Model& md) { return md.disc().grid().num_dofs(); })
      .def_property_readonly("num_subdomains", [](const Model& md) { return md.disc().grid().num_subdomains(); })
      .def_property_readonly("problem", [](const Model& md) { return md.disc().problem(); })
      .def(
          "solve_fom",
          [](Model& md, const std::vector<double>& mu) { return md.blocks(md.fom().solve_fom(as_mu(mu))); },
          py::arg("mu"), "Full-order solution, one row of fine nodal values per subdomain.")
      .def(
          "train",
          [](Model& md, double tol, double eps_fail, int n_test, std::uint64_t seed) {
            Trainer tr(md.disc(), md.fom());
            auto ib = tr.build_initial_rb(md.disc().problem().training_set, RangeFinderOptions{tol, eps_fail, n_test, -1},
                                          seed);
            py::list reports;
            for (const auto& r : ib.reports) reports.append(to_python(to_json(r)));
            return py::make_tuple(std::move(ib.basis), reports);
          },
          py::arg("tol") = 1e-2, py::arg("eps_fail") = 1e-15, py::arg("n_test") = 15, py::arg("seed") = 0)
      .def(
          "rom_solve",
          [](Model& md, const ReducedBasis& rb, const std::vector<double>& mu) {
            return md.blocks(ReducedModel(md.disc(), rb).solve(as_mu(mu)).u_rb);
          },
          py::arg("basis"), py::arg("mu"))
      .def(
          "estimate",
          [](Model& md, const ReducedBasis& rb, const std::vector<double>& mu, double c_pu) {
            const auto u = ReducedModel(md.disc(), rb).solve(as_mu(mu)).u_rb;
            return to_python(to_json(md.est().global_estimate(u, as_mu(mu), c_pu)));
          },
          py::arg("basis"), py::arg("mu"), py::arg("c_pu") = 1.0)
      .def(
          "adaptive_solve",
          [](Model& md, const ReducedBasis& rb, const std::vector<double>& mu, const std::string& stop, double theta,
             int max_iter, double c_pu, bool linear_marking) {
            AdaptiveOptions opt;
            opt.stop = StopCriterion::parse(stop);
            opt.theta = theta;
            opt.max_iter = max_iter;
            opt.c_pu = c_pu;
            opt.rule = linear_marking ? MarkingRule::linear : MarkingRule::squared;
            Enricher enr(md.disc(), md.fom(), md.est());
            auto res = enr.adaptive_solve(rb, as_mu(mu), opt);
            py::list log;
            for (const auto& r : res.log) log.append(to_python(to_json(r)));
            py::dict out;
            out["converged"] = res.converged;
            out["reason"] = res.reason;
            out["fom_solves"] = res.fom_solves;
            out["log"] = log;
            out["u_rb"] = md.blocks(res.u_rb);
            out["basis"] = std::move(res.basis);
            return out;
          },
          py::arg("basis"), py::arg("mu"), py::arg("stop") = "true-error:1e-3", py::arg("theta") = 0.5,
          py::arg("max_iter") = 50, py::arg("c_pu") = 1.0, py::arg("linear_marking") = false)
      .def(
          "coercivity_lb", [](const Model& md, const std::vector<double>& mu) { return coercivity_lb(md.disc(), as_mu(mu)); },
          py::arg("mu"))
      .def(
          "brute_force_cpu", [](const Model& md, const ReducedBasis& rb) { return brute_force_cpu(md.disc(), rb); },
          py::arg("basis"))
      .def(
          "save_basis",
          [](const Model& md, const ReducedBasis& rb, const std::string& path) {
            save_basis(path, rb, md.disc().grid(), fingerprint(to_json(md.disc().problem())));
          },
          py::arg("basis"), py::arg("path"))
      .def(
          "load_basis",
          [](const Model& md, const std::string& path) {
            auto file = load_basis(path, md.disc());
            if (file.fingerprint != fingerprint(to_json(md.disc().problem())))
              throw ConfigError("basis fingerprint does not match the problem");
            return std::move(file.basis);
          },
          py::arg("path"));

  m.def(
      "mark",
      [](const std::vector<double>& indicators, double theta, bool linear) {
        return mark(indicators, theta, linear ? MarkingRule::linear : MarkingRule::squared);
      },
      py::arg("indicators"), py::arg("theta") = 0.5, py::arg("linear") = false);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a locrb subcommand; returns (exit code, stdout, stderr).");
}
