#include "locrb/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace locrb {

using nlohmann::json;

std::string to_string(const ParameterVector& mu) {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < mu.size(); ++i) os << (i ? "," : "") << mu[i];
  os << ']';
  return os.str();
}

int ProblemDef::kappa_component(Point p) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i].rect.contains(p)) return static_cast<int>(i) + 1;
  return 0;
}

double ProblemDef::dirichlet_value(Side s, Point p) const {
  if (dirichlet_fn) return dirichlet_fn(p);
  const auto& b = bc(s);
  const bool vertical = normal_axis(s) == 0;
  const double lo = vertical ? domain.ymin : domain.xmin;
  const double hi = vertical ? domain.ymax : domain.xmax;
  const double t = std::clamp(((vertical ? p.y : p.x) - lo) / (hi - lo), 0.0, 1.0);
  return (1.0 - t) * b.start + t * b.end;
}

void ProblemDef::check_admissible(const ParameterVector& mu) const {
  if (mu.size() != q())
    throw ParameterError("parameter has " + std::to_string(mu.size()) + " components, expected " +
                         std::to_string(q()));
  for (int i = 0; i < q(); ++i) {
    const auto& [lo, hi] = parameter_box[i];
    if (!(mu[i] >= lo && mu[i] <= hi))
      throw ParameterError("parameter component " + std::to_string(i) + " = " + std::to_string(mu[i]) +
                           " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

bool ProblemDef::admissible(const ParameterVector& mu) const {
  try {
    check_admissible(mu);
    return true;
  } catch (const ParameterError&) {
    return false;
  }
}

void ProblemDef::validate() const {
  if (nx < 1 || ny < 1 || m < 1) throw ConfigError("coarse/fine counts must be at least 1");
  if (!(domain.xmax > domain.xmin) || !(domain.ymax > domain.ymin)) throw ConfigError("degenerate domain");
  if (!(kappa_background > 0.0)) throw ConfigError("kappa.background must be positive");
  if (!(reaction > 0.0)) throw ConfigError("reaction must be positive");
  if (!(penalty > 0.0)) throw ConfigError("penalty must be positive");
  for (const auto& [lo, hi] : parameter_box)
    if (!(lo <= hi)) throw ConfigError("parameter_box entries must satisfy lo <= hi");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& c = channels[i];
    if (c.param_index < 0 || c.param_index >= q())
      throw ConfigError("channel " + std::to_string(i) + " refers to parameter " + std::to_string(c.param_index) +
                        " but q = " + std::to_string(q()));
    const Box& r = c.rect;
    if (!(r.xmax > r.xmin) || !(r.ymax > r.ymin)) throw ConfigError("channel " + std::to_string(i) + " is empty");
    const double eps = 1e-12;
    if (r.xmin < domain.xmin - eps || r.xmax > domain.xmax + eps || r.ymin < domain.ymin - eps ||
        r.ymax > domain.ymax + eps)
      throw ConfigError("channel " + std::to_string(i) + " lies outside the domain");
  }
  try {
    check_admissible(mu_star);
    for (const auto& mu : training_set) check_admissible(mu);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("inadmissible reference/training parameter: ") + e.what());
  }
  const bool any_dirichlet = std::any_of(boundary.begin(), boundary.end(), [](auto& b) { return b.is_dirichlet(); });
  if (!any_dirichlet && !(reaction > 0.0)) throw ConfigError("pure Neumann problem without reaction is singular");
}

Coefficients eval_coefficients(const ProblemDef& p, const ParameterVector& mu, Point x) {
  x.x = std::clamp(x.x, p.domain.xmin, p.domain.xmax);
  x.y = std::clamp(x.y, p.domain.ymin, p.domain.ymax);
  Coefficients c;
  if (p.kappa_fn) {
    c.kappa = p.kappa_fn(x, mu);
  } else {
    const int comp = p.kappa_component(x);
    c.kappa = comp == 0 ? p.kappa_background : std::pow(10.0, mu[p.channels[comp - 1].param_index]);
  }
  c.reaction = p.reaction_fn ? p.reaction_fn(x, mu) : p.reaction;
  c.source = p.source_fn ? p.source_fn(x, mu) : p.source;
  return c;
}

double AffineDecomposition::evaluate(const std::vector<AffineTerm>& terms, const ParameterVector& mu, Point x) {
  double v = 0.0;
  for (const auto& t : terms) v += t.theta(mu) * t.field(x);
  return v;
}

AffineDecomposition affine_decomposition(const ProblemDef& p) {
  if (p.kappa_fn) throw NotAffineError("kappa is given as a general function");
  if (p.reaction_fn) throw NotAffineError("reaction is given as a general function");
  if (p.source_fn) throw NotAffineError("source is given as a general function");
  AffineDecomposition d;
  // Component lookup only needs the channel list; keep a private copy so the
  // decomposition outlives `p`.
  auto shape = std::make_shared<ProblemDef>();
  shape->channels = p.channels;
  const double bg = p.kappa_background;
  d.kappa.push_back({"background", [bg](const ParameterVector&) { return bg; },
                     [shape](Point x) { return shape->kappa_component(x) == 0 ? 1.0 : 0.0; }});
  for (std::size_t i = 0; i < p.channels.size(); ++i) {
    const int k = p.channels[i].param_index;
    const int comp = static_cast<int>(i) + 1;
    d.kappa.push_back({"channel" + std::to_string(i), [k](const ParameterVector& mu) { return std::pow(10.0, mu[k]); },
                       [shape, comp](Point x) { return shape->kappa_component(x) == comp ? 1.0 : 0.0; }});
  }
  const double r = p.reaction, f = p.source;
  d.reaction.push_back({"reaction", [r](const ParameterVector&) { return r; }, [](Point) { return 1.0; }});
  d.source.push_back({"source", [f](const ParameterVector&) { return f; }, [](Point) { return 1.0; }});
  return d;
}

namespace {

const char* kSideKeys[4] = {"left", "right", "bottom", "top"};

BoundaryCondition parse_bc(const json& j, const std::string& side) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError("boundary." + side + " needs a \"type\"");
  const auto type = j.at("type").get<std::string>();
  if (type == "neumann") return BoundaryCondition::neumann();
  if (type != "dirichlet") throw ConfigError("boundary." + side + ": unknown type \"" + type + "\"");
  if (j.contains("linear")) {
    const auto& l = j.at("linear");
    if (!l.is_array() || l.size() != 2) throw ConfigError("boundary." + side + ".linear must be [start, end]");
    return BoundaryCondition::linear(l[0].get<double>(), l[1].get<double>());
  }
  return BoundaryCondition::dirichlet(j.value("value", 0.0));
}

json bc_to_json(const BoundaryCondition& b) {
  if (!b.is_dirichlet()) return {{"type", "neumann"}};
  if (b.start == b.end) return {{"type", "dirichlet"}, {"value", b.start}};
  return {{"type", "dirichlet"}, {"linear", {b.start, b.end}}};
}

ParameterVector parse_mu(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  ParameterVector mu;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(what + " must be an array of numbers");
    mu.values.push_back(v.get<double>());
  }
  return mu;
}

Box parse_rect(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(what + " must be [xmin, xmax, ymin, ymax]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

ProblemDef paper_channels() {
  ProblemDef p;
  p.name = "paper-channels";
  p.domain = {0.0, 1.0, 0.0, 1.0};
  p.nx = p.ny = 8;
  p.m = 32;
  p.kappa_background = 1.0;
  for (int k = 1; k <= 7; ++k) {
    const double yc = k / 8.0 - 1.0 / 16.0;
    p.channels.push_back({{0.0, 0.95, yc - 1.0 / 64.0, yc + 1.0 / 64.0}, k - 1});
  }
  p.reaction = 1e6;
  p.source = 0.0;
  p.boundary = {BoundaryCondition::dirichlet(1.0), BoundaryCondition::neumann(), BoundaryCondition::linear(1.0, 0.0),
                BoundaryCondition::linear(1.0, 0.0)};
  p.parameter_box.assign(7, {4.0, 6.0});
  p.mu_star = ParameterVector(std::vector<double>(7, 6.0));
  p.training_set = {ParameterVector(std::vector<double>(7, 4.0))};
  return p;
}

ProblemDef tiny_channels() {
  ProblemDef p = paper_channels();
  p.name = "tiny-channels";
  p.nx = p.ny = 3;
  p.m = 4;
  p.channels.clear();
  for (int k = 1; k <= 3; ++k) {
    const double yc = k / 3.0 - 1.0 / 6.0;
    p.channels.push_back({{0.0, 0.9, yc - 0.05, yc + 0.05}, k - 1});
  }
  p.parameter_box.assign(3, {4.0, 6.0});
  p.mu_star = ParameterVector(std::vector<double>(3, 6.0));
  p.training_set = {ParameterVector(std::vector<double>(3, 4.0))};
  return p;
}

ProblemDef unit_poisson() {
  ProblemDef p;
  p.name = "unit-poisson";
  p.nx = p.ny = 2;
  p.m = 4;
  p.kappa_background = 1.0;
  p.reaction = 1.0;
  p.source = 1.0;
  p.training_set = {ParameterVector{}};
  return p;
}

}  // namespace

std::vector<std::string> preset_names() { return {"paper-channels", "tiny-channels", "unit-poisson"}; }

ProblemDef preset(const std::string& name) {
  ProblemDef p;
  if (name == "paper-channels") {
    p = paper_channels();
  } else if (name == "tiny-channels") {
    p = tiny_channels();
  } else if (name == "unit-poisson") {
    p = unit_poisson();
  } else {
    throw ConfigError("unknown preset \"" + name + "\"");
  }
  p.validate();
  return p;
}

ProblemDef load_problem(const json& j) {
  if (!j.is_object()) throw ConfigError("problem configuration must be a JSON object");
  static const std::vector<std::string> known = {"preset", "name", "domain", "coarse", "fine", "kappa", "reaction",
                                                 "source", "boundary", "mu_star", "parameter_box", "mu_train",
                                                 "penalty"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown key \"" + key + "\"");

  try {
    ProblemDef p;
    if (j.contains("preset")) {
      p = preset(j.at("preset").get<std::string>());
    } else {
      for (const char* key : {"kappa", "reaction", "source", "boundary", "parameter_box"})
        if (!j.contains(key)) throw ConfigError(std::string("missing required key \"") + key + "\"");
    }
    if (j.contains("name")) p.name = j.at("name").get<std::string>();
    if (j.contains("domain")) {
      const auto& d = j.at("domain");
      const auto x = d.at("x"), y = d.at("y");
      p.domain = {x.at(0).get<double>(), x.at(1).get<double>(), y.at(0).get<double>(), y.at(1).get<double>()};
    }
    if (j.contains("coarse")) {
      p.nx = j.at("coarse").at("nx").get<int>();
      p.ny = j.at("coarse").at("ny").get<int>();
    }
    if (j.contains("fine")) p.m = j.at("fine").at("m").get<int>();
    if (j.contains("kappa")) {
      const auto& k = j.at("kappa");
      p.kappa_background = k.at("background").get<double>();
      p.channels.clear();
      if (k.contains("channels")) {
        for (std::size_t i = 0; i < k.at("channels").size(); ++i) {
          const auto& c = k.at("channels")[i];
          p.channels.push_back({parse_rect(c.at("rect"), "kappa.channels[" + std::to_string(i) + "].rect"),
                                c.at("param_index").get<int>()});
        }
      }
    }
    if (j.contains("reaction")) p.reaction = j.at("reaction").get<double>();
    if (j.contains("source")) p.source = j.at("source").get<double>();
    if (j.contains("boundary")) {
      const auto& b = j.at("boundary");
      for (int s = 0; s < 4; ++s) {
        if (!b.contains(kSideKeys[s])) throw ConfigError(std::string("boundary.") + kSideKeys[s] + " missing");
        p.boundary[s] = parse_bc(b.at(kSideKeys[s]), kSideKeys[s]);
      }
    }
    if (j.contains("parameter_box")) {
      p.parameter_box.clear();
      for (const auto& e : j.at("parameter_box")) {
        if (!e.is_array() || e.size() != 2) throw ConfigError("parameter_box entries must be [lo, hi]");
        p.parameter_box.push_back({e[0].get<double>(), e[1].get<double>()});
      }
    }
    if (j.contains("mu_star")) {
      p.mu_star = parse_mu(j.at("mu_star"), "mu_star");
    } else if (!j.contains("preset") || p.mu_star.size() != p.q()) {
      // Upper corner of the box: {κ_μ*} then dominates the admissible contrast.
      p.mu_star.values.clear();
      for (const auto& [lo, hi] : p.parameter_box) p.mu_star.values.push_back(hi);
    }
    if (j.contains("mu_train")) {
      p.training_set.clear();
      for (const auto& e : j.at("mu_train")) p.training_set.push_back(parse_mu(e, "mu_train entry"));
    } else if (!j.contains("preset") || (!p.training_set.empty() && p.training_set.front().size() != p.q())) {
      ParameterVector lower;
      for (const auto& [lo, hi] : p.parameter_box) lower.values.push_back(lo);
      p.training_set = {lower};
    }
    if (j.contains("penalty")) p.penalty = j.at("penalty").get<double>();
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema violation: ") + e.what());
  }
}

ProblemDef load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file \"" + path + "\"");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse \"" + path + "\": " + e.what());
  }
  return load_problem(j);
}

json to_json(const ProblemDef& p) {
  if (!p.is_affine() || p.dirichlet_fn) throw ConfigError("problems defined through callables cannot be serialized");
  json channels = json::array();
  for (const auto& c : p.channels)
    channels.push_back({{"rect", {c.rect.xmin, c.rect.xmax, c.rect.ymin, c.rect.ymax}}, {"param_index", c.param_index}});
  json boundary;
  for (int s = 0; s < 4; ++s) boundary[kSideKeys[s]] = bc_to_json(p.boundary[s]);
  json box = json::array();
  for (const auto& [lo, hi] : p.parameter_box) box.push_back({lo, hi});
  json train = json::array();
  for (const auto& mu : p.training_set) train.push_back(mu.values);
  return {{"name", p.name},
          {"domain", {{"x", {p.domain.xmin, p.domain.xmax}}, {"y", {p.domain.ymin, p.domain.ymax}}}},
          {"coarse", {{"nx", p.nx}, {"ny", p.ny}}},
          {"fine", {{"m", p.m}}},
          {"kappa", {{"background", p.kappa_background}, {"channels", channels}}},
          {"reaction", p.reaction},
          {"source", p.source},
          {"boundary", boundary},
          {"mu_star", p.mu_star.values},
          {"parameter_box", box},
          {"mu_train", train},
          {"penalty", p.penalty}};
}

}  // namespace locrb
