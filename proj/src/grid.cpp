#include "locrb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace locrb {

Side opposite(Side s) {
  switch (s) {
    case Side::left: return Side::right;
    case Side::right: return Side::left;
    case Side::bottom: return Side::top;
    case Side::top: return Side::bottom;
  }
  return Side::left;
}

std::string to_string(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
    case Side::top: return "top";
  }
  return "?";
}

Side CoarseFace::minus_side() const {
  if (axis == 0) return normal_sign > 0 ? Side::right : Side::left;
  return normal_sign > 0 ? Side::top : Side::bottom;
}

GridHierarchy::GridHierarchy(int nx, int ny, int m, Box domain) : nx_(nx), ny_(ny), m_(m), domain_(domain) {
  if (nx < 1 || ny < 1 || m < 1) throw std::invalid_argument("build_grids: nx, ny and m must be at least 1");
  if (!(domain.xmax > domain.xmin) || !(domain.ymax > domain.ymin))
    throw std::invalid_argument("build_grids: degenerate domain");

  const double Hx = coarse_hx(), Hy = coarse_hy();
  subdomains_.resize(nx * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      auto& s = subdomains_[subdomain_at(ix, iy)];
      s.index = subdomain_at(ix, iy);
      s.ix = ix;
      s.iy = iy;
      s.box = {domain.xmin + ix * Hx, domain.xmin + (ix + 1) * Hx, domain.ymin + iy * Hy, domain.ymin + (iy + 1) * Hy};
    }
  }

  auto add_face = [&](int minus, int plus, Side minus_side, std::optional<Side> bnd) {
    CoarseFace f;
    f.index = static_cast<int>(faces_.size());
    f.minus = minus;
    f.plus = plus;
    f.axis = normal_axis(minus_side);
    f.normal_sign = outward_sign(minus_side);
    f.boundary_side = bnd;
    f.length = f.axis == 0 ? Hy : Hx;
    f.minus_trace = side_dofs(minus_side);
    if (plus >= 0) f.plus_trace = side_dofs(opposite(minus_side));
    subdomains_[minus].faces[static_cast<int>(minus_side)] = f.index;
    if (plus >= 0) subdomains_[plus].faces[static_cast<int>(opposite(minus_side))] = f.index;
    faces_.push_back(std::move(f));
  };

  // Inner faces first: vertical ones (normal +x), then horizontal ones (normal +y).
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix + 1 < nx; ++ix) add_face(subdomain_at(ix, iy), subdomain_at(ix + 1, iy), Side::right, {});
  for (int iy = 0; iy + 1 < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) add_face(subdomain_at(ix, iy), subdomain_at(ix, iy + 1), Side::top, {});
  num_inner_faces_ = static_cast<int>(faces_.size());

  for (int iy = 0; iy < ny; ++iy) add_face(subdomain_at(0, iy), -1, Side::left, Side::left);
  for (int iy = 0; iy < ny; ++iy) add_face(subdomain_at(nx - 1, iy), -1, Side::right, Side::right);
  for (int ix = 0; ix < nx; ++ix) add_face(subdomain_at(ix, 0), -1, Side::bottom, Side::bottom);
  for (int ix = 0; ix < nx; ++ix) add_face(subdomain_at(ix, ny - 1), -1, Side::top, Side::top);
}

GridHierarchy build_grids(int nx, int ny, int m, Box domain) { return GridHierarchy(nx, ny, m, domain); }

Point GridHierarchy::coarse_node(int eta) const {
  if (eta < 0 || eta >= num_coarse_nodes()) throw std::out_of_range("coarse node index");
  const int i = eta % (nx_ + 1), k = eta / (nx_ + 1);
  return {domain_.xmin + i * coarse_hx(), domain_.ymin + k * coarse_hy()};
}

Point GridHierarchy::dof_coordinate(int T, int local) const {
  const auto& b = subdomain(T).box;
  const int a = local % (m_ + 1), c = local / (m_ + 1);
  return {b.xmin + a * fine_hx(), b.ymin + c * fine_hy()};
}

Point GridHierarchy::cell_center(int T, int cell) const {
  const auto& b = subdomain(T).box;
  const int cx = cell % m_, cy = cell / m_;
  return {b.xmin + (cx + 0.5) * fine_hx(), b.ymin + (cy + 0.5) * fine_hy()};
}

std::array<int, 4> GridHierarchy::cell_dofs(int cell) const {
  const int cx = cell % m_, cy = cell / m_;
  return {local_dof(cx, cy), local_dof(cx + 1, cy), local_dof(cx, cy + 1), local_dof(cx + 1, cy + 1)};
}

std::vector<int> GridHierarchy::side_dofs(Side s) const {
  std::vector<int> out(m_ + 1);
  for (int t = 0; t <= m_; ++t) {
    switch (s) {
      case Side::left: out[t] = local_dof(0, t); break;
      case Side::right: out[t] = local_dof(m_, t); break;
      case Side::bottom: out[t] = local_dof(t, 0); break;
      case Side::top: out[t] = local_dof(t, m_); break;
    }
  }
  return out;
}

std::vector<int> GridHierarchy::side_cells(Side s) const {
  std::vector<int> out(m_);
  for (int t = 0; t < m_; ++t) {
    switch (s) {
      case Side::left: out[t] = 0 + m_ * t; break;
      case Side::right: out[t] = (m_ - 1) + m_ * t; break;
      case Side::bottom: out[t] = t; break;
      case Side::top: out[t] = t + m_ * (m_ - 1); break;
    }
  }
  return out;
}

std::vector<int> GridHierarchy::face_neighbours(int T) const {
  std::vector<int> out;
  for (int f : subdomain(T).faces) {
    const auto& face = faces_[f];
    if (!face.is_inner()) continue;
    out.push_back(face.minus == T ? face.plus : face.minus);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool GridHierarchy::face_adjacent(int S, int T) const {
  const auto& a = subdomain(S);
  const auto& b = subdomain(T);
  return std::abs(a.ix - b.ix) + std::abs(a.iy - b.iy) == 1;
}

double GridHierarchy::coarse_hat(int eta, Point p) const {
  const Point c = coarse_node(eta);
  const double wx = 1.0 - std::abs(p.x - c.x) / coarse_hx();
  const double wy = 1.0 - std::abs(p.y - c.y) / coarse_hy();
  if (wx <= 0.0 || wy <= 0.0) return 0.0;
  return wx * wy;
}

DomainPatch::DomainPatch(const GridHierarchy& grid, PatchKind kind, std::vector<int> subdomains)
    : kind_(kind), subdomains_(std::move(subdomains)), local_(grid.num_subdomains(), -1),
      n_loc_(grid.dofs_per_subdomain()), trace_per_segment_(grid.m() + 1) {
  std::sort(subdomains_.begin(), subdomains_.end());
  subdomains_.erase(std::unique(subdomains_.begin(), subdomains_.end()), subdomains_.end());
  if (subdomains_.empty()) throw std::invalid_argument("DomainPatch: empty subdomain set");
  for (std::size_t i = 0; i < subdomains_.size(); ++i) {
    const int T = subdomains_[i];
    if (T < 0 || T >= grid.num_subdomains()) throw std::out_of_range("DomainPatch: subdomain index");
    local_[T] = static_cast<int>(i);
  }
  std::set<int> internal;
  for (int T : subdomains_) {
    for (Side s : kAllSides) {
      const int f = grid.subdomain(T).faces[static_cast<int>(s)];
      const auto& face = grid.face(f);
      if (face.is_inner()) {
        const int other = face.minus == T ? face.plus : face.minus;
        if (contains(other)) {
          internal.insert(f);
        } else {
          segments_.push_back({f, T, s, true});
        }
      } else {
        segments_.push_back({f, T, s, false});
      }
    }
  }
  internal_faces_.assign(internal.begin(), internal.end());
}

int DomainPatch::global_dof(int patch_dof) const {
  const int li = patch_dof / n_loc_;
  return subdomains_.at(li) * n_loc_ + patch_dof % n_loc_;
}

bool DomainPatch::has_artificial_boundary() const {
  return std::any_of(segments_.begin(), segments_.end(), [](const BoundarySegment& s) { return s.artificial; });
}

std::string DomainPatch::key() const {
  std::ostringstream os;
  for (int T : subdomains_) os << T << ',';
  return os.str();
}

namespace {

void check_subdomain(const GridHierarchy& grid, int T) {
  if (T < 0 || T >= grid.num_subdomains()) throw std::out_of_range("subdomain index out of range");
}

void check_node(const GridHierarchy& grid, int eta) {
  if (eta < 0 || eta >= grid.num_coarse_nodes()) throw std::out_of_range("coarse node index out of range");
}

std::vector<int> node_support(const GridHierarchy& grid, int eta) {
  const int i = eta % (grid.nx() + 1), k = eta / (grid.nx() + 1);
  std::vector<int> out;
  for (int iy = k - 1; iy <= k; ++iy)
    for (int ix = i - 1; ix <= i; ++ix)
      if (ix >= 0 && ix < grid.nx() && iy >= 0 && iy < grid.ny()) out.push_back(grid.subdomain_at(ix, iy));
  return out;
}

}  // namespace

DomainPatch oversampling_domain(const GridHierarchy& grid, int T, int layers) {
  check_subdomain(grid, T);
  if (layers < 1) throw std::invalid_argument("oversampling_domain: layers must be at least 1");
  const auto& s = grid.subdomain(T);
  std::vector<int> subs;
  for (int iy = std::max(0, s.iy - layers); iy <= std::min(grid.ny() - 1, s.iy + layers); ++iy)
    for (int ix = std::max(0, s.ix - layers); ix <= std::min(grid.nx() - 1, s.ix + layers); ++ix)
      subs.push_back(grid.subdomain_at(ix, iy));
  return DomainPatch(grid, PatchKind::oversampling, std::move(subs));
}

DomainPatch indicator_domain(const GridHierarchy& grid, int eta) {
  check_node(grid, eta);
  return DomainPatch(grid, PatchKind::indicator, node_support(grid, eta));
}

DomainPatch estimator_domain(const GridHierarchy& grid, int eta) {
  check_node(grid, eta);
  auto subs = node_support(grid, eta);
  const auto core = subs;
  for (int T : core)
    for (int S : grid.face_neighbours(T)) subs.push_back(S);
  return DomainPatch(grid, PatchKind::estimator, std::move(subs));
}

DomainPatch whole_domain(const GridHierarchy& grid) {
  std::vector<int> subs(grid.num_subdomains());
  for (int T = 0; T < grid.num_subdomains(); ++T) subs[T] = T;
  return DomainPatch(grid, PatchKind::whole, std::move(subs));
}

}  // namespace locrb
