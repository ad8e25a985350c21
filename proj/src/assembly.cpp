#include "locrb/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace locrb {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct Q1Eval {
  std::array<double, 4> phi;
  std::array<double, 4> dx;
  std::array<double, 4> dy;
};

// Corner order (0,0), (1,0), (0,1), (1,1) on the reference square.
Q1Eval q1_eval(double xi, double eta, double hx, double hy) {
  return {{(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta},
          {-(1 - eta) / hx, (1 - eta) / hx, -eta / hx, eta / hx},
          {-(1 - xi) / hy, -xi / hy, (1 - xi) / hy, xi / hy}};
}

std::array<double, 2> side_point(Side s, double tau) {
  switch (s) {
    case Side::left: return {0.0, tau};
    case Side::right: return {1.0, tau};
    case Side::bottom: return {tau, 0.0};
    case Side::top: return {tau, 1.0};
  }
  return {0.0, 0.0};
}

const double kGaussPoints[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};

/// Element integrals on one h_x × h_y cell.
struct CellMatrices {
  double stiffness[4][4];
  double mass[4][4];

  CellMatrices(double hx, double hy) {
    const double k1[2][2] = {{1.0, -1.0}, {-1.0, 1.0}};
    const double m1[2][2] = {{1.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 1.0 / 3.0}};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const int ai = i & 1, bi = i >> 1, aj = j & 1, bj = j >> 1;
        stiffness[i][j] = hy / hx * k1[ai][aj] * m1[bi][bj] + hx / hy * m1[ai][aj] * k1[bi][bj];
        mass[i][j] = hx * hy * m1[ai][aj] * m1[bi][bj];
      }
    }
  }
};

struct SegmentGeometry {
  double h_normal;
  double length;
};

SegmentGeometry segment_geometry(const GridHierarchy& g, int axis) {
  return axis == 0 ? SegmentGeometry{g.fine_hx(), g.fine_hy()} : SegmentGeometry{g.fine_hy(), g.fine_hx()};
}

/// Inner-face kernel. `sink(row_side, row_dof, col_side, col_dof, value)` with side 0 = T⁻, 1 = T⁺.
template <class Sink>
void inner_face_kernel(const GridHierarchy& g, const CoarseFace& f, const CellField& kappa, const CellField& kstar,
                       double sigma, FaceTerms terms, Sink&& sink) {
  const Side sm = f.minus_side(), sp = opposite(sm);
  const auto cells_m = g.side_cells(sm), cells_p = g.side_cells(sp);
  const auto geo = segment_geometry(g, f.axis);
  const double hx = g.fine_hx(), hy = g.fine_hy();
  for (int t = 0; t < g.m(); ++t) {
    const int cm = cells_m[t], cp = cells_p[t];
    const auto dm = g.cell_dofs(cm), dp = g.cell_dofs(cp);
    const double km = kappa[f.minus][cm], kp = kappa[f.plus][cp];
    const double ksm = kstar[f.minus][cm], ksp = kstar[f.plus][cp];
    const double wm = ksp / (ksm + ksp), wp = ksm / (ksm + ksp);
    const double pen = sigma * (ksm * ksp / (ksm + ksp)) / geo.h_normal;
    double local[8][8] = {};
    for (double tau : kGaussPoints) {
      const double wq = 0.5 * geo.length;
      const auto [xm, ym] = side_point(sm, tau);
      const auto [xp, yp] = side_point(sp, tau);
      const auto em = q1_eval(xm, ym, hx, hy), ep = q1_eval(xp, yp, hx, hy);
      double avg[8], jmp[8];
      for (int i = 0; i < 4; ++i) {
        const double dnm = f.normal_sign * (f.axis == 0 ? em.dx[i] : em.dy[i]);
        const double dnp = f.normal_sign * (f.axis == 0 ? ep.dx[i] : ep.dy[i]);
        avg[i] = wm * km * dnm;
        avg[4 + i] = wp * kp * dnp;
        jmp[i] = em.phi[i];
        jmp[4 + i] = -ep.phi[i];
      }
      for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) {
          double v = 0.0;
          if (terms.consistency) v -= avg[b] * jmp[a] + avg[a] * jmp[b];
          if (terms.penalty) v += pen * jmp[a] * jmp[b];
          local[a][b] += wq * v;
        }
      }
    }
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        if (local[a][b] == 0.0) continue;
        sink(a / 4, a < 4 ? dm[a] : dp[a - 4], b / 4, b < 4 ? dm[b % 4] : dp[b % 4], local[a][b]);
      }
    }
  }
}

/// Per-segment weight and {κ*} for a one-sided face treatment.
struct OneSidedCoefficients {
  double weight;
  double kstar_avg;
};

/// One-sided face kernel on side `s` of subdomain T (normal pointing out of T).
/// `coeffs(t)` gives weight/average per segment; `data` (optional) holds m+1 nodal values.
template <class Coeffs, class MatSink, class RhsSink>
void one_sided_kernel(const GridHierarchy& g, int T, Side s, const CellField& kappa, double sigma, FaceTerms terms,
                      Coeffs&& coeffs, const double* data, MatSink&& msink, RhsSink&& rsink) {
  const auto cells = g.side_cells(s);
  const int axis = normal_axis(s);
  const double nsign = outward_sign(s);
  const auto geo = segment_geometry(g, axis);
  const double hx = g.fine_hx(), hy = g.fine_hy();
  for (int t = 0; t < g.m(); ++t) {
    const int c = cells[t];
    const auto d = g.cell_dofs(c);
    const auto oc = coeffs(t, c);
    const double k_in = kappa[T][c];
    const double pen = sigma * oc.kstar_avg / geo.h_normal;
    double local[4][4] = {};
    double rhs[4] = {};
    for (double tau : kGaussPoints) {
      const double wq = 0.5 * geo.length;
      const auto [xi, eta] = side_point(s, tau);
      const auto e = q1_eval(xi, eta, hx, hy);
      double avg[4];
      for (int i = 0; i < 4; ++i) avg[i] = oc.weight * k_in * nsign * (axis == 0 ? e.dx[i] : e.dy[i]);
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          double v = 0.0;
          if (terms.consistency) v -= avg[b] * e.phi[a] + avg[a] * e.phi[b];
          if (terms.penalty) v += pen * e.phi[a] * e.phi[b];
          local[a][b] += wq * v;
        }
      }
      if (data) {
        const double gval = (1.0 - tau) * data[t] + tau * data[t + 1];
        for (int a = 0; a < 4; ++a) {
          double v = 0.0;
          if (terms.consistency) v -= avg[a] * gval;
          if (terms.penalty) v += pen * e.phi[a] * gval;
          rhs[a] += wq * v;
        }
      }
    }
    for (int a = 0; a < 4; ++a) {
      if (data && rhs[a] != 0.0) rsink(d[a], rhs[a]);
      for (int b = 0; b < 4; ++b)
        if (local[a][b] != 0.0) msink(d[a], d[b], local[a][b]);
    }
  }
}

SparseMatrix from_triplets(int rows, int cols, const Triplets& trips) {
  SparseMatrix A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

}  // namespace

// ---------------------------------------------------------------------------
// BlockVector

BlockVector::BlockVector(int num_blocks, int block_size)
    : blocks_(num_blocks, Vector::Zero(block_size)), block_size_(block_size) {}

BlockVector BlockVector::from_flat(const Vector& flat, int block_size) {
  if (block_size <= 0 || flat.size() % block_size != 0) throw std::invalid_argument("BlockVector: size mismatch");
  BlockVector v(static_cast<int>(flat.size() / block_size), block_size);
  for (int T = 0; T < v.num_blocks(); ++T) v.blocks_[T] = flat.segment(T * block_size, block_size);
  return v;
}

Vector BlockVector::flat() const {
  Vector out(static_cast<Eigen::Index>(blocks_.size()) * block_size_);
  for (int T = 0; T < num_blocks(); ++T) out.segment(T * block_size_, block_size_) = blocks_[T];
  return out;
}

BlockVector& BlockVector::operator+=(const BlockVector& o) {
  if (o.num_blocks() != num_blocks()) throw std::invalid_argument("BlockVector: block count mismatch");
  for (int T = 0; T < num_blocks(); ++T) blocks_[T] += o.blocks_[T];
  return *this;
}

BlockVector& BlockVector::operator-=(const BlockVector& o) {
  if (o.num_blocks() != num_blocks()) throw std::invalid_argument("BlockVector: block count mismatch");
  for (int T = 0; T < num_blocks(); ++T) blocks_[T] -= o.blocks_[T];
  return *this;
}

// ---------------------------------------------------------------------------
// Discretization

Discretization::Discretization(ProblemDef problem)
    : problem_(std::move(problem)), grid_(problem_.nx, problem_.ny, problem_.m, problem_.domain) {
  problem_.validate();
  kappa_star_ = kappa_field(problem_.mu_star);
  reaction_star_ = reaction_field(problem_.mu_star);
  const int nc = grid_.cells_per_subdomain();
  cell_component_.resize(static_cast<std::size_t>(grid_.num_subdomains()) * nc);
  for (int T = 0; T < grid_.num_subdomains(); ++T)
    for (int c = 0; c < nc; ++c) cell_component_[T * nc + c] = problem_.kappa_component(grid_.cell_center(T, c));
  if (problem_.is_affine()) {
    const int ncomp = static_cast<int>(problem_.channels.size()) + 1;
    component_kappa_.assign(ncomp, CellField(grid_.num_subdomains(), std::vector<double>(nc, 0.0)));
    for (int T = 0; T < grid_.num_subdomains(); ++T)
      for (int c = 0; c < nc; ++c) component_kappa_[cell_component_[T * nc + c]][T][c] = 1.0;
  }
  for (int T = 0; T < grid_.num_subdomains(); ++T) {
    for (int c = 0; c < nc; ++c) {
      if (!(kappa_star_[T][c] > 0.0) || !(reaction_star_[T][c] > 0.0))
        throw ConfigError("coefficients at the reference parameter must be positive");
    }
  }
}

bool Discretization::is_dirichlet(const CoarseFace& f) const {
  return !f.is_inner() && problem_.bc(*f.boundary_side).is_dirichlet();
}

CellField Discretization::kappa_field(const ParameterVector& mu) const {
  const int nc = grid_.cells_per_subdomain();
  CellField out(grid_.num_subdomains(), std::vector<double>(nc));
  for (int T = 0; T < grid_.num_subdomains(); ++T)
    for (int c = 0; c < nc; ++c) out[T][c] = eval_coefficients(problem_, mu, grid_.cell_center(T, c)).kappa;
  return out;
}

CellField Discretization::reaction_field(const ParameterVector& mu) const {
  const int nc = grid_.cells_per_subdomain();
  CellField out(grid_.num_subdomains(), std::vector<double>(nc));
  for (int T = 0; T < grid_.num_subdomains(); ++T)
    for (int c = 0; c < nc; ++c) out[T][c] = eval_coefficients(problem_, mu, grid_.cell_center(T, c)).reaction;
  return out;
}

void Discretization::add_volume(Triplets& out, int offset, int /*T*/, std::span<const double> kappa,
                                const std::vector<double>* reaction) const {
  const CellMatrices cm(grid_.fine_hx(), grid_.fine_hy());
  for (int c = 0; c < grid_.cells_per_subdomain(); ++c) {
    const auto d = grid_.cell_dofs(c);
    const double k = kappa[c];
    const double r = reaction ? (*reaction)[c] : 0.0;
    if (k == 0.0 && r == 0.0) continue;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out.emplace_back(offset + d[i], offset + d[j], k * cm.stiffness[i][j] + r * cm.mass[i][j]);
  }
}

SparseBlock Discretization::assemble_volume(int T, const ParameterVector& mu) const {
  const auto kappa = kappa_field(mu);
  const auto reaction = reaction_field(mu);
  Triplets trips;
  add_volume(trips, 0, T, kappa[T], &reaction[T]);
  const int n = grid_.dofs_per_subdomain();
  return {T, T, from_triplets(n, n, trips)};
}

std::vector<SparseBlock> Discretization::assemble_face(int face, const ParameterVector& mu) const {
  const auto& f = grid_.face(face);
  const auto kappa = kappa_field(mu);
  const int n = grid_.dofs_per_subdomain();
  if (f.is_inner()) {
    Triplets trips[2][2];
    inner_face_kernel(grid_, f, kappa, kappa_star_, penalty(), {}, [&](int rs, int i, int cs, int j, double v) {
      trips[rs][cs].emplace_back(i, j, v);
    });
    const int sub[2] = {f.minus, f.plus};
    std::vector<SparseBlock> out;
    for (int rs = 0; rs < 2; ++rs)
      for (int cs = 0; cs < 2; ++cs) out.push_back({sub[rs], sub[cs], from_triplets(n, n, trips[rs][cs])});
    return out;
  }
  if (!is_dirichlet(f)) return {};
  Triplets trips;
  const int T = f.minus;
  one_sided_kernel(
      grid_, T, f.minus_side(), kappa, penalty(), {},
      [&](int, int c) { return OneSidedCoefficients{1.0, kappa_star_[T][c]}; }, nullptr,
      [&](int i, int j, double v) { trips.emplace_back(i, j, v); }, [](int, double) {});
  return {{T, T, from_triplets(n, n, trips)}};
}

Vector Discretization::assemble_rhs(int T, const ParameterVector& mu) const {
  const DomainPatch single(grid_, PatchKind::whole, {T});
  Vector b = assemble_source(single, mu);
  const auto data = dirichlet_data(single);
  b += assemble_boundary_rhs(single, mu, data);
  return b;
}

SparseMatrix Discretization::assemble_operator(const DomainPatch& patch, const ParameterVector& mu,
                                               ArtificialFaces mode) const {
  const auto kappa = kappa_field(mu);
  const auto reaction = reaction_field(mu);
  return assemble_operator(patch, kappa, &reaction, mode, {});
}

SparseMatrix Discretization::assemble_operator(const DomainPatch& patch, const CellField& kappa,
                                               const CellField* reaction, ArtificialFaces mode,
                                               FaceTerms terms) const {
  Triplets trips;
  trips.reserve(static_cast<std::size_t>(patch.size()) * grid_.cells_per_subdomain() * 16 * 2);
  for (int T : patch.subdomains()) add_volume(trips, patch.offset(T), T, kappa[T], reaction ? &(*reaction)[T] : nullptr);

  for (int fi : patch.internal_faces()) {
    const auto& f = grid_.face(fi);
    const int off[2] = {patch.offset(f.minus), patch.offset(f.plus)};
    inner_face_kernel(grid_, f, kappa, kappa_star_, penalty(), terms, [&](int rs, int i, int cs, int j, double v) {
      trips.emplace_back(off[rs] + i, off[cs] + j, v);
    });
  }

  for (const auto& seg : patch.boundary_segments()) {
    const auto& f = grid_.face(seg.face);
    const int T = seg.subdomain;
    const int off = patch.offset(T);
    auto msink = [&](int i, int j, double v) { trips.emplace_back(off + i, off + j, v); };
    auto rsink = [](int, double) {};
    if (!seg.artificial) {
      if (!is_dirichlet(f)) continue;
      one_sided_kernel(
          grid_, T, seg.local_side, kappa, penalty(), terms,
          [&](int, int c) { return OneSidedCoefficients{1.0, kappa_star_[T][c]}; }, nullptr, msink, rsink);
      continue;
    }
    if (mode == ArtificialFaces::excluded) continue;
    if (mode == ArtificialFaces::nitsche) {
      one_sided_kernel(
          grid_, T, seg.local_side, kappa, penalty(), terms,
          [&](int, int c) { return OneSidedCoefficients{1.0, kappa_star_[T][c]}; }, nullptr, msink, rsink);
      continue;
    }
    const int other = f.minus == T ? f.plus : f.minus;
    const auto other_cells = grid_.side_cells(opposite(seg.local_side));
    one_sided_kernel(
        grid_, T, seg.local_side, kappa, penalty(), terms,
        [&](int t, int c) {
          const double kin = kappa_star_[T][c], kout = kappa_star_[other][other_cells[t]];
          return OneSidedCoefficients{kout / (kin + kout), kin * kout / (kin + kout)};
        },
        nullptr, msink, rsink);
  }
  const int n = patch.num_dofs();
  return from_triplets(n, n, trips);
}

SparseMatrix Discretization::assemble_h_gram(const DomainPatch& patch, ArtificialFaces mode) const {
  return assemble_operator(patch, kappa_star_, &reaction_star_, mode, {false, true});
}

SparseMatrix Discretization::local_gram(int T) const {
  Triplets trips;
  add_volume(trips, 0, T, kappa_star_[T], &reaction_star_[T]);
  const int n = grid_.dofs_per_subdomain();
  return from_triplets(n, n, trips);
}

Vector Discretization::assemble_source(const DomainPatch& patch, const ParameterVector& mu) const {
  Vector b = Vector::Zero(patch.num_dofs());
  const double hx = grid_.fine_hx(), hy = grid_.fine_hy();
  for (int T : patch.subdomains()) {
    const int off = patch.offset(T);
    const auto& box = grid_.subdomain(T).box;
    for (int c = 0; c < grid_.cells_per_subdomain(); ++c) {
      const auto d = grid_.cell_dofs(c);
      const int cx = c % grid_.m(), cy = c / grid_.m();
      for (double gx : kGaussPoints) {
        for (double gy : kGaussPoints) {
          const Point p{box.xmin + (cx + gx) * hx, box.ymin + (cy + gy) * hy};
          const double fv = problem_.source_fn ? problem_.source_fn(p, mu) : problem_.source;
          if (fv == 0.0) continue;
          const auto e = q1_eval(gx, gy, hx, hy);
          for (int i = 0; i < 4; ++i) b[off + d[i]] += 0.25 * hx * hy * fv * e.phi[i];
        }
      }
    }
  }
  return b;
}

Vector Discretization::assemble_boundary_rhs(const DomainPatch& patch, const ParameterVector& mu,
                                             const BoundaryData& data) const {
  return assemble_boundary_rhs(patch, kappa_field(mu), data, {});
}

Vector Discretization::assemble_boundary_rhs(const DomainPatch& patch, const CellField& kappa,
                                             const BoundaryData& data, FaceTerms terms) const {
  if (data.values.size() != patch.trace_size())
    throw std::invalid_argument("boundary data has " + std::to_string(data.values.size()) +
                                " values, patch boundary needs " + std::to_string(patch.trace_size()));
  Vector b = Vector::Zero(patch.num_dofs());
  const auto& segs = patch.boundary_segments();
  const int per = patch.trace_per_segment();
  for (std::size_t si = 0; si < segs.size(); ++si) {
    const auto& seg = segs[si];
    if (!seg.artificial && !is_dirichlet(grid_.face(seg.face))) continue;
    const double* gvals = data.values.data() + si * per;
    bool any = false;
    for (int k = 0; k < per; ++k) any = any || gvals[k] != 0.0;
    if (!any) continue;
    const int T = seg.subdomain;
    const int off = patch.offset(T);
    one_sided_kernel(
        grid_, T, seg.local_side, kappa, penalty(), terms,
        [&](int, int c) { return OneSidedCoefficients{1.0, kappa_star_[T][c]}; }, gvals, [](int, int, double) {},
        [&](int i, double v) { b[off + i] += v; });
  }
  return b;
}

BoundaryData Discretization::zero_data(const DomainPatch& patch) const {
  return {Vector::Zero(patch.trace_size())};
}

BoundaryData Discretization::dirichlet_data(const DomainPatch& patch) const {
  BoundaryData data = zero_data(patch);
  const auto& segs = patch.boundary_segments();
  const int per = patch.trace_per_segment();
  for (std::size_t si = 0; si < segs.size(); ++si) {
    const auto& seg = segs[si];
    const auto& f = grid_.face(seg.face);
    if (seg.artificial || !is_dirichlet(f)) continue;
    const auto dofs = grid_.side_dofs(seg.local_side);
    for (int k = 0; k < per; ++k)
      data.values[si * per + k] = problem_.dirichlet_value(*f.boundary_side, grid_.dof_coordinate(seg.subdomain, dofs[k]));
  }
  return data;
}

std::vector<double> Discretization::theta(const ParameterVector& mu) const {
  if (!problem_.is_affine()) throw NotAffineError("problem has no affine decomposition");
  std::vector<double> th{1.0, problem_.kappa_background};
  for (const auto& c : problem_.channels) th.push_back(std::pow(10.0, mu[c.param_index]));
  return th;
}

SparseMatrix Discretization::assemble_component(const DomainPatch& patch, int q, ArtificialFaces mode) const {
  if (!problem_.is_affine()) throw NotAffineError("problem has no affine decomposition");
  if (q < 0 || q >= num_components()) throw std::out_of_range("affine component index");
  if (q == 0) {
    const CellField zero(grid_.num_subdomains(), std::vector<double>(grid_.cells_per_subdomain(), 0.0));
    const auto reaction = reaction_field(problem_.mu_star);
    return assemble_operator(patch, zero, &reaction, mode, {false, true});
  }
  return assemble_operator(patch, component_kappa_[q - 1], nullptr, mode, {true, false});
}

Vector Discretization::assemble_rhs_component(const DomainPatch& patch, int q) const {
  if (!problem_.is_affine()) throw NotAffineError("problem has no affine decomposition");
  if (q < 0 || q >= num_components()) throw std::out_of_range("affine component index");
  const auto data = dirichlet_data(patch);
  if (q == 0) {
    const CellField zero(grid_.num_subdomains(), std::vector<double>(grid_.cells_per_subdomain(), 0.0));
    return assemble_source(patch, problem_.mu_star) + assemble_boundary_rhs(patch, zero, data, {false, true});
  }
  return assemble_boundary_rhs(patch, component_kappa_[q - 1], data, {true, false});
}

BlockVector Discretization::interpolate(const std::function<double(Point)>& fn) const {
  BlockVector v(grid_.num_subdomains(), grid_.dofs_per_subdomain());
  for (int T = 0; T < grid_.num_subdomains(); ++T)
    for (int i = 0; i < grid_.dofs_per_subdomain(); ++i) v[T][i] = fn(grid_.dof_coordinate(T, i));
  return v;
}

Vector Discretization::coarse_hat_on(int eta, int T) const {
  Vector v(grid_.dofs_per_subdomain());
  for (int i = 0; i < v.size(); ++i) v[i] = grid_.coarse_hat(eta, grid_.dof_coordinate(T, i));
  return v;
}

double Discretization::evaluate(const BlockVector& u, int T, Point p) const {
  const auto& box = grid_.subdomain(T).box;
  const double sx = std::clamp((p.x - box.xmin) / grid_.fine_hx(), 0.0, static_cast<double>(grid_.m()));
  const double sy = std::clamp((p.y - box.ymin) / grid_.fine_hy(), 0.0, static_cast<double>(grid_.m()));
  const int cx = std::min(static_cast<int>(sx), grid_.m() - 1), cy = std::min(static_cast<int>(sy), grid_.m() - 1);
  const auto d = grid_.cell_dofs(cx + grid_.m() * cy);
  const auto e = q1_eval(sx - cx, sy - cy, 1.0, 1.0);
  double v = 0.0;
  for (int i = 0; i < 4; ++i) v += e.phi[i] * u[T][d[i]];
  return v;
}

}  // namespace locrb
