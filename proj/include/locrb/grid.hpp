#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace locrb {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Box {
  double xmin = 0.0, xmax = 1.0;
  double ymin = 0.0, ymax = 1.0;

  bool contains(Point p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
};

/// Sides of a rectangle, also used to label the four sides of the domain.
enum class Side : std::uint8_t { left = 0, right = 1, bottom = 2, top = 3 };

inline constexpr std::array<Side, 4> kAllSides = {Side::left, Side::right, Side::bottom, Side::top};

Side opposite(Side s);
std::string to_string(Side s);

/// Axis of the normal of a face sitting on side `s` (0 = x, 1 = y).
inline int normal_axis(Side s) { return (s == Side::left || s == Side::right) ? 0 : 1; }
/// Outward sign of the normal on side `s`.
inline double outward_sign(Side s) { return (s == Side::right || s == Side::top) ? 1.0 : -1.0; }

struct Subdomain {
  int index = 0;
  int ix = 0;
  int iy = 0;
  Box box;
  /// Face index per local side (left, right, bottom, top).
  std::array<int, 4> faces{};
};

/// A face of the coarse grid. The normal n_γ points away from `minus`.
struct CoarseFace {
  int index = 0;
  int minus = -1;
  int plus = -1;  ///< -1 on the domain boundary
  int axis = 0;   ///< 0: normal along x, 1: normal along y
  double normal_sign = 1.0;
  std::optional<Side> boundary_side;  ///< set for boundary faces
  double length = 0.0;
  /// Local DOFs of each side along the face, ordered by increasing tangential coordinate.
  std::vector<int> minus_trace;
  std::vector<int> plus_trace;

  bool is_inner() const { return plus >= 0; }
  /// Side of `minus` on which the face lies.
  Side minus_side() const;
  Side plus_side() const { return opposite(minus_side()); }
};

/// Coarse decomposition of a rectangle into nx × ny subdomains, each carrying a
/// uniform m × m quadrilateral mesh with Q1 nodal DOFs. Subdomain j = ix + nx·iy,
/// local node (a, b) = a + (m+1)·b, coarse node (i, k) = i + (nx+1)·k.
class GridHierarchy {
public:
  GridHierarchy() = default;
  GridHierarchy(int nx, int ny, int m, Box domain = {});

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int m() const { return m_; }
  const Box& domain() const { return domain_; }

  int num_subdomains() const { return nx_ * ny_; }
  int num_coarse_nodes() const { return (nx_ + 1) * (ny_ + 1); }
  int dofs_per_subdomain() const { return (m_ + 1) * (m_ + 1); }
  int cells_per_subdomain() const { return m_ * m_; }
  int num_dofs() const { return num_subdomains() * dofs_per_subdomain(); }

  double coarse_hx() const { return (domain_.xmax - domain_.xmin) / nx_; }
  double coarse_hy() const { return (domain_.ymax - domain_.ymin) / ny_; }
  double fine_hx() const { return coarse_hx() / m_; }
  double fine_hy() const { return coarse_hy() / m_; }

  const Subdomain& subdomain(int T) const { return subdomains_.at(T); }
  const std::vector<Subdomain>& subdomains() const { return subdomains_; }
  int subdomain_at(int ix, int iy) const { return ix + nx_ * iy; }

  const std::vector<CoarseFace>& faces() const { return faces_; }
  const CoarseFace& face(int f) const { return faces_.at(f); }
  int num_inner_faces() const { return num_inner_faces_; }
  int num_boundary_faces() const { return static_cast<int>(faces_.size()) - num_inner_faces_; }

  Point coarse_node(int eta) const;
  int coarse_node_index(int i, int k) const { return i + (nx_ + 1) * k; }

  int local_dof(int a, int b) const { return a + (m_ + 1) * b; }
  Point dof_coordinate(int T, int local) const;
  Point cell_center(int T, int cell) const;
  /// Local DOFs of the four corners of cell (cx + m·cy), ordered (0,0),(1,0),(0,1),(1,1).
  std::array<int, 4> cell_dofs(int cell) const;
  /// Local DOFs on a side of a subdomain, ordered by increasing tangential coordinate.
  std::vector<int> side_dofs(Side s) const;
  /// Local cells adjacent to a side, ordered like side_dofs segments.
  std::vector<int> side_cells(Side s) const;

  /// Subdomains sharing a coarse face with T (no diagonal neighbours).
  std::vector<int> face_neighbours(int T) const;
  bool face_adjacent(int S, int T) const;

  /// Evaluates the bilinear coarse hat φ_η at p.
  double coarse_hat(int eta, Point p) const;

private:
  int nx_ = 0, ny_ = 0, m_ = 0;
  Box domain_;
  std::vector<Subdomain> subdomains_;
  std::vector<CoarseFace> faces_;
  int num_inner_faces_ = 0;
};

GridHierarchy build_grids(int nx, int ny, int m, Box domain = {});

enum class PatchKind : std::uint8_t { oversampling, indicator, estimator, whole };

/// A boundary piece of a patch: one coarse face seen from the patch subdomain adjacent to it.
struct BoundarySegment {
  int face = 0;
  int subdomain = 0;  ///< global index of the patch subdomain owning the segment
  Side local_side = Side::left;
  bool artificial = false;  ///< true if the face is interior to Ω
};

/// A connected set of coarse subdomains with derived face classification and a DOF map
/// into the broken global numbering. Patch-local DOF = local_index(T)·n_loc + local DOF.
class DomainPatch {
public:
  DomainPatch() = default;
  DomainPatch(const GridHierarchy& grid, PatchKind kind, std::vector<int> subdomains);

  PatchKind kind() const { return kind_; }
  const std::vector<int>& subdomains() const { return subdomains_; }
  int size() const { return static_cast<int>(subdomains_.size()); }
  bool contains(int T) const { return T >= 0 && T < static_cast<int>(local_.size()) && local_[T] >= 0; }
  int local_index(int T) const { return contains(T) ? local_[T] : -1; }
  int num_dofs() const { return size() * n_loc_; }
  int dofs_per_subdomain() const { return n_loc_; }
  int offset(int T) const { return local_index(T) * n_loc_; }
  int global_dof(int patch_dof) const;

  const std::vector<int>& internal_faces() const { return internal_faces_; }
  const std::vector<BoundarySegment>& boundary_segments() const { return segments_; }
  int trace_size() const { return static_cast<int>(segments_.size()) * trace_per_segment_; }
  int trace_per_segment() const { return trace_per_segment_; }
  bool has_artificial_boundary() const;

  /// String key identifying the subdomain set (used for caching).
  std::string key() const;

private:
  PatchKind kind_ = PatchKind::whole;
  std::vector<int> subdomains_;
  std::vector<int> local_;
  std::vector<int> internal_faces_;
  std::vector<BoundarySegment> segments_;
  int n_loc_ = 0;
  int trace_per_segment_ = 0;
};

DomainPatch oversampling_domain(const GridHierarchy& grid, int T, int layers = 1);
DomainPatch indicator_domain(const GridHierarchy& grid, int eta);
DomainPatch estimator_domain(const GridHierarchy& grid, int eta);
DomainPatch whole_domain(const GridHierarchy& grid);

}  // namespace locrb
