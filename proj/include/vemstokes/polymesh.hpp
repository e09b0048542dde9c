#pragma once

#include "vemstokes/geometry.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vemstokes {

enum class BoundaryTag { Interior, Dirichlet, Neumann };
enum class Domain { Square, UnitSquare, Disk, LShape };
enum class Family { T1, T2, T3, T4, T5, Tri };
enum class BoundaryCondition { Clamped, Mixed };

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(Domain d);
std::string to_string(Family f);
std::string to_string(BoundaryCondition bc);
Domain parse_domain(const std::string& s);
Family parse_family(const std::string& s);
BoundaryCondition parse_boundary_condition(const std::string& s);

struct Edge {
  std::array<int, 2> vertices{};  // sorted
  int left = -1;                  // lower-index adjacent cell
  int right = -1;                 // other adjacent cell, -1 on the boundary
  BoundaryTag tag = BoundaryTag::Interior;
  Point normal = Point::Zero();   // unit, points from `left` to the other side
  double length = 0.0;

  bool on_boundary() const { return right < 0; }
};

/// Boundary tags keyed by the sorted vertex pair of a boundary edge.
using BoundaryTags = std::map<std::pair<int, int>, BoundaryTag>;

/// Conforming polygonal mesh. Cells are counterclockwise vertex index
/// lists; local edge i of a cell joins local vertices i and i+1.
/// Immutable once built.
class PolyMesh {
 public:
  PolyMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells, Domain domain,
           const BoundaryTags& tags = {});

  Domain domain() const { return domain_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  std::span<const Point> vertices() const { return vertices_; }
  const Point& vertex(int v) const { return vertices_[v]; }
  std::span<const int> cell(int c) const { return cells_[c]; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  const Polygon& polygon(int c) const { return polygons_[c]; }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  /// Global edge index of local edge `local` of cell `c`.
  int cell_edge(int c, int local) const { return cell_edges_[c][local]; }
  /// +1 when the global edge normal is the outward normal of cell `c`.
  int orientation(int c, int local) const { return edges_[cell_edge(c, local)].left == c ? 1 : -1; }

  /// Max cell diameter.
  double h() const { return h_; }
  double total_area() const;

  BoundaryTags boundary_tags() const;
  PolyMesh with_boundary_condition(BoundaryCondition bc) const;

 private:
  std::vector<Point> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<Polygon> polygons_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> cell_edges_;
  Domain domain_;
  double h_ = 0.0;
};

/// Mesh generator for the supported (domain, family) pairs.
///
/// For Square and UnitSquare, N counts cells per side; for LShape, N counts
/// cells per unit length. Voronoi families (T2, T3) place about N^2 seeds
/// per 2x2 (Square, Disk) or 1x1 (UnitSquare, LShape unit) reference area.
/// T2 runs 40 Lloyd iterations, T3 runs a single one on a separate
/// random stream. Voronoi cells crossing the reentrant corner of the
/// LShape are split into convex pieces, and edges much shorter than their
/// cells are collapsed. T4 cuts each square of T1 into two interlocking
/// nonconvex hexagons. T5 maps T1 through
/// (x, y) -> (x + 0.1 sin(pi x) sin(pi y), y + 0.1 sin(pi x) sin(pi y)).
/// Tri splits each T1 square along its rising diagonal.
PolyMesh generate(Domain domain, Family family, int N, std::uint64_t seed = 0);

/// Splits every marked cell into quadrilaterals joining its centroid to the
/// edge midpoints. Unmarked neighbors gain the midpoints as vertices.
PolyMesh refine(const PolyMesh& mesh, std::span<const int> marked);

struct MeshQualityReport {
  std::vector<double> kernel_radius_ratio;  // rho_K / h_K
  std::vector<double> vertex_spacing_ratio; // min vertex distance / h_K
  double min_kernel_radius_ratio = 0.0;
  double min_vertex_spacing_ratio = 0.0;
};

MeshQualityReport quality(const PolyMesh& mesh);

/// Radius of the largest disk inside the kernel of a simple polygon; 0 if the
/// polygon is not star-shaped.
double kernel_inscribed_radius(std::span<const Point> vertices);

}  // namespace vemstokes
