#include "vemstokes/polymesh.hpp"

#include "voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace vemstokes {

namespace {

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

std::string to_string(Domain d) {
  switch (d) {
    case Domain::Square: return "square";
    case Domain::UnitSquare: return "unit_square";
    case Domain::Disk: return "disk";
    case Domain::LShape: return "lshape";
  }
  return "?";
}

std::string to_string(Family f) {
  switch (f) {
    case Family::T1: return "t1";
    case Family::T2: return "t2";
    case Family::T3: return "t3";
    case Family::T4: return "t4";
    case Family::T5: return "t5";
    case Family::Tri: return "tri";
  }
  return "?";
}

std::string to_string(BoundaryCondition bc) { return bc == BoundaryCondition::Clamped ? "clamped" : "mixed"; }

Domain parse_domain(const std::string& s) {
  if (s == "square") return Domain::Square;
  if (s == "unit_square") return Domain::UnitSquare;
  if (s == "disk") return Domain::Disk;
  if (s == "lshape") return Domain::LShape;
  throw MeshError("unknown domain '" + s + "'");
}

Family parse_family(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "t1") return Family::T1;
  if (lower == "t2") return Family::T2;
  if (lower == "t3") return Family::T3;
  if (lower == "t4") return Family::T4;
  if (lower == "t5") return Family::T5;
  if (lower == "tri") return Family::Tri;
  throw MeshError("unknown mesh family '" + s + "'");
}

BoundaryCondition parse_boundary_condition(const std::string& s) {
  if (s == "clamped") return BoundaryCondition::Clamped;
  if (s == "mixed") return BoundaryCondition::Mixed;
  throw MeshError("unknown boundary condition '" + s + "'");
}

PolyMesh::PolyMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells, Domain domain,
                   const BoundaryTags& tags)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), domain_(domain) {
  const int nv = num_vertices();
  polygons_.reserve(cells_.size());
  cell_edges_.resize(cells_.size());
  std::unordered_map<std::uint64_t, int> edge_index;
  edge_index.reserve(2 * cells_.size() + vertices_.size());

  for (int c = 0; c < num_cells(); ++c) {
    const auto& ids = cells_[c];
    std::vector<Point> pts;
    pts.reserve(ids.size());
    for (int v : ids) {
      if (v < 0 || v >= nv) throw MeshError("cell " + std::to_string(c) + " references missing vertex");
      pts.push_back(vertices_[v]);
    }
    try {
      polygons_.emplace_back(std::move(pts));
    } catch (const GeometryError& e) {
      throw MeshError("cell " + std::to_string(c) + ": " + e.what());
    }
    h_ = std::max(h_, polygons_.back().diameter());

    const int n = static_cast<int>(ids.size());
    cell_edges_[c].resize(n);
    for (int i = 0; i < n; ++i) {
      const int a = ids[i];
      const int b = ids[(i + 1) % n];
      const auto key = pair_key(a, b);
      auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(edges_.size()));
      if (inserted) {
        Edge e;
        e.vertices = {std::min(a, b), std::max(a, b)};
        e.left = c;
        const Point t = vertices_[b] - vertices_[a];
        e.length = t.norm();
        e.normal = Point(t.y(), -t.x()) / e.length;
        edges_.push_back(e);
      } else {
        Edge& e = edges_[it->second];
        if (e.right >= 0 || e.left == c)
          throw MeshError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") shared by more than two cells");
        // The other side must traverse the edge in the opposite direction.
        const Point t = vertices_[b] - vertices_[a];
        if (t.dot(Point(-e.normal.y(), e.normal.x())) > 0)
          throw MeshError("cells " + std::to_string(e.left) + " and " + std::to_string(c) + " have inconsistent orientation");
        e.right = c;
      }
      cell_edges_[c][i] = it->second;
    }
  }

  for (Edge& e : edges_) {
    if (!e.on_boundary()) {
      e.tag = BoundaryTag::Interior;
      continue;
    }
    auto it = tags.find({e.vertices[0], e.vertices[1]});
    e.tag = it == tags.end() ? BoundaryTag::Dirichlet : it->second;
  }
}

double PolyMesh::total_area() const {
  double area = 0.0;
  for (const auto& p : polygons_) area += p.area();
  return area;
}

BoundaryTags PolyMesh::boundary_tags() const {
  BoundaryTags tags;
  for (const Edge& e : edges_)
    if (e.on_boundary()) tags[{e.vertices[0], e.vertices[1]}] = e.tag;
  return tags;
}

PolyMesh PolyMesh::with_boundary_condition(BoundaryCondition bc) const {
  if (bc == BoundaryCondition::Mixed && domain_ != Domain::UnitSquare)
    throw MeshError("mixed boundary conditions are defined on the unit square only");
  BoundaryTags tags;
  for (const Edge& e : edges_) {
    if (!e.on_boundary()) continue;
    BoundaryTag tag = BoundaryTag::Dirichlet;
    if (bc == BoundaryCondition::Mixed) {
      const bool bottom = std::abs(vertices_[e.vertices[0]].y()) < 1e-12 && std::abs(vertices_[e.vertices[1]].y()) < 1e-12;
      tag = bottom ? BoundaryTag::Dirichlet : BoundaryTag::Neumann;
    }
    tags[{e.vertices[0], e.vertices[1]}] = tag;
  }
  return PolyMesh(vertices_, cells_, domain_, tags);
}

namespace {

struct Grid {
  Point origin;
  double step;
  int nx, ny;
};

Grid structured_grid(Domain domain, int N) {
  switch (domain) {
    case Domain::Square: return {Point(-1, -1), 2.0 / N, N, N};
    case Domain::UnitSquare: return {Point(0, 0), 1.0 / N, N, N};
    case Domain::LShape: return {Point(-1, -1), 1.0 / N, 2 * N, 2 * N};
    case Domain::Disk: break;
  }
  throw MeshError("structured families are not available on the disk");
}

bool keep_square(Domain domain, const Grid& g, int i, int j) {
  if (domain != Domain::LShape) return true;
  const Point center = g.origin + g.step * Point(i + 0.5, j + 0.5);
  return !(center.x() < 0 && center.y() < 0);
}

// Cells of the structured grid; `split` chooses the per-square subdivision.
PolyMesh structured(Domain domain, int N, Family family) {
  const Grid g = structured_grid(domain, N);
  const int stride = g.nx + 1;
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(stride) * (g.ny + 1));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) vertices.push_back(g.origin + g.step * Point(i, j));
  auto node = [stride](int i, int j) { return j * stride + i; };

  // T4 cuts each square between its left and right edge midpoints, which are
  // shared with the horizontal neighbors.
  std::unordered_map<std::uint64_t, int> midpoints;
  auto mid = [&](int a, int b) {
    auto [it, inserted] = midpoints.try_emplace(pair_key(a, b), static_cast<int>(vertices.size()));
    if (inserted) vertices.push_back(0.5 * (vertices[a] + vertices[b]));
    return it->second;
  };

  std::vector<std::vector<int>> cells;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!keep_square(domain, g, i, j)) continue;
      const int v00 = node(i, j), v10 = node(i + 1, j), v11 = node(i + 1, j + 1), v01 = node(i, j + 1);
      switch (family) {
        case Family::Tri:
          cells.push_back({v00, v10, v11});
          cells.push_back({v00, v11, v01});
          break;
        case Family::T4: {
          const int left = mid(v00, v01);
          const int right = mid(v10, v11);
          const Point o = g.origin + g.step * Point(i, j);
          const int low = static_cast<int>(vertices.size());
          vertices.push_back(o + g.step * Point(0.5, 0.3));
          const int high = static_cast<int>(vertices.size());
          vertices.push_back(o + g.step * Point(0.5, 0.7));
          cells.push_back({v00, v10, right, high, low, left});
          cells.push_back({left, low, high, right, v11, v01});
          break;
        }
        default: cells.push_back({v00, v10, v11, v01});
      }
    }

  // Drop grid nodes that no cell uses (the removed L-shape quadrant).
  std::vector<int> used(vertices.size(), -1);
  std::vector<Point> compact;
  for (auto& cell : cells)
    for (int& v : cell) {
      if (used[v] < 0) {
        used[v] = static_cast<int>(compact.size());
        compact.push_back(vertices[v]);
      }
      v = used[v];
    }

  if (family == Family::T5) {
    for (Point& p : compact) {
      const double d = 0.1 * std::sin(std::numbers::pi * p.x()) * std::sin(std::numbers::pi * p.y());
      p += Point(d, d);
    }
  }
  return PolyMesh(std::move(compact), std::move(cells), domain);
}

int voronoi_seed_count(Domain domain, int N) {
  switch (domain) {
    case Domain::Square:
    case Domain::UnitSquare: return N * N;
    case Domain::LShape: return 3 * N * N;
    case Domain::Disk: return static_cast<int>(std::lround(N * N * std::numbers::pi / 4.0));
  }
  return N * N;
}

}  // namespace

PolyMesh generate(Domain domain, Family family, int N, std::uint64_t seed) {
  if (N < 2) throw MeshError("mesh resolution N must be at least 2");
  switch (family) {
    case Family::T1:
    case Family::T4:
    case Family::T5:
    case Family::Tri:
      if (domain == Domain::Disk)
        throw MeshError("family " + to_string(family) + " is not available on the disk");
      return structured(domain, N, family);
    case Family::T2:
    case Family::T3: {
      const bool relaxed = family == Family::T2;
      auto seeds = detail::random_seeds(domain, voronoi_seed_count(domain, N), seed, relaxed ? 2 : 3);
      seeds = detail::lloyd(std::move(seeds), domain, relaxed ? 40 : 1);
      return detail::weld(detail::clipped_voronoi(seeds, domain).polygons, domain, 1e-10);
    }
  }
  throw MeshError("unsupported mesh family");
}

PolyMesh refine(const PolyMesh& mesh, std::span<const int> marked) {
  std::vector<char> is_marked(mesh.num_cells(), 0);
  for (int c : marked) {
    if (c < 0 || c >= mesh.num_cells()) throw MeshError("marked cell " + std::to_string(c) + " out of range");
    is_marked[c] = 1;
  }

  std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<int> midpoint(mesh.num_edges(), -1);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (!is_marked[c]) continue;
    for (std::size_t i = 0; i < mesh.cell(c).size(); ++i) {
      const int e = mesh.cell_edge(c, static_cast<int>(i));
      if (midpoint[e] >= 0) continue;
      const Edge& edge = mesh.edge(e);
      midpoint[e] = static_cast<int>(vertices.size());
      vertices.push_back(0.5 * (mesh.vertex(edge.vertices[0]) + mesh.vertex(edge.vertices[1])));
    }
  }

  std::vector<std::vector<int>> cells;
  cells.reserve(mesh.num_cells() + 4 * marked.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto ids = mesh.cell(c);
    const int n = static_cast<int>(ids.size());
    if (!is_marked[c]) {
      std::vector<int> cell;
      cell.reserve(n + 2);
      for (int i = 0; i < n; ++i) {
        cell.push_back(ids[i]);
        const int m = midpoint[mesh.cell_edge(c, i)];
        if (m >= 0) cell.push_back(m);
      }
      cells.push_back(std::move(cell));
      continue;
    }
    const int center = static_cast<int>(vertices.size());
    vertices.push_back(mesh.polygon(c).centroid());
    for (int i = 0; i < n; ++i) {
      const int before = midpoint[mesh.cell_edge(c, (i + n - 1) % n)];
      const int after = midpoint[mesh.cell_edge(c, i)];
      const std::vector<int> quad{center, before, ids[i], after};
      const std::array<Point, 4> pts{vertices[center], vertices[before], vertices[ids[i]], vertices[after]};
      const double area = signed_area(pts);
      const double scale = mesh.polygon(c).diameter();
      if (!(area > 1e-14 * scale * scale))
        throw MeshError("refining cell " + std::to_string(c) + " produced a sub-quadrilateral with nonpositive area");
      cells.push_back(quad);
    }
  }

  BoundaryTags tags;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (!edge.on_boundary()) continue;
    const auto [a, b] = edge.vertices;
    if (midpoint[e] < 0) {
      tags[{a, b}] = edge.tag;
    } else {
      const int m = midpoint[e];
      tags[{std::min(a, m), std::max(a, m)}] = edge.tag;
      tags[{std::min(b, m), std::max(b, m)}] = edge.tag;
    }
  }
  return PolyMesh(std::move(vertices), std::move(cells), mesh.domain(), tags);
}

double kernel_inscribed_radius(std::span<const Point> vertices) {
  // Kernel = intersection of the inner half-planes of all edges.
  const std::size_t n = vertices.size();
  struct HalfPlane {
    Point normal;  // unit, outward
    double offset;
  };
  std::vector<HalfPlane> planes;
  planes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point t = vertices[(i + 1) % n] - vertices[i];
    const Point normal = Point(t.y(), -t.x()) / t.norm();
    planes.push_back({normal, normal.dot(vertices[i])});
  }
  // Chebyshev center: maximize r subject to normal.x + r <= offset. The
  // optimum sits at a vertex of the (x, y, r) feasible set, so enumerate
  // triples of active constraints.
  double best = 0.0;
  const double scale = polygon_measures(vertices).diameter;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        Eigen::Matrix3d a;
        Eigen::Vector3d rhs;
        const std::array<std::size_t, 3> idx{i, j, k};
        for (int r = 0; r < 3; ++r) {
          a.row(r) << planes[idx[r]].normal.x(), planes[idx[r]].normal.y(), 1.0;
          rhs[r] = planes[idx[r]].offset;
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
        if (lu.rank() < 3) continue;
        const Eigen::Vector3d sol = lu.solve(rhs);
        if (sol[2] <= best) continue;
        bool feasible = true;
        for (const auto& p : planes)
          if (p.normal.dot(sol.head<2>()) + sol[2] > p.offset + 1e-12 * scale) {
            feasible = false;
            break;
          }
        if (feasible) best = sol[2];
      }
  return best;
}

MeshQualityReport quality(const PolyMesh& mesh) {
  MeshQualityReport report;
  report.kernel_radius_ratio.reserve(mesh.num_cells());
  report.vertex_spacing_ratio.reserve(mesh.num_cells());
  report.min_kernel_radius_ratio = std::numeric_limits<double>::infinity();
  report.min_vertex_spacing_ratio = std::numeric_limits<double>::infinity();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Polygon& poly = mesh.polygon(c);
    const auto v = poly.vertices();
    double spacing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j) spacing = std::min(spacing, (v[i] - v[j]).norm());
    const double rho = kernel_inscribed_radius(v) / poly.diameter();
    const double sep = spacing / poly.diameter();
    report.kernel_radius_ratio.push_back(rho);
    report.vertex_spacing_ratio.push_back(sep);
    report.min_kernel_radius_ratio = std::min(report.min_kernel_radius_ratio, rho);
    report.min_vertex_spacing_ratio = std::min(report.min_vertex_spacing_ratio, sep);
  }
  return report;
}

}  // namespace vemstokes
