#include "voronoi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>
#include <numbers>
#include <random>
#include <unordered_map>

namespace vemstokes::detail {

namespace {

struct Box {
  Point lo;
  Point hi;
};

Box bounding_box(Domain domain) {
  switch (domain) {
    case Domain::UnitSquare: return {Point(0, 0), Point(1, 1)};
    case Domain::Square:
    case Domain::Disk:
    case Domain::LShape: return {Point(-1, -1), Point(1, 1)};
  }
  return {Point(-1, -1), Point(1, 1)};
}

PolygonPoints box_polygon(const Box& b) {
  return {b.lo, Point(b.hi.x(), b.lo.y()), b.hi, Point(b.lo.x(), b.hi.y())};
}

// Keeps the part of `poly` with normal.dot(x) <= offset.
PolygonPoints clip_half_plane(const PolygonPoints& poly, const Point& normal, double offset) {
  PolygonPoints out;
  const std::size_t n = poly.size();
  out.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    const double da = normal.dot(a) - offset;
    const double db = normal.dot(b) - offset;
    if (da <= 0) out.push_back(a);
    if ((da < 0 && db > 0) || (da > 0 && db < 0)) out.push_back(a + (b - a) * (da / (da - db)));
  }
  return out;
}

PolygonPoints drop_duplicates(const PolygonPoints& poly, double tol) {
  PolygonPoints out;
  for (const Point& p : poly)
    if (out.empty() || (p - out.back()).norm() > tol) out.push_back(p);
  while (out.size() > 1 && (out.front() - out.back()).norm() <= tol) out.pop_back();
  return out;
}

double area_of(const PolygonPoints& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * a;
}

// Intersects a convex polygon inside [-1, 1]^2 with the L-shaped domain.
// A cell reaching into the removed quadrant is cut into two convex pieces
// along y = x, along the ray y = 0 or along the ray x = 0, whichever keeps
// the worse piece roundest. New vertices created on cut lines are appended
// to `cut_points`.
std::vector<PolygonPoints> lshape_pieces(const PolygonPoints& convex, double tol, std::vector<Point>& cut_points) {
  const PolygonPoints hole = clip_half_plane(clip_half_plane(convex, Point(1, 0), 0.0), Point(0, 1), 0.0);
  const double min_area = tol * tol;
  if (hole.size() < 3 || area_of(hole) <= min_area) return {convex};
  // Three ways to cut the cell minus the hole into two convex pieces: along
  // the diagonal y = x, along the ray y = 0 or along the ray x = 0.
  auto clip2 = [&](const Point& n1, const Point& n2) {
    return drop_duplicates(clip_half_plane(clip_half_plane(convex, n1, 0.0), n2, 0.0), tol);
  };
  const Point none(0, 0);
  const std::array<std::array<PolygonPoints, 2>, 3> cuts = {{
      {clip2(Point(1, -1), Point(0, -1)), clip2(Point(-1, 1), Point(-1, 0))},
      {clip2(Point(0, -1), none), clip2(Point(-1, 0), Point(0, 1))},
      {clip2(Point(1, 0), Point(0, -1)), clip2(Point(-1, 0), none)},
  }};
  // Keep the cut whose worst piece is the roundest.
  auto roundness = [](const PolygonPoints& p) {
    double d = 0.0;
    for (const Point& a : p)
      for (const Point& b : p) d = std::max(d, (a - b).squaredNorm());
    return area_of(p) / d;
  };
  std::vector<PolygonPoints> best;
  double best_score = -1.0;
  for (const auto& cut : cuts) {
    std::vector<PolygonPoints> pieces;
    double score = std::numeric_limits<double>::infinity();
    for (const PolygonPoints& piece : cut)
      if (piece.size() >= 3 && area_of(piece) > min_area) {
        score = std::min(score, roundness(piece));
        pieces.push_back(piece);
      }
    if (!pieces.empty() && score > best_score) {
      best_score = score;
      best = std::move(pieces);
    }
  }
  for (const PolygonPoints& piece : best)
    for (const Point& p : piece) {
      bool original = false;
      for (const Point& q : convex) original = original || (p - q).norm() <= tol;
      if (!original) cut_points.push_back(p);
    }
  return best;
}

// Intersects a convex polygon with the unit disk, replacing each arc by the
// chord between its circle crossings.
PolygonPoints clip_to_disk_chords(const PolygonPoints& convex) {
  PolygonPoints out;
  const std::size_t n = convex.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = convex[i];
    const Point& b = convex[(i + 1) % n];
    if (a.squaredNorm() <= 1.0) out.push_back(a);
    const Point d = b - a;
    const double qa = d.squaredNorm();
    const double qb = 2.0 * a.dot(d);
    const double qc = a.squaredNorm() - 1.0;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    double t0 = (-qb - sq) / (2.0 * qa);
    double t1 = (-qb + sq) / (2.0 * qa);
    for (double t : {t0, t1})
      if (t > 0.0 && t < 1.0) {
        Point p = a + t * d;
        out.push_back(p / p.norm());
      }
  }
  return out;
}

// A cut ends on an edge shared with a neighboring cell; adds the cut
// endpoint to that neighbor so the mesh stays conforming.
void insert_cut_points(std::vector<PolygonPoints>& polygons, const std::vector<Point>& points, double tol) {
  for (const Point& p : points)
    for (auto& poly : polygons) {
      const std::size_t n = poly.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Point a = poly[i], b = poly[(i + 1) % n];
        if ((a - p).norm() <= tol || (b - p).norm() <= tol) break;
        const Point t = b - a;
        const double s = t.dot(p - a) / t.squaredNorm();
        if (s <= 0 || s >= 1 || (a + s * t - p).norm() > tol) continue;
        poly.insert(poly.begin() + static_cast<std::ptrdiff_t>(i) + 1, p);
        break;
      }
    }
}

std::uint64_t grid_key(std::int64_t ix, std::int64_t iy) {
  return (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint64_t>(iy & 0xffffffff);
}

bool is_convex(const std::vector<Point>& vertices, const std::vector<int>& cell) {
  const std::size_t n = cell.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point u = vertices[cell[(i + 1) % n]] - vertices[cell[i]];
    const Point w = vertices[cell[(i + 2) % n]] - vertices[cell[(i + 1) % n]];
    if (u.x() * w.y() - u.y() * w.x() < -1e-9 * u.norm() * w.norm()) return false;
  }
  return true;
}

// Absorbs slivers left by clipping into the neighbor across their longest
// shared edge, as long as that neighbor is at least kTinyCell^-1 times
// larger, shares nothing else with the sliver and stays convex.
void merge_tiny_cells(const std::vector<Point>& vertices, std::vector<std::vector<int>>& cells) {
  constexpr double kTinyCell = 0.05;
  auto area = [&](const std::vector<int>& cell) {
    PolygonPoints poly;
    for (int v : cell) poly.push_back(vertices[v]);
    return area_of(poly);
  };
  for (bool merged = true; merged;) {
    merged = false;
    std::map<std::pair<int, int>, int> directed;
    std::vector<double> areas(cells.size());
    std::vector<std::size_t> order(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      areas[c] = area(cells[c]);
      order[c] = c;
      const std::size_t n = cells[c].size();
      for (std::size_t i = 0; i < n; ++i) directed[{cells[c][i], cells[c][(i + 1) % n]}] = static_cast<int>(c);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return areas[a] < areas[b]; });
    for (std::size_t s : order) {
      const auto& sliver = cells[s];
      const std::size_t n = sliver.size();
      int best = -1;
      std::size_t best_edge = 0;
      double best_length = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = directed.find({sliver[(i + 1) % n], sliver[i]});
        if (it == directed.end() || areas[it->second] * kTinyCell <= areas[s]) continue;
        const double length = (vertices[sliver[i]] - vertices[sliver[(i + 1) % n]]).norm();
        if (length > best_length) {
          best = it->second;
          best_edge = i;
          best_length = length;
        }
      }
      if (best < 0) continue;
      auto& host = cells[best];
      int shared = 0;
      for (int v : sliver) shared += static_cast<int>(std::count(host.begin(), host.end(), v));
      if (shared != 2) continue;
      std::vector<int> joined = host;
      const auto pos = std::find(joined.begin(), joined.end(), sliver[(best_edge + 1) % n]);
      std::vector<int> chain;  // sliver vertices strictly between b and a
      for (std::size_t k = 2; k < n; ++k) chain.push_back(sliver[(best_edge + k) % n]);
      joined.insert(pos + 1, chain.begin(), chain.end());
      if (!is_convex(vertices, joined)) continue;
      host = std::move(joined);
      cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(s));
      merged = true;
      break;
    }
  }
}

// Merges the endpoints of edges shorter than kShortEdge times the size of
// their smaller neighbor cell, as Voronoi diagrams tend to produce tiny
// edges whose sub-quadrilaterals degenerate under refinement. Domain corners
// (kinks of the boundary polygon) stay put, other boundary vertices only
// slide along their boundary segment or along the unit circle for the disk,
// and every vertex moves at most once.
bool collapse_short_edges(std::vector<Point>& vertices, std::vector<std::vector<int>>& cells, bool on_circle) {
  constexpr double kShortEdge = 0.1;
  const int nv = static_cast<int>(vertices.size());
  std::map<std::pair<int, int>, std::vector<int>> edge_cells;
  std::vector<double> size(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    PolygonPoints poly;
    for (int v : cells[c]) poly.push_back(vertices[v]);
    size[c] = std::sqrt(std::abs(area_of(poly)));
    const std::size_t n = cells[c].size();
    for (std::size_t i = 0; i < n; ++i) {
      const int a = cells[c][i], b = cells[c][(i + 1) % n];
      edge_cells[std::minmax(a, b)].push_back(static_cast<int>(c));
    }
  }
  std::vector<std::vector<int>> boundary_nbrs(nv);
  for (const auto& [e, cs] : edge_cells)
    if (cs.size() == 1) {
      boundary_nbrs[e.first].push_back(e.second);
      boundary_nbrs[e.second].push_back(e.first);
    }
  auto on_boundary = [&](int v) { return !boundary_nbrs[v].empty(); };
  auto is_corner = [&](int v) {
    if (boundary_nbrs[v].size() != 2) return true;
    const Point a = vertices[boundary_nbrs[v][0]] - vertices[v], b = vertices[boundary_nbrs[v][1]] - vertices[v];
    return std::abs(a.x() * b.y() - a.y() * b.x()) > 1e-12 * a.norm() * b.norm();
  };

  std::vector<std::tuple<double, int, int>> candidates;
  for (const auto& [e, cs] : edge_cells) {
    double local = size[cs[0]];
    for (int c : cs) local = std::min(local, size[c]);
    const double length = (vertices[e.first] - vertices[e.second]).norm();
    if (length < kShortEdge * local) candidates.emplace_back(length, e.first, e.second);
  }
  if (candidates.empty()) return false;
  std::sort(candidates.begin(), candidates.end());

  std::vector<int> target(nv);
  std::iota(target.begin(), target.end(), 0);
  std::vector<char> touched(nv, 0);
  std::vector<int> removed(cells.size(), 0);  // vertices already dropped per cell
  for (const auto& [length, a, b] : candidates) {
    if (touched[a] || touched[b]) continue;
    const bool ba = on_boundary(a), bb = on_boundary(b);
    Point merged = 0.5 * (vertices[a] + vertices[b]);
    if (ba && bb) {
      if (edge_cells[{a, b}].size() != 1) continue;
      const bool ca = !on_circle && is_corner(a), cb = !on_circle && is_corner(b);
      if (ca && cb) continue;
      if (on_circle) merged.normalize();
      if (ca) merged = vertices[a];
      if (cb) merged = vertices[b];
    } else if (ba) {
      merged = vertices[a];
    } else if (bb) {
      merged = vertices[b];
    }
    bool ok = true;
    for (int c : edge_cells[{a, b}])
      if (static_cast<int>(cells[c].size()) - removed[c] < 4) ok = false;
    if (!ok) continue;
    for (int c : edge_cells[{a, b}]) ++removed[c];
    touched[a] = touched[b] = 1;
    vertices[a] = merged;
    target[b] = a;
  }

  std::vector<int> index(nv, -1);
  std::vector<Point> kept;
  for (int v = 0; v < nv; ++v)
    if (target[v] == v) {
      index[v] = static_cast<int>(kept.size());
      kept.push_back(vertices[v]);
    }
  for (auto& cell : cells) {
    std::vector<int> ids;
    for (int v : cell) {
      const int w = index[target[v]];
      if (ids.empty() || ids.back() != w) ids.push_back(w);
    }
    while (ids.size() > 1 && ids.front() == ids.back()) ids.pop_back();
    cell = std::move(ids);
  }
  const bool changed = kept.size() < vertices.size();
  vertices = std::move(kept);
  return changed;
}

}  // namespace

bool inside_domain(Domain domain, const Point& p) {
  switch (domain) {
    case Domain::UnitSquare: return p.x() >= 0 && p.x() <= 1 && p.y() >= 0 && p.y() <= 1;
    case Domain::Square: return std::abs(p.x()) <= 1 && std::abs(p.y()) <= 1;
    case Domain::Disk: return p.squaredNorm() <= 1.0;
    case Domain::LShape:
      return std::abs(p.x()) <= 1 && std::abs(p.y()) <= 1 && !(p.x() < 0 && p.y() < 0);
  }
  return false;
}

std::vector<Point> random_seeds(Domain domain, int count, std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  // Explicit 53-bit mapping keeps sequences identical across standard libraries.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const Box box = bounding_box(domain);
  std::vector<Point> seeds;
  seeds.reserve(count);
  while (static_cast<int>(seeds.size()) < count) {
    const Point p(box.lo.x() + uniform() * (box.hi.x() - box.lo.x()),
                  box.lo.y() + uniform() * (box.hi.y() - box.lo.y()));
    // Strict interior keeps seeds off the boundary.
    const Point shrink = box.lo + 0.5 * (box.hi - box.lo) + 0.999999 * (p - box.lo - 0.5 * (box.hi - box.lo));
    if (inside_domain(domain, shrink) && !(domain == Domain::Disk && shrink.squaredNorm() > 0.999999))
      seeds.push_back(shrink);
  }
  return seeds;
}

VoronoiCells clipped_voronoi(std::span<const Point> seeds, Domain domain) {
  const Box box = bounding_box(domain);
  const double width = std::max(box.hi.x() - box.lo.x(), box.hi.y() - box.lo.y());
  const int n = static_cast<int>(seeds.size());
  const int grid = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n))));
  const double cs = width / grid;
  auto cell_of = [&](const Point& p) {
    const auto ix = std::clamp(static_cast<int>(std::floor((p.x() - box.lo.x()) / cs)), 0, grid - 1);
    const auto iy = std::clamp(static_cast<int>(std::floor((p.y() - box.lo.y()) / cs)), 0, grid - 1);
    return std::pair<int, int>{ix, iy};
  };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(grid) * grid);
  for (int i = 0; i < n; ++i) {
    const auto [ix, iy] = cell_of(seeds[i]);
    buckets[static_cast<std::size_t>(iy) * grid + ix].push_back(i);
  }

  const double dup_tol = 1e-13 * width;
  VoronoiCells cells;
  std::vector<Point> cut_points;
  for (int i = 0; i < n; ++i) {
    const Point& s = seeds[i];
    PolygonPoints poly = box_polygon(box);
    const auto [cx, cy] = cell_of(s);
    for (int ring = 0;; ++ring) {
      double radius = 0.0;
      for (const Point& v : poly) radius = std::max(radius, (v - s).norm());
      if (ring > 0 && (ring - 1) * cs > 2.0 * radius) break;
      if (ring > grid) break;
      for (int iy = cy - ring; iy <= cy + ring; ++iy)
        for (int ix = cx - ring; ix <= cx + ring; ++ix) {
          if (std::max(std::abs(ix - cx), std::abs(iy - cy)) != ring) continue;
          if (ix < 0 || iy < 0 || ix >= grid || iy >= grid) continue;
          for (int j : buckets[static_cast<std::size_t>(iy) * grid + ix]) {
            if (j == i) continue;
            const Point normal = seeds[j] - s;
            poly = clip_half_plane(poly, normal, normal.dot(0.5 * (s + seeds[j])));
          }
        }
    }
    poly = drop_duplicates(poly, dup_tol);
    if (domain == Domain::Disk) poly = drop_duplicates(clip_to_disk_chords(poly), dup_tol);
    if (poly.size() < 3) throw MeshError("empty Voronoi cell for seed " + std::to_string(i));
    if (domain == Domain::LShape) {
      auto pieces = lshape_pieces(poly, dup_tol, cut_points);
      if (pieces.empty()) throw MeshError("empty Voronoi cell for seed " + std::to_string(i));
      for (auto& piece : pieces) {
        cells.polygons.push_back(std::move(piece));
        cells.owner.push_back(i);
      }
    } else {
      cells.polygons.push_back(std::move(poly));
      cells.owner.push_back(i);
    }
  }
  if (!cut_points.empty()) insert_cut_points(cells.polygons, cut_points, dup_tol);
  return cells;
}

std::vector<Point> lloyd(std::vector<Point> seeds, Domain domain, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    const auto cells = clipped_voronoi(seeds, domain);
    std::vector<double> mass(seeds.size(), 0.0);
    std::vector<Point> moment(seeds.size(), Point::Zero());
    for (std::size_t k = 0; k < cells.polygons.size(); ++k) {
      const PolygonMeasures m = polygon_measures(cells.polygons[k]);
      mass[cells.owner[k]] += m.area;
      moment[cells.owner[k]] += m.area * m.centroid;
    }
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = moment[i] / mass[i];
  }
  return seeds;
}

PolyMesh weld(const std::vector<PolygonPoints>& polygons, Domain domain, double tol) {
  std::vector<Point> vertices;
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  auto index_of = [&](const Point& p) {
    const auto ix = static_cast<std::int64_t>(std::floor(p.x() / tol));
    const auto iy = static_cast<std::int64_t>(std::floor(p.y() / tol));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find(grid_key(ix + dx, iy + dy));
        if (it == grid.end()) continue;
        for (int v : it->second)
          if ((vertices[v] - p).norm() <= tol) return v;
      }
    const int v = static_cast<int>(vertices.size());
    vertices.push_back(p);
    grid[grid_key(ix, iy)].push_back(v);
    return v;
  };

  std::vector<std::vector<int>> cells;
  cells.reserve(polygons.size());
  for (const auto& poly : polygons) {
    std::vector<int> ids;
    for (const Point& p : poly) {
      const int v = index_of(p);
      if (ids.empty() || ids.back() != v) ids.push_back(v);
    }
    while (ids.size() > 1 && ids.front() == ids.back()) ids.pop_back();
    if (ids.size() < 3) throw MeshError("cell collapsed while welding vertices");
    cells.push_back(std::move(ids));
  }
  // A collapse can turn a sliver into a mergeable one and vice versa.
  for (int round = 0; round < 3; ++round) {
    merge_tiny_cells(vertices, cells);
    bool changed = false;
    for (int pass = 0; pass < 5 && collapse_short_edges(vertices, cells, domain == Domain::Disk); ++pass) changed = true;
    if (!changed) break;
  }
  return PolyMesh(std::move(vertices), std::move(cells), domain);
}

}  // namespace vemstokes::detail
