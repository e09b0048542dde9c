#pragma once

#include "vemstokes/polymesh.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace vemstokes::detail {

using PolygonPoints = std::vector<Point>;

bool inside_domain(Domain domain, const Point& p);

struct VoronoiCells {
  std::vector<PolygonPoints> polygons;
  std::vector<int> owner;  // seed of each polygon
};

/// Voronoi cells of `seeds` intersected with the domain. For the disk,
/// boundary arcs are replaced by chords between consecutive circle
/// crossings. On the L-shape a cell reaching into the removed quadrant is
/// cut into convex pieces.
VoronoiCells clipped_voronoi(std::span<const Point> seeds, Domain domain);

std::vector<Point> random_seeds(Domain domain, int count, std::uint64_t seed, std::uint64_t stream);

/// Lloyd relaxation: replaces every seed by the centroid of its clipped cell.
std::vector<Point> lloyd(std::vector<Point> seeds, Domain domain, int iterations);

/// Welds coincident polygon corners (within `tol`) into shared vertices and
/// builds the mesh.
PolyMesh weld(const std::vector<PolygonPoints>& polygons, Domain domain, double tol);

}  // namespace vemstokes::detail
