#pragma once

#include "vemstokes/polymesh.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace vemstokes {

struct VtkFields {
  std::vector<Point> point_vectors;  // one per vertex, written as "velocity"
  std::vector<std::pair<std::string, std::vector<double>>> cell_scalars;
};

/// Legacy ASCII VTK 4.2 POLYDATA with POLYGONS.
void write_vtk(std::ostream& out, const PolyMesh& mesh, const VtkFields& fields = {},
               const std::string& title = "vemstokes");

/// Plain-text mesh: domain line, vertex list, cell index lists and the
/// boundary tags, so that a round trip reproduces the mesh exactly.
void write_mesh(std::ostream& out, const PolyMesh& mesh);
PolyMesh read_mesh(std::istream& in);

}  // namespace vemstokes
