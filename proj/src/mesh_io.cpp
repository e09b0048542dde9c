#include "vemstokes/mesh_io.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace vemstokes {

namespace {

const char* tag_name(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::Dirichlet: return "dirichlet";
    case BoundaryTag::Neumann: return "neumann";
    default: return "interior";
  }
}

BoundaryTag parse_tag(const std::string& s) {
  if (s == "dirichlet") return BoundaryTag::Dirichlet;
  if (s == "neumann") return BoundaryTag::Neumann;
  if (s == "interior") return BoundaryTag::Interior;
  throw MeshError("unknown boundary tag '" + s + "'");
}

void expect(std::istream& in, const std::string& keyword) {
  std::string word;
  if (!(in >> word) || word != keyword) throw MeshError("mesh file: expected '" + keyword + "'");
}

int read_count(std::istream& in) {
  long long n = -1;
  if (!(in >> n) || n < 0 || n > (1LL << 31) - 1) throw MeshError("mesh file: bad count");
  return static_cast<int>(n);
}

}  // namespace

void write_vtk(std::ostream& out, const PolyMesh& mesh, const VtkFields& fields, const std::string& title) {
  if (!fields.point_vectors.empty() && static_cast<int>(fields.point_vectors.size()) != mesh.num_vertices())
    throw std::invalid_argument("point field size differs from the vertex count");
  for (const auto& [name, values] : fields.cell_scalars)
    if (static_cast<int>(values.size()) != mesh.num_cells())
      throw std::invalid_argument("cell field '" + name + "' size differs from the cell count");

  out.precision(10);
  out << "# vtk DataFile Version 4.2\n" << title << "\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Point& p : mesh.vertices()) out << p.x() << ' ' << p.y() << " 0\n";
  std::size_t size = 0;
  for (const auto& c : mesh.cells()) size += c.size() + 1;
  out << "POLYGONS " << mesh.num_cells() << ' ' << size << '\n';
  for (const auto& c : mesh.cells()) {
    out << c.size();
    for (int v : c) out << ' ' << v;
    out << '\n';
  }
  if (!fields.point_vectors.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << "\nVECTORS velocity double\n";
    for (const Point& u : fields.point_vectors) out << u.x() << ' ' << u.y() << " 0\n";
  }
  if (!fields.cell_scalars.empty()) {
    out << "CELL_DATA " << mesh.num_cells() << '\n';
    for (const auto& [name, values] : fields.cell_scalars) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : values) out << v << '\n';
    }
  }
}

void write_mesh(std::ostream& out, const PolyMesh& mesh) {
  out.precision(17);
  out << "domain " << to_string(mesh.domain()) << '\n';
  out << "vertices " << mesh.num_vertices() << '\n';
  for (const Point& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
  out << "cells " << mesh.num_cells() << '\n';
  for (const auto& c : mesh.cells()) {
    out << c.size();
    for (int v : c) out << ' ' << v;
    out << '\n';
  }
  const BoundaryTags tags = mesh.boundary_tags();
  out << "boundary " << tags.size() << '\n';
  for (const auto& [key, tag] : tags) out << key.first << ' ' << key.second << ' ' << tag_name(tag) << '\n';
}

PolyMesh read_mesh(std::istream& in) {
  std::string name;
  expect(in, "domain");
  if (!(in >> name)) throw MeshError("mesh file: missing domain");
  const Domain domain = parse_domain(name);

  expect(in, "vertices");
  std::vector<Point> vertices(read_count(in));
  for (Point& p : vertices)
    if (!(in >> p.x() >> p.y())) throw MeshError("mesh file: truncated vertex list");

  expect(in, "cells");
  std::vector<std::vector<int>> cells(read_count(in));
  for (auto& c : cells) {
    c.resize(read_count(in));
    for (int& v : c)
      if (!(in >> v)) throw MeshError("mesh file: truncated cell list");
  }

  BoundaryTags tags;
  std::string word;
  if (in >> word) {
    if (word != "boundary") throw MeshError("mesh file: expected 'boundary'");
    const int n = read_count(in);
    for (int i = 0; i < n; ++i) {
      int a = 0, b = 0;
      if (!(in >> a >> b >> name)) throw MeshError("mesh file: truncated boundary list");
      tags[{std::min(a, b), std::max(a, b)}] = parse_tag(name);
    }
  }
  return PolyMesh(std::move(vertices), std::move(cells), domain, tags);
}

}  // namespace vemstokes
