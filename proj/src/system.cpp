#include "vemstokes/system.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace vemstokes {

namespace {

bool dirichlet_edge(const PolyMesh& mesh, const Edge& e, BoundaryCondition bc) {
  if (!e.on_boundary()) return false;
  if (bc == BoundaryCondition::Clamped) return true;
  const double y0 = mesh.vertex(e.vertices[0]).y();
  const double y1 = mesh.vertex(e.vertices[1]).y();
  return std::abs(y0) < 1e-12 && std::abs(y1) < 1e-12;
}

}  // namespace

DofMap::DofMap(const PolyMesh& mesh) : DofMap() {
  // Edge tags decide the constraints; see assemble() for the bc-driven path.
  num_vertices_ = mesh.num_vertices();
  num_cells_ = mesh.num_cells();
  free_index_.assign(2 * mesh.num_vertices() + mesh.num_edges(), 0);
  has_multiplier_ = true;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (!edge.on_boundary()) continue;
    if (edge.tag != BoundaryTag::Dirichlet) {
      has_multiplier_ = false;
      continue;
    }
    free_index_[edge_dof(e)] = -1;
    for (int v : edge.vertices) free_index_[vertex_dof(v, 0)] = free_index_[vertex_dof(v, 1)] = -1;
  }
  num_free_ = 0;
  for (int& f : free_index_)
    if (f >= 0) f = num_free_++;
}

std::vector<int> DofMap::cell_velocity_dofs(const PolyMesh& mesh, int cell) const {
  const auto ids = mesh.cell(cell);
  const int n = static_cast<int>(ids.size());
  std::vector<int> dofs(3 * n);
  for (int i = 0; i < n; ++i) {
    dofs[2 * i] = vertex_dof(ids[i], 0);
    dofs[2 * i + 1] = vertex_dof(ids[i], 1);
    dofs[2 * n + i] = edge_dof(mesh.cell_edge(cell, i));
  }
  return dofs;
}

LocalDofLayout cell_layout(const PolyMesh& mesh, int cell) {
  const int n = static_cast<int>(mesh.cell(cell).size());
  std::vector<int> sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = mesh.orientation(cell, i);
  return LocalDofLayout(n, std::move(sigma));
}

Discretization assemble(const PolyMesh& mesh, const SystemConfig& config) {
  if (config.bc == BoundaryCondition::Mixed && mesh.domain() != Domain::UnitSquare)
    throw MeshError("mixed boundary conditions require the unit square domain");
  if (!(config.vem.nu > 0) || !(config.vem.alpha > 0)) throw std::invalid_argument("nu and alpha must be positive");

  // Constraints follow the requested boundary condition, not stale tags.
  for (const Edge& e : mesh.edges()) {
    if (!e.on_boundary()) continue;
    const BoundaryTag expected = dirichlet_edge(mesh, e, config.bc) ? BoundaryTag::Dirichlet : BoundaryTag::Neumann;
    if (e.tag != expected) throw MeshError("mesh boundary tags do not match the boundary condition; retag with with_boundary_condition()");
  }

  Discretization disc;
  disc.mesh = &mesh;
  disc.config = config;
  disc.dofs = DofMap(mesh);
  const DofMap& dofs = disc.dofs;

  const int ncells = mesh.num_cells();
  disc.layouts.reserve(ncells);
  disc.locals.reserve(ncells);
  for (int c = 0; c < ncells; ++c) {
    disc.layouts.push_back(cell_layout(mesh, c));
    disc.locals.push_back(local_matrices(mesh.polygon(c), disc.layouts.back(), config.vem));
  }

  std::vector<Eigen::Triplet<double>> a_entries;
  std::vector<Eigen::Triplet<double>> b_entries;
  std::size_t estimate = 0;
  for (int c = 0; c < ncells; ++c) estimate += disc.locals[c].A.size();
  a_entries.reserve(estimate + 6 * ncells);
  b_entries.reserve(estimate);

  for (int c = 0; c < ncells; ++c) {
    const LocalOperators& ops = disc.locals[c];
    const std::vector<int> local = dofs.cell_velocity_dofs(mesh, c);
    const int ndof = static_cast<int>(local.size());
    std::vector<int> rows(ndof);
    for (int i = 0; i < ndof; ++i) rows[i] = dofs.free_index(local[i]);
    const int p = dofs.pressure_index(c);
    for (int i = 0; i < ndof; ++i) {
      if (rows[i] < 0) continue;
      for (int j = 0; j < ndof; ++j) {
        if (rows[j] < 0) continue;
        a_entries.emplace_back(rows[i], rows[j], ops.A(i, j));
        b_entries.emplace_back(rows[i], rows[j], ops.C(i, j));
      }
      if (ops.B[i] != 0.0) {
        a_entries.emplace_back(p, rows[i], ops.B[i]);
        a_entries.emplace_back(rows[i], p, ops.B[i]);
      }
    }
    if (dofs.has_multiplier()) {
      a_entries.emplace_back(dofs.multiplier_index(), p, ops.area);
      a_entries.emplace_back(p, dofs.multiplier_index(), ops.area);
    }
  }

  const int n = dofs.size();
  disc.system.A.resize(n, n);
  disc.system.A.setFromTriplets(a_entries.begin(), a_entries.end());
  disc.system.B.resize(n, n);
  disc.system.B.setFromTriplets(b_entries.begin(), b_entries.end());
  disc.system.A.makeCompressed();
  disc.system.B.makeCompressed();
  return disc;
}

std::vector<double> EigenSolution::eigenvalues() const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.lambda);
  return out;
}

Eigen::VectorXd system_vector(const Discretization& disc, const EigenPair& pair) {
  const DofMap& dofs = disc.dofs;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dofs.size());
  for (int d = 0; d < dofs.num_velocity(); ++d)
    if (!dofs.constrained(d)) x[dofs.free_index(d)] = pair.velocity[d];
  for (int c = 0; c < dofs.num_pressure(); ++c) x[dofs.pressure_index(c)] = pair.pressure[c];
  if (dofs.has_multiplier()) x[dofs.multiplier_index()] = pair.multiplier;
  return x;
}

EigenSolution solve_eigs(const Discretization& disc, int k, double shift, EigsOptions options) {
  if (shift < 0) throw std::invalid_argument("shift must be nonnegative");
  options.k = k;
  options.shift = shift;
  const DofMap& dofs = disc.dofs;
  // The multiplier row is dense; it is replaced by an equivalent pinned
  // solve, and the multiplier of every eigenpair is zero.
  const int n = dofs.has_multiplier() ? dofs.size() - 1 : dofs.size();
  const SparseMatrix a = disc.system.A.topLeftCorner(n, n);
  const SparseMatrix b = disc.system.B.topLeftCorner(n, n);
  EigsResult eigs;
  if (dofs.has_multiplier()) {
    LinearConstraint constraint;
    constraint.weights = Eigen::VectorXd::Zero(n);
    constraint.null_vector = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < dofs.num_pressure(); ++c) {
      constraint.weights[dofs.pressure_index(c)] = disc.locals[c].area;
      constraint.null_vector[dofs.pressure_index(c)] = 1.0;
    }
    constraint.pin = dofs.pressure_index(0);
    eigs = shift_invert_eigs(a, b, options, &constraint);
  } else {
    eigs = shift_invert_eigs(a, b, options);
  }

  Eigen::MatrixXd& vectors = eigs.vectors;
  const auto& values = eigs.values;
  // Re-orthonormalize numerically multiple eigenvalues in the c_h inner product.
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i + 1;
    while (j < values.size() && std::abs(values[j] - values[j - 1]) < 1e-8 * std::abs(values[j - 1])) ++j;
    for (std::size_t c = i; c < j; ++c) {
      Eigen::VectorXd v = vectors.col(c);
      for (std::size_t d = i; d < c; ++d) v -= vectors.col(d) * vectors.col(d).dot(b * v);
      vectors.col(c) = v / std::sqrt(v.dot(b * v));
    }
    i = j;
  }

  EigenSolution solution;
  solution.operator_applications = eigs.operator_applications;
  for (std::size_t c = 0; c < values.size(); ++c) {
    Eigen::VectorXd x = vectors.col(c);
    x /= std::sqrt(x.dot(b * x));
    EigenPair pair;
    pair.lambda = values[c];
    pair.velocity = Eigen::VectorXd::Zero(dofs.num_velocity());
    for (int d = 0; d < dofs.num_velocity(); ++d)
      if (!dofs.constrained(d)) pair.velocity[d] = x[dofs.free_index(d)];
    Eigen::Index largest = 0;
    pair.velocity.cwiseAbs().maxCoeff(&largest);
    if (pair.velocity[largest] < 0) {
      pair.velocity = -pair.velocity;
      x = -x;
    }
    pair.pressure = x.segment(dofs.num_free_velocity(), dofs.num_pressure());
    Eigen::VectorXd full = Eigen::VectorXd::Zero(dofs.size());
    full.head(n) = x;
    const Eigen::VectorXd ax = disc.system.A * full;
    pair.residual = (ax - pair.lambda * (disc.system.B * full)).norm() / ax.norm();
    solution.pairs.push_back(std::move(pair));
  }
  return solution;
}

std::vector<SpectralGap> spectral_gap_report(const std::vector<double>& eigenvalues) {
  std::vector<SpectralGap> gaps;
  for (std::size_t i = 0; i + 1 < eigenvalues.size(); ++i) {
    SpectralGap g;
    g.gap = std::abs(eigenvalues[i + 1] - eigenvalues[i]) / std::abs(eigenvalues[i]);
    g.multiple = g.gap < 1e-6;
    gaps.push_back(g);
  }
  return gaps;
}

void write_coo(std::ostream& out, const SparseMatrix& m) {
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out.precision(17);
  for (int col = 0; col < m.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(m, col); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace vemstokes
