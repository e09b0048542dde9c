#pragma once

#include "vemstokes/eigensolver.hpp"
#include "vemstokes/polymesh.hpp"
#include "vemstokes/vem_local.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <vector>

namespace vemstokes {

struct SystemConfig {
  VemParameters vem;
  BoundaryCondition bc = BoundaryCondition::Clamped;
};

/// Global numbering. Velocity DOFs are numbered 2v, 2v+1 for vertex v and
/// 2V + e for edge e; free velocity DOFs come first in the system, then one
/// pressure per cell, then the optional zero-mean multiplier.
class DofMap {
 public:
  DofMap() = default;
  explicit DofMap(const PolyMesh& mesh);

  int num_velocity() const { return static_cast<int>(free_index_.size()); }
  int num_free_velocity() const { return num_free_; }
  int num_pressure() const { return num_cells_; }
  bool has_multiplier() const { return has_multiplier_; }
  int multiplier_index() const { return has_multiplier_ ? num_free_ + num_cells_ : -1; }
  int size() const { return num_free_ + num_cells_ + (has_multiplier_ ? 1 : 0); }

  int vertex_dof(int vertex, int component) const { return 2 * vertex + component; }
  int edge_dof(int edge) const { return 2 * num_vertices_ + edge; }
  /// System row of a velocity DOF, -1 if constrained.
  int free_index(int velocity_dof) const { return free_index_[velocity_dof]; }
  bool constrained(int velocity_dof) const { return free_index_[velocity_dof] < 0; }
  int pressure_index(int cell) const { return num_free_ + cell; }

  /// Velocity DOFs of a cell in local layout order.
  std::vector<int> cell_velocity_dofs(const PolyMesh& mesh, int cell) const;

 private:
  std::vector<int> free_index_;
  int num_free_ = 0;
  int num_cells_ = 0;
  int num_vertices_ = 0;
  bool has_multiplier_ = false;
};

/// The symmetric pencil (A, B): A holds the stiffness block, the divergence
/// blocks and the multiplier row; B holds the velocity mass block.
struct SaddleSystem {
  SparseMatrix A;
  SparseMatrix B;
};

/// Everything produced by one assembly pass; the estimator reuses the local
/// operators.
struct Discretization {
  const PolyMesh* mesh = nullptr;
  SystemConfig config;
  DofMap dofs;
  SaddleSystem system;
  std::vector<LocalDofLayout> layouts;
  std::vector<LocalOperators> locals;
};

LocalDofLayout cell_layout(const PolyMesh& mesh, int cell);

/// Assembles the pencil. The mesh must outlive the returned object. Throws
/// MeshError when the boundary condition does not fit the domain.
Discretization assemble(const PolyMesh& mesh, const SystemConfig& config);

struct EigenPair {
  double lambda = 0.0;
  Eigen::VectorXd velocity;  // all 2V + E velocity DOFs, zeros on constraints
  Eigen::VectorXd pressure;  // one value per cell
  double multiplier = 0.0;
  double residual = 0.0;     // ||A U - lambda B U|| / ||A U||
};

/// Ascending eigenpairs normalized to c_h(u, u) = 1 with the largest
/// magnitude velocity DOF positive.
struct EigenSolution {
  std::vector<EigenPair> pairs;
  int operator_applications = 0;

  std::vector<double> eigenvalues() const;
};

EigenSolution solve_eigs(const Discretization& disc, int k, double shift = 0.0, EigsOptions options = {});

/// Full system vector (free velocity, pressure, multiplier) of a pair.
Eigen::VectorXd system_vector(const Discretization& disc, const EigenPair& pair);

struct SpectralGap {
  double gap = 0.0;  // (lambda_{i+1} - lambda_i) / lambda_i
  bool multiple = false;
};

std::vector<SpectralGap> spectral_gap_report(const std::vector<double>& eigenvalues);

/// Writes a sparse matrix as "rows cols nnz" followed by "i j value" lines.
void write_coo(std::ostream& out, const SparseMatrix& m);

}  // namespace vemstokes
