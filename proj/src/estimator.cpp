#include "vemstokes/estimator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace vemstokes {

std::vector<double> IndicatorField::eta() const {
  std::vector<double> out(eta2.size());
  for (std::size_t i = 0; i < eta2.size(); ++i) out[i] = std::sqrt(eta2[i]);
  return out;
}

double IndicatorField::global_eta() const { return std::sqrt(total_eta2); }

Eigen::VectorXd cell_dofs(const Discretization& disc, int cell, const Eigen::VectorXd& velocity) {
  const std::vector<int> global = disc.dofs.cell_velocity_dofs(*disc.mesh, cell);
  Eigen::VectorXd local(global.size());
  for (std::size_t i = 0; i < global.size(); ++i) local[i] = velocity[global[i]];
  return local;
}

double theta2(const LocalOperators& ops, const Eigen::VectorXd& local_u, const VemParameters& params) {
  const Eigen::VectorXd remainder = local_u - ops.D * (ops.Pi * local_u);
  return params.alpha * params.nu * remainder.squaredNorm();
}

double interior_residual(const LocalOperators& ops, double lambda, const Eigen::VectorXd& local_u) {
  // Upsilon = lambda Pi0 u + nu Lap Pi u - grad p. Pi u is linear and p is
  // constant per cell, so only the first term survives.
  const P1Coefficients upsilon = lambda * (ops.Pi0 * local_u);
  const double norm2 = upsilon.dot(ops.M * upsilon);
  return ops.diameter * ops.diameter * std::max(0.0, norm2);
}

Eigen::Matrix2d cell_stress(const Discretization& disc, int cell, const EigenPair& pair, const EstimatorOptions& options) {
  const LocalOperators& ops = disc.locals[cell];
  const P1Coefficients coeffs = ops.Pi * cell_dofs(disc, cell, pair.velocity);
  const ScaledMonomials basis(ops.centroid, ops.diameter);
  const double nu = options.jump_nu ? disc.config.vem.nu : 1.0;
  return nu * grad_p1(basis, coeffs) - pair.pressure[cell] * Eigen::Matrix2d::Identity();
}

std::vector<Point> edge_jumps(const Discretization& disc, const EigenPair& pair, const EstimatorOptions& options) {
  const PolyMesh& mesh = *disc.mesh;
  std::vector<Eigen::Matrix2d> stress(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) stress[c] = cell_stress(disc, c, pair, options);
  std::vector<Point> jumps(mesh.num_edges(), Point::Zero());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (edge.on_boundary()) continue;
    // n_K = normal, n_K' = -normal.
    jumps[e] = 0.5 * (stress[edge.left] - stress[edge.right]) * edge.normal;
  }
  return jumps;
}

IndicatorField global_estimate(const Discretization& disc, const EigenPair& pair, const EstimatorOptions& options) {
  const PolyMesh& mesh = *disc.mesh;
  const int ncells = mesh.num_cells();
  IndicatorField field;
  field.theta2.assign(ncells, 0.0);
  field.R2.assign(ncells, 0.0);
  field.J2.assign(ncells, 0.0);
  field.eta2.assign(ncells, 0.0);

  const std::vector<Point> jumps = edge_jumps(disc, pair, options);
  for (int c = 0; c < ncells; ++c) {
    const LocalOperators& ops = disc.locals[c];
    const Eigen::VectorXd u = cell_dofs(disc, c, pair.velocity);
    field.theta2[c] = theta2(ops, u, disc.config.vem);
    field.R2[c] = interior_residual(ops, pair.lambda, u);
    double j2 = 0.0;
    const int n = static_cast<int>(mesh.cell(c).size());
    for (int i = 0; i < n; ++i) {
      const int e = mesh.cell_edge(c, i);
      j2 += mesh.edge(e).length * jumps[e].squaredNorm();
    }
    field.J2[c] = ops.diameter * j2;
    field.eta2[c] = field.theta2[c] + field.R2[c] + field.J2[c];
    field.total_theta2 += field.theta2[c];
    field.total_R2 += field.R2[c];
    field.total_J2 += field.J2[c];
    field.total_eta2 += field.eta2[c];
  }
  return field;
}

double relative_error(double lambda_ref, double lambda_h) {
  if (!(lambda_ref > 0)) throw std::invalid_argument("reference eigenvalue must be positive");
  return std::abs(lambda_ref - lambda_h) / lambda_ref;
}

double effectivity(double lambda_ref, double lambda_h, double eta2) {
  const double err = relative_error(lambda_ref, lambda_h);
  if (err == 0.0) return 0.0;
  if (eta2 == 0.0) return std::numeric_limits<double>::infinity();
  return err / eta2;
}

}  // namespace vemstokes
