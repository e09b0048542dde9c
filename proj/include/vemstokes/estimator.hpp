#pragma once

#include "vemstokes/system.hpp"

#include <vector>

namespace vemstokes {

struct EstimatorOptions {
  /// Include nu in the jump stress (nu grad Pi u - p I); off drops it.
  bool jump_nu = true;
};

/// Per-cell indicator components and their sums.
struct IndicatorField {
  std::vector<double> theta2;  // stabilization term
  std::vector<double> R2;      // interior residual
  std::vector<double> J2;      // sum over cell edges of h_K ||J_l||^2
  std::vector<double> eta2;    // theta2 + R2 + J2

  double total_theta2 = 0.0;
  double total_R2 = 0.0;
  double total_J2 = 0.0;
  double total_eta2 = 0.0;

  std::vector<double> eta() const;  // sqrt of eta2 per cell
  double global_eta() const;
};

/// Local velocity DOFs of `cell` from a full velocity vector (2V + E).
Eigen::VectorXd cell_dofs(const Discretization& disc, int cell, const Eigen::VectorXd& velocity);

/// Theta_K^2 = alpha nu ||(I - D Pi) u||^2 on the DOFs.
double theta2(const LocalOperators& ops, const Eigen::VectorXd& local_u, const VemParameters& params);

/// R_K^2 = h_K^2 ||lambda Pi0 u + nu Lap Pi u - grad p||^2; the last two
/// terms vanish for linear projections and constant pressures.
double interior_residual(const LocalOperators& ops, double lambda, const Eigen::VectorXd& local_u);

/// Stress (nu grad Pi u - p I) of one cell; nu is dropped when jump_nu is off.
Eigen::Matrix2d cell_stress(const Discretization& disc, int cell, const EigenPair& pair, const EstimatorOptions& options);

/// J_l = 1/2 [stress_K n_K + stress_K' n_K'] per edge; zero on the boundary.
std::vector<Point> edge_jumps(const Discretization& disc, const EigenPair& pair, const EstimatorOptions& options = {});

IndicatorField global_estimate(const Discretization& disc, const EigenPair& pair, const EstimatorOptions& options = {});

/// |lambda_ref - lambda_h| / lambda_ref.
double relative_error(double lambda_ref, double lambda_h);
/// err / eta^2; infinite when eta vanishes but the error does not.
double effectivity(double lambda_ref, double lambda_h, double eta2);

}  // namespace vemstokes
