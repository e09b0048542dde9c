#pragma once

#include "vemstokes/geometry.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace vemstokes {

/// Physical and discretization parameters of the local forms.
struct VemParameters {
  double nu = 1.0;               // kinematic viscosity
  double alpha = 1.0;            // stabilization scaling
  bool mass_stabilized = false;  // add the S0 term to the mass form
};

/// Local velocity DOFs of a cell with n vertices: 2n vertex values
/// (x, y interleaved) followed by n edge normal means. The edge means are
/// taken against the global edge normal; `sigma[i]` maps it to the outward
/// normal of local edge i.
struct LocalDofLayout {
  int n = 0;
  std::vector<int> sigma;

  LocalDofLayout() = default;
  LocalDofLayout(int num_vertices, std::vector<int> orientation);
  /// All edge normals outward (sigma = +1).
  static LocalDofLayout outward(int num_vertices);

  int size() const { return 3 * n; }
  int vertex_dof(int vertex, int component) const { return 2 * vertex + component; }
  int edge_dof(int edge) const { return 2 * n + edge; }
};

/// Number of members of the [P1]^2 basis. Member order:
/// (1,0), (x,0), (y,0), (0,1), (0,x), (0,y) with scaled coordinates.
inline constexpr int kP1Size = 6;

using P1Coefficients = Eigen::Matrix<double, kP1Size, 1>;
using P1Matrix = Eigen::Matrix<double, kP1Size, kP1Size>;

/// Evaluates a [P1]^2 field given by scaled-monomial coefficients.
Point eval_p1(const ScaledMonomials& basis, const P1Coefficients& coeffs, const Point& x);
/// Constant gradient of a [P1]^2 field; row r holds the gradient of component r.
Eigen::Matrix2d grad_p1(const ScaledMonomials& basis, const P1Coefficients& coeffs);

/// Boundary trace on one edge: normal component is quadratic (values at
/// start, midpoint, end), tangential component is linear.
struct EdgeTrace {
  Eigen::Vector3d normal;      // f_a, f_m, f_b
  Eigen::Vector2d tangential;  // g_a, g_b

  double normal_at(double s) const;
  double tangential_at(double s) const { return (1.0 - s) * tangential[0] + s * tangential[1]; }
};

/// Reconstructs the trace on edge [a, b] from the endpoint vectors and the
/// mean of v . n over the edge (outward normal of a counterclockwise cell).
EdgeTrace edge_trace(const Point& a, const Point& b, const Point& va, const Point& vb, double outward_mean);

/// DOFs of a [P1]^2 field: vertex values and exact edge normal means.
Eigen::VectorXd dofs_of_polynomial(const Polygon& cell, const LocalDofLayout& layout, const P1Coefficients& coeffs);

/// The 3n x 6 matrix whose columns are the DOFs of the [P1]^2 basis.
Eigen::MatrixXd polynomial_dof_matrix(const Polygon& cell, const LocalDofLayout& layout);

/// H1 projector (6 x 3n) onto [P1]^2: stiffness orthogonality plus
/// matching boundary means.
Eigen::MatrixXd build_h1_projector(const Polygon& cell, const LocalDofLayout& layout, double nu = 1.0);

/// L2 projector (6 x 3n) onto [P1]^2 computed from divergence, boundary
/// normal traces and the enhancement constraint through `h1_projector`.
Eigen::MatrixXd build_l2_projector(const Polygon& cell, const LocalDofLayout& layout,
                                   const Eigen::MatrixXd& h1_projector);

/// Gram matrix of the [P1]^2 basis in L2(K).
P1Matrix p1_mass_matrix(const Polygon& cell);
/// Gram matrix of the [P1]^2 basis for nu * (grad, grad) in L2(K).
P1Matrix p1_stiffness_matrix(const Polygon& cell, double nu);

struct LocalOperators {
  Eigen::MatrixXd D;    // 3n x 6
  Eigen::MatrixXd Pi;   // 6 x 3n
  Eigen::MatrixXd Pi0;  // 6 x 3n
  Eigen::MatrixXd A;    // stiffness, 3n x 3n
  Eigen::MatrixXd C;    // mass, 3n x 3n
  Eigen::RowVectorXd B; // b^K(v, 1) = -int_K div v
  P1Matrix G;           // nu * stiffness Gram
  P1Matrix M;           // mass Gram
  double area = 0.0;
  double diameter = 0.0;
  Point centroid = Point::Zero();
};

LocalOperators local_matrices(const Polygon& cell, const LocalDofLayout& layout, const VemParameters& params);

}  // namespace vemstokes
