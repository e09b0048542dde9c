#include "vemstokes/vem_local.hpp"

#include <array>
#include <cmath>
#include <string>

namespace vemstokes {

namespace {

// Quadratic Lagrange basis on s in {0, 1/2, 1}.
double lagrange0(double s) { return 2.0 * (s - 0.5) * (s - 1.0); }
double lagrange1(double s) { return 4.0 * s * (1.0 - s); }
double lagrange2(double s) { return 2.0 * s * (s - 0.5); }

Point p1_member(int j, const Point& s) {
  switch (j) {
    case 0: return {1.0, 0.0};
    case 1: return {s.x(), 0.0};
    case 2: return {s.y(), 0.0};
    case 3: return {0.0, 1.0};
    case 4: return {0.0, s.x()};
    default: return {0.0, s.y()};
  }
}

Eigen::Matrix2d p1_member_gradient(int j, double h) {
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  switch (j) {
    case 1: g(0, 0) = 1.0 / h; break;
    case 2: g(0, 1) = 1.0 / h; break;
    case 4: g(1, 0) = 1.0 / h; break;
    case 5: g(1, 1) = 1.0 / h; break;
    default: break;
  }
  return g;
}

struct EdgeFrame {
  Point a, b, mid, tangent, normal;  // normal is outward for a ccw cell
  double length;
};

EdgeFrame edge_frame(const Polygon& cell, int i) {
  EdgeFrame f;
  f.a = cell.vertex(i);
  f.b = cell.vertex(i + 1);
  f.mid = 0.5 * (f.a + f.b);
  f.length = (f.b - f.a).norm();
  f.tangent = (f.b - f.a) / f.length;
  f.normal = Point(f.tangent.y(), -f.tangent.x());
  return f;
}

// Linear map DOFs -> int_edge v (2 x 3n), exact for the virtual trace.
Eigen::MatrixXd edge_integral_map(const EdgeFrame& f, const LocalDofLayout& layout, int i) {
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(2, layout.size());
  const Eigen::Matrix2d tt = 0.5 * f.length * f.tangent * f.tangent.transpose();
  const int j = (i + 1) % layout.n;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      map(r, layout.vertex_dof(i, c)) += tt(r, c);
      map(r, layout.vertex_dof(j, c)) += tt(r, c);
    }
  map.col(layout.edge_dof(i)) += layout.sigma[i] * f.length * f.normal;
  return map;
}

void require_layout(const Polygon& cell, const LocalDofLayout& layout) {
  if (layout.n != static_cast<int>(cell.size()) || static_cast<int>(layout.sigma.size()) != layout.n)
    throw GeometryError("DOF layout does not match the cell");
}

}  // namespace

LocalDofLayout::LocalDofLayout(int num_vertices, std::vector<int> orientation)
    : n(num_vertices), sigma(std::move(orientation)) {}

LocalDofLayout LocalDofLayout::outward(int num_vertices) {
  return LocalDofLayout(num_vertices, std::vector<int>(num_vertices, 1));
}

Point eval_p1(const ScaledMonomials& basis, const P1Coefficients& coeffs, const Point& x) {
  const Point s = basis.local(x);
  Point v = Point::Zero();
  for (int j = 0; j < kP1Size; ++j) v += coeffs[j] * p1_member(j, s);
  return v;
}

Eigen::Matrix2d grad_p1(const ScaledMonomials& basis, const P1Coefficients& coeffs) {
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (int j = 0; j < kP1Size; ++j) g += coeffs[j] * p1_member_gradient(j, basis.scale());
  return g;
}

double EdgeTrace::normal_at(double s) const {
  return normal[0] * lagrange0(s) + normal[1] * lagrange1(s) + normal[2] * lagrange2(s);
}

EdgeTrace edge_trace(const Point& a, const Point& b, const Point& va, const Point& vb, double outward_mean) {
  const Point t = (b - a).normalized();
  const Point n(t.y(), -t.x());
  EdgeTrace trace;
  const double fa = va.dot(n);
  const double fb = vb.dot(n);
  // Simpson's rule is exact for the quadratic normal component.
  trace.normal << fa, (6.0 * outward_mean - fa - fb) / 4.0, fb;
  trace.tangential << va.dot(t), vb.dot(t);
  return trace;
}

Eigen::VectorXd dofs_of_polynomial(const Polygon& cell, const LocalDofLayout& layout, const P1Coefficients& coeffs) {
  require_layout(cell, layout);
  const ScaledMonomials basis(cell);
  Eigen::VectorXd dofs(layout.size());
  for (int i = 0; i < layout.n; ++i) {
    const Point v = eval_p1(basis, coeffs, cell.vertex(i));
    dofs[layout.vertex_dof(i, 0)] = v.x();
    dofs[layout.vertex_dof(i, 1)] = v.y();
    const EdgeFrame f = edge_frame(cell, i);
    // Linear fields: the edge mean is the midpoint value.
    dofs[layout.edge_dof(i)] = layout.sigma[i] * eval_p1(basis, coeffs, f.mid).dot(f.normal);
  }
  return dofs;
}

Eigen::MatrixXd polynomial_dof_matrix(const Polygon& cell, const LocalDofLayout& layout) {
  Eigen::MatrixXd d(layout.size(), kP1Size);
  for (int j = 0; j < kP1Size; ++j) d.col(j) = dofs_of_polynomial(cell, layout, P1Coefficients::Unit(j));
  return d;
}

P1Matrix p1_mass_matrix(const Polygon& cell) {
  const ScaledMonomials basis(cell);
  const MonomialMoments mom = monomial_moments(cell, basis, 2);
  // Scalar Gram of {1, x, y}.
  const std::array<std::array<int, 2>, 3> exps{{{0, 0}, {1, 0}, {0, 1}}};
  Eigen::Matrix3d scalar;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) scalar(r, c) = mom(exps[r][0] + exps[c][0], exps[r][1] + exps[c][1]);
  P1Matrix m = P1Matrix::Zero();
  m.topLeftCorner<3, 3>() = scalar;
  m.bottomRightCorner<3, 3>() = scalar;
  return m;
}

P1Matrix p1_stiffness_matrix(const Polygon& cell, double nu) {
  const double h = cell.diameter();
  P1Matrix g = P1Matrix::Zero();
  for (int j = 0; j < kP1Size; ++j)
    for (int k = 0; k < kP1Size; ++k)
      g(j, k) = nu * cell.area() * (p1_member_gradient(j, h).cwiseProduct(p1_member_gradient(k, h))).sum();
  return g;
}

Eigen::MatrixXd build_h1_projector(const Polygon& cell, const LocalDofLayout& layout, double nu) {
  require_layout(cell, layout);
  const ScaledMonomials basis(cell);
  const double h = cell.diameter();
  const P1Matrix stiffness = p1_stiffness_matrix(cell, nu);

  P1Matrix lhs = P1Matrix::Zero();
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(kP1Size, layout.size());
  for (int i = 0; i < layout.n; ++i) {
    const EdgeFrame f = edge_frame(cell, i);
    const Eigen::MatrixXd integral = edge_integral_map(f, layout, i);
    // Boundary means for the two constant directions.
    for (int k = 0; k < kP1Size; ++k) {
      const Point mean = f.length * p1_member(k, basis.local(f.mid));
      lhs(0, k) += mean.x();
      lhs(3, k) += mean.y();
    }
    rhs.row(0) += integral.row(0);
    rhs.row(3) += integral.row(1);
    // a^K(p, v) = nu * int_dK (grad p n) . v since Laplacian of p vanishes.
    for (int j : {1, 2, 4, 5}) {
      const Point flux = p1_member_gradient(j, h) * f.normal;
      rhs.row(j) += nu * flux.transpose() * integral;
    }
  }
  for (int j : {1, 2, 4, 5}) lhs.row(j) = stiffness.row(j);

  Eigen::FullPivLU<P1Matrix> lu(lhs);
  if (!lu.isInvertible()) throw GeometryError("degenerate element: singular H1 projector system");
  return lu.solve(rhs);
}

Eigen::MatrixXd build_l2_projector(const Polygon& cell, const LocalDofLayout& layout,
                                   const Eigen::MatrixXd& h1_projector) {
  require_layout(cell, layout);
  const ScaledMonomials basis(cell);
  const MonomialMoments mom = monomial_moments(cell, basis, 2);
  const P1Matrix mass = p1_mass_matrix(cell);
  const double h = cell.diameter();
  const int ndof = layout.size();

  // Constant divergence: |K|^{-1} int_dK v . n.
  Eigen::RowVectorXd divergence = Eigen::RowVectorXd::Zero(ndof);
  for (int i = 0; i < layout.n; ++i)
    divergence[layout.edge_dof(i)] = layout.sigma[i] * edge_frame(cell, i).length / cell.area();

  // Test fields g = h grad m for m in {x, y, x^2, xy, y^2}, as [P1]^2 coefficients.
  const std::array<std::array<int, 2>, 5> exps{{{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}};
  Eigen::Matrix<double, kP1Size, 5> gradients = Eigen::Matrix<double, kP1Size, 5>::Zero();
  gradients(0, 0) = 1.0;
  gradients(3, 1) = 1.0;
  gradients(1, 2) = 2.0;
  gradients(2, 3) = 1.0;
  gradients(4, 3) = 1.0;
  gradients(5, 4) = 2.0;

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(kP1Size, ndof);
  for (int k = 0; k < 5; ++k) {
    const auto [a, b] = exps[k];
    rhs.row(k) = -mom(a, b) * divergence;
  }
  for (int i = 0; i < layout.n; ++i) {
    const EdgeFrame f = edge_frame(cell, i);
    const int next = (i + 1) % layout.n;
    const QuadratureRule rule = edge_rule(f.a, f.b);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double s = (rule.nodes[q] - f.a).norm() / f.length;
      // v . n on the edge in terms of the DOFs.
      const double wa = lagrange0(s) - 0.25 * lagrange1(s);
      const double wb = lagrange2(s) - 0.25 * lagrange1(s);
      const double wm = 1.5 * lagrange1(s);
      for (int k = 0; k < 5; ++k) {
        const auto [a, b] = exps[k];
        const double weight = rule.weights[q] * basis.eval(a, b, rule.nodes[q]);
        for (int c = 0; c < 2; ++c) {
          rhs(k, layout.vertex_dof(i, c)) += weight * wa * f.normal[c];
          rhs(k, layout.vertex_dof(next, c)) += weight * wb * f.normal[c];
        }
        rhs(k, layout.edge_dof(i)) += weight * wm * layout.sigma[i];
      }
    }
  }
  rhs.topRows(5) *= h;

  // The L2 complement of grad P2 inside [P1]^2 is one-dimensional; start from
  // the rotation (-y, x) and remove its projection onto the gradients.
  P1Coefficients rotation = P1Coefficients::Zero();
  rotation[2] = -1.0;
  rotation[4] = 1.0;
  const Eigen::Matrix<double, 5, 5> gram = gradients.transpose() * mass * gradients;
  const Eigen::Matrix<double, 5, 1> beta = gram.ldlt().solve(gradients.transpose() * mass * rotation);
  const P1Coefficients complement = rotation - gradients * beta;
  // Enhancement: int_K v . g = int_K Pi v . g for g in the complement.
  rhs.row(5) = complement.transpose() * mass * h1_projector;

  P1Matrix tests;
  tests.leftCols<5>() = gradients;
  tests.col(5) = complement;
  const P1Matrix system = tests.transpose() * mass;
  Eigen::FullPivLU<P1Matrix> lu(system);
  if (!lu.isInvertible()) throw GeometryError("degenerate element: singular L2 projector system");
  return lu.solve(rhs);
}

LocalOperators local_matrices(const Polygon& cell, const LocalDofLayout& layout, const VemParameters& params) {
  LocalOperators ops;
  ops.area = cell.area();
  ops.diameter = cell.diameter();
  ops.centroid = cell.centroid();
  ops.D = polynomial_dof_matrix(cell, layout);
  ops.Pi = build_h1_projector(cell, layout, params.nu);
  ops.Pi0 = build_l2_projector(cell, layout, ops.Pi);
  ops.G = p1_stiffness_matrix(cell, params.nu);
  ops.M = p1_mass_matrix(cell);

  const int ndof = layout.size();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(ndof, ndof);
  const Eigen::MatrixXd remainder = identity - ops.D * ops.Pi;
  ops.A = ops.Pi.transpose() * ops.G * ops.Pi + params.alpha * params.nu * remainder.transpose() * remainder;
  ops.C = ops.Pi0.transpose() * ops.M * ops.Pi0;
  if (params.mass_stabilized) {
    const Eigen::MatrixXd remainder0 = identity - ops.D * ops.Pi0;
    ops.C += cell.area() * remainder0.transpose() * remainder0;
  }
  // Exact symmetry for the global assembly.
  ops.A = 0.5 * (ops.A + ops.A.transpose()).eval();
  ops.C = 0.5 * (ops.C + ops.C.transpose()).eval();

  ops.B = Eigen::RowVectorXd::Zero(ndof);
  for (int i = 0; i < layout.n; ++i) ops.B[layout.edge_dof(i)] = -layout.sigma[i] * edge_frame(cell, i).length;
  return ops;
}

}  // namespace vemstokes
