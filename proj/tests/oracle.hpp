#pragma once

// Independent dense-quadrature reimplementations of the local VEM operators.
// They share only the polygon vertex list and the DOF layout with the
// library, and integrate by composite rules instead of exact moments.

#include "vemstokes/system.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <functional>
#include <type_traits>
#include <vector>

namespace oracle {

using vemstokes::Point;

/// Composite Simpson rule with `panels` panels on the segment [a, b].
template <class F>
auto edge_integral(const Point& a, const Point& b, F&& f, int panels = 1000) {
  const double len = (b - a).norm();
  const double step = 1.0 / panels;
  using R = std::decay_t<decltype(f(a, 0.0))>;
  auto at = [&](double s) -> R { return f(Point(a + s * (b - a)), s); };
  R sum = at(0.0) + at(1.0);
  for (int i = 0; i < panels; ++i) sum += 4.0 * at((i + 0.5) * step);
  for (int i = 1; i < panels; ++i) sum += 2.0 * at(i * step);
  return R(sum * (step * len / 6.0));
}

/// Signed fan from the vertex average, each triangle split into `m`^2
/// subtriangles integrated with the 7-point degree-5 rule.
template <class F>
auto cell_integral(const std::vector<Point>& v, F&& f, int m = 4) {
  static const double w7[7] = {0.225, 0.1323941527885062, 0.1323941527885062, 0.1323941527885062,
                               0.1259391805448271, 0.1259391805448271, 0.1259391805448271};
  static const double a1 = 0.0597158717897698, b1 = 0.4701420641051151;
  static const double a2 = 0.7974269853530873, b2 = 0.1012865073234563;
  static const double bary[7][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
                                    {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
  Point o = Point::Zero();
  for (const Point& p : v) o += p;
  o /= static_cast<double>(v.size());
  using R = std::decay_t<decltype(f(o))>;
  R sum = f(o) * 0.0;
  auto triangle = [&](const Point& p0, const Point& p1, const Point& p2) {
    const Point e1 = p1 - p0, e2 = p2 - p0;
    const double area = 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    for (int q = 0; q < 7; ++q) sum += (area * w7[q]) * f(Point(bary[q][0] * p0 + bary[q][1] * p1 + bary[q][2] * p2));
  };
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point a = v[i], b = v[(i + 1) % v.size()];
    // Uniform split of (o, a, b) into m^2 subtriangles.
    auto node = [&](int r, int s) { return Point(o + (a - o) * (double(r) / m) + (b - o) * (double(s) / m)); };
    for (int r = 0; r < m; ++r)
      for (int s = 0; s + r < m; ++s) {
        triangle(node(r, s), node(r + 1, s), node(r, s + 1));
        if (r + s + 1 < m) triangle(node(r + 1, s), node(r + 1, s + 1), node(r, s + 1));
      }
  }
  return sum;
}

struct Cell {
  std::vector<Point> v;
  std::vector<int> sigma;
  double area = 0.0;
  Point centroid = Point::Zero();
  double h = 0.0;
  int n = 0;

  Cell(std::vector<Point> vertices, std::vector<int> orientation) : v(std::move(vertices)), sigma(std::move(orientation)) {
    n = static_cast<int>(v.size());
    area = cell_integral(v, [](const Point&) { return 1.0; });
    centroid = cell_integral(v, [](const Point& x) { return Point(x); }) / area;
    for (const Point& a : v)
      for (const Point& b : v) h = std::max(h, (a - b).norm());
  }
  Point a(int i) const { return v[i]; }
  Point b(int i) const { return v[(i + 1) % n]; }
  Point outward(int i) const {
    const Point t = (b(i) - a(i)).normalized();
    return Point(t.y(), -t.x());
  }
  double length(int i) const { return (b(i) - a(i)).norm(); }
  /// The [P1]^2 basis member j in scaled coordinates.
  Point member(int j, const Point& x) const {
    const Point s = (x - centroid) / h;
    const double c[3] = {1.0, s.x(), s.y()};
    return j < 3 ? Point(c[j], 0.0) : Point(0.0, c[j - 3]);
  }
  Eigen::Matrix2d member_grad(int j) const {
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    const int comp = j / 3, k = j % 3;
    if (k > 0) g(comp, k - 1) = 1.0 / h;
    return g;
  }
  /// Trace of the virtual field with DOF vector u at parameter s of edge i.
  Point trace(const Eigen::VectorXd& u, int i, double s) const {
    const int j = (i + 1) % n;
    const Point ua(u[2 * i], u[2 * i + 1]), ub(u[2 * j], u[2 * j + 1]);
    const Point nrm = outward(i);
    const Point t(-nrm.y(), nrm.x());
    const double mu = sigma[i] * u[2 * n + i];
    const double fa = ua.dot(nrm), fb = ub.dot(nrm);
    const double fm = (6.0 * mu - fa - fb) / 4.0;
    const double normal = fa * 2.0 * (s - 0.5) * (s - 1.0) + fm * 4.0 * s * (1.0 - s) + fb * 2.0 * s * (s - 0.5);
    const double tangential = (1.0 - s) * ua.dot(t) + s * ub.dot(t);
    return normal * nrm + tangential * t;
  }
};

inline Cell make_cell(const vemstokes::PolyMesh& mesh, int c) {
  std::vector<Point> v;
  for (int id : mesh.cell(c)) v.push_back(mesh.vertex(id));
  std::vector<int> sigma;
  for (std::size_t i = 0; i < v.size(); ++i) sigma.push_back(mesh.orientation(c, static_cast<int>(i)));
  return Cell(std::move(v), std::move(sigma));
}

inline Eigen::MatrixXd dof_matrix(const Cell& K) {
  Eigen::MatrixXd D(3 * K.n, 6);
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < K.n; ++i) {
      const Point p = K.member(j, K.v[i]);
      D(2 * i, j) = p.x();
      D(2 * i + 1, j) = p.y();
      const Point nrm = K.outward(i);
      D(2 * K.n + i, j) =
          K.sigma[i] * edge_integral(K.a(i), K.b(i), [&](const Point& x, double) { return K.member(j, x).dot(nrm); }) /
          K.length(i);
    }
  }
  return D;
}

inline Eigen::MatrixXd mass(const Cell& K) {
  Eigen::MatrixXd M(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      M(i, j) = cell_integral(K.v, [&](const Point& x) { return K.member(i, x).dot(K.member(j, x)); });
  return M;
}

inline Eigen::MatrixXd stiffness(const Cell& K, double nu) {
  Eigen::MatrixXd G(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) G(i, j) = nu * K.area * (K.member_grad(i).array() * K.member_grad(j).array()).sum();
  return G;
}

/// H1 projector from a^K(p, Pi v) = int_dK (grad p n) . v and boundary means.
inline Eigen::MatrixXd h1_projector(const Cell& K) {
  const int nd = 3 * K.n;
  Eigen::MatrixXd lhs = stiffness(K, 1.0);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(6, nd);
  for (int c : {0, 3}) {
    lhs.row(c).setZero();
    for (int i = 0; i < K.n; ++i)
      for (int j = 0; j < 6; ++j)
        lhs(c, j) += edge_integral(K.a(i), K.b(i), [&](const Point& x, double) { return K.member(j, x)[c / 3]; });
  }
  for (int d = 0; d < nd; ++d) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(nd, d);
    for (int i = 0; i < K.n; ++i) {
      const Point nrm = K.outward(i);
      for (int r = 0; r < 6; ++r) {
        if (r == 0 || r == 3) {
          rhs(r, d) += edge_integral(K.a(i), K.b(i), [&](const Point&, double s) { return K.trace(e, i, s)[r / 3]; });
        } else {
          const Point gn = K.member_grad(r) * nrm;
          rhs(r, d) += edge_integral(K.a(i), K.b(i), [&](const Point&, double s) { return gn.dot(K.trace(e, i, s)); });
        }
      }
    }
  }
  return lhs.fullPivLu().solve(rhs);
}

/// L2 projector: gradients of P2 through the divergence theorem, the
/// orthogonal complement of those gradients through the H1 projection.
inline Eigen::MatrixXd l2_projector(const Cell& K, const Eigen::MatrixXd& pi) {
  const int nd = 3 * K.n;
  // Scalar p2 test functions in unscaled coordinates about the centroid.
  auto p2 = [&](int k, const Point& x) {
    const Point s = x - K.centroid;
    switch (k) {
      case 0: return s.x();
      case 1: return s.y();
      case 2: return s.x() * s.x();
      case 3: return s.x() * s.y();
      default: return s.y() * s.y();
    }
  };
  auto grad_p2 = [&](int k, const Point& x) {
    const Point s = x - K.centroid;
    switch (k) {
      case 0: return Point(1.0, 0.0);
      case 1: return Point(0.0, 1.0);
      case 2: return Point(2.0 * s.x(), 0.0);
      case 3: return Point(s.y(), s.x());
      default: return Point(0.0, 2.0 * s.y());
    }
  };
  const Eigen::MatrixXd M = mass(K);
  // Test fields as [P1]^2 coefficient vectors via least squares on samples.
  auto coefficients = [&](const std::function<Point(const Point&)>& g) {
    Eigen::MatrixXd rows(12, 6);
    Eigen::VectorXd vals(12);
    const Point pts[6] = {K.centroid, K.centroid + Point(K.h, 0), K.centroid + Point(0, K.h),
                          K.centroid + Point(K.h, K.h), K.centroid - Point(K.h, 0), K.centroid - Point(0, K.h)};
    for (int q = 0; q < 6; ++q)
      for (int c = 0; c < 2; ++c) {
        for (int j = 0; j < 6; ++j) rows(2 * q + c, j) = K.member(j, pts[q])[c];
        vals[2 * q + c] = g(pts[q])[c];
      }
    return Eigen::VectorXd(rows.colPivHouseholderQr().solve(vals));
  };
  Eigen::MatrixXd tests(6, 6);
  for (int k = 0; k < 5; ++k) tests.col(k) = coefficients([&](const Point& x) { return grad_p2(k, x); });
  // Complement: rotation minus its M-projection onto the gradients.
  Eigen::VectorXd rot = coefficients([&](const Point& x) { return Point(-(x - K.centroid).y(), (x - K.centroid).x()); });
  const Eigen::MatrixXd Gt = tests.leftCols(5);
  rot -= Gt * (Gt.transpose() * M * Gt).ldlt().solve(Gt.transpose() * M * rot);
  tests.col(5) = rot;

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(6, nd);
  for (int d = 0; d < nd; ++d) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(nd, d);
    double flux = 0.0;
    for (int i = 0; i < K.n; ++i)
      flux += edge_integral(K.a(i), K.b(i), [&](const Point&, double s) { return K.trace(e, i, s).dot(K.outward(i)); });
    const double div = flux / K.area;
    for (int k = 0; k < 5; ++k) {
      double boundary = 0.0;
      for (int i = 0; i < K.n; ++i)
        boundary += edge_integral(K.a(i), K.b(i),
                                  [&](const Point& x, double s) { return K.trace(e, i, s).dot(K.outward(i)) * p2(k, x); });
      rhs(k, d) = -div * cell_integral(K.v, [&](const Point& x) { return p2(k, x); }) + boundary;
    }
    const Eigen::VectorXd piv = pi.col(d);
    rhs(5, d) = cell_integral(K.v, [&](const Point& x) {
      Point pv = Point::Zero(), g = Point::Zero();
      for (int j = 0; j < 6; ++j) {
        pv += piv[j] * K.member(j, x);
        g += tests(j, 5) * K.member(j, x);
      }
      return pv.dot(g);
    });
  }
  // rhs = T^T M Pi0  =>  Pi0 = (T^T M)^{-1} rhs.
  return (tests.transpose() * M).fullPivLu().solve(rhs);
}

inline Eigen::MatrixXd stiffness_matrix(const Cell& K, double nu, double alpha) {
  const Eigen::MatrixXd pi = h1_projector(K);
  const Eigen::MatrixXd rem = Eigen::MatrixXd::Identity(3 * K.n, 3 * K.n) - dof_matrix(K) * pi;
  return pi.transpose() * stiffness(K, nu) * pi + alpha * nu * rem.transpose() * rem;
}

/// DOFs of a smooth field: vertex values and edge normal means against the
/// global edge normal, by dense quadrature.
inline Eigen::VectorXd interpolate(const vemstokes::PolyMesh& mesh, const std::function<Point(const Point&)>& f) {
  const int V = mesh.num_vertices();
  Eigen::VectorXd u(2 * V + mesh.num_edges());
  for (int v = 0; v < V; ++v) u.segment<2>(2 * v) = f(mesh.vertex(v));
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const vemstokes::Edge& edge = mesh.edge(e);
    // Walk the lower-index neighbour counterclockwise so that the right
    // hand normal of its edge is outward.
    const auto cell = mesh.cell(edge.left);
    const int n = static_cast<int>(cell.size());
    Point a, b;
    for (int i = 0; i < n; ++i)
      if (mesh.cell_edge(edge.left, i) == e) {
        a = mesh.vertex(cell[i]);
        b = mesh.vertex(cell[(i + 1) % n]);
      }
    const Point t = (b - a).normalized();
    const Point nrm(t.y(), -t.x());
    u[2 * V + e] = edge_integral(a, b, [&](const Point& x, double) { return f(x).dot(nrm); }) / (b - a).norm();
  }
  return u;
}

/// b^K(v, 1) = -int_dK v . n of every local DOF.
inline Eigen::RowVectorXd divergence_row(const Cell& K) {
  const int nd = 3 * K.n;
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(nd);
  for (int d = 0; d < nd; ++d) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(nd, d);
    for (int i = 0; i < K.n; ++i)
      b[d] -= edge_integral(K.a(i), K.b(i), [&](const Point&, double s) { return K.trace(e, i, s).dot(K.outward(i)); });
  }
  return b;
}

/// Dense clamped pencil rebuilt from the oracle local matrices. Velocity
/// DOFs on boundary vertices and edges are dropped; the pressure block is
/// bordered by the zero-mean row weighted with the cell areas.
struct DensePencil {
  Eigen::MatrixXd A, B;
  std::vector<int> velocity_row;  // global velocity DOF -> row, -1 if constrained
  int num_free = 0;
};

inline DensePencil clamped_pencil(const vemstokes::PolyMesh& mesh, double nu, double alpha) {
  const int V = mesh.num_vertices(), nv = 2 * V + mesh.num_edges(), C = mesh.num_cells();
  std::vector<bool> fixed(nv, false);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto& edge = mesh.edge(e);
    if (edge.right >= 0) continue;
    fixed[2 * V + e] = true;
    for (int v : edge.vertices) fixed[2 * v] = fixed[2 * v + 1] = true;
  }
  DensePencil P;
  P.velocity_row.assign(nv, -1);
  for (int d = 0; d < nv; ++d)
    if (!fixed[d]) P.velocity_row[d] = P.num_free++;
  const int n = P.num_free + C + 1;
  P.A = Eigen::MatrixXd::Zero(n, n);
  P.B = Eigen::MatrixXd::Zero(n, n);
  for (int c = 0; c < C; ++c) {
    const Cell K = make_cell(mesh, c);
    const Eigen::MatrixXd pi = h1_projector(K);
    const Eigen::MatrixXd pi0 = l2_projector(K, pi);
    const Eigen::MatrixXd Ak = stiffness_matrix(K, nu, alpha);
    const Eigen::MatrixXd Ck = pi0.transpose() * mass(K) * pi0;
    const Eigen::RowVectorXd bk = divergence_row(K);
    std::vector<int> rows(3 * K.n);
    for (int i = 0; i < K.n; ++i) {
      const int v = mesh.cell(c)[i];
      rows[2 * i] = P.velocity_row[2 * v];
      rows[2 * i + 1] = P.velocity_row[2 * v + 1];
      rows[2 * K.n + i] = P.velocity_row[2 * V + mesh.cell_edge(c, i)];
    }
    const int p = P.num_free + c;
    for (int i = 0; i < 3 * K.n; ++i) {
      if (rows[i] < 0) continue;
      for (int j = 0; j < 3 * K.n; ++j) {
        if (rows[j] < 0) continue;
        P.A(rows[i], rows[j]) += Ak(i, j);
        P.B(rows[i], rows[j]) += Ck(i, j);
      }
      P.A(p, rows[i]) += bk[i];
      P.A(rows[i], p) += bk[i];
    }
    P.A(n - 1, p) = P.A(p, n - 1) = K.area;
  }
  return P;
}

/// Finite eigenvalues of A x = lambda B x from the dense eigenvalues of
/// A^{-1} B, ascending. The kernel of B leaves roundoff-sized eigenvalues of
/// either sign, so only clearly positive ones are kept.
inline std::vector<double> dense_pencil_eigenvalues(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd op = A.fullPivLu().solve(B);
  Eigen::EigenSolver<Eigen::MatrixXd> es(op, false);
  std::vector<double> out;
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const auto mu = es.eigenvalues()[i];
    if (mu.real() > 1e-8 * scale) out.push_back(1.0 / mu.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
