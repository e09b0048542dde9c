#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace vemstokes {

using Point = Eigen::Vector2d;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolygonMeasures {
  double area = 0.0;
  Point centroid = Point::Zero();
  double diameter = 0.0;
};

/// Shoelace area, exact polygon centroid and max pairwise vertex distance.
/// Throws GeometryError for clockwise or degenerate input
/// (area < 1e-14 * diameter^2).
PolygonMeasures polygon_measures(std::span<const Point> vertices);

double signed_area(std::span<const Point> vertices);

/// A simple, counterclockwise polygon with pairwise distinct vertices.
/// Construction validates the invariants and caches area, centroid and
/// diameter.
class Polygon {
 public:
  explicit Polygon(std::vector<Point> vertices);

  std::span<const Point> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point& vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }

  double area() const { return measures_.area; }
  const Point& centroid() const { return measures_.centroid; }
  double diameter() const { return measures_.diameter; }

 private:
  std::vector<Point> vertices_;
  PolygonMeasures measures_;
};

bool is_simple(std::span<const Point> vertices);

struct QuadratureRule {
  std::vector<Point> nodes;
  std::vector<double> weights;

  template <typename F>
  auto integrate(F&& f) const {
    auto sum = weights[0] * f(nodes[0]);
    for (std::size_t q = 1; q < nodes.size(); ++q) sum += weights[q] * f(nodes[q]);
    return sum;
  }
};

/// 3-point Gauss-Legendre rule on the segment [a, b], exact to degree 5.
QuadratureRule edge_rule(const Point& a, const Point& b);

/// Centroid-fan sub-triangulation with a 6-point degree-4 triangle rule.
/// Fan triangles carry signed weights, so the rule stays exact for
/// polynomials on nonconvex cells whose centroid is outside the kernel.
QuadratureRule cell_rule(const Polygon& poly);

/// Scaled monomials m_ab(x) = ((x - xc) / h)^a ((y - yc) / h)^b.
class ScaledMonomials {
 public:
  ScaledMonomials(const Point& center, double scale) : center_(center), scale_(scale) {}
  explicit ScaledMonomials(const Polygon& poly) : ScaledMonomials(poly.centroid(), poly.diameter()) {}

  const Point& center() const { return center_; }
  double scale() const { return scale_; }

  Point local(const Point& x) const { return (x - center_) / scale_; }
  double eval(int a, int b, const Point& x) const;

  /// Graded index of m_ab: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
  static constexpr int index(int a, int b) {
    const int d = a + b;
    return d * (d + 1) / 2 + b;
  }
  static constexpr int count(int max_degree) { return (max_degree + 1) * (max_degree + 2) / 2; }

 private:
  Point center_;
  double scale_;
};

/// Table of integrals of all scaled monomials up to a given degree.
class MonomialMoments {
 public:
  MonomialMoments(int max_degree, Eigen::VectorXd values)
      : max_degree_(max_degree), values_(std::move(values)) {}

  double operator()(int a, int b) const { return values_[ScaledMonomials::index(a, b)]; }
  int max_degree() const { return max_degree_; }
  const Eigen::VectorXd& values() const { return values_; }

 private:
  int max_degree_;
  Eigen::VectorXd values_;
};

MonomialMoments monomial_moments(const Polygon& poly, const ScaledMonomials& basis, int max_degree);

}  // namespace vemstokes
