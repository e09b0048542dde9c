#include "vemstokes/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace vemstokes {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Proper or touching intersection of closed segments [p1,p2] and [q1,q2].
bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  auto on_segment = [](const Point& a, const Point& b, const Point& p) {
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
  };
  if (d1 == 0 && on_segment(p1, p2, q1)) return true;
  if (d2 == 0 && on_segment(p1, p2, q2)) return true;
  if (d3 == 0 && on_segment(q1, q2, p1)) return true;
  if (d4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

// Dunavant degree-4 rule in barycentric coordinates.
constexpr double kA1 = 0.44594849091596488632;
constexpr double kA2 = 0.091576213509770743460;
constexpr double kW1 = 0.22338158967801146570;
constexpr double kW2 = 0.10995174365532186764;

}  // namespace

double signed_area(std::span<const Point> vertices) {
  const std::size_t n = vertices.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) twice += cross(vertices[i], vertices[(i + 1) % n]);
  return 0.5 * twice;
}

PolygonMeasures polygon_measures(std::span<const Point> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) throw GeometryError("polygon needs at least 3 vertices, got " + std::to_string(n));

  PolygonMeasures m;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      m.diameter = std::max(m.diameter, (vertices[i] - vertices[j]).norm());

  // Shift to the first vertex to limit cancellation for small cells far from the origin.
  const Point origin = vertices[0];
  double twice = 0.0;
  Point moment = Point::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = vertices[i] - origin;
    const Point b = vertices[(i + 1) % n] - origin;
    const double c = cross(a, b);
    twice += c;
    moment += c * (a + b);
  }
  m.area = 0.5 * twice;
  if (!(m.area > 0.0) || m.area < 1e-14 * m.diameter * m.diameter)
    throw GeometryError("degenerate or clockwise polygon (signed area " + std::to_string(m.area) + ")");
  m.centroid = origin + moment / (3.0 * twice);
  return m;
}

bool is_simple(std::span<const Point> vertices) {
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices[i];
    const Point& b = vertices[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share one endpoint; only test them for overlap.
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Point& c = vertices[j];
      const Point& d = vertices[(j + 1) % n];
      if (adjacent) {
        const Point& shared = (j == i + 1) ? b : a;
        const Point& other_i = (j == i + 1) ? a : b;
        const Point& other_j = (j == i + 1) ? d : c;
        const Point u = other_i - shared;
        const Point v = other_j - shared;
        if (std::abs(cross(u, v)) <= 1e-14 * u.norm() * v.norm() && u.dot(v) > 0) return false;
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

Polygon::Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  measures_ = polygon_measures(vertices_);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((vertices_[i] - vertices_[j]).norm() <= 1e-14 * measures_.diameter)
        throw GeometryError("polygon has coincident vertices " + std::to_string(i) + " and " + std::to_string(j));
  if (!is_simple(vertices_)) throw GeometryError("polygon is self-intersecting");
}

QuadratureRule edge_rule(const Point& a, const Point& b) {
  const double length = (b - a).norm();
  if (!(length > 0.0)) throw GeometryError("zero-length edge");
  const double s = 0.5 * std::sqrt(3.0 / 5.0);
  const std::array<double, 3> t{0.5 - s, 0.5, 0.5 + s};
  const std::array<double, 3> w{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  QuadratureRule rule;
  for (int q = 0; q < 3; ++q) {
    rule.nodes.push_back(a + t[q] * (b - a));
    rule.weights.push_back(w[q] * length);
  }
  return rule;
}

QuadratureRule cell_rule(const Polygon& poly) {
  static constexpr std::array<std::array<double, 3>, 6> bary{{
      {1.0 - 2.0 * kA1, kA1, kA1},
      {kA1, 1.0 - 2.0 * kA1, kA1},
      {kA1, kA1, 1.0 - 2.0 * kA1},
      {1.0 - 2.0 * kA2, kA2, kA2},
      {kA2, 1.0 - 2.0 * kA2, kA2},
      {kA2, kA2, 1.0 - 2.0 * kA2},
  }};
  static constexpr std::array<double, 6> weight{kW1, kW1, kW1, kW2, kW2, kW2};

  QuadratureRule rule;
  const Point& c = poly.centroid();
  const std::size_t n = poly.size();
  rule.nodes.reserve(6 * n);
  rule.weights.reserve(6 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly.vertex(i);
    const Point& b = poly.vertex(i + 1);
    const double area = 0.5 * cross(a - c, b - c);
    for (int q = 0; q < 6; ++q) {
      rule.nodes.push_back(bary[q][0] * c + bary[q][1] * a + bary[q][2] * b);
      rule.weights.push_back(weight[q] * area);
    }
  }
  return rule;
}

double ScaledMonomials::eval(int a, int b, const Point& x) const {
  const Point s = local(x);
  double v = 1.0;
  for (int i = 0; i < a; ++i) v *= s.x();
  for (int i = 0; i < b; ++i) v *= s.y();
  return v;
}

MonomialMoments monomial_moments(const Polygon& poly, const ScaledMonomials& basis, int max_degree) {
  if (max_degree < 0 || max_degree > 4)
    throw GeometryError("monomial moments are exact up to degree 4 only");
  const QuadratureRule rule = cell_rule(poly);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(ScaledMonomials::count(max_degree));
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const Point s = basis.local(rule.nodes[q]);
    for (int d = 0; d <= max_degree; ++d)
      for (int b = 0; b <= d; ++b) {
        const int a = d - b;
        values[ScaledMonomials::index(a, b)] += rule.weights[q] * std::pow(s.x(), a) * std::pow(s.y(), b);
      }
  }
  return MonomialMoments(max_degree, std::move(values));
}

}  // namespace vemstokes
