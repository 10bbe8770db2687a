#pragma once

#include "floodopt/core.hpp"

#include <Eigen/Geometry>

#include <vector>

namespace floodopt {

/// Simple polygon, vertices in order (either orientation), implicitly closed.
class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(std::vector<Point> vertices);

  static Polygon rectangle(double x0, double y0, double x1, double y1);

  const std::vector<Point>& vertices() const { return vertices_; }
  double signed_area() const;
  double area() const;
  /// Boundary points count as inside.
  bool contains(const Point& p) const;
  Eigen::AlignedBox2d bounds() const;

 private:
  std::vector<Point> vertices_;
};

/// Empty iff the polygon has >= 3 vertices, positive area and no
/// self-intersections.
std::vector<std::string> validate_polygon(const Polygon& poly);

/// Which side of the directed section A->B counts as positive.
enum class Side { Left, Right };

/// Cross-section endpoints plus the side that receives positive discharge.
struct GaugeSection {
  Point a = Point::Zero();
  Point b = Point::Zero();
  Side positive_side = Side::Left;
};

double distance_to_segment(const Point& p, const Point& a, const Point& b);

/// Cells whose centers lie inside the polygon, equal area fractions.
SourceField source_from_polygon(const SimGrid& grid, const Polygon& region,
                                const Point& injection_velocity = Point::Zero());

}  // namespace floodopt
