#include "floodopt/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace floodopt {

Point GaugeLine::weighted_normal() const {
  Point n = Point::Zero();
  for (const auto& f : faces) n += f.dl * f.normal;
  return n;
}

GaugeLine rasterize_gauge(const SimGrid& grid, const Point& a, const Point& b, Side positive_side) {
  if (a == b) throw Error(ErrorKind::Geometry, "gauge: endpoints A and B coincide");
  for (const Point* p : {&a, &b})
    if (!grid.contains(*p)) {
      std::ostringstream msg;
      msg << "gauge: endpoint (" << p->x() << ", " << p->y() << ") outside the grid";
      throw Error(ErrorKind::Geometry, msg.str());
    }

  GaugeLine gl;
  gl.a = a;
  gl.b = b;
  gl.positive_side = positive_side;
  const Point d = b - a;
  const bool left_positive = positive_side == Side::Left;
  // > 0 strictly left of the line; centres on the line count as right.
  auto is_left = [&](Index i, Index j) {
    const Point c = grid.cell_center(i, j) - a;
    return d.x() * c.y() - d.y() * c.x() > 0.0;
  };

  struct Tagged {
    double t;
    GaugeFace face;
  };
  std::vector<Tagged> found;

  // Each column whose centre lies within [A, B) holds one Y face on the section.
  if (d.x() != 0.0) {
    for (Index i = 0; i < grid.nx; ++i) {
      const double t = (grid.cell_center(i, 0).x() - a.x()) / d.x();
      if (!(t >= 0.0 && t < 1.0)) continue;
      Index jf = 0;
      for (Index j = 0; j < grid.ny; ++j)
        if (is_left(i, j) == (d.x() < 0.0)) ++jf;
      const double up = (d.x() > 0.0) == left_positive ? 1.0 : -1.0;
      found.push_back({t, {FaceAxis::Y, i, jf, Point(0.0, up), double(grid.dx)}});
    }
  }
  if (d.y() != 0.0) {
    for (Index j = 0; j < grid.ny; ++j) {
      const double t = (grid.cell_center(0, j).y() - a.y()) / d.y();
      if (!(t >= 0.0 && t < 1.0)) continue;
      Index iface = 0;
      for (Index i = 0; i < grid.nx; ++i)
        if (is_left(i, j) == (d.y() > 0.0)) ++iface;
      const double east = (d.y() > 0.0) == left_positive ? -1.0 : 1.0;
      found.push_back({t, {FaceAxis::X, iface, j, Point(east, 0.0), double(grid.dy)}});
    }
  }
  // Order by face midpoint along the section so ties stay on the staircase.
  const Point o(grid.origin_x, grid.origin_y);
  for (auto& f : found) {
    const GaugeFace& q = f.face;
    const Point mid = q.axis == FaceAxis::X
                          ? o + Point(double(q.i) * grid.dx, (double(q.j) + 0.5) * grid.dy)
                          : o + Point((double(q.i) + 0.5) * grid.dx, double(q.j) * grid.dy);
    f.t = (mid - a).dot(d);
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const Tagged& p, const Tagged& q) { return p.t < q.t; });
  for (const auto& f : found) gl.faces.push_back(f.face);
  return gl;
}

GaugeLine rasterize_gauge(const SimGrid& grid, const GaugeSection& section) {
  return rasterize_gauge(grid, section.a, section.b, section.positive_side);
}

void GaugeRecord::accumulate(double q, double t_end, double dt) {
  const double t0 = t_end - dt;
  const bool inside = t0 >= window_.t_qs && t_end <= window_.t_qe;
  volume_ += q * (inside ? dt : window_.overlap(t0, t_end));
  samples_.push_back({t_end, dt, q, volume_});
}

std::string GaugeRecord::to_csv() const {
  std::string out = "t_s,q_m3s,cumulative_m3\n";
  for (const auto& s : samples_)
    out += format_number(s.t) + "," + format_number(s.q) + "," + format_number(s.cumulative) + "\n";
  return out;
}

void GaugeRecord::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_csv();
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

}  // namespace floodopt
