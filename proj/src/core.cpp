#include "floodopt/core.hpp"
#include "floodopt/geometry.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace floodopt {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Range: return "range";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Format: return "format";
    case ErrorKind::Validation: return "validation";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Validation: return 2;
    case ErrorKind::Io:
    case ErrorKind::Format: return 3;
    case ErrorKind::Numeric: return 4;
    case ErrorKind::Domain:
    case ErrorKind::Range:
    case ErrorKind::Geometry: return 5;
  }
  return 1;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || token.empty())
    return std::nullopt;
  return v;
}

// --- Hydrograph -------------------------------------------------------------

Hydrograph::Hydrograph(std::vector<HydrographSample> samples, double t_qs, double t_qe)
    : samples_(std::move(samples)), t_qs_(t_qs), t_qe_(t_qe) {
  if (samples_.size() < 2)
    throw Error(ErrorKind::Validation, "hydrograph: need at least two samples");
  for (std::size_t k = 0; k < samples_.size(); ++k) {
    const auto& s = samples_[k];
    if (!std::isfinite(s.t) || !std::isfinite(s.q))
      throw Error(ErrorKind::Validation, "hydrograph: sample " + std::to_string(k) + " not finite");
    if (s.q < 0.0)
      throw Error(ErrorKind::Validation, "hydrograph: sample " + std::to_string(k) + " has q < 0");
    if (k > 0 && !(s.t > samples_[k - 1].t))
      throw Error(ErrorKind::Validation,
                  "hydrograph: times not strictly increasing at sample " + std::to_string(k));
  }
  if (!(t_qs_ < t_qe_))
    throw Error(ErrorKind::Validation, "hydrograph: flood window needs t_qs < t_qe");
  if (t_qs_ < t_begin() || t_qe_ > t_end())
    throw Error(ErrorKind::Validation, "hydrograph: flood window outside the sampled span");
}

double Hydrograph::at(double t) const {
  if (samples_.empty() || !(t >= t_begin() && t <= t_end())) {
    std::ostringstream msg;
    msg << "hydrograph: t = " << t << " s outside sampled span";
    throw Error(ErrorKind::Range, msg.str());
  }
  auto it = std::lower_bound(samples_.begin(), samples_.end(), t,
                             [](const HydrographSample& s, double v) { return s.t < v; });
  if (it->t == t) return it->q;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return lo.q + w * (hi.q - lo.q);
}

Hydrograph Hydrograph::trapezoid(double q_base, double q_peak, double t_start, double t_rise0,
                                 double t_rise1, double t_fall0, double t_fall1, double t_stop,
                                 double t_qs, double t_qe) {
  std::vector<HydrographSample> s{{t_start, q_base}, {t_rise0, q_base}, {t_rise1, q_peak},
                                  {t_fall0, q_peak}, {t_fall1, q_base}, {t_stop, q_base}};
  // Collapse repeated corner times so the strict ordering holds.
  std::vector<HydrographSample> out;
  for (const auto& p : s)
    if (out.empty() || p.t > out.back().t) out.push_back(p);
  return Hydrograph(std::move(out), t_qs, t_qe);
}

// --- Physics ----------------------------------------------------------------

double PhysicsParams::coriolis() const {
  return 2.0 * omega_e * std::sin(latitude_deg * std::numbers::pi / 180.0);
}

std::vector<std::string> PhysicsParams::validate() const {
  std::vector<std::string> out;
  if (!(g > 0)) out.push_back("physics.g: must be > 0");
  if (!(cfl > 0 && cfl < 1)) out.push_back("physics.cfl: must lie in (0, 1)");
  if (!(h_dry > 0)) out.push_back("physics.h_dry: must be > 0");
  if (!std::isfinite(omega_e)) out.push_back("physics.omega_e: not finite");
  if (!std::isfinite(latitude_deg)) out.push_back("physics.latitude_deg: not finite");
  return out;
}

std::vector<std::string> SourceField::validate() const {
  std::vector<std::string> out;
  double total = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (!(cells[k].fraction > 0))
      out.push_back("source.cells[" + std::to_string(k) + "]: fraction must be > 0");
    total += cells[k].fraction;
  }
  if (!cells.empty() && std::abs(total - 1.0) > 1e-12)
    out.push_back("source: fractions sum to " + std::to_string(total) + ", expected 1");
  return out;
}

// --- Geometry ---------------------------------------------------------------

Polygon::Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {}

Polygon Polygon::rectangle(double x0, double y0, double x1, double y1) {
  return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

double Polygon::signed_area() const {
  double a = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Point& p = vertices_[k];
    const Point& q = vertices_[(k + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double Polygon::area() const { return std::abs(signed_area()); }

bool Polygon::contains(const Point& p) const {
  const std::size_t n = vertices_.size();
  if (n < 3) return false;
  for (std::size_t k = 0; k < n; ++k)
    if (distance_to_segment(p, vertices_[k], vertices_[(k + 1) % n]) <= 1e-9) return true;
  bool inside = false;
  for (std::size_t k = 0, m = n - 1; k < n; m = k++) {
    const Point& a = vertices_[k];
    const Point& b = vertices_[m];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

Eigen::AlignedBox2d Polygon::bounds() const {
  Eigen::AlignedBox2d box;
  for (const auto& v : vertices_) box.extend(v);
  return box;
}

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

std::vector<std::string> validate_polygon(const Polygon& poly) {
  std::vector<std::string> out;
  const auto& v = poly.vertices();
  if (v.size() < 3) {
    out.push_back("polygon: needs at least 3 vertices");
    return out;
  }
  if (!(poly.area() > 0)) out.push_back("polygon: area must be positive");
  const std::size_t n = v.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 2; b < n; ++b) {
      if (a == 0 && b == n - 1) continue;
      if (segments_cross(v[a], v[(a + 1) % n], v[b], v[(b + 1) % n]))
        out.push_back("polygon: edges " + std::to_string(a) + " and " + std::to_string(b) +
                      " intersect");
    }
  return out;
}

double distance_to_segment(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

SourceField source_from_polygon(const SimGrid& grid, const Polygon& region,
                                const Point& injection_velocity) {
  SourceField src;
  src.injection_velocity = injection_velocity;
  for (Index j = 0; j < grid.ny; ++j)
    for (Index i = 0; i < grid.nx; ++i)
      if (region.contains(grid.cell_center(i, j))) src.cells.push_back({i, j, 0.0});
  if (src.cells.empty())
    throw Error(ErrorKind::Geometry, "source region contains no cell centers");
  const double f = 1.0 / double(src.cells.size());
  for (auto& c : src.cells) c.fraction = f;
  return src;
}

}  // namespace floodopt
