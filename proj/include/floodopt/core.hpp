#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace floodopt {

using Index = Eigen::Index;
using Point = Eigen::Vector2d;

/// Per-cell raster laid out as (i, j) = (column west->east, row south->north).
template <typename Scalar>
using Field = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// Errors. Every module throws floodopt::Error; the kind selects the CLI exit
// code family.
// ---------------------------------------------------------------------------

enum class ErrorKind { Config, Io, Numeric, Domain, Range, Geometry, Format, Validation };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

/// config=2, io=3, numeric=4, domain=5
int exit_code(ErrorKind kind);

/// Shortest decimal form that parses back to the identical double.
std::string format_number(double value);
/// Whole-token parse; nothing on trailing garbage.
std::optional<double> parse_number(std::string_view token);

// ---------------------------------------------------------------------------
// SimGrid
// ---------------------------------------------------------------------------

template <typename Scalar>
struct BasicSimGrid {
  Index nx = 0;
  Index ny = 0;
  Scalar dx = 0;
  Scalar dy = 0;
  Scalar origin_x = 0;  // lower-left corner
  Scalar origin_y = 0;
  Field<Scalar> bed;      // m
  Field<Scalar> manning;  // s m^-1/3
  Mask nodata;            // empty unless read from a DEM with NODATA cells

  static BasicSimGrid uniform(Index nx, Index ny, Scalar dx, Scalar dy, Scalar bed_level,
                              Scalar manning_n) {
    BasicSimGrid g;
    g.nx = nx;
    g.ny = ny;
    g.dx = dx;
    g.dy = dy;
    g.bed = Field<Scalar>::Constant(nx, ny, bed_level);
    g.manning = Field<Scalar>::Constant(nx, ny, manning_n);
    return g;
  }

  Scalar cell_area() const { return dx * dy; }
  Scalar width() const { return dx * Scalar(nx); }
  Scalar height() const { return dy * Scalar(ny); }

  Point cell_center(Index i, Index j) const {
    return {double(origin_x) + (double(i) + 0.5) * double(dx),
            double(origin_y) + (double(j) + 0.5) * double(dy)};
  }

  bool contains(const Point& p) const {
    return p.x() >= double(origin_x) && p.x() <= double(origin_x + width()) &&
           p.y() >= double(origin_y) && p.y() <= double(origin_y + height());
  }

  /// Cell holding p, or nothing when p is outside the raster.
  std::optional<std::pair<Index, Index>> locate(const Point& p) const {
    if (!contains(p)) return std::nullopt;
    auto i = Index(std::floor((p.x() - double(origin_x)) / double(dx)));
    auto j = Index(std::floor((p.y() - double(origin_y)) / double(dy)));
    i = std::min(i, nx - 1);
    j = std::min(j, ny - 1);
    return std::make_pair(i, j);
  }
};

using SimGrid = BasicSimGrid<double>;

/// Empty result iff every grid invariant holds.
template <typename Scalar>
std::vector<std::string> validate_grid(const BasicSimGrid<Scalar>& grid) {
  std::vector<std::string> out;
  if (grid.nx < 3) out.push_back("nx: must be >= 3, got " + std::to_string(grid.nx));
  if (grid.ny < 3) out.push_back("ny: must be >= 3, got " + std::to_string(grid.ny));
  if (!(grid.dx > 0)) out.push_back("dx: must be > 0");
  if (!(grid.dy > 0)) out.push_back("dy: must be > 0");
  if (grid.bed.rows() != grid.nx || grid.bed.cols() != grid.ny) {
    out.push_back("bed: shape " + std::to_string(grid.bed.rows()) + "x" +
                  std::to_string(grid.bed.cols()) + " does not match nx*ny");
  } else {
    for (Index j = 0; j < grid.ny; ++j)
      for (Index i = 0; i < grid.nx; ++i)
        if (!std::isfinite(double(grid.bed(i, j))))
          out.push_back("bed(" + std::to_string(i) + "," + std::to_string(j) + "): not finite");
  }
  if (grid.manning.rows() != grid.nx || grid.manning.cols() != grid.ny) {
    out.push_back("manning: shape " + std::to_string(grid.manning.rows()) + "x" +
                  std::to_string(grid.manning.cols()) + " does not match nx*ny");
  } else {
    for (Index j = 0; j < grid.ny; ++j)
      for (Index i = 0; i < grid.nx; ++i) {
        const double n = double(grid.manning(i, j));
        if (!(n > 0.0 && n <= 1.0))
          out.push_back("manning(" + std::to_string(i) + "," + std::to_string(j) +
                        "): must lie in (0, 1]");
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FlowState
// ---------------------------------------------------------------------------

template <typename Scalar>
struct BasicFlowState {
  Field<Scalar> h;   // depth, m
  Field<Scalar> hu;  // x-momentum, m^2/s
  Field<Scalar> hv;  // y-momentum, m^2/s
  double t = 0.0;    // s

  static BasicFlowState dry(Index nx, Index ny, double t0 = 0.0) {
    BasicFlowState s;
    s.h = Field<Scalar>::Zero(nx, ny);
    s.hu = Field<Scalar>::Zero(nx, ny);
    s.hv = Field<Scalar>::Zero(nx, ny);
    s.t = t0;
    return s;
  }

  /// Lake at rest: depth max(level - bed, 0), no momentum.
  static BasicFlowState still_water(const BasicSimGrid<Scalar>& grid, Scalar level,
                                    double t0 = 0.0) {
    BasicFlowState s = dry(grid.nx, grid.ny, t0);
    s.h = (level - grid.bed).max(Scalar(0));
    return s;
  }

  Index nx() const { return h.rows(); }
  Index ny() const { return h.cols(); }

  Scalar volume(const BasicSimGrid<Scalar>& grid) const { return h.sum() * grid.cell_area(); }
};

using FlowState = BasicFlowState<double>;

// ---------------------------------------------------------------------------
// Hydrograph
// ---------------------------------------------------------------------------

struct HydrographSample {
  double t;  // s
  double q;  // m^3/s
};

class Hydrograph {
 public:
  Hydrograph() = default;
  Hydrograph(std::vector<HydrographSample> samples, double t_qs, double t_qe);

  /// Q0(t) by linear interpolation; throws Range outside the sampled span.
  double at(double t) const;

  const std::vector<HydrographSample>& samples() const { return samples_; }
  double t_qs() const { return t_qs_; }
  double t_qe() const { return t_qe_; }
  double t_begin() const { return samples_.front().t; }
  double t_end() const { return samples_.back().t; }
  bool empty() const { return samples_.empty(); }

  /// Piecewise-linear flood wave: base -> peak over [t_rise0, t_rise1], plateau,
  /// back to base over [t_fall0, t_fall1]; sampled at the corner times.
  static Hydrograph trapezoid(double q_base, double q_peak, double t_start, double t_rise0,
                              double t_rise1, double t_fall0, double t_fall1, double t_stop,
                              double t_qs, double t_qe);

 private:
  std::vector<HydrographSample> samples_;
  double t_qs_ = 0.0;
  double t_qe_ = 0.0;
};

inline double hydrograph_at(const Hydrograph& hg, double t) { return hg.at(t); }

// ---------------------------------------------------------------------------
// Physics and sources
// ---------------------------------------------------------------------------

struct PhysicsParams {
  double g = 9.81;
  double omega_e = 7.292e-5;  // rad/s
  double latitude_deg = 48.8;
  double cfl = 0.5;
  double h_dry = 1e-3;  // m

  /// Coriolis parameter 2 Omega sin(latitude).
  double coriolis() const;
  std::vector<std::string> validate() const;
};

struct SourceCell {
  Index i = 0;
  Index j = 0;
  double fraction = 0.0;
};

/// Cells receiving the hydrograph discharge. Fractions sum to one.
struct SourceField {
  std::vector<SourceCell> cells;
  Point injection_velocity = Point::Zero();  // m/s carried by injected water

  bool empty() const { return cells.empty(); }
  std::vector<std::string> validate() const;
};

}  // namespace floodopt
