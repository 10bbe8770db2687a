#pragma once

#include "floodopt/core.hpp"
#include "floodopt/geometry.hpp"
#include "floodopt/solver.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace floodopt {

// ---------------------------------------------------------------------------
// ESRI ASCII grid
// ---------------------------------------------------------------------------

enum class DemErrorKind { Header, RowCount, Token };

/// Malformed DEM; `line` is 1-based (0 when the problem is end-of-file).
class DemError : public Error {
 public:
  DemError(DemErrorKind kind, std::size_t line, const std::string& what)
      : Error(ErrorKind::Format, what), dem_kind_(kind), line_(line) {}
  DemErrorKind dem_kind() const noexcept { return dem_kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  DemErrorKind dem_kind_;
  std::size_t line_;
};

struct DemOptions {
  double nodata_elevation = 1.0e4;  // NODATA cells become impermeable high ground
  double manning = 0.03;
};

/// Reads an ESRI ASCII grid. Rows run north to south in the file; the grid
/// stores j = 0 as the southernmost row. NODATA cells are flagged in
/// `grid.nodata`.
SimGrid read_dem(const std::filesystem::path& path, const DemOptions& opts = {});
SimGrid parse_dem(const std::string& text, const DemOptions& opts = {});

/// Writes the bed as an ESRI ASCII grid with round-trip-exact numbers. Cells
/// flagged NODATA are written as `nodata_value`. Requires dx == dy.
void write_dem(const SimGrid& grid, const std::filesystem::path& path,
               double nodata_value = -9999.0);
std::string format_dem(const SimGrid& grid, double nodata_value = -9999.0);

// ---------------------------------------------------------------------------
// Dam
// ---------------------------------------------------------------------------

/// Riverbed axis used to orient dams.
class Centerline {
 public:
  Centerline() = default;
  explicit Centerline(std::vector<Point> points);

  const std::vector<Point>& points() const { return points_; }
  /// Unit tangent of the segment nearest to p.
  Point tangent_near(const Point& p) const;

 private:
  std::vector<Point> points_;
};

struct SearchRegion {
  Polygon polygon;
  bool contains(const Point& p) const { return polygon.contains(p); }
  /// p itself when inside, else the nearest point of the boundary.
  Point project(const Point& p) const;
};

struct DamSpec {
  Point center = Point::Zero();
  double length = 300.0;  // m
  double crest = 5.0;     // m above the reference level
  /// Absolute water-surface reference; defaults to the highest original bed
  /// under the footprint (the local bank top).
  std::optional<double> reference_level;
  /// Overrides the perpendicular-to-centerline axis (unit vector along the dam).
  std::optional<Point> axis;
};

/// Unit vector along the dam crest.
Point dam_axis(const DamSpec& dam, const Centerline& centerline);

/// Cells whose centers lie within half a cell diagonal of the dam segment,
/// ordered along the axis.
std::vector<std::pair<Index, Index>> dam_footprint(const SimGrid& grid, const DamSpec& dam,
                                                   const Centerline& centerline);

/// Returns a copy of `grid` with the footprint raised to reference + crest.
SimGrid rasterize_dam(const SimGrid& grid, const DamSpec& dam, const Centerline& centerline);

// ---------------------------------------------------------------------------
// Synthetic terrain
// ---------------------------------------------------------------------------

/// Main channel flowing east with a shallower side branch leaving its north
/// bank and draining to the northern edge.
struct ChannelBranchParams {
  double cell = 50.0;
  Index nx = 64;
  Index ny = 32;
  double floodplain_level = 20.0;  // at x = 0
  double slope = 2e-4;             // main-channel and floodplain slope along x
  double channel_y = 500.0;        // main-channel centerline
  double channel_width = 400.0;
  double channel_depth = 6.0;
  double branch_x = 1000.0;  // branch centerline
  double branch_width = 200.0;
  double sill_height = 3.0;     // branch mouth above the main thalweg
  double branch_slope = 1e-3;   // branch bed falls northward
  double manning_channel = 0.03;
  double manning_floodplain = 0.06;
  double source_length = 150.0;  // inflow cells at the west end
  double gauge_offset = 200.0;   // gauge distance north of the branch mouth
  double region_upstream = 600.0;    // search region extent around the mouth
  double region_downstream = 1600.0;

  std::vector<std::string> validate() const;
};

struct SyntheticTerrain {
  SimGrid grid;
  Centerline centerline;
  GaugeSection gauge;
  Polygon source_region;
  SearchRegion search_region;
  Boundaries boundaries;
  double thalweg_at_mouth = 0.0;
  double branch_sill = 0.0;
};

SyntheticTerrain synth_channel_with_branch(const ChannelBranchParams& params);

/// Depth-and-velocity field of uniform flow with unit discharge q in the main
/// channel (Manning normal depth), dry elsewhere.
FlowState channel_normal_flow(const SyntheticTerrain& terrain, const ChannelBranchParams& params,
                              double discharge);

}  // namespace floodopt
