#pragma once

#include "floodopt/core.hpp"
#include "floodopt/gauge.hpp"
#include "floodopt/optimizer.hpp"
#include "floodopt/solver.hpp"
#include "floodopt/terrain.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace floodopt {

// TOML run configuration. Relative paths are resolved against the directory
// of the config file. Sections and keys:
//
//   [terrain]     dem = "file.asc" | synthetic = "channel_with_branch"
//                 manning, nodata_elevation            (DEM only)
//   [terrain.channel]  ChannelBranchParams fields     (synthetic only)
//   [hydrograph]  file = "q.csv" | samples = [[t, q], ...]; t_qs, t_qe
//   [source]      polygon = [[x, y], ...], velocity = [u, v]
//   [gauge]       a, b, positive_side = "left"|"right",
//                 mode = "face_flux"|"cell_mean"
//   [search]      region = [[x, y], ...], centerline = [[x, y], ...]
//   [initial]     kind = "dry"|"still_water"|"normal_flow"|"snapshot",
//                 level, snapshot
//   [physics]     g, omega_e, latitude_deg, cfl, h_dry
//   [solver]      order, limiter = "minmod"|"van_leer"|"mc", max_dt,
//                 friction, coriolis
//   [boundaries]  west, east, south, north = "wall"|"waterfall"
//   [dam]         length, crest, reference_level, axis, center
//   [optimizer]   starts, probe_dx, probe_dy, grad_tol, k_max, initial_step,
//                 shrink, min_step
//   [map]         spacing, anchor
//   [run]         t_end, snapshot_interval, out_dir
//
// The synthetic terrain supplies the source, gauge, search region,
// centerline and boundaries unless given.

enum class InitialKind { Dry, StillWater, NormalFlow, Snapshot };

struct RunConfig {
  // terrain: exactly one of dem / synthetic
  std::optional<std::filesystem::path> dem;
  std::optional<std::string> synthetic;
  DemOptions dem_options;
  ChannelBranchParams channel;

  std::optional<std::filesystem::path> hydrograph_file;
  std::vector<HydrographSample> hydrograph_samples;  // used when no file
  double t_qs = 0.0;
  double t_qe = 0.0;

  std::optional<Polygon> source_region;
  Point source_velocity = Point::Zero();
  std::optional<GaugeSection> gauge;
  DischargeMode discharge_mode = DischargeMode::FaceFlux;
  std::optional<Polygon> search_region;
  std::optional<std::vector<Point>> centerline;

  std::optional<InitialKind> initial;
  double initial_level = 0.0;
  std::optional<std::filesystem::path> initial_snapshot;

  SolverConfig solver;  // boundaries ignored; see below
  std::optional<Boundaries> boundaries;

  DamSpec dam;
  std::optional<Point> dam_center;  // simulate with a dam in place

  std::vector<Point> starts;
  std::optional<ProbeRule> probe;
  std::optional<StoppingRule> stop;
  std::optional<double> map_spacing;
  std::optional<Point> map_anchor;

  std::optional<double> t_end;
  double snapshot_interval = 0.0;  // s; 0 disables periodic snapshots
  std::filesystem::path out_dir = "out";
};

/// Everything a CLI command needs, built from a config.
struct Scenario {
  FloodProblem problem;
  std::optional<Point> dam_center;
  double t_end = 0.0;
  double snapshot_interval = 0.0;
  std::vector<Point> starts;
  ProbeRule probe;
  StoppingRule stop;
  double map_spacing = 0.0;
  std::optional<Point> map_anchor;
  std::filesystem::path out_dir;
};

/// Parses, checks and normalizes. Syntax errors name line and column; all
/// other violations are reported together. Missing referenced files are Io
/// errors naming the path.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::string& name = "config");

/// Normalized TOML: every default spelled out, paths absolute. Loading the
/// dump gives back the same config.
std::string dump_config(const RunConfig& config);

Scenario build_scenario(const RunConfig& config);

}  // namespace floodopt
