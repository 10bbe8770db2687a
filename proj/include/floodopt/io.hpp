#pragma once

#include "floodopt/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace floodopt {

// ---------------------------------------------------------------------------
// Hydrograph CSV: header `t_s,q_m3s`, one sample per line.
// ---------------------------------------------------------------------------

/// `name` is used in error messages (usually the file path).
std::vector<HydrographSample> parse_hydrograph_csv(const std::string& text,
                                                   const std::string& name = "hydrograph");
std::vector<HydrographSample> read_hydrograph_csv(const std::filesystem::path& path);
std::string format_hydrograph_csv(const std::vector<HydrographSample>& samples);

// ---------------------------------------------------------------------------
// Snapshots
//
// Layout: 8 magic bytes "FLOODSNP", u32 version, i64 nx, i64 ny, f64 dx, dy,
// origin_x, origin_y, t, then h, hu, hv as nx*ny f64 each (i fastest). All
// little-endian.
// ---------------------------------------------------------------------------

struct SnapshotHeader {
  Index nx = 0;
  Index ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double t = 0.0;

  static SnapshotHeader of(const SimGrid& grid, double t);
  /// Same shape, spacing and origin.
  bool matches(const SimGrid& grid) const;
};

struct Snapshot {
  SnapshotHeader header;
  FlowState state;
};

std::string encode_snapshot(const FlowState& state, const SimGrid& grid);
Snapshot decode_snapshot(const std::string& bytes, const std::string& name = "snapshot");

void write_snapshot(const FlowState& state, const SimGrid& grid, const std::filesystem::path& path);
Snapshot read_snapshot(const std::filesystem::path& path);
/// Format error unless the snapshot was taken on `grid`.
FlowState read_snapshot(const std::filesystem::path& path, const SimGrid& grid);

/// Snapshots written into one directory as snap_NNNNN.bin plus final.bin, with
/// an index.csv listing file,t_s.
class SnapshotSet {
 public:
  SnapshotSet(std::filesystem::path dir, const SimGrid& grid);

  /// Times must increase strictly.
  void add(const FlowState& state);
  void add_final(const FlowState& state);

  const std::vector<double>& times() const { return times_; }

 private:
  void write_index() const;

  std::filesystem::path dir_;
  const SimGrid& grid_;
  std::vector<double> times_;
  std::vector<std::string> files_;
  std::optional<double> final_t_;
};

}  // namespace floodopt
