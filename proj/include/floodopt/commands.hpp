#pragma once

#include "floodopt/config.hpp"
#include "floodopt/gauge.hpp"
#include "floodopt/optimizer.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace floodopt {

// Workflows behind the CLI subcommands. Each writes its artifacts into `out`
// (created if needed) and returns what it wrote. `log` receives progress
// lines when non-null. Results do not depend on `threads`.

struct MassBalance {
  double initial = 0.0;   // m^3
  double injected = 0.0;
  double outflow = 0.0;
  double final = 0.0;

  double error() const { return final - (initial + injected - outflow); }
  /// Error relative to the largest volume that passed through the domain.
  double relative_error() const;
  std::string report() const;
};

struct SimulateResult {
  GaugeRecord record;
  MassBalance balance;
  std::size_t steps = 0;
  std::vector<double> snapshot_times;
};

/// gauge.csv, mass_balance.txt, snapshots/ (periodic + final.bin), config.toml
SimulateResult run_simulate(const RunConfig& config, const std::filesystem::path& out,
                            int threads = 1, std::ostream* log = nullptr);

struct OptimizeResult {
  double baseline = 0.0;
  std::vector<OptimizerState> runs;  // best first
  std::size_t evaluations = 0;

  const OptimizerState& best() const { return runs.front(); }
  double ratio() const { return best().v / baseline; }
  std::string summary() const;
};

/// trace.csv (best run), trace_<n>.csv per start in config order, summary.txt,
/// config.toml
OptimizeResult run_optimize(const RunConfig& config, const std::filesystem::path& out,
                            int threads = 1, std::ostream* log = nullptr);

struct MapResult {
  double baseline = 0.0;
  Surface surface;
  std::string summary() const;
};

/// surface.csv, summary.txt, config.toml
MapResult run_map(const RunConfig& config, const std::filesystem::path& out, int threads = 1,
                  std::ostream* log = nullptr);

}  // namespace floodopt
