#pragma once

#include "floodopt/core.hpp"
#include "floodopt/gauge.hpp"
#include "floodopt/solver.hpp"
#include "floodopt/terrain.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace floodopt {

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

/// V_A as a function of the dam centre. Values are cached per quantized centre;
/// with quantum q > 0 centres snap to the lattice q * Z^2 (plus an origin)
/// before evaluation, so two centres in one bin share a value.
class Objective {
 public:
  Objective(SearchRegion region, double quantum, Point lattice_origin = Point::Zero());
  virtual ~Objective() = default;
  Objective(const Objective&) = delete;
  Objective& operator=(const Objective&) = delete;

  /// Throws Domain when the centre lies outside the region. Thread-safe.
  double evaluate(const Point& center);

  const SearchRegion& region() const { return region_; }
  double quantum() const { return quantum_; }
  Point snap(const Point& p) const;

  std::size_t computed() const;  // evaluations that missed the cache
  std::size_t requests() const;

 protected:
  virtual double compute(const Point& center) = 0;

 private:
  using Key = std::pair<std::int64_t, std::int64_t>;
  Key key(const Point& p) const;

  SearchRegion region_;
  double quantum_;
  Point origin_;
  mutable std::mutex mutex_;
  std::map<Key, double> cache_;
  std::size_t computed_ = 0;
  std::size_t requests_ = 0;
};

/// Closed-form objective for tests and dry runs.
class FunctionObjective : public Objective {
 public:
  FunctionObjective(std::function<double(const Point&)> f, SearchRegion region,
                    double quantum = 0.0)
      : Objective(std::move(region), quantum), f_(std::move(f)) {}

 protected:
  double compute(const Point& c) override { return f_(c); }

 private:
  std::function<double(const Point&)> f_;
};

/// Everything one flood simulation needs apart from the dam position.
struct FloodProblem {
  SimGrid grid;
  Centerline centerline;
  SearchRegion region;
  GaugeSection gauge;
  SourceField source;
  Hydrograph hydrograph;
  FlowState initial;  // at hydrograph.t_begin()
  SolverConfig solver;
  DamSpec dam;  // length, crest, reference; centre is overwritten
  DischargeMode mode = DischargeMode::FaceFlux;

  std::vector<std::string> validate() const;
};

/// Bed with the dam at `center` (unchanged without one) and the initial state
/// adapted to it: raised cells keep the free surface if it clears the crest,
/// and lose their momentum.
std::pair<SimGrid, FlowState> with_dam(const FloodProblem& problem,
                                       const std::optional<Point>& center);

/// Gauge record of one run with the dam at `center`, or with no dam.
GaugeRecord simulate_flood(const FloodProblem& problem, const std::optional<Point>& center);

class FloodObjective : public Objective {
 public:
  /// Cache lattice: half-cell spacing anchored at the grid origin.
  explicit FloodObjective(FloodProblem problem);

  const FloodProblem& problem() const { return problem_; }
  /// No-dam V_A, computed once.
  double baseline();

 protected:
  double compute(const Point& center) override;

 private:
  FloodProblem problem_;
  std::once_flag baseline_once_;
  double baseline_ = 0.0;
};

// ---------------------------------------------------------------------------
// Gradient ascent
// ---------------------------------------------------------------------------

struct ProbeRule {
  double delta_x = 0.0;  // m
  double delta_y = 0.0;

  /// Two cells in each direction.
  static ProbeRule for_grid(const SimGrid& grid) { return {2.0 * grid.dx, 2.0 * grid.dy}; }
  std::vector<std::string> validate() const;
};

struct StoppingRule {
  double grad_tol = 0.0;       // m^3/m
  int k_max = 50;
  double initial_step = 0.0;   // m, length of the first trial step
  double shrink = 0.5;
  double min_step = 0.0;       // m, line search gives up below this

  /// grad_tol = 1 m^3 per cell size, first trial ~4 cells, give up below a
  /// quarter cell.
  static StoppingRule for_grid(const SimGrid& grid);
  std::vector<std::string> validate() const;
};

enum class StopReason { GradientTolerance, LineSearchFailed, MaxIterations };
const char* to_string(StopReason r);

struct Iterate {
  int k = 0;
  Point r = Point::Zero();
  double v = 0.0;
  Point grad = Point::Zero();  // at r
  double lambda = 0.0;         // accepted step scale leaving r (0 at the last iterate)
};

struct OptimizerState {
  int k = 0;
  Point r = Point::Zero();
  double v = 0.0;
  Point g = Point::Zero();
  double lambda = 0.0;
  std::vector<Iterate> history;
  StopReason reason = StopReason::MaxIterations;
};

/// Forward differences, falling back to a backward difference on an axis whose
/// forward probe leaves the region (zero if both do). Probes run concurrently
/// when threads > 1.
Point gradient(Objective& obj, const Point& center, const ProbeRule& probe, int threads = 1);

OptimizerState ascend(Objective& obj, const Point& start, const ProbeRule& probe,
                      const StoppingRule& stop, int threads = 1);

/// Runs ascend from each start; returns all results, best first (ties keep
/// start order).
std::vector<OptimizerState> ascend_multi(Objective& obj, const std::vector<Point>& starts,
                                         const ProbeRule& probe, const StoppingRule& stop,
                                         int threads = 1);

// ---------------------------------------------------------------------------
// Surface map
// ---------------------------------------------------------------------------

struct SurfaceSample {
  Index ix = 0;
  Index iy = 0;
  Point center = Point::Zero();
  std::optional<double> v;
  std::string status;  // "ok", "outside", or the error message
};

struct Surface {
  Index nx = 0;
  Index ny = 0;
  std::vector<SurfaceSample> samples;  // row-major: iy outer, ix inner

  const SurfaceSample& at(Index ix, Index iy) const { return samples[std::size_t(iy * nx + ix)]; }
  /// Largest successful value, if any.
  std::optional<double> max() const;
  /// Successful samples not below any successful 8-neighbour.
  std::vector<const SurfaceSample*> local_maxima() const;
};

/// Lattice anchor + spacing * (a, b) over the region's bounding box. The
/// anchor defaults to the box's lower-left corner.
Surface map_objective(Objective& obj, double spacing, std::optional<Point> anchor = std::nullopt,
                      int threads = 1);

/// Columns k, x_d, y_d, V_A, grad_x, grad_y, lambda.
std::string trace_csv(const OptimizerState& state);
/// Columns x_d, y_d, V_A, status.
std::string surface_csv(const Surface& surface);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace floodopt
