#include "floodopt/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

namespace floodopt {

namespace {

std::string where(const Point& p) {
  std::ostringstream s;
  s << "(" << p.x() << ", " << p.y() << ")";
  return s.str();
}

void join(const std::vector<std::string>& errs, const char* what) {
  if (errs.empty()) return;
  std::string msg = what;
  for (const auto& e : errs) msg += "\n  " + e;
  throw Error(ErrorKind::Validation, msg);
}

}  // namespace

// --- Objective --------------------------------------------------------------

Objective::Objective(SearchRegion region, double quantum, Point lattice_origin)
    : region_(std::move(region)), quantum_(quantum), origin_(lattice_origin) {
  join(validate_polygon(region_.polygon), "search region:");
  if (!(quantum_ >= 0)) throw Error(ErrorKind::Validation, "objective: quantum must be >= 0");
}

Point Objective::snap(const Point& p) const {
  if (quantum_ == 0.0) return p;
  return origin_ + ((p - origin_) / quantum_).array().round().matrix() * quantum_;
}

Objective::Key Objective::key(const Point& p) const {
  if (quantum_ == 0.0)
    return {std::bit_cast<std::int64_t>(p.x()), std::bit_cast<std::int64_t>(p.y())};
  const Point q = ((p - origin_) / quantum_).array().round().matrix();
  return {std::int64_t(q.x()), std::int64_t(q.y())};
}

double Objective::evaluate(const Point& center) {
  if (!region_.contains(center))
    throw Error(ErrorKind::Domain, "dam centre " + where(center) + " outside the search region");
  const Key k = key(center);
  {
    std::lock_guard lock(mutex_);
    ++requests_;
    if (auto it = cache_.find(k); it != cache_.end()) return it->second;
  }
  const double v = compute(snap(center));
  std::lock_guard lock(mutex_);
  auto [it, fresh] = cache_.emplace(k, v);
  if (fresh) ++computed_;
  return it->second;
}

std::size_t Objective::computed() const {
  std::lock_guard lock(mutex_);
  return computed_;
}

std::size_t Objective::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

// --- Flood objective --------------------------------------------------------

std::vector<std::string> FloodProblem::validate() const {
  std::vector<std::string> out = validate_grid(grid);
  for (auto& e : solver.validate()) out.push_back(std::move(e));
  for (auto& e : source.validate()) out.push_back(std::move(e));
  for (auto& e : validate_polygon(region.polygon)) out.push_back("region: " + e);
  if (hydrograph.empty()) out.push_back("hydrograph: missing");
  if (initial.nx() != grid.nx || initial.ny() != grid.ny)
    out.push_back("initial state: shape does not match the grid");
  else if (!hydrograph.empty() && initial.t != hydrograph.t_begin())
    out.push_back("initial state: t must equal the first hydrograph time");
  if (!(dam.length > 0)) out.push_back("dam.length: must be > 0");
  if (!(dam.crest > 0)) out.push_back("dam.crest: must be > 0");
  return out;
}

std::pair<SimGrid, FlowState> with_dam(const FloodProblem& p, const std::optional<Point>& center) {
  if (!center) return {p.grid, p.initial};
  DamSpec dam = p.dam;
  dam.center = *center;
  SimGrid grid = rasterize_dam(p.grid, dam, p.centerline);
  FlowState state = p.initial;
  // Keep the free surface where the dam leaves room, otherwise the cell dries.
  for (Index j = 0; j < grid.ny; ++j)
    for (Index i = 0; i < grid.nx; ++i)
      if (grid.bed(i, j) != p.grid.bed(i, j)) {
        const double eta = p.grid.bed(i, j) + state.h(i, j);
        state.h(i, j) = std::max(0.0, eta - grid.bed(i, j));
        state.hu(i, j) = 0.0;
        state.hv(i, j) = 0.0;
      }
  return {std::move(grid), std::move(state)};
}

GaugeRecord simulate_flood(const FloodProblem& p, const std::optional<Point>& center) {
  auto [grid, state] = with_dam(p, center);
  const GaugeLine gl = rasterize_gauge(grid, p.gauge);
  GaugeRecord record({p.hydrograph.t_qs(), p.hydrograph.t_qe()});
  std::vector<StepObserver<double>> obs{
      gauge_observer(gl, record, p.mode, state, p.solver.physics.h_dry)};
  try {
    Simulator<double> sim(grid, p.solver, Forcing{p.source, p.hydrograph});
    sim.run(std::move(state), p.hydrograph.t_qe(), obs);
  } catch (const Error& e) {
    throw Error(e.kind(), "simulation with dam at " + (center ? where(*center) : "none") +
                              " failed: " + e.what());
  }
  return record;
}

FloodObjective::FloodObjective(FloodProblem problem)
    : Objective(problem.region, 0.5 * problem.grid.dx,
                Point(problem.grid.origin_x, problem.grid.origin_y)),
      problem_(std::move(problem)) {
  join(problem_.validate(), "flood problem:");
  if (problem_.grid.dx != problem_.grid.dy)
    throw Error(ErrorKind::Validation, "flood problem: needs square cells");
}

double FloodObjective::compute(const Point& center) {
  return simulate_flood(problem_, center).volume();
}

double FloodObjective::baseline() {
  std::call_once(baseline_once_, [&] { baseline_ = simulate_flood(problem_, std::nullopt).volume(); });
  return baseline_;
}

// --- Ascent -----------------------------------------------------------------

std::vector<std::string> ProbeRule::validate() const {
  std::vector<std::string> out;
  if (!(delta_x > 0)) out.push_back("probe.delta_x: must be > 0");
  if (!(delta_y > 0)) out.push_back("probe.delta_y: must be > 0");
  return out;
}

StoppingRule StoppingRule::for_grid(const SimGrid& grid) {
  StoppingRule s;
  s.grad_tol = 1.0 / grid.dx;
  s.k_max = 50;
  s.initial_step = 4.0 * grid.dx;
  s.shrink = 0.5;
  s.min_step = 0.25 * grid.dx;
  return s;
}

std::vector<std::string> StoppingRule::validate() const {
  std::vector<std::string> out;
  if (!(grad_tol >= 0)) out.push_back("stop.grad_tol: must be >= 0");
  if (k_max < 0) out.push_back("stop.k_max: must be >= 0");
  if (!(initial_step > 0)) out.push_back("stop.initial_step: must be > 0");
  if (!(shrink > 0 && shrink < 1)) out.push_back("stop.shrink: must lie in (0, 1)");
  if (!(min_step > 0 && min_step <= initial_step))
    out.push_back("stop.min_step: must lie in (0, initial_step]");
  return out;
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::GradientTolerance: return "gradient_tolerance";
    case StopReason::LineSearchFailed: return "line_search_failed";
    case StopReason::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

Point gradient(Objective& obj, const Point& r, const ProbeRule& probe, int threads) {
  join(probe.validate(), "probe rule:");
  const double v0 = obj.evaluate(r);
  const Point step[2] = {Point(probe.delta_x, 0.0), Point(0.0, probe.delta_y)};
  double g[2] = {0.0, 0.0};
  std::exception_ptr err[2];

#pragma omp parallel for schedule(static) num_threads(2) if (threads > 1)
  for (int a = 0; a < 2; ++a) {
    try {
      const double delta = a == 0 ? probe.delta_x : probe.delta_y;
      if (obj.region().contains(r + step[a]))
        g[a] = (obj.evaluate(r + step[a]) - v0) / delta;
      else if (obj.region().contains(r - step[a]))
        g[a] = (v0 - obj.evaluate(r - step[a])) / delta;
    } catch (...) {
      err[a] = std::current_exception();
    }
  }
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  return {g[0], g[1]};
}

OptimizerState ascend(Objective& obj, const Point& start, const ProbeRule& probe,
                      const StoppingRule& stop, int threads) {
  join(stop.validate(), "stopping rule:");
  if (!obj.region().contains(start))
    throw Error(ErrorKind::Domain, "ascend: start " + where(start) + " outside the search region");

  OptimizerState st;
  st.r = start;
  st.v = obj.evaluate(start);
  for (;;) {
    st.g = gradient(obj, st.r, probe, threads);
    st.lambda = 0.0;
    const double gn = st.g.norm();
    Iterate it{st.k, st.r, st.v, st.g, 0.0};
    if (gn < stop.grad_tol || gn == 0.0) {
      st.reason = StopReason::GradientTolerance;
      st.history.push_back(it);
      break;
    }
    if (st.k >= stop.k_max) {
      st.reason = StopReason::MaxIterations;
      st.history.push_back(it);
      break;
    }
    // Backtrack along the gradient; trial points outside the region are
    // projected back onto it.
    bool accepted = false;
    Point next;
    double v_next = 0.0;
    for (double lambda = stop.initial_step / gn; lambda * gn >= stop.min_step;
         lambda *= stop.shrink) {
      const Point trial = obj.region().project(st.r + lambda * st.g);
      if (!obj.region().contains(trial)) continue;  // rounding on a slanted edge
      const double vt = obj.evaluate(trial);
      if (vt > st.v) {
        accepted = true;
        st.lambda = lambda;
        next = trial;
        v_next = vt;
        break;
      }
    }
    if (!accepted) {
      st.reason = StopReason::LineSearchFailed;
      st.history.push_back(it);
      break;
    }
    it.lambda = st.lambda;
    st.history.push_back(it);
    st.r = next;
    st.v = v_next;
    ++st.k;
  }
  return st;
}

std::vector<OptimizerState> ascend_multi(Objective& obj, const std::vector<Point>& starts,
                                         const ProbeRule& probe, const StoppingRule& stop,
                                         int threads) {
  std::vector<OptimizerState> out;
  for (const Point& s : starts) out.push_back(ascend(obj, s, probe, stop, threads));
  std::stable_sort(out.begin(), out.end(),
                   [](const OptimizerState& a, const OptimizerState& b) { return a.v > b.v; });
  return out;
}

// --- Surface ----------------------------------------------------------------

std::optional<double> Surface::max() const {
  std::optional<double> best;
  for (const auto& s : samples)
    if (s.v && (!best || *s.v > *best)) best = s.v;
  return best;
}

std::vector<const SurfaceSample*> Surface::local_maxima() const {
  std::vector<const SurfaceSample*> out;
  for (const auto& s : samples) {
    if (!s.v) continue;
    bool peak = true;
    for (Index dy = -1; dy <= 1 && peak; ++dy)
      for (Index dx = -1; dx <= 1 && peak; ++dx) {
        const Index x = s.ix + dx, y = s.iy + dy;
        if ((dx == 0 && dy == 0) || x < 0 || y < 0 || x >= nx || y >= ny) continue;
        const auto& n = at(x, y);
        if (n.v && *n.v > *s.v) peak = false;
      }
    if (peak) out.push_back(&s);
  }
  return out;
}

Surface map_objective(Objective& obj, double spacing, std::optional<Point> anchor, int threads) {
  if (!(spacing > 0)) throw Error(ErrorKind::Validation, "map: spacing must be > 0");
  const auto box = obj.region().polygon.bounds();
  const Point o = anchor.value_or(box.min());
  const double eps = 1e-9;
  const auto lo_x = std::int64_t(std::ceil((box.min().x() - o.x()) / spacing - eps));
  const auto hi_x = std::int64_t(std::floor((box.max().x() - o.x()) / spacing + eps));
  const auto lo_y = std::int64_t(std::ceil((box.min().y() - o.y()) / spacing - eps));
  const auto hi_y = std::int64_t(std::floor((box.max().y() - o.y()) / spacing + eps));

  Surface s;
  s.nx = std::max<Index>(0, hi_x - lo_x + 1);
  s.ny = std::max<Index>(0, hi_y - lo_y + 1);
  s.samples.resize(std::size_t(s.nx * s.ny));
  for (Index iy = 0; iy < s.ny; ++iy)
    for (Index ix = 0; ix < s.nx; ++ix) {
      auto& p = s.samples[std::size_t(iy * s.nx + ix)];
      p.ix = ix;
      p.iy = iy;
      p.center = o + spacing * Point(double(lo_x + ix), double(lo_y + iy));
    }

  const auto n = std::int64_t(s.samples.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, threads)) if (threads > 1)
  for (std::int64_t k = 0; k < n; ++k) {
    auto& p = s.samples[std::size_t(k)];
    if (!obj.region().contains(p.center)) {
      p.status = "outside";
      continue;
    }
    try {
      p.v = obj.evaluate(p.center);
      p.status = "ok";
    } catch (const std::exception& e) {
      p.status = std::string("failed: ") + e.what();
      std::replace(p.status.begin(), p.status.end(), ',', ';');
      std::replace(p.status.begin(), p.status.end(), '\n', ' ');
    }
  }
  return s;
}

std::string trace_csv(const OptimizerState& st) {
  std::string out = "k,x_d,y_d,V_A,grad_x,grad_y,lambda\n";
  for (const auto& it : st.history)
    out += std::to_string(it.k) + "," + format_number(it.r.x()) + "," + format_number(it.r.y()) +
           "," + format_number(it.v) + "," + format_number(it.grad.x()) + "," +
           format_number(it.grad.y()) + "," + format_number(it.lambda) + "\n";
  return out;
}

std::string surface_csv(const Surface& surface) {
  std::string out = "x_d,y_d,V_A,status\n";
  for (const auto& p : surface.samples)
    out += format_number(p.center.x()) + "," + format_number(p.center.y()) + "," +
           (p.v ? format_number(*p.v) : std::string()) + "," + p.status + "\n";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

}  // namespace floodopt
