#include "floodopt/commands.hpp"

#include "floodopt/io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace floodopt {

namespace {

void prepare(const std::filesystem::path& out, const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out.string() + ": " + ec.message());
  write_text(out / "config.toml", dump_config(config));
}

std::string xy(const Point& p) { return format_number(p.x()) + ", " + format_number(p.y()); }

}  // namespace

// --- simulate ---------------------------------------------------------------

double MassBalance::relative_error() const {
  const double scale = std::max({initial + injected, final + outflow, 1.0});
  return error() / scale;
}

std::string MassBalance::report() const {
  return "initial_m3 = " + format_number(initial) + "\ninjected_m3 = " + format_number(injected) +
         "\noutflow_m3 = " + format_number(outflow) + "\nfinal_m3 = " + format_number(final) +
         "\nerror_m3 = " + format_number(error()) +
         "\nrelative_error = " + format_number(relative_error()) + "\n";
}

SimulateResult run_simulate(const RunConfig& config, const std::filesystem::path& out, int threads,
                            std::ostream* log) {
  Scenario sc = build_scenario(config);
  FloodProblem& p = sc.problem;
  p.solver.threads = std::max(1, threads);
  prepare(out, config);

  auto [grid, state] = with_dam(p, sc.dam_center);
  const GaugeLine gl = rasterize_gauge(grid, p.gauge);
  SimulateResult res;
  res.record = GaugeRecord({p.hydrograph.t_qs(), p.hydrograph.t_qe()});
  res.balance.initial = state.volume(grid);

  std::vector<StepObserver<double>> obs{
      gauge_observer(gl, res.record, p.mode, state, p.solver.physics.h_dry),
      [&res](const FlowState&, const StepReport& r, const FaceFluxes<double>&) {
        res.balance.injected += r.injected_volume;
        res.balance.outflow += r.outflow_volume;
        ++res.steps;
      }};

  Simulator<double> sim(grid, p.solver, Forcing{p.source, p.hydrograph});
  SnapshotSet snaps(out / "snapshots", grid);
  const double t0 = state.t;
  if (sc.snapshot_interval > 0) {
    // Segment the run so that snapshot times are hit exactly.
    for (long k = 1;; ++k) {
      const double t = t0 + double(k) * sc.snapshot_interval;
      if (t > sc.t_end) break;
      state = sim.run(std::move(state), t, obs);
      snaps.add(state);
      if (log) *log << "t = " << state.t << " s, " << res.steps << " steps" << std::endl;
    }
  }
  state = sim.run(std::move(state), sc.t_end, obs);
  snaps.add_final(state);
  res.snapshot_times = snaps.times();
  res.balance.final = state.volume(grid);

  res.record.write_csv(out / "gauge.csv");
  write_text(out / "mass_balance.txt",
             res.balance.report() + "steps = " + std::to_string(res.steps) +
                 "\ngauge_volume_m3 = " + format_number(res.record.volume()) + "\n");
  if (log)
    *log << "simulated " << t0 << " -> " << sc.t_end << " s in " << res.steps
         << " steps; gauge volume " << res.record.volume() << " m^3; relative mass error "
         << res.balance.relative_error() << std::endl;
  return res;
}

// --- optimize ---------------------------------------------------------------

std::string OptimizeResult::summary() const {
  std::ostringstream o;
  const OptimizerState& b = best();
  o << "best_center = " << xy(b.r) << "\n"
    << "best_V_A_m3 = " << format_number(b.v) << "\n"
    << "baseline_V_A_m3 = " << format_number(baseline) << "\n"
    << "ratio = " << format_number(ratio()) << "\n"
    << "stop_reason = " << to_string(b.reason) << "\n"
    << "iterations = " << b.k << "\n"
    << "evaluations = " << evaluations << "\n";
  for (const auto& r : runs)
    o << "run start = " << xy(r.history.front().r) << " -> " << xy(r.r)
      << " V_A = " << format_number(r.v) << " (" << to_string(r.reason) << ", " << r.k
      << " steps)\n";
  return o.str();
}

OptimizeResult run_optimize(const RunConfig& config, const std::filesystem::path& out, int threads,
                            std::ostream* log) {
  Scenario sc = build_scenario(config);
  sc.problem.solver.threads = std::max(1, threads);
  prepare(out, config);
  FloodObjective obj(std::move(sc.problem));

  OptimizeResult res;
  res.baseline = obj.baseline();
  if (log) *log << "baseline V_A " << res.baseline << " m^3" << std::endl;
  for (std::size_t n = 0; n < sc.starts.size(); ++n) {
    res.runs.push_back(ascend(obj, sc.starts[n], sc.probe, sc.stop, threads));
    const OptimizerState& r = res.runs.back();
    write_text(out / ("trace_" + std::to_string(n) + ".csv"), trace_csv(r));
    if (log)
      *log << "start " << n << ": (" << xy(sc.starts[n]) << ") -> (" << xy(r.r) << ") V_A "
           << r.v << " after " << r.k << " steps, " << to_string(r.reason) << std::endl;
  }
  std::stable_sort(res.runs.begin(), res.runs.end(),
                   [](const OptimizerState& a, const OptimizerState& b) { return a.v > b.v; });
  res.evaluations = obj.computed();
  write_text(out / "trace.csv", trace_csv(res.best()));
  write_text(out / "summary.txt", res.summary());
  if (log)
    *log << "best (" << xy(res.best().r) << ") V_A " << res.best().v << " m^3, ratio to baseline "
         << res.ratio() << std::endl;
  return res;
}

// --- map --------------------------------------------------------------------

std::string MapResult::summary() const {
  std::ostringstream o;
  o << "baseline_V_A_m3 = " << format_number(baseline) << "\n"
    << "lattice = " << surface.nx << " x " << surface.ny << "\n";
  std::size_t ok = 0;
  const SurfaceSample* top = nullptr;
  for (const auto& s : surface.samples)
    if (s.v) {
      ++ok;
      if (!top || *s.v > *top->v) top = &s;
    }
  o << "evaluated = " << ok << "\n";
  if (top)
    o << "max_center = " << xy(top->center) << "\nmax_V_A_m3 = " << format_number(*top->v)
      << "\nmax_ratio = " << format_number(*top->v / baseline) << "\n";
  for (const SurfaceSample* s : surface.local_maxima())
    o << "local_max = " << xy(s->center) << " V_A = " << format_number(*s->v)
      << " ratio = " << format_number(*s->v / baseline) << "\n";
  return o.str();
}

MapResult run_map(const RunConfig& config, const std::filesystem::path& out, int threads,
                  std::ostream* log) {
  Scenario sc = build_scenario(config);
  sc.problem.solver.threads = 1;  // parallel over lattice points instead
  prepare(out, config);
  FloodObjective obj(std::move(sc.problem));
  MapResult res;
  res.baseline = obj.baseline();
  res.surface = map_objective(obj, sc.map_spacing, sc.map_anchor, threads);
  write_text(out / "surface.csv", surface_csv(res.surface));
  write_text(out / "summary.txt", res.summary());
  if (log) *log << res.summary() << std::flush;
  return res;
}

}  // namespace floodopt
