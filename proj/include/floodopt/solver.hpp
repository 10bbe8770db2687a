#pragma once

// Explicit finite-volume solver for the 2D shallow-water equations over
// topography, with Manning friction, Coriolis rotation and hydrograph-driven
// mass sources.
//
// Hyperbolic part: HLL fluxes on hydrostatically reconstructed face states
// (well-balanced for the lake at rest), optional MUSCL reconstruction of
// depth, surface level and velocity with a TVD limiter, and SSP-RK2 in time
// for the second-order configuration. Outgoing face fluxes of a cell are
// scaled so that no cell can be drained below zero within a stage.
//
// Friction, Coriolis and sources are applied as split substeps after the
// flux update.

#include "floodopt/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace floodopt {

enum class Boundary {
  Waterfall,  // free outflow onto an infinitely low apron, no inflow
  Wall,       // reflective
};

struct Boundaries {
  Boundary west = Boundary::Waterfall;
  Boundary east = Boundary::Waterfall;
  Boundary south = Boundary::Waterfall;
  Boundary north = Boundary::Waterfall;

  static Boundaries closed() {
    return {Boundary::Wall, Boundary::Wall, Boundary::Wall, Boundary::Wall};
  }
};

enum class Limiter { Minmod, VanLeer, MonotonizedCentral };

struct SolverConfig {
  PhysicsParams physics;
  double max_dt = 10.0;  // s
  int order = 2;         // 1 or 2
  Limiter limiter = Limiter::MonotonizedCentral;
  Boundaries boundaries;
  bool friction = true;
  bool coriolis = true;
  int threads = 1;

  std::vector<std::string> validate() const;
};

struct StepReport {
  double dt_used = 0.0;
  double max_froude = 0.0;
  Index wet_cell_count = 0;
  double injected_volume = 0.0;  // m^3
  double outflow_volume = 0.0;   // m^3 through waterfall boundaries
};

/// Per-face numerical fluxes per unit face length.
/// x-faces are (nx+1) x ny: face (i, j) separates cells (i-1, j) and (i, j).
/// y-faces are nx x (ny+1): face (i, j) separates cells (i, j-1) and (i, j).
template <typename Scalar>
struct FaceFluxes {
  Field<Scalar> x_mass, x_momx, x_momy;
  Field<Scalar> y_mass, y_momx, y_momy;

  void resize(Index nx, Index ny) {
    for (auto* f : {&x_mass, &x_momx, &x_momy}) f->setZero(nx + 1, ny);
    for (auto* f : {&y_mass, &y_momx, &y_momy}) f->setZero(nx, ny + 1);
  }
};

template <typename Scalar>
struct CellRates {
  Field<Scalar> h, hu, hv;  // time derivatives of the conserved variables
};

template <typename Scalar>
struct FluxEvaluation {
  FaceFluxes<Scalar> faces;
  CellRates<Scalar> rates;
};

/// Hydrograph plus the cells it feeds. An empty hydrograph means no sources.
struct Forcing {
  SourceField source;
  Hydrograph hydrograph;

  bool active() const { return !hydrograph.empty() && !source.empty(); }
};

template <typename Scalar>
using StepObserver = std::function<void(const BasicFlowState<Scalar>&, const StepReport&,
                                        const FaceFluxes<Scalar>&)>;

// ---------------------------------------------------------------------------
// Pointwise physics
// ---------------------------------------------------------------------------

/// Bed friction force (f_x, f_y) in m^2/s^2 from the Chezy/Manning model:
/// f = -(u/2) |u| H Lambda, Lambda = 2 g n^2 / H^(4/3).
inline Point friction_force(double h, double hu, double hv, double manning, double g) {
  if (!(h > 0)) return Point::Zero();
  const double u = hu / h;
  const double v = hv / h;
  const double speed = std::sqrt(u * u + v * v);
  const double lambda = 2.0 * g * manning * manning / std::pow(h, 4.0 / 3.0);
  return {-0.5 * u * speed * h * lambda, -0.5 * v * speed * h * lambda};
}

namespace detail {

template <typename S>
inline S limit(Limiter lim, S a, S b) {
  if (!(a * b > S(0))) return S(0);
  switch (lim) {
    case Limiter::Minmod: return std::abs(a) < std::abs(b) ? a : b;
    case Limiter::VanLeer: return S(2) * a * b / (a + b);
    case Limiter::MonotonizedCentral: {
      const S c = S(0.5) * (a + b);
      const S m = std::min({std::abs(S(2) * a), std::abs(S(2) * b), std::abs(c)});
      return a > S(0) ? m : -m;
    }
  }
  return S(0);
}

/// Reconstructed state on one side of a face; un is the face-normal velocity.
template <typename S>
struct FaceState {
  S h = 0, eta = 0, un = 0, ut = 0;
};

/// Face flux in face-normal coordinates plus the hydrostatic pressures of the
/// two reconstructed depths (used for the well-balanced correction).
template <typename S>
struct NormalFlux {
  S mass = 0, mom_n = 0, mom_t = 0;
  S p_left = 0, p_right = 0;
};

template <typename S>
inline S pressure(S h, S g) {
  return S(0.5) * g * h * h;
}

/// HLL flux between hydrostatically reconstructed depths hl, hr.
template <typename S>
inline NormalFlux<S> hll(S hl, S ul, S vl, S hr, S ur, S vr, S g) {
  NormalFlux<S> f;
  f.p_left = pressure(hl, g);
  f.p_right = pressure(hr, g);
  if (!(hl > S(0)) && !(hr > S(0))) return f;
  const S cl = std::sqrt(g * hl);
  const S cr = std::sqrt(g * hr);
  S sl, sr;
  if (!(hl > S(0))) {
    sl = ur - S(2) * cr;
    sr = ur + cr;
  } else if (!(hr > S(0))) {
    sl = ul - cl;
    sr = ul + S(2) * cl;
  } else {
    sl = std::min(ul - cl, ur - cr);
    sr = std::max(ul + cl, ur + cr);
  }
  const S ql = hl * ul, qr = hr * ur;
  const S fl0 = ql, fl1 = ql * ul + f.p_left, fl2 = ql * vl;
  const S fr0 = qr, fr1 = qr * ur + f.p_right, fr2 = qr * vr;
  if (sl >= S(0)) {
    f.mass = fl0;
    f.mom_n = fl1;
    f.mom_t = fl2;
  } else if (sr <= S(0)) {
    f.mass = fr0;
    f.mom_n = fr1;
    f.mom_t = fr2;
  } else {
    // F_L - s_L (F_R - F_L - s_R (U_R - U_L)) / (s_R - s_L): returns F_L
    // bitwise when both sides carry the same state.
    const S inv = S(1) / (sr - sl);
    f.mass = fl0 - sl * ((fr0 - fl0) - sr * (hr - hl)) * inv;
    f.mom_n = fl1 - sl * ((fr1 - fl1) - sr * (qr - ql)) * inv;
    f.mom_t = fl2 - sl * ((fr2 - fl2) - sr * (hr * vr - hl * vl)) * inv;
  }
  return f;
}

/// Interior face with hydrostatic reconstruction of the two sides.
template <typename S>
inline NormalFlux<S> interior_flux(const FaceState<S>& l, const FaceState<S>& r, S g) {
  const S bl = l.eta - l.h;
  const S br = r.eta - r.h;
  const S bstar = std::max(bl, br);
  const S hl = std::max(S(0), l.eta - bstar);
  const S hr = std::max(S(0), r.eta - bstar);
  return hll(hl, l.un, l.ut, hr, r.un, r.ut, g);
}

/// Boundary face; `inner` is the interior face state, `outward` is +1 when the
/// interior cell lies on the low side of the face (east/north boundaries).
template <typename S>
inline NormalFlux<S> boundary_flux(Boundary kind, const FaceState<S>& inner, int outward, S g) {
  const S h = inner.h;
  if (kind == Boundary::Wall) {
    // Mirror ghost on the outer side of the face.
    NormalFlux<S> f = outward > 0 ? hll(h, inner.un, inner.ut, h, -inner.un, inner.ut, g)
                                  : hll(h, -inner.un, inner.ut, h, inner.un, inner.ut, g);
    f.mass = 0;
    f.mom_t = 0;
    return f;
  }
  // Waterfall: dry ghost with bed far below; the interior keeps its depth.
  if (outward > 0) return hll(h, inner.un, inner.ut, S(0), S(0), S(0), g);
  return hll(S(0), S(0), S(0), h, inner.un, inner.ut, g);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simulator: owns the grid copy, configuration, forcing and scratch arrays.
// ---------------------------------------------------------------------------

template <typename Scalar>
class Simulator {
 public:
  using Grid = BasicSimGrid<Scalar>;
  using State = BasicFlowState<Scalar>;

  Simulator(Grid grid, SolverConfig config, Forcing forcing = {});

  const Grid& grid() const { return grid_; }
  const SolverConfig& config() const { return config_; }
  const Forcing& forcing() const { return forcing_; }

  /// Hyperbolic fluxes and net cell rates of `state`, without drain limiting.
  FluxEvaluation<Scalar> compute_fluxes(const State& state);

  double stable_dt(const State& state) const;

  /// One explicit step of size min(stable_dt, dt_limit). Mutates `state`.
  StepReport step(State& state, double dt_limit = std::numeric_limits<double>::infinity());

  /// Step-averaged face fluxes of the most recent step.
  const FaceFluxes<Scalar>& last_fluxes() const { return avg_; }

  /// Steps until t_end, truncating the last step to land on it exactly.
  State run(State state, double t_end, std::span<const StepObserver<Scalar>> observers = {});

 private:
  struct Primitives {
    Field<Scalar> eta, u, v;
    Mask wet;
    Field<Scalar> sx_h, sx_eta, sx_u, sx_v;
    Field<Scalar> sy_h, sy_eta, sy_u, sy_v;
    // Per-face pressure of the reconstructed depth seen from each side.
    Field<Scalar> x_pl, x_pr, y_pl, y_pr;
  };

  void evaluate(const State& s, FaceFluxes<Scalar>& faces);
  void limit_draining(const State& s, FaceFluxes<Scalar>& faces, double dt);
  void rates(const State& s, const FaceFluxes<Scalar>& faces, CellRates<Scalar>& out) const;
  void clean(State& s) const;
  void check_finite(const State& s) const;
  template <typename Fn>
  void for_columns(Index n, Fn&& fn) const;

  Grid grid_;
  SolverConfig config_;
  Forcing forcing_;
  Primitives prim_;
  FaceFluxes<Scalar> stage_;
  FaceFluxes<Scalar> avg_;
  CellRates<Scalar> rates_;
  State u0_;
};

// ---------------------------------------------------------------------------
// Free-function surface
// ---------------------------------------------------------------------------

template <typename Scalar>
FluxEvaluation<Scalar> compute_fluxes(const BasicSimGrid<Scalar>& grid,
                                      const BasicFlowState<Scalar>& state,
                                      const SolverConfig& config) {
  Simulator<Scalar> sim(grid, config);
  return sim.compute_fluxes(state);
}

/// Point-implicit Manning friction: momentum shrinks toward zero, never flips.
template <typename Scalar>
void apply_friction(BasicFlowState<Scalar>& state, const BasicSimGrid<Scalar>& grid, double dt,
                    double g, double h_dry = 0.0) {
  for (Index j = 0; j < state.ny(); ++j)
    for (Index i = 0; i < state.nx(); ++i) {
      const double h = double(state.h(i, j));
      if (!(h > h_dry) || !(h > 0)) continue;
      const double hu = double(state.hu(i, j));
      const double hv = double(state.hv(i, j));
      if (hu == 0.0 && hv == 0.0) continue;
      const double n = double(grid.manning(i, j));
      const double speed = std::sqrt(hu * hu + hv * hv) / h;
      const double factor = 1.0 / (1.0 + dt * g * n * n * speed / std::pow(h, 4.0 / 3.0));
      state.hu(i, j) = Scalar(hu * factor);
      state.hv(i, j) = Scalar(hv * factor);
    }
}

/// Exact rotation of (uH, vH) by -f dt, f = 2 Omega sin(latitude).
template <typename Scalar>
void apply_coriolis(BasicFlowState<Scalar>& state, double dt, double omega_e,
                    double latitude_deg) {
  const double f = 2.0 * omega_e * std::sin(latitude_deg * 3.14159265358979323846 / 180.0);
  if (f == 0.0) return;
  const double c = std::cos(f * dt);
  const double s = std::sin(f * dt);
  for (Index j = 0; j < state.ny(); ++j)
    for (Index i = 0; i < state.nx(); ++i) {
      const double hu = double(state.hu(i, j));
      const double hv = double(state.hv(i, j));
      state.hu(i, j) = Scalar(c * hu + s * hv);
      state.hv(i, j) = Scalar(-s * hu + c * hv);
    }
}

/// Injects the trapezoidal-in-time hydrograph volume over [t, t+dt] into the
/// source cells. Returns the injected volume in m^3.
template <typename Scalar>
double apply_sources(BasicFlowState<Scalar>& state, const BasicSimGrid<Scalar>& grid,
                     const SourceField& src, const Hydrograph& hg, double t, double dt) {
  const double volume = 0.5 * (hg.at(t) + hg.at(t + dt)) * dt;
  if (volume == 0.0) return 0.0;
  const double area = double(grid.cell_area());
  for (const auto& c : src.cells) {
    const double dh = c.fraction * volume / area;
    state.h(c.i, c.j) += Scalar(dh);
    state.hu(c.i, c.j) += Scalar(dh * src.injection_velocity.x());
    state.hv(c.i, c.j) += Scalar(dh * src.injection_velocity.y());
  }
  return volume;
}

template <typename Scalar>
double stable_dt(const BasicSimGrid<Scalar>& grid, const BasicFlowState<Scalar>& state,
                 const SolverConfig& config) {
  const double g = config.physics.g;
  const double h_dry = config.physics.h_dry;
  const double len = std::min(double(grid.dx), double(grid.dy));
  double dt = config.max_dt;
  for (Index j = 0; j < state.ny(); ++j)
    for (Index i = 0; i < state.nx(); ++i) {
      const double h = double(state.h(i, j));
      if (!(h > h_dry)) continue;
      const double u = double(state.hu(i, j)) / h;
      const double v = double(state.hv(i, j)) / h;
      const double speed = std::sqrt(u * u + v * v) + std::sqrt(g * h);
      dt = std::min(dt, config.physics.cfl * len / speed);
    }
  return dt;
}

template <typename Scalar>
std::pair<BasicFlowState<Scalar>, StepReport> step(const BasicSimGrid<Scalar>& grid,
                                                   const BasicFlowState<Scalar>& state,
                                                   const Forcing& forcing,
                                                   const SolverConfig& config) {
  Simulator<Scalar> sim(grid, config, forcing);
  BasicFlowState<Scalar> next = state;
  StepReport report = sim.step(next);
  return {std::move(next), report};
}

template <typename Scalar>
BasicFlowState<Scalar> run(const BasicSimGrid<Scalar>& grid, BasicFlowState<Scalar> initial,
                           const Forcing& forcing, const SolverConfig& config, double t_end,
                           std::span<const StepObserver<Scalar>> observers = {}) {
  Simulator<Scalar> sim(grid, config, forcing);
  return sim.run(std::move(initial), t_end, observers);
}

// ---------------------------------------------------------------------------
// Simulator implementation
// ---------------------------------------------------------------------------

template <typename Scalar>
Simulator<Scalar>::Simulator(Grid grid, SolverConfig config, Forcing forcing)
    : grid_(std::move(grid)), config_(std::move(config)), forcing_(std::move(forcing)) {
  auto problems = validate_grid(grid_);
  for (auto& p : config_.validate()) problems.push_back(std::move(p));
  if (forcing_.active())
    for (auto& p : forcing_.source.validate()) problems.push_back(std::move(p));
  if (!problems.empty()) {
    std::string msg = "invalid solver input:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorKind::Validation, msg);
  }
  const Index nx = grid_.nx, ny = grid_.ny;
  for (auto* f : {&prim_.eta, &prim_.u, &prim_.v, &prim_.sx_h, &prim_.sx_eta, &prim_.sx_u,
                  &prim_.sx_v, &prim_.sy_h, &prim_.sy_eta, &prim_.sy_u, &prim_.sy_v})
    f->setZero(nx, ny);
  prim_.wet.setConstant(nx, ny, false);
  prim_.x_pl.setZero(nx + 1, ny);
  prim_.x_pr.setZero(nx + 1, ny);
  prim_.y_pl.setZero(nx, ny + 1);
  prim_.y_pr.setZero(nx, ny + 1);
  stage_.resize(nx, ny);
  avg_.resize(nx, ny);
  for (auto* f : {&rates_.h, &rates_.hu, &rates_.hv}) f->setZero(nx, ny);
}

template <typename Scalar>
template <typename Fn>
void Simulator<Scalar>::for_columns(Index n, Fn&& fn) const {
#if defined(_OPENMP)
  const int threads = std::max(1, config_.threads);
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (Index j = 0; j < n; ++j) fn(j);
#else
  for (Index j = 0; j < n; ++j) fn(j);
#endif
}

template <typename Scalar>
void Simulator<Scalar>::evaluate(const State& s, FaceFluxes<Scalar>& faces) {
  using detail::FaceState;
  const Index nx = grid_.nx, ny = grid_.ny;
  const Scalar g = Scalar(config_.physics.g);
  const Scalar h_dry = Scalar(config_.physics.h_dry);
  auto& P = prim_;

  for_columns(ny, [&](Index j) {
    for (Index i = 0; i < nx; ++i) {
      const Scalar h = s.h(i, j);
      const bool wet = h > h_dry;
      P.wet(i, j) = wet;
      P.eta(i, j) = h + grid_.bed(i, j);
      P.u(i, j) = wet ? s.hu(i, j) / h : Scalar(0);
      P.v(i, j) = wet ? s.hv(i, j) / h : Scalar(0);
    }
  });

  // Slopes; first order next to dry cells and at the domain edge.
  const bool second = config_.order >= 2;
  const Limiter lim = config_.limiter;
  for_columns(ny, [&](Index j) {
    for (Index i = 0; i < nx; ++i) {
      const bool xs = second && i > 0 && i + 1 < nx && P.wet(i - 1, j) && P.wet(i, j) &&
                      P.wet(i + 1, j);
      if (xs) {
        P.sx_h(i, j) = detail::limit(lim, s.h(i, j) - s.h(i - 1, j), s.h(i + 1, j) - s.h(i, j));
        P.sx_eta(i, j) =
            detail::limit(lim, P.eta(i, j) - P.eta(i - 1, j), P.eta(i + 1, j) - P.eta(i, j));
        P.sx_u(i, j) = detail::limit(lim, P.u(i, j) - P.u(i - 1, j), P.u(i + 1, j) - P.u(i, j));
        P.sx_v(i, j) = detail::limit(lim, P.v(i, j) - P.v(i - 1, j), P.v(i + 1, j) - P.v(i, j));
      } else {
        P.sx_h(i, j) = P.sx_eta(i, j) = P.sx_u(i, j) = P.sx_v(i, j) = Scalar(0);
      }
      const bool ys = second && j > 0 && j + 1 < ny && P.wet(i, j - 1) && P.wet(i, j) &&
                      P.wet(i, j + 1);
      if (ys) {
        P.sy_h(i, j) = detail::limit(lim, s.h(i, j) - s.h(i, j - 1), s.h(i, j + 1) - s.h(i, j));
        P.sy_eta(i, j) =
            detail::limit(lim, P.eta(i, j) - P.eta(i, j - 1), P.eta(i, j + 1) - P.eta(i, j));
        P.sy_u(i, j) = detail::limit(lim, P.u(i, j) - P.u(i, j - 1), P.u(i, j + 1) - P.u(i, j));
        P.sy_v(i, j) = detail::limit(lim, P.v(i, j) - P.v(i, j - 1), P.v(i, j + 1) - P.v(i, j));
      } else {
        P.sy_h(i, j) = P.sy_eta(i, j) = P.sy_u(i, j) = P.sy_v(i, j) = Scalar(0);
      }
    }
  });

  // Face states: x-faces carry (u normal, v tangential), y-faces the reverse.
  auto east = [&](Index i, Index j) {
    return FaceState<Scalar>{s.h(i, j) + Scalar(0.5) * P.sx_h(i, j),
                             P.eta(i, j) + Scalar(0.5) * P.sx_eta(i, j),
                             P.u(i, j) + Scalar(0.5) * P.sx_u(i, j),
                             P.v(i, j) + Scalar(0.5) * P.sx_v(i, j)};
  };
  auto west = [&](Index i, Index j) {
    return FaceState<Scalar>{s.h(i, j) - Scalar(0.5) * P.sx_h(i, j),
                             P.eta(i, j) - Scalar(0.5) * P.sx_eta(i, j),
                             P.u(i, j) - Scalar(0.5) * P.sx_u(i, j),
                             P.v(i, j) - Scalar(0.5) * P.sx_v(i, j)};
  };
  auto north = [&](Index i, Index j) {
    return FaceState<Scalar>{s.h(i, j) + Scalar(0.5) * P.sy_h(i, j),
                             P.eta(i, j) + Scalar(0.5) * P.sy_eta(i, j),
                             P.v(i, j) + Scalar(0.5) * P.sy_v(i, j),
                             P.u(i, j) + Scalar(0.5) * P.sy_u(i, j)};
  };
  auto south = [&](Index i, Index j) {
    return FaceState<Scalar>{s.h(i, j) - Scalar(0.5) * P.sy_h(i, j),
                             P.eta(i, j) - Scalar(0.5) * P.sy_eta(i, j),
                             P.v(i, j) - Scalar(0.5) * P.sy_v(i, j),
                             P.u(i, j) - Scalar(0.5) * P.sy_u(i, j)};
  };

  const Boundaries& bc = config_.boundaries;
  for_columns(ny, [&](Index j) {
    for (Index i = 0; i <= nx; ++i) {
      detail::NormalFlux<Scalar> f;
      if (i == 0) {
        if (P.wet(0, j)) f = detail::boundary_flux(bc.west, west(0, j), -1, g);
      } else if (i == nx) {
        if (P.wet(nx - 1, j)) f = detail::boundary_flux(bc.east, east(nx - 1, j), +1, g);
      } else if (P.wet(i - 1, j) || P.wet(i, j)) {
        f = detail::interior_flux(east(i - 1, j), west(i, j), g);
      }
      faces.x_mass(i, j) = f.mass;
      faces.x_momx(i, j) = f.mom_n;
      faces.x_momy(i, j) = f.mom_t;
      P.x_pl(i, j) = f.p_left;
      P.x_pr(i, j) = f.p_right;
    }
  });
  for_columns(ny + 1, [&](Index j) {
    for (Index i = 0; i < nx; ++i) {
      detail::NormalFlux<Scalar> f;
      if (j == 0) {
        if (P.wet(i, 0)) f = detail::boundary_flux(bc.south, south(i, 0), -1, g);
      } else if (j == ny) {
        if (P.wet(i, ny - 1)) f = detail::boundary_flux(bc.north, north(i, ny - 1), +1, g);
      } else if (P.wet(i, j - 1) || P.wet(i, j)) {
        f = detail::interior_flux(north(i, j - 1), south(i, j), g);
      }
      faces.y_mass(i, j) = f.mass;
      faces.y_momy(i, j) = f.mom_n;
      faces.y_momx(i, j) = f.mom_t;
      P.y_pl(i, j) = f.p_left;
      P.y_pr(i, j) = f.p_right;
    }
  });
}

template <typename Scalar>
void Simulator<Scalar>::limit_draining(const State& s, FaceFluxes<Scalar>& faces, double dt) {
  const Index nx = grid_.nx, ny = grid_.ny;
  const double dx = double(grid_.dx), dy = double(grid_.dy);
  // Fraction of each cell's outgoing flux that can be honoured this stage.
  Field<double> theta(nx, ny);
  bool any = false;
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const double out = std::max(0.0, -double(faces.x_mass(i, j))) / dx +
                         std::max(0.0, double(faces.x_mass(i + 1, j))) / dx +
                         std::max(0.0, -double(faces.y_mass(i, j))) / dy +
                         std::max(0.0, double(faces.y_mass(i, j + 1))) / dy;
      const double avail = double(s.h(i, j));
      double th = 1.0;
      if (out * dt > avail) {
        th = out > 0 ? avail / (out * dt) : 1.0;
        any = true;
      }
      theta(i, j) = th;
    }
  if (!any) return;
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i <= nx; ++i) {
      const Scalar m = faces.x_mass(i, j);
      Index src = m > Scalar(0) ? i - 1 : i;
      if (m == Scalar(0) || src < 0 || src >= nx) continue;
      const Scalar th = Scalar(theta(src, j));
      if (th < Scalar(1)) {
        faces.x_mass(i, j) *= th;
        faces.x_momx(i, j) *= th;
        faces.x_momy(i, j) *= th;
      }
    }
  for (Index j = 0; j <= ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const Scalar m = faces.y_mass(i, j);
      Index src = m > Scalar(0) ? j - 1 : j;
      if (m == Scalar(0) || src < 0 || src >= ny) continue;
      const Scalar th = Scalar(theta(i, src));
      if (th < Scalar(1)) {
        faces.y_mass(i, j) *= th;
        faces.y_momx(i, j) *= th;
        faces.y_momy(i, j) *= th;
      }
    }
}

template <typename Scalar>
void Simulator<Scalar>::rates(const State& s, const FaceFluxes<Scalar>& F,
                              CellRates<Scalar>& out) const {
  const Index nx = grid_.nx, ny = grid_.ny;
  const Scalar g = Scalar(config_.physics.g);
  const Scalar rdx = Scalar(1) / grid_.dx, rdy = Scalar(1) / grid_.dy;
  const auto& P = prim_;
  for_columns(ny, [&](Index j) {
    for (Index i = 0; i < nx; ++i) {
      out.h(i, j) = -(F.x_mass(i + 1, j) - F.x_mass(i, j)) * rdx -
                    (F.y_mass(i, j + 1) - F.y_mass(i, j)) * rdy;
      // Momentum: flux minus the hydrostatic pressure of the reconstructed
      // depth on each side, plus the centred surface-gradient term.
      const Scalar east = F.x_momx(i + 1, j) - P.x_pl(i + 1, j);
      const Scalar west = F.x_momx(i, j) - P.x_pr(i, j);
      const Scalar north = F.y_momy(i, j + 1) - P.y_pl(i, j + 1);
      const Scalar south = F.y_momy(i, j) - P.y_pr(i, j);
      const Scalar h = s.h(i, j);
      out.hu(i, j) = -(east - west) * rdx - (F.y_momx(i, j + 1) - F.y_momx(i, j)) * rdy -
                     g * h * P.sx_eta(i, j) * rdx;
      out.hv(i, j) = -(F.x_momy(i + 1, j) - F.x_momy(i, j)) * rdx - (north - south) * rdy -
                     g * h * P.sy_eta(i, j) * rdy;
    }
  });
}

template <typename Scalar>
void Simulator<Scalar>::clean(State& s) const {
  const Scalar h_dry = Scalar(config_.physics.h_dry);
  for (Index j = 0; j < s.ny(); ++j)
    for (Index i = 0; i < s.nx(); ++i) {
      if (s.h(i, j) < Scalar(0)) s.h(i, j) = Scalar(0);
      if (!(s.h(i, j) > h_dry)) {
        s.hu(i, j) = Scalar(0);
        s.hv(i, j) = Scalar(0);
      }
    }
}

template <typename Scalar>
void Simulator<Scalar>::check_finite(const State& s) const {
  for (Index j = 0; j < s.ny(); ++j)
    for (Index i = 0; i < s.nx(); ++i)
      if (!std::isfinite(double(s.h(i, j))) || !std::isfinite(double(s.hu(i, j))) ||
          !std::isfinite(double(s.hv(i, j)))) {
        std::ostringstream msg;
        msg << "non-finite state in cell (" << i << ", " << j << ") at t = " << s.t << " s";
        throw Error(ErrorKind::Numeric, msg.str());
      }
}

template <typename Scalar>
FluxEvaluation<Scalar> Simulator<Scalar>::compute_fluxes(const State& state) {
  check_finite(state);
  FluxEvaluation<Scalar> out;
  out.faces.resize(grid_.nx, grid_.ny);
  evaluate(state, out.faces);
  for (auto* f : {&out.rates.h, &out.rates.hu, &out.rates.hv}) f->setZero(grid_.nx, grid_.ny);
  rates(state, out.faces, out.rates);
  return out;
}

template <typename Scalar>
double Simulator<Scalar>::stable_dt(const State& state) const {
  return floodopt::stable_dt(grid_, state, config_);
}

template <typename Scalar>
StepReport Simulator<Scalar>::step(State& state, double dt_limit) {
  StepReport rep;
  const double dt = std::min(stable_dt(state), dt_limit);
  if (!(dt > 0)) throw Error(ErrorKind::Numeric, "non-positive time step");
  rep.dt_used = dt;
  const Scalar sdt = Scalar(dt);
  const Index nx = grid_.nx, ny = grid_.ny;

  // Stage 1 (forward Euler).
  u0_ = state;
  evaluate(state, stage_);
  limit_draining(state, stage_, dt);
  rates(state, stage_, rates_);
  avg_.x_mass = stage_.x_mass;
  avg_.x_momx = stage_.x_momx;
  avg_.x_momy = stage_.x_momy;
  avg_.y_mass = stage_.y_mass;
  avg_.y_momx = stage_.y_momx;
  avg_.y_momy = stage_.y_momy;
  state.h += sdt * rates_.h;
  state.hu += sdt * rates_.hu;
  state.hv += sdt * rates_.hv;
  clean(state);

  if (config_.order >= 2) {
    // Stage 2 and Heun average.
    evaluate(state, stage_);
    limit_draining(state, stage_, dt);
    rates(state, stage_, rates_);
    const Scalar half = Scalar(0.5);
    state.h = half * (u0_.h + (state.h + sdt * rates_.h));
    state.hu = half * (u0_.hu + (state.hu + sdt * rates_.hu));
    state.hv = half * (u0_.hv + (state.hv + sdt * rates_.hv));
    avg_.x_mass = half * (avg_.x_mass + stage_.x_mass);
    avg_.x_momx = half * (avg_.x_momx + stage_.x_momx);
    avg_.x_momy = half * (avg_.x_momy + stage_.x_momy);
    avg_.y_mass = half * (avg_.y_mass + stage_.y_mass);
    avg_.y_momx = half * (avg_.y_momx + stage_.y_momx);
    avg_.y_momy = half * (avg_.y_momy + stage_.y_momy);
    clean(state);
  }

  // Outflow through waterfall edges.
  const Boundaries& bc = config_.boundaries;
  const double dx = double(grid_.dx), dy = double(grid_.dy);
  double out = 0.0;
  for (Index j = 0; j < ny; ++j) {
    if (bc.west == Boundary::Waterfall) out += -double(avg_.x_mass(0, j)) * dy;
    if (bc.east == Boundary::Waterfall) out += double(avg_.x_mass(nx, j)) * dy;
  }
  for (Index i = 0; i < nx; ++i) {
    if (bc.south == Boundary::Waterfall) out += -double(avg_.y_mass(i, 0)) * dx;
    if (bc.north == Boundary::Waterfall) out += double(avg_.y_mass(i, ny)) * dx;
  }
  rep.outflow_volume = std::max(0.0, out * dt);

  if (config_.friction) apply_friction(state, grid_, dt, config_.physics.g, config_.physics.h_dry);
  if (config_.coriolis)
    apply_coriolis(state, dt, config_.physics.omega_e, config_.physics.latitude_deg);
  if (forcing_.active())
    rep.injected_volume =
        apply_sources(state, grid_, forcing_.source, forcing_.hydrograph, state.t, dt);
  clean(state);

  state.t += dt;
  check_finite(state);

  const double g = config_.physics.g;
  const double h_dry = config_.physics.h_dry;
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const double h = double(state.h(i, j));
      if (!(h > h_dry)) continue;
      ++rep.wet_cell_count;
      const double u = double(state.hu(i, j)) / h;
      const double v = double(state.hv(i, j)) / h;
      rep.max_froude = std::max(rep.max_froude, std::sqrt(u * u + v * v) / std::sqrt(g * h));
    }
  return rep;
}

template <typename Scalar>
BasicFlowState<Scalar> Simulator<Scalar>::run(State state, double t_end,
                                              std::span<const StepObserver<Scalar>> observers) {
  if (t_end < state.t)
    throw Error(ErrorKind::Domain, "run: t_end precedes the initial time");
  while (state.t < t_end) {
    const double remaining = t_end - state.t;
    StepReport rep = step(state, remaining);
    // Land exactly on t_end; guards against round-off leaving a sliver.
    if (rep.dt_used == remaining || t_end - state.t < 1e-9 * std::max(1.0, std::abs(t_end)))
      state.t = t_end;
    for (const auto& obs : observers) obs(state, rep, avg_);
  }
  return state;
}

extern template class Simulator<double>;
extern template class Simulator<float>;

}  // namespace floodopt
