#pragma once

#include "floodopt/core.hpp"
#include "floodopt/geometry.hpp"
#include "floodopt/solver.hpp"

#include <algorithm>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace floodopt {

enum class FaceAxis { X, Y };

/// One cell face of a gauge section. X faces index the (nx+1) x ny face array,
/// Y faces the nx x (ny+1) one (same layout as FaceFluxes).
struct GaugeFace {
  FaceAxis axis = FaceAxis::X;
  Index i = 0;
  Index j = 0;
  Point normal = Point::Zero();  // axis-aligned, toward the positive side
  double dl = 0.0;               // face length, m
};

/// Staircase of faces separating the cells left of A->B from those right of
/// it, ordered from A to B.
struct GaugeLine {
  Point a = Point::Zero();
  Point b = Point::Zero();
  Side positive_side = Side::Left;
  std::vector<GaugeFace> faces;

  /// Sum of dl * normal; equals |AB| times the section normal up to one cell.
  Point weighted_normal() const;
};

GaugeLine rasterize_gauge(const SimGrid& grid, const Point& a, const Point& b, Side positive_side);
GaugeLine rasterize_gauge(const SimGrid& grid, const GaugeSection& section);

/// Discharge from cell means: each face takes the average of its two cells'
/// H, u, v, dry cells (h <= h_dry) contributing zero. Boundary faces use their
/// single interior cell.
template <typename Scalar>
double instantaneous_discharge(const BasicFlowState<Scalar>& s, const GaugeLine& gl,
                               double h_dry = 1e-3) {
  const Index nx = s.nx(), ny = s.ny();
  auto cell = [&](Index i, Index j, double& h, double& u, double& v) {
    h = double(s.h(i, j));
    if (!(h > h_dry)) {
      h = u = v = 0.0;
      return;
    }
    u = double(s.hu(i, j)) / h;
    v = double(s.hv(i, j)) / h;
  };
  double q = 0.0;
  for (const GaugeFace& f : gl.faces) {
    Index i0 = f.i, j0 = f.j, i1 = f.i, j1 = f.j;
    if (f.axis == FaceAxis::X) i0 = f.i - 1;
    else j0 = f.j - 1;
    double h = 0, u = 0, v = 0, n = 0;
    for (auto [i, j] : {std::pair{i0, j0}, std::pair{i1, j1}}) {
      if (i < 0 || j < 0 || i >= nx || j >= ny) continue;
      double hc, uc, vc;
      cell(i, j, hc, uc, vc);
      h += hc;
      u += uc;
      v += vc;
      n += 1.0;
    }
    if (n == 0.0) continue;
    h /= n;
    u /= n;
    v /= n;
    q += h * (u * f.normal.x() + v * f.normal.y()) * f.dl;
  }
  return q;
}

/// Discharge from numerical face mass fluxes (e.g. Simulator::last_fluxes()).
template <typename Scalar>
double flux_discharge(const FaceFluxes<Scalar>& F, const GaugeLine& gl) {
  double q = 0.0;
  for (const GaugeFace& f : gl.faces) {
    const double m = f.axis == FaceAxis::X ? double(F.x_mass(f.i, f.j)) : double(F.y_mass(f.i, f.j));
    q += m * (f.normal.x() + f.normal.y()) * f.dl;
  }
  return q;
}

struct FloodWindow {
  double t_qs = 0.0;
  double t_qe = 0.0;
  double overlap(double t0, double t1) const {
    return std::max(0.0, std::min(t1, t_qe) - std::max(t0, t_qs));
  }
};

struct GaugeSample {
  double t = 0.0;   // end of the step, s
  double dt = 0.0;  // s
  double q = 0.0;   // m^3/s over the step
  double cumulative = 0.0;  // m^3 inside the window so far
};

class GaugeRecord {
 public:
  GaugeRecord() = default;
  explicit GaugeRecord(FloodWindow window) : window_(window) {}

  /// Adds a step [t_end - dt, t_end] carrying discharge q; only the part of
  /// the step inside the window counts toward the volume.
  void accumulate(double q, double t_end, double dt);

  const FloodWindow& window() const { return window_; }
  double volume() const { return volume_; }
  const std::vector<GaugeSample>& samples() const { return samples_; }

  /// Columns t_s, q_m3s, cumulative_m3.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;

 private:
  FloodWindow window_;
  double volume_ = 0.0;
  std::vector<GaugeSample> samples_;
};

enum class DischargeMode {
  FaceFlux,  // solver's step-averaged mass flux; volume-consistent
  CellMean,  // cell-mean stencil at the start of each step
};

/// Observer feeding a record. In CellMean mode `initial` supplies the state at
/// the start of the first step.
template <typename Scalar>
StepObserver<Scalar> gauge_observer(const GaugeLine& gl, GaugeRecord& record, DischargeMode mode,
                                    const BasicFlowState<Scalar>& initial, double h_dry = 1e-3) {
  if (mode == DischargeMode::FaceFlux)
    return [&gl, &record](const BasicFlowState<Scalar>& s, const StepReport& rep,
                          const FaceFluxes<Scalar>& F) {
      record.accumulate(flux_discharge(F, gl), s.t, rep.dt_used);
    };
  auto left = std::make_shared<double>(instantaneous_discharge(initial, gl, h_dry));
  return [&gl, &record, left, h_dry](const BasicFlowState<Scalar>& s, const StepReport& rep,
                                     const FaceFluxes<Scalar>&) {
    record.accumulate(*left, s.t, rep.dt_used);
    *left = instantaneous_discharge(s, gl, h_dry);
  };
}

}  // namespace floodopt
