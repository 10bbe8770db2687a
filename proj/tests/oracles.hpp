#pragma once

// Independent reference solutions used only by the tests.

#include <cmath>
#include <functional>

namespace oracle {

/// Exact 1D dam break on a flat frictionless bed, still water on both sides
/// (Stoker; Ritter when hr == 0). Returns the depth at x (dam at x = 0).
struct DamBreak {
  double g, hl, hr;
  double cl = 0, cm = 0, hm = 0, um = 0, shock = 0;

  DamBreak(double g_, double hl_, double hr_) : g(g_), hl(hl_), hr(hr_) {
    cl = std::sqrt(g * hl);
    if (hr <= 0) {
      hm = 0;
      return;
    }
    // 2 (cl - cm) = (hm - hr) sqrt(g (hm + hr) / (2 hm hr)), bisection on hm.
    auto f = [&](double h) {
      return 2.0 * (cl - std::sqrt(g * h)) - (h - hr) * std::sqrt(g * (h + hr) / (2.0 * h * hr));
    };
    double lo = hr, hi = hl;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > 0 ? lo : hi) = mid;
    }
    hm = 0.5 * (lo + hi);
    cm = std::sqrt(g * hm);
    um = 2.0 * (cl - cm);
    shock = hm * um / (hm - hr);
  }

  double depth(double x, double t) const {
    const double xi = x / t;
    if (xi <= -cl) return hl;
    if (hr <= 0) {
      if (xi >= 2.0 * cl) return 0.0;
      return (2.0 * cl - xi) * (2.0 * cl - xi) / (9.0 * g);
    }
    if (xi <= um - cm) return (2.0 * cl - xi) * (2.0 * cl - xi) / (9.0 * g);
    if (xi <= shock) return hm;
    return hr;
  }
};

/// Manning normal depth for unit discharge q on slope s: (n q / sqrt(s))^(3/5).
inline double normal_depth(double n, double q, double slope) {
  return std::pow(n * q / std::sqrt(slope), 0.6);
}

/// Forward difference along one axis, evaluated from the definition.
inline double forward_difference(const std::function<double(double)>& f, double x, double d) {
  return (f(x + d) - f(x)) / d;
}

}  // namespace oracle
