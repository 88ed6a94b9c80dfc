#pragma once

// Real-space electron displacement along a quantum orbit,
//
//   s(t) = Re \int_{ti}^{t} (ps + A(t')) dt',
//
// taken along the contour from ti straight down to Re(ti) and then along the
// real axis. The integrand is entire, so the closed form below is the value
// on that contour; s(Re ti) is the tunnel-exit offset.

#include <vector>

#include "hhg2d/error.hpp"
#include "hhg2d/saddle_solver.hpp"
#include "hhg2d/saddle_taxonomy.hpp"
#include "hhg2d/units_field.hpp"

namespace hhg2d {

struct OrbitSample {
  double t;
  double sx;
  double sy;
};

struct Orbit {
  OrbitLabel label;
  std::vector<OrbitSample> samples;
};

// Complex displacement \int_{ti}^{t} (ps + A) for any complex t.
inline Vec2c complex_displacement(const FieldParams& p, const SaddlePoint& sp, ComplexTime t) {
  return sp.ps * (t - sp.ti) + apot_integral(p, sp.ti, t);
}

// n_samples points at real times evenly spaced over [Re ti, Re tr].
inline Orbit displacement(const FieldParams& p, const SaddlePoint& sp, int n_samples,
                          const OrbitLabel& label = {}) {
  if (n_samples < 16) throw DomainError("orbit needs at least 16 samples");
  Orbit orbit;
  orbit.label = label;
  orbit.samples.reserve(static_cast<std::size_t>(n_samples));
  const double t0 = sp.ti.real();
  const double t1 = sp.tr.real();
  for (int k = 0; k < n_samples; ++k) {
    const double t = k == n_samples - 1 ? t1 : t0 + (t1 - t0) * k / (n_samples - 1);
    const Vec2 s = complex_displacement(p, sp, t).real();
    orbit.samples.push_back({t, s.x, s.y});
  }
  return orbit;
}

}  // namespace hhg2d
