#pragma once

// Direct evaluation of the two-time dipole integral on a real grid, used to
// check the saddle-point pipeline.
//
// The time-domain dipole at recombination time tr is
//
//   d(tr) = \int_0^{tau_max} d(ps + A(tr)) Upsilon (2pi/(i(tau + i eps)))^{3/2}
//                            exp(i S0(tr, tau)) dtau,
//
// with S0 the action without its q w tr term, and the harmonic dipole is its
// projection sum_k d(tr_k) exp(i q w tr_k) dt over whole cycles, divided by
// the number of cycles. The tau grid uses cell midpoints.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "hhg2d/dipole_engine.hpp"
#include "hhg2d/error.hpp"
#include "hhg2d/parallel.hpp"
#include "hhg2d/units_field.hpp"

namespace hhg2d {

struct OracleConfig {
  int tr_window = 1;            // cycles of tr integrated
  double tau_max = 1.5;         // periods
  int steps_per_cycle = 1000;   // dt = T / steps_per_cycle
  double eps = 1e-2;            // a.u.
  DmeForm dme_form = DmeForm::kappa;
  int jobs = 0;

  double dt(const FieldParams& p) const { return p.period() / steps_per_cycle; }

  void validate() const {
    if (tr_window < 1) throw DomainError("oracle tr window must be at least one cycle");
    if (steps_per_cycle < 400) throw DomainError("oracle step must not exceed T/400");
    if (!(tau_max >= 1.2)) throw DomainError("oracle tau_max must be at least 1.2 periods");
    if (!(eps > 0.0)) throw DomainError("oracle regularisation eps must be positive");
  }
};

// Excursion band [min, max) in atomic units. With taper = 0 a cell belongs to
// the band when its midpoint does. A positive taper replaces each edge by a
// sin^2 ramp of that full width centred on it, which removes the large
// endpoint term of an abrupt cut; bands sharing an edge still add up exactly.
// An edge at or below zero is never ramped, nor is an upper edge at the
// integration limit (see windowed_dipole).
struct TauBand {
  double min;
  double max;
  double taper = 0.0;

  double weight(double tau) const {
    auto step = [&](double edge) {
      if (edge <= 0.0) return tau >= edge ? 1.0 : 0.0;
      if (taper <= 0.0) return tau >= edge ? 1.0 : 0.0;
      const double x = (tau - edge) / taper + 0.5;
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      const double s = std::sin(0.5 * std::numbers::pi * x);
      return s * s;
    };
    return step(min) - step(max);
  }
};

struct OracleRow {
  double q;
  cplx Dx;
  cplx Dy;
  Intensity I;
};

namespace detail {

// Time-domain dipole on the tr grid, restricted to `band` when given.
inline std::vector<Vec2c> oracle_time_dipole(const FieldParams& p, const TargetParams& tgt,
                                             const OracleConfig& cfg,
                                             std::optional<TauBand> band) {
  cfg.validate();
  const double dt = cfg.dt(p);
  const int n_tr = cfg.tr_window * cfg.steps_per_cycle;
  const int n_tau = static_cast<int>(std::lround(cfg.tau_max * cfg.steps_per_cycle));
  const double Ip = tgt.Ip;
  const double kappa = std::sqrt(2.0 * Ip);
  const double b = cfg.dme_form == DmeForm::kappa ? kappa : 2.0 * Ip;
  const cplx dme_scale = cplx(0.0, std::numbers::sqrt2) / (std::numbers::pi * kappa);
  const double upsilon = ionisation_amplitude(Ip);

  std::vector<double> tau(static_cast<std::size_t>(n_tau));
  std::vector<cplx> spread(static_cast<std::size_t>(n_tau));
  std::vector<double> in_band(static_cast<std::size_t>(n_tau), 1.0);
  for (int m = 0; m < n_tau; ++m) {
    const double t = (m + 0.5) * dt;
    tau[static_cast<std::size_t>(m)] = t;
    spread[static_cast<std::size_t>(m)] =
        std::pow(kTwoPi / (cplx(0.0, 1.0) * cplx(t, cfg.eps)), 1.5) * upsilon * dt;
    if (band) in_band[static_cast<std::size_t>(m)] = band->weight(t);
  }

  // Antiderivatives at the ionisation times tr_k - tau_m = (k - m - 1/2) dt,
  // indexed by j = k - m + n_tau - 1.
  const int n_ion = n_tr + n_tau;
  std::vector<Vec2> g_ion(static_cast<std::size_t>(n_ion));
  std::vector<double> q_ion(static_cast<std::size_t>(n_ion));
  for (int j = 0; j < n_ion; ++j) {
    const double t = (j - n_tau + 0.5) * dt;
    g_ion[static_cast<std::size_t>(j)] = apot_antiderivative(p, t).real();
    q_ion[static_cast<std::size_t>(j)] = apot_sq_integral(p, 0.0, t).real();
  }

  std::vector<Vec2c> d(static_cast<std::size_t>(n_tr));
  parallel_for(static_cast<std::size_t>(n_tr), cfg.jobs, [&](std::size_t ks) {
    const int k = static_cast<int>(ks);
    const double tr = k * dt;
    const Vec2 g_rec = apot_antiderivative(p, tr).real();
    const double q_rec = apot_sq_integral(p, 0.0, tr).real();
    const Vec2 a_rec = apot(p, tr).real();
    cplx sx{}, sy{};
    for (int m = 0; m < n_tau; ++m) {
      if (in_band[static_cast<std::size_t>(m)] == 0.0) continue;
      const auto j = static_cast<std::size_t>(k - m + n_tau - 1);
      const double t = tau[static_cast<std::size_t>(m)];
      const double px = -(g_rec.x - g_ion[j].x) / t;
      const double py = -(g_rec.y - g_ion[j].y) / t;
      const double s0 = -Ip * t - 0.5 * ((q_rec - q_ion[j]) - (px * px + py * py) * t);
      const double kx = px + a_rec.x;
      const double ky = py + a_rec.y;
      const double den = kx * kx + ky * ky + b;
      const cplx w = in_band[static_cast<std::size_t>(m)] * spread[static_cast<std::size_t>(m)] *
                     std::polar(1.0 / (den * den), s0);
      sx += w * kx;
      sy += w * ky;
    }
    d[ks] = {dme_scale * sx, dme_scale * sy};
  });
  return d;
}

inline Vec2c project(const FieldParams& p, const OracleConfig& cfg, std::span<const Vec2c> d,
                     double q) {
  const double dt = cfg.dt(p);
  if (q * p.omega() * dt > 0.5) {
    throw ResolutionError("oracle step too coarse for harmonic " + std::to_string(q));
  }
  Vec2c acc{};
  for (std::size_t k = 0; k < d.size(); ++k) {
    const cplx ph = std::polar(dt, q * p.omega() * static_cast<double>(k) * dt);
    acc += d[k] * ph;
  }
  return acc / cplx(static_cast<double>(cfg.tr_window));
}

}  // namespace detail

inline std::vector<OracleRow> direct_dipole(const FieldParams& p, const TargetParams& tgt,
                                            const OracleConfig& cfg,
                                            std::span<const double> q_values) {
  cfg.validate();
  for (double q : q_values) {
    if (q * p.omega() * cfg.dt(p) > 0.5) {
      throw ResolutionError("oracle step too coarse for harmonic " + std::to_string(q));
    }
  }
  const auto d = detail::oracle_time_dipole(p, tgt, cfg, std::nullopt);
  std::vector<OracleRow> rows;
  for (double q : q_values) {
    const Vec2c D = detail::project(p, cfg, d, q);
    rows.push_back({q, D.x, D.y, intensity(q, p.omega(), D.x, D.y)});
  }
  return rows;
}

inline Vec2c windowed_dipole(const FieldParams& p, const TargetParams& tgt,
                             const OracleConfig& cfg, double q, TauBand band) {
  cfg.validate();
  const double tau_max = cfg.tau_max * p.period();
  if (!(band.min >= 0.0 && band.min <= band.max && band.max <= tau_max * (1.0 + 1e-12))) {
    throw DomainError("tau band must satisfy 0 <= min <= max <= tau_max");
  }
  if (band.min == band.max) return {};
  // An upper edge at the integration limit is not ramped.
  if (band.max >= tau_max * (1.0 - 1e-12)) band.max = std::numeric_limits<double>::infinity();
  const auto d = detail::oracle_time_dipole(p, tgt, cfg, band);
  return detail::project(p, cfg, d, q);
}

}  // namespace hhg2d
