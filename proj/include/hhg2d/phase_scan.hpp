#pragma once

// Relative-phase scans, the two-term Fourier modulation model
//
//   f(phi) = a0 + a1 cos(phi) + b1 sin(phi) + a2 cos(2phi) + b2 sin(2phi)
//            [+ a4 cos(4phi) + b4 sin(4phi) in the extended model],
//
// the alignment shift between a model and a measured series, and the
// monomodal/bimodal classification of a modulation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hhg2d/dipole_engine.hpp"
#include "hhg2d/error.hpp"
#include "hhg2d/parallel.hpp"
#include "hhg2d/polarization.hpp"
#include "hhg2d/saddle_solver.hpp"
#include "hhg2d/saddle_taxonomy.hpp"
#include "hhg2d/units_field.hpp"

namespace hhg2d {

inline std::vector<double> uniform_phase_grid(int n) {
  if (n < 1) throw DomainError("phase grid needs at least one point");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = kTwoPi * k / n;
  return g;
}

// ---------------------------------------------------------------------------
// Scan

struct PhaseSeries {
  double q = 0.0;
  std::vector<double> Ix, Iy, Itotal;
  std::vector<bool> valid;  // false marks a gap
};

// Signed major/minor axes of one orbit along the scan.
struct OrbitAxesSeries {
  double q = 0.0;
  int orbit_id = 0;
  int half_cycle = 0;
  std::string family;
  std::vector<std::optional<EllipseDecomposition>> axes;
};

struct PhaseScan {
  std::vector<double> phis;
  std::vector<double> q_values;
  std::vector<PhaseSeries> series;         // one per q
  std::vector<OrbitAxesSeries> orbits;
  std::vector<std::vector<SpectrumRow>> cells;  // [phi][q]
  std::vector<std::string> gaps;
  std::vector<std::string> warnings;

  const PhaseSeries& at(double q) const {
    for (const auto& s : series) {
      if (s.q == q) return s;
    }
    throw DomainError("order not part of the scan");
  }
};

struct ScanOptions {
  SpectrumOptions spectrum{};
  int jobs = 0;
  bool orbit_axes = true;
};

namespace detail {

struct PhaseOrbit {
  int id;
  int half_cycle;
  SaddlePoint initial;
  SaddlePoint saddle;  // current point of the branch, relevant or not
  bool alive = true;
};

// True when b is a shifted by half a period (modulo whole periods).
inline bool half_period_partners(const SaddlePoint& a, const SaddlePoint& b, double T) {
  for (int k = -2; k <= 2; ++k) {
    const double off = 0.5 * T + k * T;
    if (std::max(std::abs(b.ti - a.ti - off), std::abs(b.tr - a.tr - off)) < 1e-6) return true;
  }
  return false;
}

// Orbit identity across phi: the relevant saddles of the first phase are
// continued step by step in phi and matched to the saddles found afresh at
// every phase.
inline void track_orbits_in_phi(const FieldParams& p, const TargetParams& tgt, PhaseScan& scan,
                                std::size_t qi) {
  const double q = scan.q_values[qi];
  const std::size_t n_phi = scan.phis.size();
  const double T = p.period();
  std::vector<PhaseOrbit> orbits;
  std::vector<OrbitAxesSeries> out;

  const auto& first = scan.cells[0][qi].dipole.contributions;
  for (std::size_t k = 0; k < first.size(); ++k) {
    const auto& c = first[k];
    orbits.push_back({static_cast<int>(k), c.label.half_cycle, c.saddle, c.saddle});
    OrbitAxesSeries s;
    s.q = q;
    s.orbit_id = static_cast<int>(k);
    s.half_cycle = c.label.half_cycle;
    s.family = c.label.family_name();
    s.axes.assign(n_phi, std::nullopt);
    out.push_back(std::move(s));
  }

  for (std::size_t j = 0; j < n_phi; ++j) {
    if (j > 0) {
      std::vector<TrackedSaddle> from;
      for (const auto& o : orbits) {
        if (o.alive) from.push_back({o.id, o.saddle});
      }
      try {
        const auto res = continue_in(p.with_phi(scan.phis[j - 1]), tgt, q,
                                     ContinuationParameter::phi, from, scan.phis[j]);
        for (const auto& t : res.saddles) {
          orbits[static_cast<std::size_t>(t.branch_id)].saddle = t.saddle;
        }
      } catch (const BranchLostError& e) {
        orbits[static_cast<std::size_t>(e.branch_id)].alive = false;
        scan.warnings.push_back("orbit " + std::to_string(e.branch_id) + " of q=" +
                                std::to_string(q) + " lost in phi continuation near phi=" +
                                std::to_string(e.last_value));
      }
    }
    for (const auto& c : scan.cells[j][qi].dipole.contributions) {
      for (auto& o : orbits) {
        if (o.alive && saddle_distance(c.saddle, o.saddle, T) < 1e-6) {
          out[static_cast<std::size_t>(o.id)].axes[j] = decompose(c.total);
          o.saddle = c.saddle;
          break;
        }
      }
    }
  }

  // Sign convention: continuity for the first half-cycle, symmetry for the
  // partner orbit.
  for (auto& s : out) {
    if (s.half_cycle == 0) s.axes = signed_series(s.axes);
  }
  const bool integer_q = std::floor(q) == q;
  for (auto& s : out) {
    if (s.half_cycle != 1) continue;
    const auto& self = orbits[static_cast<std::size_t>(s.orbit_id)];
    const OrbitAxesSeries* partner = nullptr;
    for (const auto& r : out) {
      if (r.half_cycle == 0 &&
          half_period_partners(orbits[static_cast<std::size_t>(r.orbit_id)].initial, self.initial, T)) {
        partner = &r;
        break;
      }
    }
    if (!partner || !integer_q) {
      s.axes = signed_series(s.axes);
      continue;
    }
    for (std::size_t j = 0; j < n_phi; ++j) {
      if (s.axes[j] && partner->axes[j]) {
        s.axes[j] = partner_signed(*s.axes[j], *partner->axes[j], static_cast<int>(q));
      }
    }
  }
  for (auto& s : out) scan.orbits.push_back(std::move(s));
}

}  // namespace detail

// Runs the full pipeline on an n_phi-point grid over [0, 2pi). Phases are
// independent and run in parallel; failed cells become gaps.
inline PhaseScan run_scan(const FieldParams& p, const TargetParams& tgt,
                          std::span<const double> q_values, int n_phi,
                          const ScanOptions& opt = {}) {
  if (n_phi < 32) throw DomainError("phase scan needs at least 32 phases");
  PhaseScan scan;
  scan.phis = uniform_phase_grid(n_phi);
  scan.q_values.assign(q_values.begin(), q_values.end());
  scan.cells.resize(scan.phis.size());
  std::vector<std::vector<std::string>> cell_warnings(scan.phis.size());

  parallel_for(scan.phis.size(), opt.jobs, [&](std::size_t j) {
    const auto pj = p.with_phi(scan.phis[j]);
    auto spec = spectrum(pj, tgt, q_values, opt.spectrum);
    scan.cells[j] = std::move(spec.rows);
    cell_warnings[j] = std::move(spec.warnings);
  });
  for (std::size_t j = 0; j < scan.phis.size(); ++j) {
    for (const auto& w : cell_warnings[j]) {
      scan.warnings.push_back("phi=" + std::to_string(scan.phis[j]) + ": " + w);
    }
  }

  for (std::size_t qi = 0; qi < scan.q_values.size(); ++qi) {
    PhaseSeries s;
    s.q = scan.q_values[qi];
    for (std::size_t j = 0; j < scan.phis.size(); ++j) {
      const auto& row = scan.cells[j][qi];
      bool ok = !row.dipole.below_threshold;
      for (const auto& f : row.flags) {
        if (f.rfind("error:", 0) == 0 || f == "sweep_failed") ok = false;
      }
      s.Ix.push_back(row.I.Ix);
      s.Iy.push_back(row.I.Iy);
      s.Itotal.push_back(row.I.Itotal);
      s.valid.push_back(ok);
      if (!ok) {
        scan.gaps.push_back("q=" + std::to_string(s.q) + " phi=" + std::to_string(scan.phis[j]) +
                            (row.flags.empty() ? std::string() : " " + join_flags(row.flags)));
      }
    }
    scan.series.push_back(std::move(s));
    if (opt.orbit_axes && !scan.cells.empty()) detail::track_orbits_in_phi(p, tgt, scan, qi);
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Fourier model

struct ModulationFit {
  double a0 = 0.0, a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;
  double a4 = 0.0, b4 = 0.0;  // extended model only
  bool extended = false;
  double tau = 0.0;
  double rms = 0.0;
  double peak_to_peak = 0.0;

  double operator()(double phi) const {
    double f = a0 + a1 * std::cos(phi) + b1 * std::sin(phi) + a2 * std::cos(2.0 * phi) +
               b2 * std::sin(2.0 * phi);
    if (extended) f += a4 * std::cos(4.0 * phi) + b4 * std::sin(4.0 * phi);
    return f;
  }
};

namespace detail {

inline void check_series(std::span<const double> series, std::span<const double> phis) {
  if (series.size() != phis.size()) throw DomainError("series and phase grid differ in length");
  for (double v : series) {
    if (!std::isfinite(v)) throw DomainError("series contains a non-finite value");
  }
}

// Least squares on cos/sin columns of the given multiples of phi, solved via
// column-scaled normal equations.
inline Eigen::VectorXd trig_least_squares(std::span<const double> series,
                                          std::span<const double> phis,
                                          const std::vector<int>& harmonics) {
  const auto n = static_cast<Eigen::Index>(series.size());
  Eigen::Index k = 1;
  for (int m : harmonics) k += m == 0 ? 0 : 2;
  if (n < k) throw IllConditionedError("fewer samples than model coefficients");
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = phis[static_cast<std::size_t>(i)];
    y(i) = series[static_cast<std::size_t>(i)];
    X(i, 0) = 1.0;
    Eigen::Index c = 1;
    for (int m : harmonics) {
      if (m == 0) continue;
      X(i, c++) = std::cos(m * phi);
      X(i, c++) = std::sin(m * phi);
    }
  }
  Eigen::VectorXd scale = X.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < k; ++c) {
    if (scale(c) == 0.0) throw IllConditionedError("model column vanishes on this grid");
  }
  const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd G = Xs.transpose() * Xs;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-10)) {
    throw IllConditionedError("normal equations are rank deficient on this phase grid");
  }
  const Eigen::VectorXd z = ldlt.solve(Xs.transpose() * y);
  return z.cwiseQuotient(scale);
}

inline double rms_of(const ModulationFit& f, std::span<const double> series,
                     std::span<const double> phis) {
  double s = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double r = f(phis[i]) - series[i];
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(series.size()));
}

}  // namespace detail

// Fits the two-term model (or the extended one). One period of the model's
// fundamental spans 2pi of phi. Needs at least 8 well-spread samples.
inline ModulationFit fourier_fit(std::span<const double> series, std::span<const double> phis,
                                 bool extended = false) {
  detail::check_series(series, phis);
  if (series.size() < 8) throw IllConditionedError("Fourier fit needs at least 8 samples");
  std::vector<int> harmonics{1, 2};
  if (extended) harmonics.push_back(4);
  const auto c = detail::trig_least_squares(series, phis, harmonics);
  ModulationFit f;
  f.a0 = c(0);
  f.a1 = c(1);
  f.b1 = c(2);
  f.a2 = c(3);
  f.b2 = c(4);
  if (extended) {
    f.a4 = c(5);
    f.b4 = c(6);
    f.extended = true;
  }
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  f.peak_to_peak = *hi - *lo;
  f.rms = detail::rms_of(f, series, phis);
  return f;
}

// Two-term fit, switching to the extended model when the residual rms
// exceeds `threshold` of the series' peak-to-peak.
inline ModulationFit fit_modulation(std::span<const double> series, std::span<const double> phis,
                                    double threshold = 0.05) {
  auto f = fourier_fit(series, phis, false);
  if (f.rms > threshold * f.peak_to_peak) f = fourier_fit(series, phis, true);
  return f;
}

struct ShiftResult {
  double tau = 0.0;
  double objective = 0.0;
  bool degenerate = false;
  std::string warning;
};

// Shift tau in [0, 2pi) minimising sum (f(phi - tau) - measured)^2. Equal
// minima (a pi-periodic model has two) resolve to the smaller tau.
inline ShiftResult align_shift(const ModulationFit& reference, std::span<const double> measured,
                               std::span<const double> phis) {
  detail::check_series(measured, phis);
  if (measured.empty()) throw DomainError("empty series");
  auto objective = [&](double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
      const double r = reference(phis[i] - tau) - measured[i];
      s += r * r;
    }
    return s;
  };
  ShiftResult out;
  const auto [lo, hi] = std::minmax_element(measured.begin(), measured.end());
  const double mag = std::max(std::abs(*lo), std::abs(*hi));
  const double model_amp = std::hypot(reference.a1, reference.b1) +
                           std::hypot(reference.a2, reference.b2) +
                           std::hypot(reference.a4, reference.b4);
  if (*hi - *lo <= 1e-12 * std::max(mag, 1e-300) || model_amp <= 1e-12 * std::abs(reference.a0)) {
    out.degenerate = true;
    out.warning = "flat objective: shift is undetermined, tau set to 0";
    out.objective = objective(0.0);
    return out;
  }

  const double step = 1e-3;
  const int n = static_cast<int>(std::ceil(kTwoPi / step));
  std::vector<double> values(static_cast<std::size_t>(n));
  double best = std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    values[static_cast<std::size_t>(k)] = objective(k * step);
    best = std::min(best, values[static_cast<std::size_t>(k)]);
    worst = std::max(worst, values[static_cast<std::size_t>(k)]);
  }
  if (worst - best <= 1e-12 * std::max(worst, 1e-300)) {
    out.degenerate = true;
    out.warning = "flat objective: shift is undetermined, tau set to 0";
    out.objective = values[0];
    return out;
  }
  const double tie = best + 1e-9 * (worst - best);
  int k_best = 0;
  while (values[static_cast<std::size_t>(k_best)] > tie) ++k_best;

  // Golden-section refinement on the bracketing grid cells.
  double a = (k_best - 1) * step;
  double b = (k_best + 1) * step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = objective(d);
    }
  }
  double tau = 0.5 * (a + b);
  if (objective(tau) > values[static_cast<std::size_t>(k_best)]) tau = k_best * step;
  out.tau = wrap_phase(tau);
  if (out.tau > kTwoPi - 1e-9) out.tau = 0.0;
  out.objective = objective(out.tau);
  return out;
}

enum class Modality { monomodal, bimodal };

inline const char* to_string(Modality m) { return m == Modality::monomodal ? "monomodal" : "bimodal"; }

struct ModalityResult {
  Modality modality;
  int maxima_per_pi;
};

// Counts strict local maxima per pi of the series smoothed to the harmonics
// 2 and 4 of phi, the resolution of the extended modulation model. Refuses
// series that are constant or not pi-periodic (odd harmonics above
// `periodicity_tolerance` of the even ones).
inline ModalityResult classify_modality(std::span<const double> series,
                                        std::span<const double> phis,
                                        double periodicity_tolerance = 1e-3) {
  detail::check_series(series, phis);
  if (series.size() < 9) throw ClassificationRefused("too few samples to classify");
  const std::vector<int> harmonics{1, 2, 3, 4};
  Eigen::VectorXd c;
  try {
    c = detail::trig_least_squares(series, phis, harmonics);
  } catch (const IllConditionedError& e) {
    throw ClassificationRefused(std::string("cannot smooth series: ") + e.what());
  }
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t h = 0; h < harmonics.size(); ++h) {
    const auto i = static_cast<Eigen::Index>(1 + 2 * h);
    const double e = c(i) * c(i) + c(i + 1) * c(i + 1);
    (harmonics[h] % 2 ? odd : even) += e;
  }
  const double level = std::max(std::abs(c(0)), 1e-300);
  if (std::sqrt(even) <= 1e-10 * level && std::sqrt(odd) <= 1e-10 * level) {
    throw ClassificationRefused("constant series has no modulation");
  }
  if (std::sqrt(odd) > periodicity_tolerance * std::sqrt(even)) {
    throw ClassificationRefused("series is not pi-periodic");
  }

  const int n = 4096;
  std::vector<double> v(static_cast<std::size_t>(n));
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -vmin;
  for (int k = 0; k < n; ++k) {
    const double phi = std::numbers::pi * k / n;
    double f = c(0);
    for (std::size_t h = 0; h < harmonics.size(); ++h) {
      if (harmonics[h] % 2) continue;
      const auto i = static_cast<Eigen::Index>(1 + 2 * h);
      f += c(i) * std::cos(harmonics[h] * phi) + c(i + 1) * std::sin(harmonics[h] * phi);
    }
    v[static_cast<std::size_t>(k)] = f;
    vmin = std::min(vmin, f);
    vmax = std::max(vmax, f);
  }
  const double floor_tol = 1e-9 * (vmax - vmin);
  // A maximum is a rise followed by a fall; steps within the tolerance carry
  // no sign, so a crest shared by two samples still counts once.
  std::vector<int> slope;
  for (int k = 0; k < n; ++k) {
    const double d = v[static_cast<std::size_t>((k + 1) % n)] - v[static_cast<std::size_t>(k)];
    if (d > floor_tol) slope.push_back(1);
    if (d < -floor_tol) slope.push_back(-1);
  }
  int maxima = 0;
  for (std::size_t k = 0; k < slope.size(); ++k) {
    if (slope[k] == 1 && slope[(k + 1) % slope.size()] == -1) ++maxima;
  }
  return {maxima <= 1 ? Modality::monomodal : Modality::bimodal, maxima};
}

}  // namespace hhg2d
