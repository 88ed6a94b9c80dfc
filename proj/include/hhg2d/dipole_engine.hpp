#pragma once

// Saddle-point evaluation of the harmonic dipole
//
//   D_s = 2pi / sqrt(-det S'') * d(ps + A(tr)) * Upsilon * (2pi/(i tau))^{3/2} * exp(iS)
//
// summed over the relevant saddles of one period, and the harmonic intensity
// I = (q w)^4 / (2 pi c^3) |D|^2.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hhg2d/error.hpp"
#include "hhg2d/saddle_solver.hpp"
#include "hhg2d/saddle_taxonomy.hpp"
#include "hhg2d/units_field.hpp"

namespace hhg2d {

// `kappa` keeps the denominator (k^2 + sqrt(2Ip))^2; `hydrogenic` uses the
// standard (k^2 + 2Ip)^2.
enum class DmeForm { kappa, hydrogenic };

inline const char* to_string(DmeForm f) { return f == DmeForm::kappa ? "kappa" : "hydrogenic"; }

inline DmeForm parse_dme_form(const std::string& s) {
  if (s == "kappa") return DmeForm::kappa;
  if (s == "hydrogenic") return DmeForm::hydrogenic;
  throw DomainError("unknown dme form '" + s + "' (expected kappa or hydrogenic)");
}

// Recombination matrix element d(k) = i sqrt(2) k / (pi sqrt(2Ip) (k^2 + b)^2).
inline Vec2c dme(const Vec2c& k, double Ip, DmeForm form = DmeForm::kappa) {
  const double kappa = std::sqrt(2.0 * Ip);
  const double b = form == DmeForm::kappa ? kappa : 2.0 * Ip;
  const cplx base = dot(k, k) + b;
  if (std::abs(base) <= 1e-12) {
    throw PoleError("dipole matrix element evaluated at its pole");
  }
  const cplx scale = cplx(0.0, std::numbers::sqrt2) / (std::numbers::pi * kappa * base * base);
  return k * scale;
}

// Ionisation amplitude 1/(2 pi sqrt(Ip)).
inline double ionisation_amplitude(double Ip) { return 1.0 / (kTwoPi * std::sqrt(Ip)); }

struct DipoleContribution {
  OrbitLabel label;
  SaddlePoint saddle;
  Vec2c d_rec;
  cplx ion_amp;
  cplx spread;       // (2pi/(i tau))^{3/2}
  cplx hess_factor;  // 2pi / sqrt(-det S'')
  cplx sqrt_neg_det;
  cplx phase;        // exp(iS)
  Vec2c total;
};

struct ContributionOptions {
  DmeForm dme_form = DmeForm::kappa;
};

// Wavepacket spreading factor. For Re(tau) > 0 the base 2pi/(i tau) stays in
// the lower half plane, so the principal power is continuous in tau.
inline cplx spreading_factor(cplx tau) {
  return std::pow(kTwoPi / (cplx(0.0, 1.0) * tau), 1.5);
}

inline DipoleContribution contribution(const FieldParams& p, const TargetParams& tgt,
                                       const SaddlePoint& sp,
                                       std::optional<cplx> sqrt_reference = std::nullopt,
                                       const ContributionOptions& opt = {}) {
  if (sp.hessdet == cplx{}) {
    throw CoalescenceError("det S'' vanishes: saddle pair coalesced");
  }
  DipoleContribution c;
  c.saddle = sp;
  const cplx tau = sp.tr - sp.ti;
  try {
    c.d_rec = dme(sp.ps + apot(p, sp.tr), tgt.Ip, opt.dme_form);
  } catch (const PoleError&) {
    throw PoleError("dipole matrix element pole at saddle ti=(" + std::to_string(sp.ti.real()) +
                    "," + std::to_string(sp.ti.imag()) + ") tr=(" + std::to_string(sp.tr.real()) +
                    "," + std::to_string(sp.tr.imag()) + ")");
  }
  c.ion_amp = ionisation_amplitude(tgt.Ip);
  c.spread = spreading_factor(tau);
  c.sqrt_neg_det = sqrt_neg_hessdet(sp, sqrt_reference);
  c.hess_factor = kTwoPi / c.sqrt_neg_det;
  c.phase = std::exp(cplx(0.0, 1.0) * sp.action);
  const cplx scalar = c.hess_factor * c.ion_amp * c.spread * c.phase;
  c.total = c.d_rec * scalar;
  return c;
}

inline DipoleContribution contribution(const FieldParams& p, const TargetParams& tgt,
                                       const LabelledSaddle& ls,
                                       const ContributionOptions& opt = {}) {
  auto c = contribution(p, tgt, ls.saddle, ls.sqrt_reference, opt);
  c.label = ls.label;
  return c;
}

// Relative mismatch between `total` and the product of its factors.
inline double factorization_error(const DipoleContribution& c) {
  const Vec2c prod = c.d_rec * (c.hess_factor * c.ion_amp * c.spread * c.phase);
  const double scale = std::max(c.total.norm(), 1e-300);
  return (prod - c.total).norm() / scale;
}

struct HarmonicDipole {
  double q = 0.0;
  cplx Dx{};
  cplx Dy{};
  std::vector<DipoleContribution> contributions;  // relevant saddles only
  bool below_threshold = false;

  Vec2c vec() const { return {Dx, Dy}; }
};

inline HarmonicDipole harmonic_dipole(const FieldParams& p, const TargetParams& tgt, double q,
                                      std::span<const LabelledSaddle> saddles,
                                      const ContributionOptions& opt = {}) {
  HarmonicDipole hd;
  hd.q = q;
  for (const auto& ls : saddles) {
    if (!ls.label.relevant) continue;
    hd.contributions.push_back(contribution(p, tgt, ls, opt));
    hd.Dx += hd.contributions.back().total.x;
    hd.Dy += hd.contributions.back().total.y;
  }
  hd.below_threshold = hd.contributions.empty();
  return hd;
}

struct Intensity {
  double Ix = 0.0;
  double Iy = 0.0;
  double Itotal = 0.0;
};

inline Intensity intensity(double q, double omega, cplx Dx, cplx Dy) {
  const double qw = q * omega;
  const double k = qw * qw * qw * qw / (kTwoPi * kSpeedOfLight * kSpeedOfLight * kSpeedOfLight);
  Intensity I;
  I.Ix = k * std::norm(Dx);
  I.Iy = k * std::norm(Dy);
  I.Itotal = I.Ix + I.Iy;
  return I;
}

inline Intensity intensity(const HarmonicDipole& hd, double omega) {
  return intensity(hd.q, omega, hd.Dx, hd.Dy);
}

struct SpectrumRow {
  HarmonicDipole dipole;
  Intensity I;
  int n_saddles = 0;  // relevant saddles summed
  std::vector<std::string> flags;
};

struct HarmonicSpectrum {
  std::vector<SpectrumRow> rows;
  std::vector<AuditEntry> audit;
  RelevanceHistory history;
  std::vector<std::string> warnings;
};

struct SpectrumOptions {
  SweepOptions sweep{};
  ContributionOptions contribution{};
};

inline std::string join_flags(const std::vector<std::string>& f) {
  std::string s;
  for (const auto& x : f) {
    if (!s.empty()) s += ';';
    s += x;
  }
  return s;
}

// Per-order failures are reported as row flags; the scan itself never aborts.
inline HarmonicSpectrum spectrum(const FieldParams& p, const TargetParams& tgt,
                                 std::span<const double> q_values,
                                 const SpectrumOptions& opt = {}) {
  HarmonicSpectrum spec;
  OrderSweep sweep;
  try {
    sweep = sweep_orders(p, tgt, q_values, opt.sweep);
  } catch (const Error& e) {
    spec.warnings.push_back(std::string("order sweep failed: ") + e.what());
    for (double q : q_values) {
      SpectrumRow row;
      row.dipole.q = q;
      row.flags.emplace_back("sweep_failed");
      spec.rows.push_back(row);
    }
    return spec;
  }
  spec.history = sweep.history;
  spec.warnings = sweep.warnings;
  for (const auto& order : sweep.orders) {
    SpectrumRow row;
    row.dipole.q = order.q;
    if (order.below_threshold) {
      row.dipole.below_threshold = true;
      row.flags.emplace_back("below_threshold");
      spec.rows.push_back(row);
      continue;
    }
    try {
      row.dipole = harmonic_dipole(p, tgt, order.q, order.saddles, opt.contribution);
      row.I = intensity(row.dipole, p.omega());
      row.n_saddles = static_cast<int>(row.dipole.contributions.size());
      if (row.dipole.below_threshold) row.flags.emplace_back("no_relevant_saddles");
      for (const auto& c : row.dipole.contributions) {
        if (c.saddle.near_coalescence) {
          row.flags.emplace_back("near_coalescence");
          break;
        }
      }
    } catch (const Error& e) {
      row.flags.push_back(std::string("error:") + e.what());
    }
    for (const auto& w : order.warnings) row.flags.push_back(w);
    spec.audit.insert(spec.audit.end(), order.audit.begin(), order.audit.end());
    spec.rows.push_back(std::move(row));
  }
  return spec;
}

}  // namespace hhg2d
