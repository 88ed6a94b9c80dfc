#pragma once

// Orthogonally polarised omega/2omega driving field in atomic units.
//
//   E(t) = (E1 sin(wt), E2 sin(2wt + phi))
//   A(t) = (E1/w cos(wt), E2/(2w) cos(2wt + phi)),   E = -dA/dt
//
// Every function accepts complex time; the field is entire in t.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "hhg2d/error.hpp"

namespace hhg2d {

using cplx = std::complex<double>;
using ComplexTime = cplx;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 137.035999;  // a.u.
inline constexpr double kHartreeEv = 27.211386245988;
// omega[a.u.] = kWavelengthToOmega / lambda[nm]
inline constexpr double kWavelengthToOmega = 45.5633;
// E[a.u.] = sqrt(I[W/cm^2] / kAtomicIntensity)
inline constexpr double kAtomicIntensity = 3.50945e16;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const { return std::hypot(x, y); }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
};

// Complex 2-vector. dot() is the unconjugated bilinear product used by the
// saddle equations; norm() is the hermitian length.
struct Vec2c {
  cplx x{};
  cplx y{};

  Vec2c& operator+=(const Vec2c& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2c& operator-=(const Vec2c& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend Vec2c operator+(Vec2c a, const Vec2c& b) { return a += b; }
  friend Vec2c operator-(Vec2c a, const Vec2c& b) { return a -= b; }
  friend Vec2c operator-(const Vec2c& a) { return {-a.x, -a.y}; }
  friend Vec2c operator*(cplx s, const Vec2c& a) { return {s * a.x, s * a.y}; }
  friend Vec2c operator*(const Vec2c& a, cplx s) { return {s * a.x, s * a.y}; }
  friend Vec2c operator/(const Vec2c& a, cplx s) { return {a.x / s, a.y / s}; }
  friend cplx dot(const Vec2c& a, const Vec2c& b) { return a.x * b.x + a.y * b.y; }

  double norm() const { return std::sqrt(std::norm(x) + std::norm(y)); }
  double max_abs() const { return std::max(std::abs(x), std::abs(y)); }
  Vec2 real() const { return {x.real(), y.real()}; }
  Vec2 imag() const { return {x.imag(), y.imag()}; }
  bool finite() const {
    return std::isfinite(x.real()) && std::isfinite(x.imag()) && std::isfinite(y.real()) &&
           std::isfinite(y.imag());
  }
};

inline double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

class FieldParams {
 public:
  FieldParams(double E1, double E2, double omega, double phi)
      : E1_(E1), E2_(E2), omega_(omega), phi_(wrap_phase(phi)) {
    if (!(E1 > 0.0)) throw DomainError("field amplitude E1 must be positive");
    if (!(omega > 0.0)) throw DomainError("angular frequency must be positive");
    if (!(E2 >= 0.0)) throw DomainError("field amplitude E2 must be nonnegative");
    if (!std::isfinite(phi)) throw DomainError("relative phase must be finite");
  }

  // E2 = E1 * sqrt(R).
  static FieldParams from_ratio(double E1, double R, double omega, double phi) {
    if (!(R >= 0.0)) throw DomainError("intensity ratio must be nonnegative");
    return FieldParams(E1, E1 * std::sqrt(R), omega, phi);
  }

  double E1() const { return E1_; }
  double E2() const { return E2_; }
  double omega() const { return omega_; }
  double phi() const { return phi_; }
  double ratio() const { return (E2_ / E1_) * (E2_ / E1_); }
  double period() const { return kTwoPi / omega_; }
  // Cycle-averaged quiver energy of the combined field.
  double ponderomotive() const {
    return E1_ * E1_ / (4.0 * omega_ * omega_) + E2_ * E2_ / (16.0 * omega_ * omega_);
  }

  FieldParams with_phi(double phi) const { return {E1_, E2_, omega_, phi}; }
  FieldParams with_ratio(double R) const { return from_ratio(E1_, R, omega_, phi_); }

 private:
  double E1_;
  double E2_;
  double omega_;
  double phi_;
};

struct TargetParams {
  double Ip;

  explicit TargetParams(double ip) : Ip(ip) {
    if (!(ip > 0.0)) throw DomainError("ionisation potential must be positive");
  }
};

inline Vec2c efield(const FieldParams& p, ComplexTime t) {
  const double w = p.omega();
  return {p.E1() * std::sin(w * t), p.E2() * std::sin(2.0 * w * t + p.phi())};
}

inline Vec2 efield(const FieldParams& p, double t) {
  const double w = p.omega();
  return {p.E1() * std::sin(w * t), p.E2() * std::sin(2.0 * w * t + p.phi())};
}

inline Vec2c apot(const FieldParams& p, ComplexTime t) {
  const double w = p.omega();
  return {p.E1() / w * std::cos(w * t), p.E2() / (2.0 * w) * std::cos(2.0 * w * t + p.phi())};
}

// Antiderivative of apot, the constant chosen so it is periodic.
inline Vec2c apot_antiderivative(const FieldParams& p, ComplexTime t) {
  const double w = p.omega();
  return {p.E1() / (w * w) * std::sin(w * t),
          p.E2() / (4.0 * w * w) * std::sin(2.0 * w * t + p.phi())};
}

// \int_ta^tb A(t) dt along any contour.
inline Vec2c apot_integral(const FieldParams& p, ComplexTime ta, ComplexTime tb) {
  return apot_antiderivative(p, tb) - apot_antiderivative(p, ta);
}

// \int_ta^tb A(t)^2 dt (unconjugated square).
inline cplx apot_sq_integral(const FieldParams& p, ComplexTime ta, ComplexTime tb) {
  const double w = p.omega();
  const double ax = p.E1() / w;
  const double ay = p.E2() / (2.0 * w);
  auto prim = [&](ComplexTime t) {
    const cplx fx = t / 2.0 + std::sin(2.0 * w * t) / (4.0 * w);
    const cplx fy = t / 2.0 + std::sin(2.0 * (2.0 * w * t + p.phi())) / (8.0 * w);
    return ax * ax * fx + ay * ay * fy;
  };
  return prim(tb) - prim(ta);
}

struct LabFieldValues {
  double omega;
  double amplitude;
};

// Laboratory units to atomic units: wavelength in nm, intensity in W/cm^2.
inline LabFieldValues convert_units(double lambda_nm, double intensity_wcm2) {
  if (!(lambda_nm > 0.0)) throw DomainError("wavelength must be positive");
  if (!(intensity_wcm2 > 0.0)) throw DomainError("intensity must be positive");
  return {kWavelengthToOmega / lambda_nm, std::sqrt(intensity_wcm2 / kAtomicIntensity)};
}

inline double wavelength_to_omega(double lambda_nm) {
  if (!(lambda_nm > 0.0)) throw DomainError("wavelength must be positive");
  return kWavelengthToOmega / lambda_nm;
}

inline double intensity_to_field(double intensity_wcm2) {
  if (!(intensity_wcm2 > 0.0)) throw DomainError("intensity must be positive");
  return std::sqrt(intensity_wcm2 / kAtomicIntensity);
}

struct LissajousSample {
  double t;
  Vec2 e;
};

// Field over one fundamental period; the first sample is repeated at the end
// so the curve is closed.
inline std::vector<LissajousSample> lissajous(const FieldParams& p, int n_samples) {
  if (n_samples < 8) throw DomainError("lissajous needs at least 8 samples");
  std::vector<LissajousSample> out;
  out.reserve(static_cast<std::size_t>(n_samples) + 1);
  const double T = p.period();
  for (int k = 0; k <= n_samples; ++k) {
    const double t = T * static_cast<double>(k) / n_samples;
    out.push_back({t, efield(p, t)});
  }
  out.back().e = out.front().e;
  return out;
}

}  // namespace hhg2d
