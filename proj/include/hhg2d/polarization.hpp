#pragma once

// Polarisation ellipse of a complex 2-vector: D = exp(i gamma) (M + i N) with
// real, orthogonal major and minor axes M and N.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "hhg2d/error.hpp"
#include "hhg2d/units_field.hpp"

namespace hhg2d {

struct EllipseDecomposition {
  Vec2 M;
  Vec2 N;
  double gamma = 0.0;
  double ellipticity = 0.0;

  Vec2c reconstruct() const {
    const cplx g = std::polar(1.0, gamma);
    return {g * cplx(M.x, N.x), g * cplx(M.y, N.y)};
  }

  // The same ellipse with (M, N) -> (-M, -N), gamma -> gamma + pi.
  EllipseDecomposition flipped() const {
    EllipseDecomposition e = *this;
    e.M = -1.0 * M;
    e.N = -1.0 * N;
    e.gamma = gamma + std::numbers::pi;
    return e;
  }
};

// gamma = arg(D.D)/2 in [0, pi). A circular input (D.D = 0) takes gamma = 0
// and M along the larger real component.
inline EllipseDecomposition decompose(const Vec2c& D) {
  const double mag = D.norm();
  if (!(mag > 0.0)) throw DomainError("ellipse undefined for a zero vector");
  const cplx dd = dot(D, D);
  EllipseDecomposition e;
  double gamma = 0.0;
  if (std::abs(dd) > 1e-14 * mag * mag) {
    gamma = 0.5 * std::arg(dd);
    if (gamma < 0.0) gamma += std::numbers::pi;
    if (gamma >= std::numbers::pi) gamma -= std::numbers::pi;
  }
  const cplx rot = std::polar(1.0, -gamma);
  const Vec2c r = D * rot;
  e.M = r.real();
  e.N = r.imag();
  e.gamma = gamma;
  if (e.N.norm() > e.M.norm()) {
    // Only reachable in the circular tie; rotate by pi/2 to restore |M| >= |N|.
    e.gamma = gamma + 0.5 * std::numbers::pi;
    const Vec2 m = e.N;
    e.N = -1.0 * e.M;
    e.M = m;
  }
  e.ellipticity = e.M.norm() > 0.0 ? e.N.norm() / e.M.norm() : 0.0;
  return e;
}

// Representative of +-(M, N) with M (or, if Mx = 0, My) positive.
inline EllipseDecomposition canonical_sign(const EllipseDecomposition& e) {
  const bool positive = e.M.x > 0.0 || (e.M.x == 0.0 && e.M.y >= 0.0);
  return positive ? e : e.flipped();
}

// Representative of +-(M, N) closest to `reference` in M.
inline EllipseDecomposition nearest_sign(const EllipseDecomposition& e, const Vec2& reference) {
  const double keep = (e.M - reference).norm();
  const double flip = (e.M + reference).norm();
  return keep <= flip ? e : e.flipped();
}

// Signs along a scan: the first defined sample is canonical, every following
// one matches its predecessor. Gaps (nullopt) do not reset the reference.
inline std::vector<std::optional<EllipseDecomposition>> signed_series(
    std::span<const std::optional<EllipseDecomposition>> series) {
  std::vector<std::optional<EllipseDecomposition>> out(series.begin(), series.end());
  std::optional<Vec2> ref;
  for (auto& e : out) {
    if (!e) continue;
    e = ref ? nearest_sign(*e, *ref) : canonical_sign(*e);
    ref = e->M;
  }
  return out;
}

// Sign of a T/2 partner orbit fixed by the half-cycle symmetry
// D' = (-1)^q diag(-1, 1) D.
inline EllipseDecomposition partner_signed(const EllipseDecomposition& partner,
                                           const EllipseDecomposition& first_signed, int q) {
  const double s = (q % 2 == 0) ? 1.0 : -1.0;
  const Vec2 expected{-s * first_signed.M.x, s * first_signed.M.y};
  return nearest_sign(partner, expected);
}

}  // namespace hhg2d
