#pragma once

// Quantum-orbit saddle points of the two-time SFA action.
//
// Unknowns are the complex ionisation and recombination times (ti, tr). The
// momentum is eliminated through its stationarity condition, so
//
//   S(ti, tr) = -Ip tau - 1/2 (\int A^2 - ps^2 tau) + q w tr,   tau = tr - ti,
//
// and the saddle equations are
//
//   1/2 (ps + A(tr))^2 + Ip - q w = 0      (recombination)
//   1/2 (ps + A(ti))^2 + Ip       = 0      (ionisation)

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hhg2d/error.hpp"
#include "hhg2d/units_field.hpp"

namespace hhg2d {

struct SaddlePoint {
  ComplexTime ti{};
  ComplexTime tr{};
  Vec2c ps{};
  cplx action{};
  cplx hessdet{};
  double q = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  double jacobian_cond = 0.0;
  bool near_coalescence = false;  // Jacobian condition number above 1e12

  cplx excursion() const { return tr - ti; }
};

struct SaddleResidual {
  cplx recombination;
  cplx ionisation;

  double max_abs() const { return std::max(std::abs(recombination), std::abs(ionisation)); }
};

// Complex 2x2 matrix indexed [row][col].
using Mat2c = std::array<std::array<cplx, 2>, 2>;

inline cplx det(const Mat2c& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

// Ratio of singular values of a 2x2 matrix.
inline double condition_number(const Mat2c& m) {
  const double fro2 = std::norm(m[0][0]) + std::norm(m[0][1]) + std::norm(m[1][0]) +
                      std::norm(m[1][1]);
  const double d = std::abs(det(m));
  if (d == 0.0) return std::numeric_limits<double>::infinity();
  const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * d * d));
  const double s1 = std::sqrt(0.5 * (fro2 + disc));
  const double s2 = d / s1;
  return s1 / s2;
}

namespace detail {

inline void require_separated(ComplexTime ti, ComplexTime tr) {
  if (std::abs(tr - ti) <= 1e-13 * (1.0 + std::abs(ti))) {
    throw CoalescenceError("ionisation and recombination times coincide");
  }
}

// Everything the residual, Jacobian and Hessian share.
struct OrbitKinematics {
  cplx tau;
  Vec2c ps;
  Vec2c v_rec;  // ps + A(tr)
  Vec2c v_ion;  // ps + A(ti)
};

inline OrbitKinematics kinematics(const FieldParams& p, ComplexTime ti, ComplexTime tr) {
  require_separated(ti, tr);
  const cplx tau = tr - ti;
  const Vec2c ps = -(apot_integral(p, ti, tr) / tau);
  return {tau, ps, ps + apot(p, tr), ps + apot(p, ti)};
}

}  // namespace detail

// ps = -(1/(tr - ti)) \int_ti^tr A(t) dt
inline Vec2c stationary_momentum(const FieldParams& p, ComplexTime ti, ComplexTime tr) {
  detail::require_separated(ti, tr);
  return -(apot_integral(p, ti, tr) / (tr - ti));
}

inline SaddleResidual saddle_residual(const FieldParams& p, const TargetParams& tgt, double q,
                                      ComplexTime ti, ComplexTime tr) {
  const auto k = detail::kinematics(p, ti, tr);
  return {0.5 * dot(k.v_rec, k.v_rec) + tgt.Ip - q * p.omega(),
          0.5 * dot(k.v_ion, k.v_ion) + tgt.Ip};
}

inline cplx action(const FieldParams& p, const TargetParams& tgt, double q, ComplexTime ti,
                   ComplexTime tr) {
  const auto k = detail::kinematics(p, ti, tr);
  const cplx quiver = apot_sq_integral(p, ti, tr) - dot(k.ps, k.ps) * k.tau;
  return -tgt.Ip * k.tau - 0.5 * quiver + q * p.omega() * tr;
}

// d(residual)/d(ti, tr); rows are (recombination, ionisation).
inline Mat2c saddle_jacobian(const FieldParams& p, ComplexTime ti, ComplexTime tr) {
  const auto k = detail::kinematics(p, ti, tr);
  const cplx rr = dot(k.v_rec, k.v_rec);
  const cplx ii = dot(k.v_ion, k.v_ion);
  const cplx ri = dot(k.v_rec, k.v_ion);
  const cplx e_rec = dot(k.v_rec, efield(p, tr));
  const cplx e_ion = dot(k.v_ion, efield(p, ti));
  Mat2c j{};
  j[0][0] = ri / k.tau;
  j[0][1] = -(rr / k.tau + e_rec);
  j[1][0] = ii / k.tau - e_ion;
  j[1][1] = -ri / k.tau;
  return j;
}

struct Hessian {
  Mat2c m;  // second derivatives of S, ordered (ti, tr)
  cplx det;
};

// Total second derivatives of S(ps(ti,tr), ti, tr). Since dS/dti equals the
// ionisation residual and dS/dtr the negated recombination residual, this is
// the Jacobian with its first row negated and the rows swapped.
inline Hessian hessian(const FieldParams& p, ComplexTime ti, ComplexTime tr) {
  const Mat2c j = saddle_jacobian(p, ti, tr);
  Mat2c h{};
  h[0][0] = j[1][0];
  h[0][1] = j[1][1];
  h[1][0] = -j[0][0];
  h[1][1] = -j[0][1];
  return {h, hhg2d::det(h)};
}

inline Hessian hessian(const FieldParams& p, const SaddlePoint& sp) {
  return hessian(p, sp.ti, sp.tr);
}

// Square root of z on the sheet closest to `reference`; principal value when
// no reference is given.
inline cplx branch_sqrt(cplx z, std::optional<cplx> reference = std::nullopt) {
  const cplx r = std::sqrt(z);
  if (!reference) return r;
  return std::abs(r - *reference) <= std::abs(r + *reference) ? r : -r;
}

// sqrt(-det S'') as it enters the saddle-point prefactor.
inline cplx sqrt_neg_hessdet(const SaddlePoint& sp, std::optional<cplx> reference = std::nullopt) {
  return branch_sqrt(-sp.hessdet, reference);
}

// Fills the derived fields of a saddle from its two times.
inline SaddlePoint evaluate_saddle(const FieldParams& p, const TargetParams& tgt, double q,
                                   ComplexTime ti, ComplexTime tr) {
  SaddlePoint sp;
  sp.ti = ti;
  sp.tr = tr;
  sp.q = q;
  sp.ps = stationary_momentum(p, ti, tr);
  sp.action = action(p, tgt, q, ti, tr);
  sp.hessdet = hessian(p, ti, tr).det;
  sp.residual = saddle_residual(p, tgt, q, ti, tr).max_abs();
  sp.jacobian_cond = condition_number(saddle_jacobian(p, ti, tr));
  sp.near_coalescence = sp.jacobian_cond > 1e12;
  return sp;
}

// Shifts both times by a whole number of periods so that Re(ti) is in [0, T).
inline SaddlePoint fold_to_period(const FieldParams& p, const TargetParams& tgt,
                                  const SaddlePoint& sp) {
  const double T = p.period();
  const double k = std::floor(sp.ti.real() / T);
  if (k == 0.0) return sp;
  SaddlePoint out = evaluate_saddle(p, tgt, sp.q, sp.ti - k * T, sp.tr - k * T);
  out.iterations = sp.iterations;
  return out;
}

enum class NewtonStatus { converged, max_iterations, diverged, conjugate, coalesced };

inline const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::max_iterations: return "max_iterations";
    case NewtonStatus::diverged: return "diverged";
    case NewtonStatus::conjugate: return "conjugate";
    case NewtonStatus::coalesced: return "coalesced";
  }
  return "unknown";
}

struct NewtonOptions {
  double tolerance = 1e-12;
  int max_iterations = 100;
  int max_halvings = 8;
  // Reject converged points with Im(ti) <= 0 (complex-conjugate partners).
  bool require_positive_im_ti = true;
};

struct NewtonOutcome {
  NewtonStatus status = NewtonStatus::diverged;
  SaddlePoint saddle;
};

// Damped Newton iteration on the saddle system; never throws for numerical
// failure, the status says what happened.
inline NewtonOutcome try_newton(const FieldParams& p, const TargetParams& tgt, double q,
                                ComplexTime ti, ComplexTime tr, const NewtonOptions& opt = {}) {
  NewtonOutcome out;
  auto residual_norm = [&](ComplexTime a, ComplexTime b) -> double {
    if (std::abs(b - a) <= 1e-13 * (1.0 + std::abs(a))) return std::numeric_limits<double>::infinity();
    const double r = saddle_residual(p, tgt, q, a, b).max_abs();
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
  };

  double r = residual_norm(ti, tr);
  int it = 0;
  for (; it <= opt.max_iterations && r > opt.tolerance; ++it) {
    if (it == opt.max_iterations) {
      out.status = NewtonStatus::max_iterations;
      out.saddle.ti = ti;
      out.saddle.tr = tr;
      out.saddle.residual = r;
      return out;
    }
    if (!std::isfinite(r)) {
      out.status = NewtonStatus::diverged;
      return out;
    }
    const auto f = saddle_residual(p, tgt, q, ti, tr);
    const Mat2c j = saddle_jacobian(p, ti, tr);
    const cplx d = det(j);
    if (d == cplx{} || !std::isfinite(std::abs(d))) {
      out.status = NewtonStatus::diverged;
      return out;
    }
    // j * (dti, dtr) = -f
    const cplx dti = (-f.recombination * j[1][1] + f.ionisation * j[0][1]) / d;
    const cplx dtr = (-f.ionisation * j[0][0] + f.recombination * j[1][0]) / d;

    double lambda = 1.0;
    ComplexTime ti_new = ti + dti;
    ComplexTime tr_new = tr + dtr;
    double r_new = residual_norm(ti_new, tr_new);
    for (int h = 0; h < opt.max_halvings && !(r_new < r); ++h) {
      lambda *= 0.5;
      ti_new = ti + lambda * dti;
      tr_new = tr + lambda * dtr;
      r_new = residual_norm(ti_new, tr_new);
    }
    if (!std::isfinite(r_new)) {
      out.status = NewtonStatus::diverged;
      return out;
    }
    ti = ti_new;
    tr = tr_new;
    r = r_new;
  }

  if (std::abs(tr - ti) <= 1e-8) {
    out.status = NewtonStatus::coalesced;
    return out;
  }
  out.saddle = evaluate_saddle(p, tgt, q, ti, tr);
  out.saddle.iterations = it;
  if (opt.require_positive_im_ti && !(ti.imag() > 0.0)) {
    out.status = NewtonStatus::conjugate;
    return out;
  }
  out.status = NewtonStatus::converged;
  return out;
}

struct Seed {
  ComplexTime ti;
  ComplexTime tr;
};

// Throws ConvergenceError unless the iteration converges to an admissible
// (Im ti > 0) saddle.
inline SaddlePoint newton_solve(const FieldParams& p, const TargetParams& tgt, double q,
                                const Seed& seed, const NewtonOptions& opt = {}) {
  if (std::abs(seed.tr - seed.ti) == 0.0) {
    throw CoalescenceError("seed has tr == ti");
  }
  auto out = try_newton(p, tgt, q, seed.ti, seed.tr, opt);
  if (out.status != NewtonStatus::converged) {
    throw ConvergenceError(std::string("newton_solve: ") + to_string(out.status));
  }
  return out.saddle;
}

// Tunnelling-time estimate sqrt(2 Ip)/|E(t)| at real t.
inline double keldysh_time(const FieldParams& p, const TargetParams& tgt, double t) {
  const double e = efield(p, t).norm();
  if (e <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0 * tgt.Ip) / e;
}

struct SeedGridOptions {
  int n_ionisation = 40;        // Re(ti) samples per period (spacing T/n)
  double excursion_min = 0.3;   // in periods
  double excursion_max = 1.5;   // in periods
  int n_excursion = 13;         // excursion grid per Re(ti)
  bool classical_returns = true;
};

struct SeedGrid {
  struct Entry {
    Seed seed;
    int half_cycle;
  };
  std::vector<Entry> entries;
};

// Classical displacement of an electron born at rest at real t0.
inline double classical_distance_sq(const FieldParams& p, double t0, double t) {
  const Vec2c s = apot_integral(p, t0, t) - apot(p, t0) * cplx(t - t0);
  return std::norm(s.x) + std::norm(s.y);
}

// Seeds over one period: classical returns (local minima of the distance to the
// core) and a regular excursion grid, each lifted to Im(ti) equal to the
// tunnelling-time estimate (capped at T/4).
inline SeedGrid make_seed_grid(const FieldParams& p, const TargetParams& tgt,
                               const SeedGridOptions& opt = {}) {
  SeedGrid grid;
  const double T = p.period();
  const int n_ti = std::max(opt.n_ionisation, 40);
  for (int a = 0; a < n_ti; ++a) {
    const double t0 = T * a / n_ti;
    const double im = std::min(keldysh_time(p, tgt, t0), 0.25 * T);
    const ComplexTime ti{t0, im};
    const int hc = (2 * a) / n_ti;
    if (opt.classical_returns) {
      const int n_probe = 240;
      const double t_lo = t0 + 0.05 * T;
      const double t_hi = t0 + opt.excursion_max * T;
      double prev2 = classical_distance_sq(p, t0, t_lo);
      double prev1 = classical_distance_sq(p, t0, t_lo + (t_hi - t_lo) / n_probe);
      for (int k = 2; k <= n_probe; ++k) {
        const double t = t_lo + (t_hi - t_lo) * k / n_probe;
        const double cur = classical_distance_sq(p, t0, t);
        if (prev1 < prev2 && prev1 <= cur) {
          grid.entries.push_back({{ti, ComplexTime{t - (t_hi - t_lo) / n_probe, 0.0}}, hc});
        }
        prev2 = prev1;
        prev1 = cur;
      }
    }
    for (int b = 0; b < opt.n_excursion; ++b) {
      const double frac = opt.n_excursion == 1
                              ? opt.excursion_min
                              : opt.excursion_min + (opt.excursion_max - opt.excursion_min) * b /
                                                        (opt.n_excursion - 1);
      grid.entries.push_back({{ti, ComplexTime{t0 + frac * T, 0.0}}, hc});
    }
  }
  return grid;
}

// Max-norm distance between two saddles, allowing a whole-period offset.
inline double saddle_distance(const SaddlePoint& a, const SaddlePoint& b, double period) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = -1; k <= 1; ++k) {
    const double shift = k * period;
    best = std::min(best, std::max(std::abs(a.ti - b.ti - shift), std::abs(a.tr - b.tr - shift)));
  }
  return best;
}

inline void sort_saddles(std::vector<SaddlePoint>& v) {
  std::sort(v.begin(), v.end(), [](const SaddlePoint& a, const SaddlePoint& b) {
    if (a.ti.real() != b.ti.real()) return a.ti.real() < b.ti.real();
    return a.tr.real() < b.tr.real();
  });
}

// Adds sp unless an equal saddle (within tol) is already present.
inline bool insert_unique(std::vector<SaddlePoint>& set, const SaddlePoint& sp, double period,
                          double tol = 1e-8) {
  for (const auto& s : set) {
    if (saddle_distance(s, sp, period) < tol) return false;
  }
  set.push_back(sp);
  return true;
}

struct CycleOptions {
  SeedGridOptions seeds{};
  NewtonOptions newton{};
  // Saddles with Re(tr - ti) above this many periods are dropped; Newton can
  // wander far past the seeded excursion range, and those far solutions are
  // found only sporadically.
  double max_excursion = 1.5;
};

struct CycleSolution {
  std::vector<SaddlePoint> saddles;
  bool below_threshold = false;
  int n_seeds = 0;
  int n_converged = 0;
};

// All distinct saddles with Re(ti) in [0, T) reachable from the seed grid.
inline CycleSolution solve_cycle(const FieldParams& p, const TargetParams& tgt, double q,
                                 const CycleOptions& opt = {}) {
  CycleSolution out;
  if (!(q * p.omega() > tgt.Ip)) {
    out.below_threshold = true;
    return out;
  }
  const double T = p.period();
  const SeedGrid grid = make_seed_grid(p, tgt, opt.seeds);
  out.n_seeds = static_cast<int>(grid.entries.size());
  for (const auto& e : grid.entries) {
    auto res = try_newton(p, tgt, q, e.seed.ti, e.seed.tr, opt.newton);
    if (res.status != NewtonStatus::converged) continue;
    const double excursion = (res.saddle.tr - res.saddle.ti).real();
    if (!(excursion > 0.0) || excursion > opt.max_excursion * T) continue;
    ++out.n_converged;
    insert_unique(out.saddles, fold_to_period(p, tgt, res.saddle), T);
  }
  sort_saddles(out.saddles);
  return out;
}

// ---------------------------------------------------------------------------
// Continuation

enum class ContinuationParameter { q, phi, ratio };

inline const char* to_string(ContinuationParameter c) {
  switch (c) {
    case ContinuationParameter::q: return "q";
    case ContinuationParameter::phi: return "phi";
    case ContinuationParameter::ratio: return "R";
  }
  return "unknown";
}

struct TrackedSaddle {
  int branch_id = -1;
  SaddlePoint saddle;
};

struct BranchCollision {
  int branch_a;
  int branch_b;
  double at_value;
  double distance;
};

// Raised when a branch cannot be followed even after repeated step halving.
class BranchLostError : public ConvergenceError {
 public:
  BranchLostError(int branch, double value, SaddlePoint last)
      : ConvergenceError("continuation lost branch " + std::to_string(branch) + " at parameter " +
                         std::to_string(value)),
        branch_id(branch),
        last_value(value),
        last_good(last) {}
  int branch_id;
  double last_value;
  SaddlePoint last_good;
};

struct ContinuationOptions {
  double max_step = 0.0;  // 0 selects a per-parameter default
  int max_halvings = 10;
  double collision_tolerance = 1e-6;
};

struct ContinuationResult {
  std::vector<TrackedSaddle> saddles;
  std::vector<BranchCollision> collisions;
  // Smallest inter-branch distance seen along the path, per branch pair.
  double min_separation = std::numeric_limits<double>::infinity();
  // For a phi path spanning whole periods of 2pi: branches that did not come
  // back to their starting saddle.
  std::vector<int> swapped_branches;
};

struct ContinuationState {
  FieldParams field;
  double q;
};

inline double parameter_value(const FieldParams& p, double q, ContinuationParameter param) {
  switch (param) {
    case ContinuationParameter::q: return q;
    case ContinuationParameter::phi: return p.phi();
    case ContinuationParameter::ratio: return p.ratio();
  }
  return 0.0;
}

inline ContinuationState apply_parameter(const FieldParams& p, double q,
                                         ContinuationParameter param, double value) {
  switch (param) {
    case ContinuationParameter::q: return {p, value};
    case ContinuationParameter::phi: return {p.with_phi(value), q};
    case ContinuationParameter::ratio: return {p.with_ratio(std::max(0.0, value)), q};
  }
  return {p, q};
}

// Homotopy continuation of every branch in `from` as one parameter moves from
// its current value (taken from p / q; for phi pass `from_value` explicitly to
// continue past 2pi) to `to_value`. Branch ids are preserved.
inline ContinuationResult continue_in(const FieldParams& p, const TargetParams& tgt, double q,
                                      ContinuationParameter param,
                                      std::span<const TrackedSaddle> from, double to_value,
                                      const ContinuationOptions& opt = {},
                                      std::optional<double> from_value = std::nullopt) {
  ContinuationResult out;
  out.saddles.assign(from.begin(), from.end());
  double value = from_value.value_or(parameter_value(p, q, param));
  if (out.saddles.empty() || value == to_value) return out;

  double max_step = opt.max_step;
  if (max_step <= 0.0) {
    switch (param) {
      case ContinuationParameter::q: max_step = 0.25; break;
      case ContinuationParameter::phi: max_step = kTwoPi / 128.0; break;
      case ContinuationParameter::ratio: max_step = 0.005; break;
    }
  }
  const double dir = to_value > value ? 1.0 : -1.0;
  double step = max_step;
  NewtonOptions nopt;
  nopt.require_positive_im_ti = false;
  const double T = p.period();

  std::vector<TrackedSaddle> previous;  // for secant prediction
  double previous_value = value;

  auto nearest_other = [&](const std::vector<TrackedSaddle>& set, std::size_t i) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < set.size(); ++j) {
      if (j != i) d = std::min(d, saddle_distance(set[i].saddle, set[j].saddle, T));
    }
    return d;
  };

  while (dir * (to_value - value) > 0.0) {
    int halvings = 0;
    for (;;) {
      const double next = dir > 0 ? std::min(value + step, to_value) : std::max(value - step, to_value);
      const auto state = apply_parameter(p, q, param, next);
      std::vector<TrackedSaddle> trial = out.saddles;
      bool ok = true;
      int failed_index = -1;
      for (std::size_t i = 0; i < trial.size() && ok; ++i) {
        const auto& cur = out.saddles[i].saddle;
        ComplexTime ti0 = cur.ti;
        ComplexTime tr0 = cur.tr;
        if (previous.size() == trial.size() && previous_value != value) {
          const double ratio = (next - value) / (value - previous_value);
          ti0 += ratio * (cur.ti - previous[i].saddle.ti);
          tr0 += ratio * (cur.tr - previous[i].saddle.tr);
        }
        auto res = try_newton(state.field, tgt, state.q, ti0, tr0, nopt);
        const double limit = std::min(0.5 * nearest_other(out.saddles, i), 0.05 * T);
        if (res.status != NewtonStatus::converged ||
            std::max(std::abs(res.saddle.ti - cur.ti), std::abs(res.saddle.tr - cur.tr)) > limit) {
          ok = false;
          failed_index = static_cast<int>(i);
          break;
        }
        res.saddle.iterations = cur.iterations;
        trial[i].saddle = res.saddle;
      }
      if (ok) {
        previous = out.saddles;
        previous_value = value;
        out.saddles = std::move(trial);
        value = next;
        for (std::size_t i = 0; i < out.saddles.size(); ++i) {
          for (std::size_t j = i + 1; j < out.saddles.size(); ++j) {
            const double d = saddle_distance(out.saddles[i].saddle, out.saddles[j].saddle, T);
            out.min_separation = std::min(out.min_separation, d);
            if (d < opt.collision_tolerance) {
              out.collisions.push_back(
                  {out.saddles[i].branch_id, out.saddles[j].branch_id, value, d});
            }
          }
        }
        if (halvings == 0) step = std::min(max_step, step * 1.5);
        break;
      }
      if (++halvings > opt.max_halvings) {
        const auto& last = out.saddles[static_cast<std::size_t>(failed_index)];
        throw BranchLostError(last.branch_id, value, last.saddle);
      }
      step *= 0.5;
    }
  }

  const double span = std::abs(to_value - from_value.value_or(parameter_value(p, q, param)));
  const double turns = span / kTwoPi;
  if (param == ContinuationParameter::phi && span > 0.0 &&
      std::abs(turns - std::round(turns)) < 1e-12) {
    for (std::size_t i = 0; i < out.saddles.size(); ++i) {
      if (saddle_distance(out.saddles[i].saddle, from[i].saddle, T) > 1e-8) {
        out.swapped_branches.push_back(out.saddles[i].branch_id);
      }
    }
  }
  return out;
}

}  // namespace hhg2d
