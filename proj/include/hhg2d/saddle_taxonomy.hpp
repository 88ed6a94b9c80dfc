#pragma once

// Orbit labels (half-cycle, short/long/extra family) and the decision which
// saddles contribute to the dipole sum.
//
// Relevance is decided in two tiers. Tier (a) is local to one saddle: the
// ionisation time must lie in the upper half plane, the action must not grow
// (Im S >= 0), the excursion must lie in the one-period window, the
// recombination time must stay close to the real axis and the tunnelling time
// must be compatible with the local field strength. Tier (b) needs the
// history of the saddles across harmonic order: once a short/long pair has
// passed its closest approach, the member whose |exp(iS)| grows with q is
// dropped for every larger q.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hhg2d/saddle_solver.hpp"
#include "hhg2d/units_field.hpp"

namespace hhg2d {

enum class RelevanceReason {
  relevant,
  conjugate_ionisation,    // Im(ti) <= 0
  growing_action,          // Im(S) < 0
  excursion_window,        // Re(tr - ti) outside (0, tau_max]
  recombination_off_axis,  // Im(tr) outside [-c Im(ti), Im(ti)]
  tunnelling_inconsistent, // Im(ti) far beyond sqrt(2Ip)/|E(Re ti)|
  past_closest_approach,   // tier (b)
  extra_suppressed,        // extra family far below the dominant saddle
  partner_rule,            // copied from the T/2 partner
};

inline const char* to_string(RelevanceReason r) {
  switch (r) {
    case RelevanceReason::relevant: return "relevant";
    case RelevanceReason::conjugate_ionisation: return "conjugate_ionisation";
    case RelevanceReason::growing_action: return "growing_action";
    case RelevanceReason::excursion_window: return "excursion_window";
    case RelevanceReason::recombination_off_axis: return "recombination_off_axis";
    case RelevanceReason::tunnelling_inconsistent: return "tunnelling_inconsistent";
    case RelevanceReason::past_closest_approach: return "past_closest_approach";
    case RelevanceReason::extra_suppressed: return "extra_suppressed";
    case RelevanceReason::partner_rule: return "partner_rule";
  }
  return "unknown";
}

// Family 0 is "short", 1 is "long", k >= 2 is "extra-(k+1)".
inline std::string family_name(int family) {
  if (family == 0) return "short";
  if (family == 1) return "long";
  return "extra-" + std::to_string(family + 1);
}

struct OrbitLabel {
  int half_cycle = 0;
  int family = 0;
  bool relevant = false;
  double excursion = 0.0;  // Re(tr - ti)
  bool ambiguous_bin = false;
  bool admissible = false;  // passes tier (a)
  RelevanceReason reason = RelevanceReason::relevant;
  int branch_id = -1;  // continuation identity; -1 when untracked

  std::string family_name() const { return hhg2d::family_name(family); }
};

struct LabelledSaddle {
  SaddlePoint saddle;
  OrbitLabel label;
  // Sheet of sqrt(-det S'') selected by continuity; principal when empty.
  std::optional<cplx> sqrt_reference;
};

struct RelevanceOptions {
  double tau_max = 1.5;            // excursion window, periods
  double recombination_lower = 0.25;
  double keldysh_factor = 1.5;
  double extra_threshold = 1e-6;   // relative to the dominant |exp(iS)|
  // Admissible saddles this far below the dominant |exp(iS)| are not given the
  // short/long names.
  double label_threshold = 1e-3;
};

// Tier (a) verdict for one saddle.
inline RelevanceReason admissibility(const FieldParams& p, const TargetParams& tgt,
                                     const SaddlePoint& sp, const RelevanceOptions& opt = {}) {
  const double im_ti = sp.ti.imag();
  if (!(im_ti > 0.0)) return RelevanceReason::conjugate_ionisation;
  if (sp.action.imag() < 0.0) return RelevanceReason::growing_action;
  const double excursion = (sp.tr - sp.ti).real();
  if (!(excursion > 0.0) || excursion > opt.tau_max * p.period()) {
    return RelevanceReason::excursion_window;
  }
  const double im_tr = sp.tr.imag();
  if (im_tr < -opt.recombination_lower * im_ti || im_tr > im_ti) {
    return RelevanceReason::recombination_off_axis;
  }
  if (im_ti > opt.keldysh_factor * keldysh_time(p, tgt, sp.ti.real())) {
    return RelevanceReason::tunnelling_inconsistent;
  }
  return RelevanceReason::relevant;
}

struct HalfCycleBin {
  int index;
  bool ambiguous;
};

inline HalfCycleBin half_cycle_of(const FieldParams& p, double re_ti) {
  const double half = 0.5 * p.period();
  const double folded = re_ti - std::floor(re_ti / p.period()) * p.period();
  int index = static_cast<int>(std::floor(folded / half));
  index = std::clamp(index, 0, 1);
  const double from_lower = folded - index * half;
  if (from_lower < 1e-6) return {index == 0 ? 1 : 0, true};
  if (half - from_lower < 1e-6) return {index, true};
  return {index, false};
}

// Labels every saddle of one period. Within a half-cycle the admissible
// saddles of significant weight come first, ranked by ascending excursion, so
// that "short" and "long" always name the physical pair; negligible admissible
// saddles and inadmissible ones follow as extra families.
inline std::vector<LabelledSaddle> classify(const FieldParams& p, const TargetParams& tgt,
                                            std::span<const SaddlePoint> saddles,
                                            const RelevanceOptions& opt = {}) {
  std::vector<LabelledSaddle> out;
  out.reserve(saddles.size());
  double dominant_im_s = std::numeric_limits<double>::infinity();
  for (const auto& sp : saddles) {
    LabelledSaddle ls;
    ls.saddle = sp;
    const auto bin = half_cycle_of(p, sp.ti.real());
    ls.label.half_cycle = bin.index;
    ls.label.ambiguous_bin = bin.ambiguous;
    ls.label.excursion = (sp.tr - sp.ti).real();
    ls.label.reason = admissibility(p, tgt, sp, opt);
    ls.label.admissible = ls.label.reason == RelevanceReason::relevant;
    ls.label.relevant = ls.label.admissible;
    if (ls.label.admissible) dominant_im_s = std::min(dominant_im_s, sp.action.imag());
    out.push_back(ls);
  }
  const double cut = dominant_im_s - std::log(opt.label_threshold);
  auto tier = [&](const LabelledSaddle& ls) {
    if (!ls.label.admissible) return 2;
    return ls.saddle.action.imag() <= cut ? 0 : 1;
  };
  std::stable_sort(out.begin(), out.end(), [&](const LabelledSaddle& a, const LabelledSaddle& b) {
    if (a.label.half_cycle != b.label.half_cycle) return a.label.half_cycle < b.label.half_cycle;
    if (tier(a) != tier(b)) return tier(a) < tier(b);
    return a.label.excursion < b.label.excursion;
  });
  int current = -1;
  int rank = 0;
  for (auto& ls : out) {
    if (ls.label.half_cycle != current) {
      current = ls.label.half_cycle;
      rank = 0;
    }
    ls.label.family = rank++;
  }
  return out;
}

// A short/long pair passing its closest approach as q increases.
struct CutoffEvent {
  int half_cycle;
  int branch_a;
  int branch_b;
  double q_closest;
  double min_distance;    // |ti_a - ti_b| at the closest approach
  int discarded_branch;   // the member whose |exp(iS)| grows beyond q_closest
};

struct RelevanceHistory {
  std::vector<CutoffEvent> events;
};

struct AuditEntry {
  double q;
  double phi;
  int branch_id;
  int half_cycle;
  std::string family;
  RelevanceReason reason;
  ComplexTime ti;
  ComplexTime tr;
};

struct Selection {
  std::vector<LabelledSaddle> saddles;
  std::vector<AuditEntry> audit;  // one entry per discarded saddle
  std::vector<std::string> warnings;
};

namespace detail {

inline const LabelledSaddle* find_partner(const FieldParams& p, std::span<const LabelledSaddle> set,
                                          const LabelledSaddle& s) {
  const double T = p.period();
  const double shift = s.label.half_cycle == 1 ? -0.5 * T : 0.5 * T;
  const LabelledSaddle* best = nullptr;
  double best_d = 1e-6;
  for (const auto& c : set) {
    if (c.label.half_cycle == s.label.half_cycle) continue;
    for (int k = -1; k <= 1; ++k) {
      const double off = shift + k * T;
      const double d = std::max(std::abs(c.saddle.ti - s.saddle.ti - off),
                                std::abs(c.saddle.tr - s.saddle.tr - off));
      if (d < best_d) {
        best_d = d;
        best = &c;
      }
    }
  }
  return best;
}

}  // namespace detail

// Sets `relevant` on every saddle. Without a history only tier (a) applies and
// a warning is attached.
inline Selection select_relevant(const FieldParams& p, const TargetParams& tgt,
                                 std::span<const LabelledSaddle> labelled, double q,
                                 const RelevanceHistory* history,
                                 const RelevanceOptions& opt = {}) {
  Selection sel;
  sel.saddles.assign(labelled.begin(), labelled.end());
  if (!history) {
    sel.warnings.emplace_back("no continuation history across q: tier (b) relevance skipped");
  }
  for (auto& ls : sel.saddles) {
    ls.label.reason = admissibility(p, tgt, ls.saddle, opt);
    ls.label.admissible = ls.label.reason == RelevanceReason::relevant;
    ls.label.relevant = ls.label.admissible;
    if (ls.label.relevant && history && ls.label.branch_id >= 0) {
      for (const auto& ev : history->events) {
        if (ev.discarded_branch == ls.label.branch_id && q > ev.q_closest) {
          ls.label.relevant = false;
          ls.label.reason = RelevanceReason::past_closest_approach;
        }
      }
    }
  }

  double dominant = 0.0;
  for (const auto& ls : sel.saddles) {
    if (ls.label.relevant && ls.label.family <= 1) {
      dominant = std::max(dominant, std::exp(-ls.saddle.action.imag()));
    }
  }
  if (dominant == 0.0) {
    for (const auto& ls : sel.saddles) {
      if (ls.label.relevant) dominant = std::max(dominant, std::exp(-ls.saddle.action.imag()));
    }
  }
  for (auto& ls : sel.saddles) {
    if (ls.label.relevant && ls.label.family >= 2 &&
        std::exp(-ls.saddle.action.imag()) < opt.extra_threshold * dominant) {
      ls.label.relevant = false;
      ls.label.reason = RelevanceReason::extra_suppressed;
    }
  }

  // Second half-cycle follows its partner so both halves are treated alike.
  const std::vector<LabelledSaddle> snapshot = sel.saddles;
  for (auto& ls : sel.saddles) {
    if (ls.label.half_cycle != 1) continue;
    const auto* partner = detail::find_partner(p, snapshot, ls);
    if (partner && partner->label.relevant != ls.label.relevant) {
      ls.label.relevant = partner->label.relevant;
      ls.label.reason = partner->label.relevant ? RelevanceReason::relevant
                                                : RelevanceReason::partner_rule;
    }
  }

  for (const auto& ls : sel.saddles) {
    if (!ls.label.relevant) {
      sel.audit.push_back({q, p.phi(), ls.label.branch_id, ls.label.half_cycle,
                           ls.label.family_name(), ls.label.reason, ls.saddle.ti, ls.saddle.tr});
    }
  }
  return sel;
}

inline std::vector<LabelledSaddle> relevant_only(std::span<const LabelledSaddle> s) {
  std::vector<LabelledSaddle> out;
  for (const auto& x : s) {
    if (x.label.relevant) out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep over harmonic order with branch tracking

struct SweepOptions {
  CycleOptions cycle{};
  RelevanceOptions relevance{};
  double q_step = 0.25;
  // Disable tracking to get tier (a) relevance only.
  bool track = true;
};

struct OrderResult {
  double q = 0.0;
  std::vector<LabelledSaddle> saddles;  // every saddle of the period, labelled
  std::vector<AuditEntry> audit;
  std::vector<std::string> warnings;
  bool below_threshold = false;
};

// |ti_a - ti_b| of a tracked short/long pair at one step of the sweep.
struct PairSample {
  double q;
  double distance;
  cplx hessdet_a;
  cplx hessdet_b;
};

struct OrderSweep {
  double q_base = 0.0;
  std::vector<OrderResult> orders;  // in the order of the requested q values
  RelevanceHistory history;
  std::map<int, std::vector<PairSample>> pair_track;  // keyed by half-cycle
  std::vector<int> lost_branches;
  std::vector<std::string> warnings;
};

// Lowest order with a well separated short/long pair: ceil((Ip + Up)/w).
inline double tracking_base(const FieldParams& p, const TargetParams& tgt) {
  return std::ceil((tgt.Ip + p.ponderomotive()) / p.omega());
}

namespace detail {

struct Branch {
  TrackedSaddle tracked;
  cplx sqrt_ref;
};

inline std::vector<TrackedSaddle> as_tracked(const std::vector<Branch>& b) {
  std::vector<TrackedSaddle> out;
  out.reserve(b.size());
  for (const auto& x : b) out.push_back(x.tracked);
  return out;
}

// Continues every branch to q_to. Branches that cannot be followed are
// dropped together with their T/2 partner.
inline void advance(const FieldParams& p, const TargetParams& tgt, double q_from, double q_to,
                    std::vector<Branch>& branches, OrderSweep& sweep) {
  while (!branches.empty()) {
    try {
      const auto tracked = as_tracked(branches);
      ContinuationOptions copt;
      copt.max_step = std::abs(q_to - q_from);
      auto res = continue_in(p, tgt, q_from, ContinuationParameter::q, tracked, q_to, copt);
      for (std::size_t i = 0; i < branches.size(); ++i) {
        branches[i].tracked = res.saddles[i];
        branches[i].sqrt_ref = sqrt_neg_hessdet(res.saddles[i].saddle, branches[i].sqrt_ref);
      }
      return;
    } catch (const BranchLostError& e) {
      const int lost = e.branch_id;
      sweep.lost_branches.push_back(lost);
      sweep.warnings.push_back("branch " + std::to_string(lost) + " lost near q=" +
                               std::to_string(e.last_value));
      std::erase_if(branches, [&](const Branch& b) {
        return b.tracked.branch_id == lost || b.tracked.branch_id == (lost ^ 1);
      });
    }
  }
}

inline const Branch* find_branch(const std::vector<Branch>& v, int id) {
  for (const auto& b : v) {
    if (b.tracked.branch_id == id) return &b;
  }
  return nullptr;
}

}  // namespace detail

// Solves, labels and selects the saddles for each requested order. Branches
// admissible at the tracking base are followed in q (upwards and downwards)
// to give every saddle a stable identity, a continuous sqrt(-det S'') sheet and
// the closest-approach history used by tier (b).
inline OrderSweep sweep_orders(const FieldParams& p, const TargetParams& tgt,
                               std::span<const double> q_values, const SweepOptions& opt = {}) {
  OrderSweep sweep;
  if (q_values.empty()) return sweep;
  const double q_lo = *std::min_element(q_values.begin(), q_values.end());
  const double q_hi = *std::max_element(q_values.begin(), q_values.end());
  const double threshold_q = tgt.Ip / p.omega();
  sweep.q_base = tracking_base(p, tgt);

  // Branch states at every requested order, from tracking.
  std::map<double, std::vector<detail::Branch>> snapshots;

  if (opt.track) {
    const auto base_cycle = solve_cycle(p, tgt, sweep.q_base, opt.cycle);
    const auto base_labels = classify(p, tgt, base_cycle.saddles, opt.relevance);
    std::vector<detail::Branch> base;
    for (const auto& ls : base_labels) {
      if (!ls.label.admissible) continue;
      const int id = 2 * ls.label.family + ls.label.half_cycle;
      base.push_back({{id, ls.saddle}, sqrt_neg_hessdet(ls.saddle)});
    }
    // Both half-cycles must be present for a branch to be tracked.
    std::erase_if(base, [&](const detail::Branch& b) {
      return detail::find_branch(base, b.tracked.branch_id ^ 1) == nullptr;
    });
    for (auto& b : base) {
      if (b.tracked.branch_id & 1) {
        b.sqrt_ref = detail::find_branch(base, b.tracked.branch_id ^ 1)->sqrt_ref;
      }
    }
    snapshots[sweep.q_base] = base;

    auto schedule = [&](double from, double to) {
      std::set<double> pts;
      const double dir = to > from ? 1.0 : -1.0;
      const int n = static_cast<int>(std::ceil(std::abs(to - from) / opt.q_step - 1e-9));
      for (int k = 1; k <= n; ++k) pts.insert(from + dir * std::min(k * opt.q_step, std::abs(to - from)));
      for (double q : q_values) {
        if ((q - from) * dir > 0.0 && (to - q) * dir >= 0.0) pts.insert(q);
      }
      std::vector<double> v(pts.begin(), pts.end());
      if (dir < 0) std::reverse(v.begin(), v.end());
      return v;
    };

    auto record_pairs = [&](double q, const std::vector<detail::Branch>& br) {
      for (int h = 0; h < 2; ++h) {
        const auto* a = detail::find_branch(br, h);
        const auto* b = detail::find_branch(br, 2 + h);
        if (!a || !b) continue;
        sweep.pair_track[h].push_back({q, std::abs(a->tracked.saddle.ti - b->tracked.saddle.ti),
                                       a->tracked.saddle.hessdet, b->tracked.saddle.hessdet});
      }
    };

    // Upwards, watching the short/long pairs for their closest approach.
    {
      auto branches = base;
      double q = sweep.q_base;
      record_pairs(q, branches);
      std::set<int> fired;
      for (double next : schedule(sweep.q_base, std::max(q_hi, sweep.q_base))) {
        detail::advance(p, tgt, q, next, branches, sweep);
        q = next;
        snapshots[q] = branches;
        record_pairs(q, branches);
        for (int h = 0; h < 2; ++h) {
          const auto& tr = sweep.pair_track[h];
          if (fired.count(h) || tr.size() < 3) continue;
          const auto& s0 = tr[tr.size() - 3];
          const auto& s1 = tr[tr.size() - 2];
          const auto& s2 = tr[tr.size() - 1];
          if (!(s1.distance < s0.distance && s1.distance <= s2.distance)) continue;
          // Vertex of the parabola through the three samples.
          const double x0 = s0.q, x1 = s1.q, x2 = s2.q;
          const double y0 = s0.distance, y1 = s1.distance, y2 = s2.distance;
          const double den = (x0 - x1) * (x0 - x2) * (x1 - x2);
          const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
          const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
          double qc = x1;
          double dmin = y1;
          if (a > 0.0) {
            qc = std::clamp(-b / (2.0 * a), x0, x2);
            const double c = y1 - a * x1 * x1 - b * x1;
            dmin = std::max(0.0, a * qc * qc + b * qc + c);
          }
          const auto* sa = detail::find_branch(branches, h);
          const auto* sb = detail::find_branch(branches, 2 + h);
          if (!sa || !sb) continue;
          // d(Im S)/dq = w Im(tr): the member with Im(tr) < 0 grows.
          const int discarded = sa->tracked.saddle.tr.imag() < sb->tracked.saddle.tr.imag()
                                    ? sa->tracked.branch_id
                                    : sb->tracked.branch_id;
          sweep.history.events.push_back({h, h, 2 + h, qc, dmin, discarded});
          fired.insert(h);
        }
      }
    }
    // Downwards, for identity only.
    {
      auto branches = base;
      double q = sweep.q_base;
      for (double next : schedule(sweep.q_base, std::min(q_lo, sweep.q_base))) {
        if (next * p.omega() <= tgt.Ip) break;
        detail::advance(p, tgt, q, next, branches, sweep);
        q = next;
        snapshots[q] = branches;
      }
    }
  }

  for (double q : q_values) {
    OrderResult res;
    res.q = q;
    if (!(q > threshold_q)) {
      res.below_threshold = true;
      res.warnings.emplace_back("below ionisation threshold");
      sweep.orders.push_back(std::move(res));
      continue;
    }
    auto cycle = solve_cycle(p, tgt, q, opt.cycle);
    std::vector<SaddlePoint> merged = std::move(cycle.saddles);
    const auto snap = snapshots.find(q);
    if (snap != snapshots.end()) {
      for (const auto& b : snap->second) {
        insert_unique(merged, fold_to_period(p, tgt, b.tracked.saddle), p.period(), 1e-6);
      }
    }
    sort_saddles(merged);
    auto labelled = classify(p, tgt, merged, opt.relevance);
    if (snap != snapshots.end()) {
      for (auto& ls : labelled) {
        for (const auto& b : snap->second) {
          if (saddle_distance(ls.saddle, b.tracked.saddle, p.period()) < 1e-6) {
            ls.label.branch_id = b.tracked.branch_id;
            ls.sqrt_reference = b.sqrt_ref;
            break;
          }
        }
      }
      // Tracked short/long branches keep their names past the cutoff; the
      // rest of each half-cycle is renumbered from extra-3 in classify order.
      std::array<int, 2> next_extra{2, 2};
      for (auto& ls : labelled) {
        const int id = ls.label.branch_id;
        if (id >= 0 && id < 4) {
          ls.label.family = id >> 1;
        } else {
          ls.label.family = next_extra[static_cast<std::size_t>(ls.label.half_cycle)]++;
        }
      }
    }
    auto sel = select_relevant(p, tgt, labelled, q, opt.track ? &sweep.history : nullptr,
                               opt.relevance);
    res.saddles = std::move(sel.saddles);
    res.audit = std::move(sel.audit);
    res.warnings = std::move(sel.warnings);
    sweep.orders.push_back(std::move(res));
  }
  return sweep;
}

}  // namespace hhg2d
