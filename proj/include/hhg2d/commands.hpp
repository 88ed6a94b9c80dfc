#pragma once

// Subcommand bodies behind the hhg2d executable. Each takes a resolved
// configuration, writes its files into cfg.output_dir and returns a process
// exit code; progress and gap reports go to `log`.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hhg2d/config.hpp"
#include "hhg2d/csv_io.hpp"
#include "hhg2d/oracle_integrator.hpp"
#include "hhg2d/phase_scan.hpp"
#include "hhg2d/trajectory.hpp"

namespace hhg2d {

namespace detail {

inline std::ofstream open_output(const ResolvedConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

inline Metadata metadata(const ResolvedConfig& cfg, const std::string& command,
                         std::vector<std::string> extra = {}) {
  return {command, config_echo(cfg), std::move(extra)};
}

inline SpectrumOptions spectrum_options(const ResolvedConfig& cfg) {
  SpectrumOptions o;
  o.sweep.cycle.seeds.n_ionisation = cfg.seed_density;
  o.contribution.dme_form = cfg.dme_form;
  return o;
}

inline bool is_gap(const SpectrumRow& r) {
  for (const auto& f : r.flags) {
    if (f == "sweep_failed" || f.rfind("error:", 0) == 0) return true;
  }
  return false;
}

inline int report_gaps(const std::vector<SpectrumRow>& rows, std::ostream& log) {
  int gaps = 0;
  for (const auto& r : rows) {
    if (!is_gap(r)) continue;
    ++gaps;
    log << "gap at q=" << r.dipole.q << ": " << join_flags(r.flags) << '\n';
  }
  return gaps;
}

}  // namespace detail

// Pearson correlation of log10 intensities over rows where both are positive.
inline std::optional<double> log_correlation(const std::vector<double>& a,
                                             const std::vector<double>& b) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] > 0.0 && b[i] > 0.0) {
      x.push_back(std::log10(a[i]));
      y.push_back(std::log10(b[i]));
    }
  }
  if (x.size() < 3) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

inline OracleConfig oracle_config(const ResolvedConfig& cfg) {
  OracleConfig oc;
  oc.dme_form = cfg.dme_form;
  oc.jobs = cfg.jobs;
  return oc;
}

inline std::vector<SpectrumRow> direct_rows(const ResolvedConfig& cfg) {
  const auto q = cfg.q_values();
  const auto oracle = direct_dipole(cfg.field, cfg.target, oracle_config(cfg), q);
  std::vector<SpectrumRow> rows;
  for (const auto& o : oracle) {
    SpectrumRow r;
    r.dipole.q = o.q;
    r.dipole.Dx = o.Dx;
    r.dipole.Dy = o.Dy;
    r.I = o.I;
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace detail {

inline void write_direct(const ResolvedConfig& cfg, const std::vector<SpectrumRow>& rows) {
  const auto oc = oracle_config(cfg);
  auto os = open_output(cfg, "spectrum_direct.csv");
  write_spectrum_csv(
      os,
      metadata(cfg, "oracle",
               {"method = direct", "oracle.steps_per_cycle = " + std::to_string(oc.steps_per_cycle),
                "oracle.tau_max = " + fmt_num(oc.tau_max) + " periods",
                "oracle.eps = " + fmt_num(oc.eps) + " au",
                "oracle.tr_window = " + std::to_string(oc.tr_window) + " cycles"}),
      rows);
}

}  // namespace detail

inline int cmd_oracle(const ResolvedConfig& cfg, std::ostream& log) {
  const auto rows = direct_rows(cfg);
  detail::write_direct(cfg, rows);
  log << "wrote " << rows.size() << " direct-integration rows\n";
  return 0;
}

inline int cmd_spectrum(const ResolvedConfig& cfg, std::ostream& log) {
  const auto q = cfg.q_values();
  const auto spec = spectrum(cfg.field, cfg.target, q, detail::spectrum_options(cfg));
  {
    auto os = detail::open_output(cfg, "spectrum.csv");
    write_spectrum_csv(os, detail::metadata(cfg, "spectrum", {"method = saddle"}), spec.rows);
  }
  {
    auto os = detail::open_output(cfg, "contributions.csv");
    write_contributions_csv(os, detail::metadata(cfg, "spectrum"), spec.rows, cfg.field.phi());
  }
  {
    auto os = detail::open_output(cfg, "audit.log");
    write_audit_log(os, detail::metadata(cfg, "spectrum"), spec.audit, spec.warnings);
  }
  log << "wrote " << spec.rows.size() << " spectrum rows\n";

  if (cfg.oracle) {
    const auto direct = direct_rows(cfg);
    detail::write_direct(cfg, direct);
    std::vector<double> a, b;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < spec.rows.size(); ++i) {
      a.push_back(spec.rows[i].I.Itotal);
      b.push_back(direct[i].I.Itotal);
      rows.push_back({{"q", spec.rows[i].dipole.q},
                      {"Itotal_saddle", a.back()},
                      {"Itotal_direct", b.back()}});
    }
    const auto r = log_correlation(a, b);
    nlohmann::ordered_json report{{"version", kVersion},
                                  {"config", config_echo(cfg)},
                                  {"log_intensity_pearson", r ? nlohmann::ordered_json(*r)
                                                              : nlohmann::ordered_json(nullptr)},
                                  {"rows", rows}};
    auto os = detail::open_output(cfg, "oracle_report.json");
    os << report.dump(2) << '\n';
    if (r) log << "saddle/direct log-intensity correlation " << *r << '\n';
  }

  const int gaps = detail::report_gaps(spec.rows, log);
  return gaps == 0 ? 0 : 2;
}

inline int cmd_saddles(const ResolvedConfig& cfg, std::ostream& log) {
  const auto q = cfg.q_values();
  auto opt = detail::spectrum_options(cfg).sweep;
  const auto sweep = sweep_orders(cfg.field, cfg.target, q, opt);
  auto os = detail::open_output(cfg, "saddles.csv");
  std::vector<std::string> extra;
  for (const auto& e : sweep.history.events) {
    extra.push_back("closest_approach half_cycle=" + std::to_string(e.half_cycle) +
                    " q=" + fmt_num(e.q_closest) + " distance=" + fmt_num(e.min_distance) +
                    " discarded_branch=" + std::to_string(e.discarded_branch));
  }
  write_saddles_csv(os, detail::metadata(cfg, "saddles", extra), sweep.orders, cfg.field.phi());
  std::size_t n = 0;
  for (const auto& o : sweep.orders) n += o.saddles.size();
  log << "wrote " << n << " saddles over " << sweep.orders.size() << " orders\n";
  return 0;
}

inline int cmd_orbits(const ResolvedConfig& cfg, std::ostream& log, int n_samples = 200) {
  const auto q = cfg.q_values();
  const auto sweep = sweep_orders(cfg.field, cfg.target, q, detail::spectrum_options(cfg).sweep);
  std::vector<TaggedOrbit> orbits;
  for (const auto& o : sweep.orders) {
    for (const auto& s : o.saddles) {
      if (!s.label.relevant) continue;
      orbits.push_back({o.q, displacement(cfg.field, s.saddle, n_samples, s.label)});
    }
  }
  auto os = detail::open_output(cfg, "orbits.csv");
  write_orbits_csv(os, detail::metadata(cfg, "orbits",
                                        {"contour = vertical from ti to Re(ti) then real axis"}),
                   orbits);
  log << "wrote " << orbits.size() << " orbits\n";
  return 0;
}

inline int cmd_lissajous(const ResolvedConfig& cfg, std::ostream& log, int n_samples = 256) {
  const auto curve = lissajous(cfg.field, n_samples);
  auto os = detail::open_output(cfg, "lissajous.csv");
  write_lissajous_csv(os, detail::metadata(cfg, "lissajous"), cfg.field.phi(), curve);
  log << "wrote " << curve.size() << " field samples\n";
  return 0;
}

inline int cmd_scan(const ResolvedConfig& cfg, std::ostream& log) {
  const auto q = cfg.q_values();
  ScanOptions opt;
  opt.spectrum = detail::spectrum_options(cfg);
  opt.jobs = cfg.jobs;
  const auto scan = run_scan(cfg.field, cfg.target, q, cfg.n_phi, opt);
  {
    auto os = detail::open_output(cfg, "scan.csv");
    write_scan_csv(os, detail::metadata(cfg, "scan"), scan);
  }
  {
    auto os = detail::open_output(cfg, "axes.csv");
    write_axes_csv(os, detail::metadata(cfg, "scan",
                                        {"axis sign continuous in phi from Mx > 0 at phi = 0"}),
                   scan);
  }
  log << "wrote " << scan.phis.size() * scan.series.size() << " scan rows\n";
  for (const auto& w : scan.warnings) log << "warning: " << w << '\n';
  for (const auto& g : scan.gaps) log << "gap: " << g << '\n';
  return scan.gaps.empty() ? 0 : 2;
}

namespace detail {

inline nlohmann::ordered_json fit_json(const ModulationFit& f) {
  return {{"a0", f.a0}, {"a1", f.a1}, {"b1", f.b1}, {"a2", f.a2},  {"b2", f.b2},
          {"a4", f.a4}, {"b4", f.b4}, {"extended", f.extended}, {"rms", f.rms},
          {"peak_to_peak", f.peak_to_peak}};
}

inline std::vector<MeasuredSeries> read_series_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return ingest_series(read_table(in));
}

}  // namespace detail

// Fits the reference modulation of every order in `data_path` and aligns the
// measured series to it. The reference is read from `reference_path` when
// given, otherwise computed by a phase scan of the configured field.
inline int cmd_fit(const ResolvedConfig& cfg, const std::string& data_path,
                   const std::optional<std::string>& reference_path, std::ostream& log) {
  const auto measured = detail::read_series_file(data_path);
  std::vector<MeasuredSeries> reference;
  if (reference_path) {
    reference = detail::read_series_file(*reference_path);
  } else {
    std::vector<double> q;
    for (const auto& m : measured) q.push_back(m.q);
    ScanOptions opt;
    opt.spectrum = detail::spectrum_options(cfg);
    opt.jobs = cfg.jobs;
    const auto scan = run_scan(cfg.field, cfg.target, q, cfg.n_phi, opt);
    for (const auto& s : scan.series) reference.push_back({s.q, scan.phis, s.Itotal});
  }

  nlohmann::ordered_json orders = nlohmann::ordered_json::array();
  int failures = 0;
  for (const auto& m : measured) {
    nlohmann::ordered_json entry{{"q", m.q}};
    const MeasuredSeries* ref = nullptr;
    for (const auto& r : reference) {
      if (r.q == m.q) ref = &r;
    }
    try {
      if (!ref) throw SchemaError("no reference series for this order");
      const auto fit = fit_modulation(ref->values, ref->phis);
      entry["reference_fit"] = detail::fit_json(fit);
      try {
        const auto mod = classify_modality(ref->values, ref->phis);
        entry["modality"] = to_string(mod.modality);
        entry["maxima_per_pi"] = mod.maxima_per_pi;
      } catch (const ClassificationRefused& e) {
        entry["modality"] = nullptr;
        entry["modality_refused"] = e.what();
      }
      const auto shift = align_shift(fit, m.values, m.phis);
      entry["tau"] = shift.tau;
      entry["objective"] = shift.objective;
      entry["degenerate"] = shift.degenerate;
      if (!shift.warning.empty()) entry["warning"] = shift.warning;
    } catch (const Error& e) {
      ++failures;
      entry["error"] = e.what();
      log << "fit failed at q=" << m.q << ": " << e.what() << '\n';
    }
    orders.push_back(std::move(entry));
  }
  nlohmann::ordered_json report{
      {"version", kVersion},
      {"config", config_echo(cfg)},
      {"fit_variable", "one fundamental fit period spans 2pi of phi"},
      {"model", "a0 + a1 cos(phi) + b1 sin(phi) + a2 cos(2phi) + b2 sin(2phi)"
                " [+ a4 cos(4phi) + b4 sin(4phi) when extended]"},
      {"orders", orders}};
  auto os = detail::open_output(cfg, "fit.json");
  os << report.dump(2) << '\n';
  log << "fitted " << measured.size() - static_cast<std::size_t>(failures) << " of "
      << measured.size() << " orders\n";
  return failures == 0 ? 0 : 2;
}

}  // namespace hhg2d
