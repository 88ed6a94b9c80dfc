#pragma once

// Plain CSV output with a '#'-prefixed metadata header, and the matching
// reader. Numbers are written with a fixed 12-digit exponent format so equal
// inputs produce byte-identical files.

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hhg2d/config.hpp"
#include "hhg2d/dipole_engine.hpp"
#include "hhg2d/error.hpp"
#include "hhg2d/phase_scan.hpp"
#include "hhg2d/trajectory.hpp"

namespace hhg2d {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

struct Metadata {
  std::string command;
  std::vector<std::string> config;  // from config_echo
  std::vector<std::string> extra;   // command-specific lines
};

inline void write_header(std::ostream& os, const Metadata& m) {
  os << "# hhg2d " << kVersion << '\n';
  os << "# command: " << m.command << '\n';
  os << "# units: atomic units (hbar = m_e = e = 1), times in a.u., phases in rad\n";
  for (const auto& c : m.config) os << "# " << c << '\n';
  for (const auto& e : m.extra) os << "# " << e << '\n';
}

namespace detail {

// Commas would break the column layout of free-text fields.
inline std::string csv_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ' ');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

class Row {
 public:
  explicit Row(std::ostream& os) : os_(os) {}
  ~Row() { os_ << '\n'; }
  Row(const Row&) = delete;
  Row& operator=(const Row&) = delete;

  Row& operator<<(double v) { return put(fmt_num(v)); }
  Row& operator<<(int v) { return put(std::to_string(v)); }
  Row& operator<<(cplx z) { return put(fmt_num(z.real())).put(fmt_num(z.imag())); }
  Row& operator<<(const std::string& s) { return put(csv_text(s)); }
  Row& operator<<(const char* s) { return put(csv_text(s)); }

 private:
  Row& put(const std::string& s) {
    if (!first_) os_ << ',';
    os_ << s;
    first_ = false;
    return *this;
  }
  std::ostream& os_;
  bool first_ = true;
};

inline void header_line(std::ostream& os, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

}  // namespace detail

// --- writers ---------------------------------------------------------------

inline void write_spectrum_csv(std::ostream& os, const Metadata& m,
                               const std::vector<SpectrumRow>& rows) {
  write_header(os, m);
  detail::header_line(os, {"q", "Ix", "Iy", "Itotal", "n_saddles", "flags"});
  for (const auto& r : rows) {
    detail::Row(os) << r.dipole.q << r.I.Ix << r.I.Iy << r.I.Itotal << r.n_saddles
                    << join_flags(r.flags);
  }
}

inline void write_contributions_csv(std::ostream& os, const Metadata& m,
                                    const std::vector<SpectrumRow>& rows, double phi) {
  write_header(os, m);
  detail::header_line(
      os, {"q", "phi", "branch_id", "half_cycle", "family", "re_d_rec_x", "im_d_rec_x",
           "re_d_rec_y", "im_d_rec_y", "re_ion_amp", "im_ion_amp", "re_spread", "im_spread",
           "re_hess_factor", "im_hess_factor", "re_phase", "im_phase", "re_total_x",
           "im_total_x", "re_total_y", "im_total_y"});
  for (const auto& r : rows) {
    for (const auto& c : r.dipole.contributions) {
      detail::Row(os) << r.dipole.q << phi << c.label.branch_id << c.label.half_cycle
                      << c.label.family_name() << c.d_rec.x << c.d_rec.y << c.ion_amp
                      << c.spread << c.hess_factor << c.phase << c.total.x << c.total.y;
    }
  }
}

inline void write_saddles_csv(std::ostream& os, const Metadata& m,
                              const std::vector<OrderResult>& orders, double phi) {
  write_header(os, m);
  detail::header_line(os, {"q", "phi", "branch_id", "re_ti", "im_ti", "re_tr", "im_tr", "re_psx",
                           "im_psx", "re_psy", "im_psy", "re_S", "im_S", "residual",
                           "half_cycle", "family", "relevant", "reason"});
  for (const auto& o : orders) {
    for (const auto& s : o.saddles) {
      const auto& sp = s.saddle;
      detail::Row(os) << o.q << phi << s.label.branch_id << sp.ti << sp.tr << sp.ps.x << sp.ps.y
                      << sp.action << sp.residual << s.label.half_cycle
                      << s.label.family_name() << (s.label.relevant ? 1 : 0)
                      << to_string(s.label.reason);
    }
  }
}

inline void write_scan_csv(std::ostream& os, const Metadata& m, const PhaseScan& scan) {
  write_header(os, m);
  detail::header_line(os, {"phi", "q", "Ix", "Iy", "Itotal"});
  for (std::size_t j = 0; j < scan.phis.size(); ++j) {
    for (const auto& s : scan.series) {
      detail::Row(os) << scan.phis[j] << s.q << s.Ix[j] << s.Iy[j] << s.Itotal[j];
    }
  }
}

// Signed axes per tracked orbit; phases where the orbit is absent are skipped.
inline void write_axes_csv(std::ostream& os, const Metadata& m, const PhaseScan& scan) {
  write_header(os, m);
  detail::header_line(os, {"q", "phi", "branch_id", "Mx", "My", "Nx", "Ny", "gamma",
                           "ellipticity", "half_cycle", "family"});
  for (const auto& o : scan.orbits) {
    for (std::size_t j = 0; j < o.axes.size(); ++j) {
      if (!o.axes[j]) continue;
      const auto& e = *o.axes[j];
      detail::Row(os) << o.q << scan.phis[j] << o.orbit_id << e.M.x << e.M.y << e.N.x << e.N.y
                      << e.gamma << e.ellipticity << o.half_cycle << o.family;
    }
  }
}

struct TaggedOrbit {
  double q;
  Orbit orbit;
};

inline void write_orbits_csv(std::ostream& os, const Metadata& m,
                             const std::vector<TaggedOrbit>& orbits) {
  write_header(os, m);
  detail::header_line(os, {"branch_id", "t", "sx", "sy", "q", "half_cycle", "family"});
  for (const auto& o : orbits) {
    for (const auto& s : o.orbit.samples) {
      detail::Row(os) << o.orbit.label.branch_id << s.t << s.sx << s.sy << o.q
                      << o.orbit.label.half_cycle << o.orbit.label.family_name();
    }
  }
}

inline void write_lissajous_csv(std::ostream& os, const Metadata& m, double phi,
                                const std::vector<LissajousSample>& curve) {
  write_header(os, m);
  detail::header_line(os, {"phi", "t", "Ex", "Ey"});
  for (const auto& s : curve) detail::Row(os) << phi << s.t << s.e.x << s.e.y;
}

inline void write_audit_log(std::ostream& os, const Metadata& m,
                            const std::vector<AuditEntry>& audit,
                            const std::vector<std::string>& warnings) {
  write_header(os, m);
  for (const auto& w : warnings) os << "warning: " << w << '\n';
  for (const auto& a : audit) {
    os << "discarded q=" << fmt_num(a.q) << " phi=" << fmt_num(a.phi) << " branch=" << a.branch_id
       << " half_cycle=" << a.half_cycle << " family=" << a.family
       << " reason=" << to_string(a.reason) << " ti=(" << fmt_num(a.ti.real()) << ","
       << fmt_num(a.ti.imag()) << ") tr=(" << fmt_num(a.tr.real()) << ","
       << fmt_num(a.tr.imag()) << ")\n";
  }
}

// --- reader ----------------------------------------------------------------

struct Table {
  std::vector<std::string> metadata;  // header lines without the leading '#'
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns.begin());
  }

  std::vector<double> numbers(const std::string& name) const {
    const auto c = find(name);
    if (!c) throw SchemaError("missing column '" + name + "'");
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& cell = rows[i][*c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw SchemaError("row " + std::to_string(i + 1) + ", column '" + name +
                          "': not a number: '" + cell + "'");
      }
      out.push_back(v);
    }
    return out;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(detail::trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Table read_table(std::istream& in) {
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!have_header) t.metadata.push_back(detail::trim(std::string_view(line).substr(1)));
      continue;
    }
    auto cells = split_csv_line(line);
    if (!have_header) {
      t.columns = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(t.columns.size()) + " fields, found " +
                        std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw SchemaError("no column header found");
  return t;
}

// One harmonic order of an ingested phase series, sorted by phase.
struct MeasuredSeries {
  double q;
  std::vector<double> phis;
  std::vector<double> values;
};

// Accepts phase as `phi` (rad) or `angle_deg`, the order as `q`, and the
// signal as `intensity` or `Itotal`.
inline std::vector<MeasuredSeries> ingest_series(const Table& t) {
  auto report = [&](const std::string& what) {
    std::string found;
    for (const auto& c : t.columns) found += (found.empty() ? "" : ", ") + c;
    throw SchemaError(what + "; found columns: " + found);
  };
  std::vector<double> phi;
  if (t.find("phi")) {
    phi = t.numbers("phi");
  } else if (t.find("angle_deg")) {
    phi = t.numbers("angle_deg");
    for (auto& v : phi) v *= std::numbers::pi / 180.0;
  } else {
    report("expected a phase column 'phi' or 'angle_deg'");
  }
  if (!t.find("q")) report("expected an order column 'q'");
  const auto q = t.numbers("q");
  std::vector<double> y;
  if (t.find("intensity")) {
    y = t.numbers("intensity");
  } else if (t.find("Itotal")) {
    y = t.numbers("Itotal");
  } else {
    report("expected a signal column 'intensity' or 'Itotal'");
  }

  std::map<double, std::vector<std::pair<double, double>>> by_q;
  for (std::size_t i = 0; i < q.size(); ++i) by_q[q[i]].emplace_back(phi[i], y[i]);
  std::vector<MeasuredSeries> out;
  for (auto& [order, pts] : by_q) {
    std::sort(pts.begin(), pts.end());
    MeasuredSeries s{order, {}, {}};
    for (const auto& [a, b] : pts) {
      s.phis.push_back(a);
      s.values.push_back(b);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hhg2d
