#pragma once

// Run configuration: sectioned key-value input with explicit unit suffixes,
// resolved into atomic-unit parameters before any computation starts.
//
//   [field]   lambda | omega,  I1 | E1,  R | I2,  phi
//   [target]  species | Ip
//   [run]     q_min, q_max, n_phi, dme_form, oracle, output_dir,
//             seed_density, jobs
//
// Each alternative pair accepts at most one member; a pair left empty takes
// the default (800 nm, 1.5e14 W/cm2, R = 0.12, phi = 0, argon, H12-H35).

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "hhg2d/dipole_engine.hpp"
#include "hhg2d/error.hpp"
#include "hhg2d/units_field.hpp"

namespace hhg2d {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kFieldAtomicVm = 5.14220674763e11;  // V/m per a.u.

struct Species {
  std::string_view name;
  double Ip;  // a.u.
};

inline constexpr std::array<Species, 6> kSpecies{{
    {"Ar", 0.5792},
    {"He", 0.9036},
    {"Ne", 0.7925},
    {"Kr", 0.5145},
    {"Xe", 0.4458},
    {"H", 0.5},
}};

inline double species_ip(std::string_view name) {
  for (const auto& s : kSpecies) {
    if (s.name == name) return s.Ip;
  }
  throw DomainError("unknown species '" + std::string(name) + "'");
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct SplitQuantity {
  double value;
  std::string unit;
};

inline SplitQuantity split_quantity(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || !std::isfinite(v)) {
    throw DomainError(key + ": cannot read a number from '" + s + "'");
  }
  return {v, trim(std::string_view(ptr, static_cast<std::size_t>(s.data() + s.size() - ptr)))};
}

[[noreturn]] inline void bad_unit(const std::string& key, const std::string& unit,
                                  const char* allowed) {
  if (unit.empty()) throw DomainError(key + ": a unit suffix is required (" + allowed + ")");
  throw DomainError(key + ": unknown unit '" + unit + "' (" + allowed + ")");
}

}  // namespace detail

// Quantity parsers; each returns atomic units unless noted.

inline double parse_wavelength_nm(const std::string& key, std::string_view text) {
  const auto q = detail::split_quantity(key, text);
  if (q.unit == "nm") return q.value;
  if (q.unit == "um") return q.value * 1e3;
  detail::bad_unit(key, q.unit, "nm, um");
}

inline double parse_frequency(const std::string& key, std::string_view text) {
  const auto q = detail::split_quantity(key, text);
  if (q.unit == "au") return q.value;
  if (q.unit == "eV") return q.value / kHartreeEv;
  detail::bad_unit(key, q.unit, "au, eV");
}

inline double parse_intensity_wcm2(const std::string& key, std::string_view text) {
  const auto q = detail::split_quantity(key, text);
  if (q.unit == "W/cm2" || q.unit == "W/cm^2") return q.value;
  detail::bad_unit(key, q.unit, "W/cm2");
}

inline double parse_field_amplitude(const std::string& key, std::string_view text) {
  const auto q = detail::split_quantity(key, text);
  if (q.unit == "au") return q.value;
  if (q.unit == "V/m") return q.value / kFieldAtomicVm;
  detail::bad_unit(key, q.unit, "au, V/m");
}

inline double parse_angle(const std::string& key, std::string_view text) {
  const auto q = detail::split_quantity(key, text);
  if (q.unit == "rad") return q.value;
  if (q.unit == "deg") return q.value * std::numbers::pi / 180.0;
  if (q.unit == "pi") return q.value * std::numbers::pi;
  detail::bad_unit(key, q.unit, "rad, deg, pi");
}

inline double parse_energy(const std::string& key, std::string_view text) {
  const auto q = detail::split_quantity(key, text);
  if (q.unit == "au") return q.value;
  if (q.unit == "eV") return q.value / kHartreeEv;
  detail::bad_unit(key, q.unit, "au, eV");
}

inline double parse_plain(const std::string& key, std::string_view text) {
  const auto q = detail::split_quantity(key, text);
  if (!q.unit.empty()) throw DomainError(key + ": dimensionless, no unit expected");
  return q.value;
}

inline int parse_int(const std::string& key, std::string_view text) {
  const std::string s = detail::trim(text);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DomainError(key + ": expected an integer, got '" + s + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& key, std::string_view text) {
  const std::string s = detail::trim(text);
  if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "off" || s == "0" || s == "no") return false;
  throw DomainError(key + ": expected true or false, got '" + s + "'");
}

// Resolved, validated parameters in atomic units.
struct ResolvedConfig {
  FieldParams field{0.06538, 0.0, 0.056954, 0.0};
  TargetParams target{0.5792};
  std::string species = "Ar";
  int q_min = 12;
  int q_max = 35;
  int n_phi = 64;
  DmeForm dme_form = DmeForm::kappa;
  bool oracle = false;
  std::string output_dir = ".";
  int seed_density = 40;
  int jobs = 0;

  std::vector<double> q_values() const {
    std::vector<double> q;
    for (int k = q_min; k <= q_max; ++k) q.push_back(k);
    return q;
  }
};

class RunConfig {
 public:
  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{
        "field.lambda", "field.omega",     "field.I1",        "field.E1",
        "field.R",      "field.I2",        "field.phi",       "target.species",
        "target.Ip",    "run.q_min",       "run.q_max",       "run.n_phi",
        "run.dme_form", "run.oracle",      "run.output_dir",  "run.seed_density",
        "run.jobs"};
    return k;
  }

  // Later calls override earlier ones for the same key.
  void set(const std::string& key, const std::string& value) {
    if (std::find(keys().begin(), keys().end(), key) == keys().end()) {
      throw DomainError("unknown configuration key '" + key + "'");
    }
    entries_[key] = detail::trim(value);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  ResolvedConfig resolve() const {
    ResolvedConfig r;
    exclusive("field.lambda", "field.omega");
    exclusive("field.I1", "field.E1");
    exclusive("field.R", "field.I2");
    exclusive("target.species", "target.Ip");

    double omega = wavelength_to_omega(800.0);
    if (auto v = get("field.lambda")) omega = wavelength_to_omega(parse_wavelength_nm("field.lambda", *v));
    if (auto v = get("field.omega")) omega = parse_frequency("field.omega", *v);
    if (!(omega > 0.0)) throw DomainError("field.omega must be positive");

    double E1 = intensity_to_field(1.5e14);
    if (auto v = get("field.I1")) E1 = intensity_to_field(parse_intensity_wcm2("field.I1", *v));
    if (auto v = get("field.E1")) E1 = parse_field_amplitude("field.E1", *v);
    if (!(E1 > 0.0)) throw DomainError("field.E1 must be positive");

    double E2 = E1 * std::sqrt(0.12);
    if (auto v = get("field.R")) {
      const double R = parse_plain("field.R", *v);
      if (!(R >= 0.0)) throw DomainError("field.R must be nonnegative");
      E2 = E1 * std::sqrt(R);
    }
    if (auto v = get("field.I2")) {
      const double I2 = parse_intensity_wcm2("field.I2", *v);
      if (!(I2 >= 0.0)) throw DomainError("field.I2 must be nonnegative");
      E2 = I2 > 0.0 ? intensity_to_field(I2) : 0.0;
    }
    double phi = 0.0;
    if (auto v = get("field.phi")) phi = parse_angle("field.phi", *v);
    r.field = FieldParams(E1, E2, omega, phi);

    if (auto v = get("target.species")) {
      r.species = *v;
      r.target = TargetParams(species_ip(*v));
    }
    if (auto v = get("target.Ip")) {
      r.species = "custom";
      r.target = TargetParams(parse_energy("target.Ip", *v));
    }

    if (auto v = get("run.q_min")) r.q_min = parse_int("run.q_min", *v);
    if (auto v = get("run.q_max")) r.q_max = parse_int("run.q_max", *v);
    if (r.q_min < 1 || r.q_max < r.q_min) throw DomainError("need 1 <= q_min <= q_max");
    if (auto v = get("run.n_phi")) r.n_phi = parse_int("run.n_phi", *v);
    if (r.n_phi < 32) throw DomainError("run.n_phi must be at least 32");
    if (auto v = get("run.dme_form")) r.dme_form = parse_dme_form(*v);
    if (auto v = get("run.oracle")) r.oracle = parse_bool("run.oracle", *v);
    if (auto v = get("run.output_dir")) r.output_dir = *v;
    if (r.output_dir.empty()) throw DomainError("run.output_dir must not be empty");
    if (auto v = get("run.seed_density")) r.seed_density = parse_int("run.seed_density", *v);
    if (r.seed_density < 40) throw DomainError("run.seed_density must be at least 40");
    if (auto v = get("run.jobs")) r.jobs = parse_int("run.jobs", *v);
    if (r.jobs < 0) throw DomainError("run.jobs must be nonnegative");
    return r;
  }

 private:
  std::optional<std::string> get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void exclusive(const std::string& a, const std::string& b) const {
    if (has(a) && has(b)) throw DomainError("give either " + a + " or " + b + ", not both");
  }

  std::map<std::string, std::string> entries_;
};

// Reads an INI-style file. Keys outside a section or in an unknown section
// are rejected.
inline RunConfig load_config(std::istream& in, RunConfig base = {}) {
  CLI::ConfigINI ini;
  const auto items = ini.from_config(in);
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (item.parents.size() != 1) {
      throw DomainError("configuration key '" + item.name + "' must sit in a section");
    }
    std::string value;
    for (const auto& s : item.inputs) value += s;
    base.set(item.parents.front() + "." + item.name, value);
  }
  return base;
}

// Every resolved value, one "key = value" line each, in a fixed order.
inline std::vector<std::string> config_echo(const ResolvedConfig& r) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  return {
      "field.E1 = " + num(r.field.E1()) + " au",
      "field.E2 = " + num(r.field.E2()) + " au",
      "field.omega = " + num(r.field.omega()) + " au",
      "field.phi = " + num(r.field.phi()) + " rad",
      "field.R = " + num(r.field.ratio()),
      "target.species = " + r.species,
      "target.Ip = " + num(r.target.Ip) + " au",
      "run.q_min = " + std::to_string(r.q_min),
      "run.q_max = " + std::to_string(r.q_max),
      "run.n_phi = " + std::to_string(r.n_phi),
      "run.dme_form = " + std::string(to_string(r.dme_form)),
      "run.oracle = " + std::string(r.oracle ? "true" : "false"),
      "run.seed_density = " + std::to_string(r.seed_density),
  };
}

}  // namespace hhg2d
