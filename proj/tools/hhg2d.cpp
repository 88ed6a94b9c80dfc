// hhg2d command-line driver.
//
//   hhg2d [options] <spectrum|scan|saddles|orbits|lissajous|fit|oracle>
//
// Options may come before or after the subcommand. --config reads an INI
// file first; explicit flags override its values.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hhg2d/commands.hpp"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Flags that map one-to-one onto configuration keys.
constexpr Flag kFlags[] = {
    {"--lambda", "field.lambda", "fundamental wavelength, e.g. 800nm"},
    {"--omega", "field.omega", "fundamental frequency, e.g. 0.057au or 1.55eV"},
    {"--I1", "field.I1", "fundamental intensity, e.g. 1.5e14W/cm2"},
    {"--E1", "field.E1", "fundamental amplitude, e.g. 0.0654au"},
    {"--R", "field.R", "intensity ratio I2/I1 (dimensionless)"},
    {"--I2", "field.I2", "second-harmonic intensity, e.g. 1.8e13W/cm2"},
    {"--phi", "field.phi", "two-colour phase, e.g. 0rad, 90deg, 0.5pi"},
    {"--species", "target.species", "target atom (Ar, He, Ne, Kr, Xe, H)"},
    {"--Ip", "target.Ip", "ionisation potential, e.g. 15.76eV"},
    {"--q-min", "run.q_min", "lowest harmonic order"},
    {"--q-max", "run.q_max", "highest harmonic order"},
    {"--n-phi", "run.n_phi", "phase grid size for scans (>= 32)"},
    {"--dme-form", "run.dme_form", "dipole matrix element: kappa or hydrogenic"},
    {"--output-dir,-o", "run.output_dir", "directory for output files"},
    {"--seed-density", "run.seed_density", "ionisation-time seeds per period (>= 40)"},
    {"--jobs,-j", "run.jobs", "worker threads, 0 = all cores"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-colour high-harmonic spectra from complex quantum orbits"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config,-c", config_path, "INI configuration file")->check(CLI::ExistingFile);
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> given;
  for (const auto& f : kFlags) given[f.key] = app.add_option(f.name, values[f.key], f.help);
  bool oracle = false;
  app.add_flag("--oracle", oracle, "also run direct integration (spectrum)");

  auto* spectrum = app.add_subcommand("spectrum", "harmonic spectrum at one phase");
  auto* scan = app.add_subcommand("scan", "intensities and orbit axes over the phase grid");
  auto* saddles = app.add_subcommand("saddles", "saddle table with labels and relevance");
  auto* orbits = app.add_subcommand("orbits", "real-space displacement of relevant orbits");
  auto* liss = app.add_subcommand("lissajous", "field curve over one period");
  auto* oracle_cmd = app.add_subcommand("oracle", "spectrum by direct integration");
  auto* fit = app.add_subcommand("fit", "fit and align a measured phase series");
  std::string data_path;
  std::string reference_path;
  fit->add_option("data", data_path, "CSV with phi|angle_deg, q, intensity|Itotal")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--reference", reference_path, "reference series CSV (default: simulate)")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    hhg2d::RunConfig rc;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      rc = hhg2d::load_config(in);
    }
    for (const auto& f : kFlags) {
      if (given[f.key]->count() > 0) rc.set(f.key, values[f.key]);
    }
    if (oracle) rc.set("run.oracle", "true");
    const auto cfg = rc.resolve();

    if (spectrum->parsed()) return hhg2d::cmd_spectrum(cfg, std::cerr);
    if (scan->parsed()) return hhg2d::cmd_scan(cfg, std::cerr);
    if (saddles->parsed()) return hhg2d::cmd_saddles(cfg, std::cerr);
    if (orbits->parsed()) return hhg2d::cmd_orbits(cfg, std::cerr);
    if (liss->parsed()) return hhg2d::cmd_lissajous(cfg, std::cerr);
    if (oracle_cmd->parsed()) return hhg2d::cmd_oracle(cfg, std::cerr);
    if (fit->parsed()) {
      std::optional<std::string> ref;
      if (!reference_path.empty()) ref = reference_path;
      return hhg2d::cmd_fit(cfg, data_path, ref, std::cerr);
    }
  } catch (const hhg2d::DomainError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 64;
  } catch (const hhg2d::SchemaError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 65;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
