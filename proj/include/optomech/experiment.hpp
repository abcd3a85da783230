#pragma once

// Run configuration, figure presets and CSV emission for the command-line
// front end.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "optomech/dynamics.hpp"
#include "optomech/errors.hpp"
#include "optomech/gaussian.hpp"
#include "optomech/model.hpp"
#include "optomech/output_mode.hpp"
#include "optomech/parallel.hpp"
#include "optomech/tolerances.hpp"

namespace optomech {

inline constexpr std::string_view kVersion = "1.0.0";

// Time unit of the figure axes: 2 pi / (10^3 gamma).
inline constexpr double kFigureTimeUnit = 2.0 * std::numbers::pi / 1000.0;

enum class Regime { Intracavity, BadCavity };
enum class RunMode { Series, Sweep };

inline std::string_view to_string(Regime r) { return r == Regime::Intracavity ? "intracavity" : "badcavity"; }
inline std::string_view to_string(RunMode m) { return m == RunMode::Series ? "series" : "sweep"; }

struct RunConfig {
  Scheme scheme = Scheme::SorensenMolmer;
  Regime regime = Regime::Intracavity;
  RunMode mode = RunMode::Series;

  // intracavity couplings
  double g1 = 0.0;
  double g2 = 0.0;
  // bad-cavity effective couplings g_i^2 / kappa_i
  double G1 = 0.0;
  double G2 = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double delta = 0.0;
  std::vector<double> n_th;

  // intracavity grid
  double t_max = 0.0;
  double dt = 0.0;
  int sample_stride = 1;
  // bad-cavity grid: tau_k = tau_max * k / tau_points, k = 1..tau_points
  double tau_max = 0.0;
  int tau_points = 0;

  // scheme_or_config column of sweep CSVs; defaults to the scheme name
  std::string label;
  std::string output;

  bool operator==(const RunConfig&) const = default;

  SystemParams system(double occupation) const {
    return {g1, g2, kappa1, kappa2, delta, 1.0, occupation};
  }
  BadCavityParams bad_cavity(double occupation) const {
    return {G1, G2, kappa1, kappa2, delta, occupation, 1.0};
  }
  IntegrationConfig integration() const { return {t_max, dt, sample_stride}; }
  std::vector<double> tau_grid() const {
    std::vector<double> grid(static_cast<std::size_t>(tau_points));
    for (int k = 1; k <= tau_points; ++k) grid[k - 1] = tau_max * k / tau_points;
    return grid;
  }
  std::string sweep_label() const { return label.empty() ? std::string(to_string(scheme)) : label; }
};

struct FigurePreset {
  std::string name;
  std::string description;
  std::vector<RunConfig> runs;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int k = 0; k < points; ++k) {
    grid[k] = std::pow(10.0, a + (b - a) * k / (points - 1));
  }
  return grid;
}

inline RunConfig strong_coupling_sm() {
  RunConfig c;
  c.scheme = Scheme::SorensenMolmer;
  c.g1 = c.g2 = 4000.0;
  c.kappa1 = c.kappa2 = 10.0;
  c.delta = 1000.0;
  c.n_th = {10.0, 100.0, 1000.0, 10000.0};
  c.t_max = 0.027;
  c.dt = 2.5e-6;
  c.sample_stride = 4;
  return c;
}

inline RunConfig strong_coupling_bogoliubov() {
  RunConfig c = strong_coupling_sm();
  c.scheme = Scheme::Bogoliubov;
  c.g2 = 3500.0;
  c.delta = 0.0;
  return c;
}

inline RunConfig bad_cavity_sm(double big_g2) {
  RunConfig c;
  c.regime = Regime::BadCavity;
  c.G1 = 667.0;
  c.G2 = big_g2;
  c.kappa1 = c.kappa2 = 6000.0;
  c.delta = 1000.0;
  c.n_th = {10.0, 100.0, 1000.0};
  // six periods, 20 samples per period
  c.tau_max = 6.0 * kFigureTimeUnit;
  c.tau_points = 120;
  return c;
}

}  // namespace detail

/// Frozen figure presets in stable order.
inline std::vector<FigurePreset> list_presets() {
  using namespace detail;
  RunConfig sm_sweep = strong_coupling_sm();
  sm_sweep.mode = RunMode::Sweep;
  sm_sweep.n_th = log_grid(10.0, 1e4, 20);
  sm_sweep.label = "sm";
  RunConfig bg_sweep = strong_coupling_bogoliubov();
  bg_sweep.mode = RunMode::Sweep;
  bg_sweep.n_th = sm_sweep.n_th;
  bg_sweep.label = "bogoliubov";

  RunConfig solid = bad_cavity_sm(667.0);
  solid.mode = RunMode::Sweep;
  solid.n_th = log_grid(10.0, 1e4, 13);
  solid.label = "solid";
  RunConfig dashed = bad_cavity_sm(540.0);
  dashed.mode = RunMode::Sweep;
  dashed.n_th = solid.n_th;
  dashed.label = "dashed";

  return {
      {"fig2a", "intracavity E_N vs time, Sorensen-Molmer scheme", {strong_coupling_sm()}},
      {"fig2b", "intracavity E_N vs time, Bogoliubov-mode scheme", {strong_coupling_bogoliubov()}},
      {"fig3", "maximum intracavity E_N vs n_th, both schemes", {sm_sweep, bg_sweep}},
      {"fig4a", "output-mode E_N vs pulse duration, bad-cavity limit", {bad_cavity_sm(667.0)}},
      {"fig4b", "maximum output-mode E_N vs n_th, G1 = G2 (solid) and G1 != G2 (dashed)", {solid, dashed}},
  };
}

inline FigurePreset find_preset(std::string_view name) {
  for (auto& p : list_presets()) {
    if (p.name == name) return p;
  }
  throw ConfigError(fmt::format("unknown preset '{}'", name), std::string(name), 0);
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline double parse_real(const std::string& text, const std::string& key, int line) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value, std::chars_format::general);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ConfigError(fmt::format("line {}: key '{}': '{}' is not a decimal real", line, key, text), key, line);
  }
  return value;
}

inline int parse_count(const std::string& text, const std::string& key, int line) {
  const double v = parse_real(text, key, line);
  if (v != std::floor(v) || v < 1.0 || v > 1e9) {
    throw ConfigError(fmt::format("line {}: key '{}' must be a positive integer, got '{}'", line, key, text), key, line);
  }
  return static_cast<int>(v);
}

}  // namespace detail

/// Parses a `key = value` document (`#` comments, comma-separated lists).
inline RunConfig parse_config(std::string_view text) {
  using detail::parse_real;
  using detail::trim;
  static const std::set<std::string> kKnown = {"scheme", "regime", "mode",   "g1",          "g2",    "G1",
                                               "G2",     "kappa1", "kappa2", "delta",       "n_th",  "t_max",
                                               "dt",     "sample_stride",    "tau_max",     "tau_points",
                                               "label",  "output"};
  std::map<std::string, std::pair<std::string, int>> entries;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no), "", line_no);
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!kKnown.contains(key)) {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key), key, line_no);
    }
    if (entries.contains(key)) {
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key), key, line_no);
    }
    if (value.empty()) {
      throw ConfigError(fmt::format("line {}: key '{}' has no value", line_no, key), key, line_no);
    }
    entries[key] = {value, line_no};
  }

  const auto require = [&](const std::string& key) -> const std::pair<std::string, int>& {
    const auto it = entries.find(key);
    if (it == entries.end()) {
      throw ConfigError(fmt::format("missing required key '{}'", key), key, 0);
    }
    return it->second;
  };
  const auto forbid = [&](const std::string& key, std::string_view regime) {
    if (const auto it = entries.find(key); it != entries.end()) {
      throw ConfigError(fmt::format("line {}: key '{}' does not apply to regime {}", it->second.second, key, regime),
                        key, it->second.second);
    }
  };
  const auto real = [&](const std::string& key) {
    const auto& [v, l] = require(key);
    return parse_real(v, key, l);
  };
  const auto positive = [&](const std::string& key) {
    const double v = real(key);
    if (!(v > 0.0)) {
      throw ConfigError(fmt::format("line {}: key '{}' must be > 0", entries[key].second, key), key, entries[key].second);
    }
    return v;
  };
  const auto nonnegative = [&](const std::string& key) {
    const double v = real(key);
    if (v < 0.0) {
      throw ConfigError(fmt::format("line {}: key '{}' must be >= 0", entries[key].second, key), key, entries[key].second);
    }
    return v;
  };

  RunConfig cfg;
  {
    const auto& [v, l] = require("scheme");
    if (v == "sm") cfg.scheme = Scheme::SorensenMolmer;
    else if (v == "bogoliubov") cfg.scheme = Scheme::Bogoliubov;
    else throw ConfigError(fmt::format("line {}: scheme must be 'sm' or 'bogoliubov', got '{}'", l, v), "scheme", l);
  }
  {
    const auto& [v, l] = require("regime");
    if (v == "intracavity") cfg.regime = Regime::Intracavity;
    else if (v == "badcavity") cfg.regime = Regime::BadCavity;
    else throw ConfigError(fmt::format("line {}: regime must be 'intracavity' or 'badcavity', got '{}'", l, v), "regime", l);
  }
  if (const auto it = entries.find("mode"); it != entries.end()) {
    const auto& [v, l] = it->second;
    if (v == "series") cfg.mode = RunMode::Series;
    else if (v == "sweep") cfg.mode = RunMode::Sweep;
    else throw ConfigError(fmt::format("line {}: mode must be 'series' or 'sweep', got '{}'", l, v), "mode", l);
  }
  {
    const auto& [v, l] = require("n_th");
    std::stringstream items(v);
    std::string item;
    while (std::getline(items, item, ',')) {
      const double n = parse_real(trim(item), "n_th", l);
      if (n < 0.0) throw ConfigError(fmt::format("line {}: n_th values must be >= 0", l), "n_th", l);
      cfg.n_th.push_back(n);
    }
    if (cfg.n_th.empty()) throw ConfigError(fmt::format("line {}: n_th list is empty", l), "n_th", l);
  }
  cfg.kappa1 = nonnegative("kappa1");
  cfg.kappa2 = nonnegative("kappa2");

  if (cfg.regime == Regime::Intracavity) {
    for (const char* k : {"G1", "G2", "tau_max", "tau_points"}) forbid(k, "intracavity");
    cfg.g1 = nonnegative("g1");
    cfg.g2 = nonnegative("g2");
    if (cfg.scheme == Scheme::SorensenMolmer) {
      cfg.delta = positive("delta");
    } else if (entries.contains("delta")) {
      cfg.delta = real("delta");
      if (cfg.delta != 0.0) {
        throw ConfigError(fmt::format("line {}: the bogoliubov scheme requires delta = 0", entries["delta"].second),
                          "delta", entries["delta"].second);
      }
    }
    cfg.t_max = positive("t_max");
    cfg.dt = positive("dt");
    if (const auto it = entries.find("sample_stride"); it != entries.end()) {
      cfg.sample_stride = detail::parse_count(it->second.first, "sample_stride", it->second.second);
    }
    const double rate = cfg.system(0.0).max_rate();
    if (cfg.dt > tol::kStiffnessFactor / rate * (1.0 + 1e-12)) {
      throw ConfigError(fmt::format("line {}: dt = {} exceeds the stiffness guard 0.01 / {} = {}", entries["dt"].second,
                                    cfg.dt, rate, tol::kStiffnessFactor / rate),
                        "dt", entries["dt"].second);
    }
    if (cfg.t_max / cfg.dt > tol::kMaxSteps) {
      throw ConfigError(fmt::format("line {}: t_max/dt exceeds {}", entries["t_max"].second, tol::kMaxSteps), "t_max",
                        entries["t_max"].second);
    }
  } else {
    if (cfg.scheme != Scheme::SorensenMolmer) {
      const int l = entries["scheme"].second;
      throw ConfigError(fmt::format("line {}: regime badcavity is only defined for scheme sm", l), "scheme", l);
    }
    for (const char* k : {"g1", "g2", "t_max", "dt", "sample_stride"}) forbid(k, "badcavity");
    cfg.G1 = nonnegative("G1");
    cfg.G2 = nonnegative("G2");
    cfg.delta = positive("delta");
    cfg.tau_max = positive("tau_max");
    {
      const auto& [v, l] = require("tau_points");
      cfg.tau_points = detail::parse_count(v, "tau_points", l);
    }
  }
  if (const auto it = entries.find("label"); it != entries.end()) {
    if (it->second.first.find_first_of(",\"") != std::string::npos) {
      throw ConfigError(fmt::format("line {}: label may not contain commas or quotes", it->second.second), "label",
                        it->second.second);
    }
    cfg.label = it->second.first;
  }
  if (const auto it = entries.find("output"); it != entries.end()) cfg.output = it->second.first;
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot read config file '{}'", path.string()), "", 0);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

// CSV schemas shared with the plotting scripts.
inline constexpr std::string_view kSeriesHeader = "t_inv_gamma,t_paper_units,e_n,n_th,scheme,regime";
inline constexpr std::string_view kSweepHeader = "n_th,max_e_n,argmax_t_or_tau,scheme_or_config";

inline std::string format_number(double v) { return fmt::format("{:.15g}", v); }

/// One entanglement series per n_th, in the order of cfg.n_th.
inline std::vector<EntanglementSeries> simulate_series(const RunConfig& cfg) {
  return parallel_map(cfg.n_th, [&cfg](double n) {
    if (cfg.regime == Regime::Intracavity) {
      const DriftDiffusion dd = build_drift_diffusion(cfg.system(n), cfg.scheme);
      return entanglement_series(integrate_covariance(dd, thermal_vacuum_initial(n), cfg.integration()));
    }
    return entanglement_vs_duration(cfg.bad_cavity(n), cfg.tau_grid());
  });
}

/// CSV rows (no header) for one run.
inline std::string run_rows(const RunConfig& cfg) {
  const auto all = simulate_series(cfg);
  std::string out;
  for (std::size_t k = 0; k < cfg.n_th.size(); ++k) {
    const EntanglementSeries& s = all[k];
    if (cfg.mode == RunMode::Series) {
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        out += fmt::format("{},{},{},{},{},{}\n", format_number(s.times[i]), format_number(s.times[i] / kFigureTimeUnit),
                           format_number(s.values[i]), format_number(cfg.n_th[k]), to_string(cfg.scheme),
                           to_string(cfg.regime));
      }
    } else {
      const Peak best = max_negativity(s);
      out += fmt::format("{},{},{},{}\n", format_number(cfg.n_th[k]), format_number(best.value),
                         format_number(best.time), cfg.sweep_label());
    }
  }
  return out;
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["scheme"] = to_string(cfg.scheme);
  j["regime"] = to_string(cfg.regime);
  j["mode"] = to_string(cfg.mode);
  j["kappa1"] = cfg.kappa1;
  j["kappa2"] = cfg.kappa2;
  j["delta"] = cfg.delta;
  j["gamma"] = 1.0;
  j["n_th"] = cfg.n_th;
  if (cfg.regime == Regime::Intracavity) {
    j["g1"] = cfg.g1;
    j["g2"] = cfg.g2;
    j["t_max"] = cfg.t_max;
    j["dt"] = cfg.dt;
    j["sample_stride"] = cfg.sample_stride;
  } else {
    j["G1"] = cfg.G1;
    j["G2"] = cfg.G2;
    j["tau_max"] = cfg.tau_max;
    j["tau_points"] = cfg.tau_points;
    j["bad_cavity_warnings"] = cfg.bad_cavity(0.0).warnings();
  }
  if (cfg.mode == RunMode::Sweep) j["label"] = cfg.sweep_label();
  return j;
}

inline nlohmann::json metadata(const std::string& name, const std::vector<RunConfig>& runs) {
  nlohmann::json j;
  j["artifact"] = "optomech";
  j["version"] = std::string(kVersion);
  j["name"] = name;
  j["figure_time_unit"] = "2*pi/(1000*gamma)";
  j["integrator"] = "rk4-fixed-step";
  j["tolerances"] = {{"symmetry", tol::kSymmetry},
                     {"physicality", tol::kPhysicality},
                     {"integration_physicality", tol::kIntegrationPhysicality},
                     {"discriminant_clamp", tol::kDiscriminantClamp},
                     {"stiffness_factor", tol::kStiffnessFactor},
                     {"instability_growth", tol::kInstabilityGrowth}};
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : runs) list.push_back(to_json(r));
  j["runs"] = list;
  return j;
}

struct ExperimentOutput {
  std::string csv;
  std::string metadata;
};

/// Runs every config in order; all must share a mode (one CSV schema).
inline ExperimentOutput run_experiments(const std::string& name, const std::vector<RunConfig>& runs) {
  if (runs.empty()) throw PreconditionError("run_experiments: no runs");
  const RunMode mode = runs.front().mode;
  std::string csv(mode == RunMode::Series ? kSeriesHeader : kSweepHeader);
  csv += '\n';
  for (const auto& r : runs) {
    if (r.mode != mode) throw PreconditionError("run_experiments: runs mix series and sweep modes");
    csv += run_rows(r);
  }
  return {std::move(csv), metadata(name, runs).dump(2) + "\n"};
}

inline ExperimentOutput run_experiment(const RunConfig& cfg) { return run_experiments("simulate", {cfg}); }

/// Writes the CSV and its `.meta.json` companion. Nothing is left behind on failure.
inline void write_outputs(const ExperimentOutput& out, const std::filesystem::path& csv_path) {
  namespace fs = std::filesystem;
  fs::path meta_path = csv_path;
  meta_path.replace_extension(".meta.json");
  const std::vector<std::pair<fs::path, const std::string*>> files = {{csv_path, &out.csv}, {meta_path, &out.metadata}};
  std::vector<fs::path> written;
  try {
    if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
    for (const auto& [path, content] : files) {
      written.push_back(path);
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      f << *content;
      f.close();
      if (!f) throw Error(fmt::format("failed writing '{}'", path.string()));
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
}

}  // namespace optomech
