#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "optomech/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3, kInstability = 4 };

int report(const std::exception& e, int code) {
  fmt::print(stderr, "error: {}\n", e.what());
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  using namespace optomech;
  try {
    fn();
    return kOk;
  } catch (const ConfigError& e) {
    return report(e, kConfig);
  } catch (const PreconditionError& e) {
    return report(e, kConfig);
  } catch (const PhysicalityError& e) {
    return report(e, kNumerical);
  } catch (const NumericalDomainError& e) {
    return report(e, kNumerical);
  } catch (const StabilityError& e) {
    return report(e, kInstability);
  } catch (const std::exception& e) {
    return report(e, kOther);
  }
}

void print_warnings(const std::vector<optomech::RunConfig>& runs) {
  for (const auto& run : runs) {
    if (run.regime != optomech::Regime::BadCavity) continue;
    for (const auto& w : run.bad_cavity(0.0).warnings()) fmt::print(stderr, "warning: {}\n", w);
  }
}

void simulate(const std::string& config_path) {
  const optomech::RunConfig cfg = optomech::load_config(config_path);
  print_warnings({cfg});
  const optomech::ExperimentOutput out = optomech::run_experiment(cfg);
  if (cfg.output.empty()) {
    std::cout << out.csv;
    return;
  }
  optomech::write_outputs(out, cfg.output);
  fmt::print(stderr, "wrote {}\n", cfg.output);
}

void figure(const std::string& name, const std::string& out_dir) {
  const optomech::FigurePreset preset = optomech::find_preset(name);
  print_warnings(preset.runs);
  const auto out = optomech::run_experiments(preset.name, preset.runs);
  const std::filesystem::path csv = std::filesystem::path(out_dir) / (preset.name + ".csv");
  optomech::write_outputs(out, csv);
  fmt::print(stderr, "wrote {}\n", csv.string());
}

void presets() {
  for (const auto& p : optomech::list_presets()) {
    fmt::print("{:<6}  {}\n", p.name, p.description);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optomechanical entanglement simulator"};
  app.set_version_flag("--version", std::string(optomech::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  auto* sim = app.add_subcommand("simulate", "Run a key = value config file");
  sim->add_option("config-file", config_path, "Config file")->required();

  std::string preset_name;
  std::string out_dir;
  auto* fig = app.add_subcommand("figure", "Regenerate the data behind a figure preset");
  fig->add_option("preset-name", preset_name, "Preset name (see `presets`)")->required();
  fig->add_option("--out", out_dir, "Output directory")->required();

  auto* list = app.add_subcommand("presets", "List figure presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*sim) return guarded([&] { simulate(config_path); });
  if (*fig) return guarded([&] { figure(preset_name, out_dir); });
  if (*list) return guarded(presets);
  return kConfig;
}
