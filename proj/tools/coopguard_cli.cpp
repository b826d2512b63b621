#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "runner.hpp"

namespace {

int run_stage(const std::string& scenario_path, coopguard::run::Stage stage,
              const std::string& out_dir,
              const std::optional<std::uint64_t>& seed_override) {
  try {
    coopguard::run::Scenario sc = coopguard::run::load_scenario(scenario_path);
    if (seed_override) {
      sc.seed = *seed_override;
      sc.attack.seed = sc.seed ^ 0x5bd1e995u;
      sc.raw["seed"] = sc.seed;
    }
    const auto report = coopguard::run::run_scenario(sc, stage, out_dir);
    std::cout << report.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative-perception LiDAR spoofing defense toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string format = "json";
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--format", format, "Suite stdout format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  std::string sim_path;
  std::string fdii_path;
  std::string drive_path;
  std::string suite_glob;
  CLI::App* sim = app.add_subcommand("simulate", "Scan + perceive only");
  sim->add_option("scenario", sim_path, "Scenario JSON")->required();
  CLI::App* fdii = app.add_subcommand("fdii", "Full detection pipeline");
  fdii->add_option("scenario", fdii_path, "Scenario JSON")->required();
  CLI::App* drive = app.add_subcommand("drive", "Detection + closed loop");
  drive->add_option("scenario", drive_path, "Scenario JSON")->required();
  CLI::App* suite = app.add_subcommand("suite", "Run every matching scenario");
  suite->add_option("glob", suite_glob, "Scenario file glob")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    return run_stage(sim_path, coopguard::run::Stage::kSimulate, out_dir, seed);
  }
  if (fdii->parsed()) {
    return run_stage(fdii_path, coopguard::run::Stage::kFdii, out_dir, seed);
  }
  if (drive->parsed()) {
    return run_stage(drive_path, coopguard::run::Stage::kDrive, out_dir, seed);
  }
  const int failures =
      coopguard::run::run_suite(suite_glob, out_dir, format);
  return failures == 0 ? 0 : 1;
}
