#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coopguard/attacks.hpp"
#include "coopguard/control.hpp"
#include "coopguard/fdii.hpp"
#include "coopguard/perception.hpp"
#include "coopguard/scene_lidar.hpp"

namespace coopguard::run {

class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

enum class Stage { kSimulate, kFdii, kDrive };

struct AgentSpec {
  sim::Pose pose;
  sim::LidarConfig lidar;
};

struct TaskSpec {
  control::VehicleState start;
  geom::Point2 goal;
  int max_steps = 2000;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  sim::Scene scene;
  std::vector<AgentSpec> agents;
  atk::AttackSpec attack;
  percep::PerceptionConfig perception;
  control::MpcConfig mpc;
  std::optional<TaskSpec> task;
  std::optional<fdii::UnsafeRegion> region_override;
  nlohmann::ordered_json expect;  // optional expected-verdict block
  nlohmann::ordered_json raw;     // config echo
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const nlohmann::ordered_json& doc);

/// Executes the pipeline up to `stage` and writes report.json plus CSV/SVG
/// artifacts into out_dir. The returned document is exactly what was
/// written to report.json (timing is kept out of it, in timing.json).
nlohmann::ordered_json run_scenario(const Scenario& scenario, Stage stage,
                                    const std::filesystem::path& out_dir);

/// Runs every scenario matching the glob; writes suite.csv and a text table.
/// Returns the number of failed rows.
int run_suite(const std::string& pattern, const std::filesystem::path& out_dir,
              const std::string& format);

}  // namespace coopguard::run
