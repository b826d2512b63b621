#include "runner.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace coopguard::run {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void schema_fail(const std::string& where,
                              const std::string& what) {
  throw SchemaError("scenario schema: " + where + ": " + what);
}

const ordered_json& require(const ordered_json& node, const std::string& key,
                            const std::string& where) {
  if (!node.contains(key)) schema_fail(where, "missing field '" + key + "'");
  return node.at(key);
}

geom::Point2 parse_point2(const ordered_json& node, const std::string& where) {
  if (!node.is_array() || node.size() != 2) {
    schema_fail(where, "expected [x, y]");
  }
  return {node[0].get<double>(), node[1].get<double>()};
}

sim::Obstacle parse_obstacle(const ordered_json& node,
                             const std::string& where) {
  const std::string kind = require(node, "kind", where).get<std::string>();
  const int id = require(node, "id", where).get<int>();
  const geom::Point2 center = parse_point2(require(node, "center_m", where),
                                           where + ".center_m");
  const double height = require(node, "height_m", where).get<double>();
  sim::Obstacle ob;
  if (kind == "cylinder") {
    ob = sim::Obstacle::cylinder(
        id, center, require(node, "radius_m", where).get<double>(), height);
  } else if (kind == "box") {
    ob = sim::Obstacle::box(
        id, center, require(node, "half_extent_x_m", where).get<double>(),
        require(node, "half_extent_y_m", where).get<double>(), height);
  } else {
    schema_fail(where, "unknown obstacle kind '" + kind + "'");
  }
  ob.ao_flag = node.value("ao", false);
  return ob;
}

sim::LidarConfig parse_lidar(const ordered_json& node,
                             const std::string& where) {
  sim::LidarConfig cfg;
  if (node.is_string()) {
    const std::string preset = node.get<std::string>();
    if (preset == "standard16") return sim::LidarConfig::standard16();
    if (preset == "sweep8") return sim::LidarConfig::sweep8();
    schema_fail(where, "unknown lidar preset '" + preset + "'");
  }
  cfg = sim::LidarConfig::standard16();
  if (node.contains("max_range_m")) cfg.max_range = node["max_range_m"];
  if (node.contains("noise_sigma_m")) cfg.noise_sigma = node["noise_sigma_m"];
  if (node.contains("noise_bound_m")) cfg.noise_bound = node["noise_bound_m"];
  if (node.contains("resolution_bound_m")) {
    cfg.resolution_bound = node["resolution_bound_m"];
  }
  return cfg;
}

fdii::UnsafeRegion parse_region(const ordered_json& node,
                                const std::string& where) {
  fdii::UnsafeRegion region;
  for (const auto& poly_node : require(node, "polygons", where)) {
    std::vector<geom::Point2> verts;
    for (const auto& v : poly_node) {
      verts.push_back(parse_point2(v, where + ".polygons[]"));
    }
    geom::ConvexPolygon poly =
        geom::ConvexPolygon::from_ccw_vertices(std::move(verts));
    if (poly.is_empty()) schema_fail(where, "degenerate override polygon");
    region.constraints.push_back(poly.half_planes());
    region.polygons.push_back(std::move(poly));
  }
  return region;
}

std::string verdict_residual_name(const fdii::Verdict& v) {
  switch (v.residual.kind) {
    case fdii::ResidualKind::kNoResidual:
      return "none";
    case fdii::ResidualKind::kPraFullOrPartialView:
      return v.residual.category == 1 ? "pra1" : "pra2";
    case fdii::ResidualKind::kPra3OrAo:
      return "pra3_or_ao";
  }
  return "none";
}

ordered_json verdict_to_json(const fdii::Verdict& v) {
  ordered_json out;
  out["attacked"] = v.attacked;
  out["obstacles"] = ordered_json::array();
  for (const auto& [k, finding] : v.per_obstacle) {
    ordered_json row;
    row["index"] = k;
    row["class"] = finding.klass == fdii::ObstacleClass::kNeo
                       ? "neo"
                       : "true_obstacle";
    row["verified"] = finding.verified;
    out["obstacles"].push_back(row);
  }
  out["residual"] = verdict_residual_name(v);
  return out;
}

ordered_json region_to_json(const fdii::UnsafeRegion& region) {
  ordered_json out;
  out["polygon_count"] = region.polygons.size();
  out["polygons"] = ordered_json::array();
  for (const auto& poly : region.polygons) {
    ordered_json ring = ordered_json::array();
    for (const geom::Point2& v : poly.vertices()) {
      ring.push_back(ordered_json::array({v.x, v.y}));
    }
    out["polygons"].push_back(ring);
  }
  return out;
}

// --- minimal SVG plotting -------------------------------------------------

class SvgCanvas {
 public:
  SvgCanvas(double min_x, double min_y, double max_x, double max_y) {
    const double pad_x = 0.05 * std::max(1.0, max_x - min_x);
    const double pad_y = 0.05 * std::max(1.0, max_y - min_y);
    min_x_ = min_x - pad_x;
    min_y_ = min_y - pad_y;
    scale_ = std::min(kWidth / (max_x - min_x + 2 * pad_x),
                      kHeight / (max_y - min_y + 2 * pad_y));
  }

  void polygon(const geom::ConvexPolygon& poly, const std::string& stroke,
               const std::string& fill, double opacity) {
    if (poly.is_empty()) return;
    body_ << "<polygon points=\"";
    for (const geom::Point2& v : poly.vertices()) {
      body_ << px(v.x) << "," << py(v.y) << " ";
    }
    body_ << "\" stroke=\"" << stroke << "\" fill=\"" << fill
          << "\" fill-opacity=\"" << opacity << "\"/>\n";
  }

  void dot(geom::Point2 p, double r, const std::string& color) {
    body_ << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.y) << "\" r=\""
          << r << "\" fill=\"" << color << "\"/>\n";
  }

  void path(const std::vector<geom::Point2>& pts, const std::string& color) {
    if (pts.empty()) return;
    body_ << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\" points=\"";
    for (const geom::Point2& p : pts) body_ << px(p.x) << "," << py(p.y) << " ";
    body_ << "\"/>\n";
  }

  void write(const fs::path& file) const {
    std::ofstream out(file);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\">\n<rect width=\"100%\" "
        << "height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
  }

 private:
  static constexpr double kWidth = 900.0;
  static constexpr double kHeight = 700.0;
  double px(double x) const { return (x - min_x_) * scale_; }
  double py(double y) const { return kHeight - (y - min_y_) * scale_; }
  double min_x_ = 0.0;
  double min_y_ = 0.0;
  double scale_ = 1.0;
  std::ostringstream body_;
};

struct Bounds {
  double min_x = 1e30, min_y = 1e30, max_x = -1e30, max_y = -1e30;
  void add(geom::Point2 p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  void add(const geom::ConvexPolygon& poly) {
    for (const geom::Point2& v : poly.vertices()) add(v);
  }
};

const char* kAgentColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

void write_scene_svg(const fs::path& file,
                     const std::vector<sim::Observation>& observations,
                     const std::vector<percep::AgentPerception>& perceptions,
                     const fdii::UnsafeRegion& region) {
  Bounds b;
  for (const auto& obs : observations) {
    const geom::Point2 s{obs.sensor_pose.position.x,
                         obs.sensor_pose.position.y};
    b.add(s);
    for (const auto& p : obs.points) {
      if (p.z <= 0.05) continue;
      const sim::Point3 w = sim::frame_to_world(p, obs.frame);
      b.add({w.x, w.y});
    }
  }
  for (const auto& poly : region.polygons) b.add(poly);
  SvgCanvas canvas(b.min_x, b.min_y, b.max_x, b.max_y);
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& obs = observations[i];
    const std::string color = kAgentColors[i % 4];
    for (std::size_t j = 0; j < obs.points.size(); ++j) {
      if (obs.points[j].z <= 0.05) continue;  // skip ground returns
      const sim::Point3 w = sim::frame_to_world(obs.points[j], obs.frame);
      canvas.dot({w.x, w.y}, 1.5, color);
    }
    canvas.dot(obs.sensor_pose.position, 5.0, color);
  }
  for (std::size_t i = 0; i < perceptions.size(); ++i) {
    const std::string color = kAgentColors[i % 4];
    for (const auto& d : perceptions[i].detected) {
      canvas.polygon(d.occupied, color, "none", 0.0);
    }
    canvas.polygon(perceptions[i].residual_area, color, color, 0.1);
  }
  for (const auto& poly : region.polygons) {
    canvas.polygon(poly, "#000000", "#ff7f0e", 0.4);
  }
  canvas.write(file);
}

void write_trajectory_svg(const fs::path& file,
                          const control::ClosedLoopResult& traj,
                          const fdii::UnsafeRegion& region, geom::Point2 goal) {
  Bounds b;
  for (const auto& s : traj.states) b.add({s.x, s.y});
  for (const auto& poly : region.polygons) b.add(poly);
  b.add(goal);
  SvgCanvas canvas(b.min_x, b.min_y, b.max_x, b.max_y);
  for (const auto& poly : region.polygons) {
    canvas.polygon(poly, "#000000", "#ff7f0e", 0.4);
  }
  std::vector<geom::Point2> pts;
  for (const auto& s : traj.states) pts.push_back({s.x, s.y});
  canvas.path(pts, "#1f77b4");
  canvas.dot(pts.front(), 5.0, "#2ca02c");
  canvas.dot(goal, 5.0, "#d62728");
  canvas.write(file);
}

}  // namespace

Scenario parse_scenario(const ordered_json& doc) {
  Scenario sc;
  sc.raw = doc;
  sc.name = doc.value("name", "scenario");
  if (!doc.contains("seed")) schema_fail("top level", "seed is mandatory");
  sc.seed = doc.at("seed").get<std::uint64_t>();

  const ordered_json& scene = require(doc, "scene", "top level");
  for (const auto& ob : scene.value("obstacles", ordered_json::array())) {
    sc.scene.obstacles.push_back(parse_obstacle(ob, "scene.obstacles[]"));
  }
  for (const auto& wall : scene.value("walls", ordered_json::array())) {
    std::vector<geom::Point2> verts;
    for (const auto& v : require(wall, "footprint_m", "scene.walls[]")) {
      verts.push_back(parse_point2(v, "scene.walls[].footprint_m"));
    }
    sc.scene.infrastructure.push_back(
        {geom::ConvexPolygon::from_ccw_vertices(std::move(verts)),
         require(wall, "height_m", "scene.walls[]").get<double>()});
  }

  const ordered_json& agents = require(doc, "agents", "top level");
  if (!agents.is_array() || agents.empty()) {
    schema_fail("agents", "need at least one agent");
  }
  for (const auto& a : agents) {
    AgentSpec spec;
    spec.pose.position =
        parse_point2(require(a, "position_m", "agents[]"), "agents[]");
    spec.pose.heading = a.value("heading_rad", 0.0);
    spec.lidar = a.contains("lidar") ? parse_lidar(a["lidar"], "agents[].lidar")
                                     : sim::LidarConfig::standard16();
    sc.agents.push_back(spec);
  }

  const ordered_json& attack = doc.value("attack", ordered_json{{"kind", "none"}});
  const std::string kind = require(attack, "kind", "attack").get<std::string>();
  sc.attack.victim = attack.value("victim", 0);
  sc.attack.seed = sc.seed ^ 0x5bd1e995u;
  if (kind == "none") {
    sc.attack.kind = atk::AttackSpec::Kind::kNone;
  } else if (kind == "neo") {
    sc.attack.kind = atk::AttackSpec::Kind::kNeo;
    sc.attack.neo_fake = parse_obstacle(require(attack, "fake", "attack"),
                                        "attack.fake");
    sc.attack.neo_superpose = attack.value("superpose", false);
  } else if (kind == "pra") {
    const ordered_json& cyl = require(attack, "cylinder", "attack");
    sc.attack.kind = atk::AttackSpec::Kind::kPra;
    sc.attack.pra_cylinder.center =
        parse_point2(require(cyl, "center_m", "attack.cylinder"),
                     "attack.cylinder.center_m");
    sc.attack.pra_cylinder.radius =
        require(cyl, "radius_m", "attack.cylinder").get<double>();
    sc.attack.pra_cylinder.height =
        require(cyl, "height_m", "attack.cylinder").get<double>();
  } else if (kind == "ao") {
    sc.attack.kind = atk::AttackSpec::Kind::kAo;
    sc.attack.ao_target_id = require(attack, "target_id", "attack").get<int>();
  } else {
    schema_fail("attack", "unknown kind '" + kind + "'");
  }

  if (doc.contains("perception")) {
    const ordered_json& p = doc["perception"];
    sc.perception.zeta_z = p.value("zeta_z_m", sc.perception.zeta_z);
    sc.perception.cluster_distance =
        p.value("cluster_distance_m", sc.perception.cluster_distance);
    sc.perception.min_cluster_size =
        p.value("min_cluster_size", sc.perception.min_cluster_size);
  }
  if (doc.contains("mpc")) {
    const ordered_json& m = doc["mpc"];
    sc.mpc.horizon = m.value("horizon_steps", sc.mpc.horizon);
    sc.mpc.gamma = m.value("gamma", sc.mpc.gamma);
    sc.mpc.dt = m.value("dt_s", sc.mpc.dt);
    sc.mpc.u_max = m.value("u_max_mps", sc.mpc.u_max);
    sc.mpc.consistent_discretization =
        m.value("consistent_discretization", false);
  }
  if (doc.contains("task")) {
    const ordered_json& t = doc["task"];
    TaskSpec task;
    const geom::Point2 start =
        parse_point2(require(t, "start_m", "task"), "task.start_m");
    task.start = {start.x, start.y, 0.0, 0.0};
    if (t.contains("start_velocity_mps")) {
      const geom::Point2 v = parse_point2(t["start_velocity_mps"], "task");
      task.start.vx = v.x;
      task.start.vy = v.y;
    }
    task.goal = parse_point2(require(t, "goal_m", "task"), "task.goal_m");
    task.max_steps = t.value("max_steps", 2000);
    sc.task = task;
  }
  if (doc.contains("region_override")) {
    sc.region_override = parse_region(doc["region_override"], "region_override");
  }
  if (doc.contains("expect")) sc.expect = doc["expect"];
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file " + path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_scenario(doc);
}

ordered_json run_scenario(const Scenario& scenario, Stage stage,
                          const fs::path& out_dir) {
  const auto t_start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  sim::Scene scene = scenario.scene;
  if (scenario.attack.kind == atk::AttackSpec::Kind::kAo) {
    scene = atk::apply_ao(scene, scenario.attack.ao_target_id);
  }
  std::set<int> ao_ids;
  for (const auto& ob : scene.obstacles) {
    if (ob.ao_flag) ao_ids.insert(ob.id);
  }

  // All observations expressed in the world frame, matching the scenario
  // coordinates and the region/task blocks.
  const sim::Pose common_frame{{0.0, 0.0}, 0.0};
  std::vector<sim::Observation> observations;
  for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
    const AgentSpec& agent = scenario.agents[i];
    const sim::Scan scan =
        sim::cast_scan(scene, agent.pose, agent.lidar, scenario.seed + i);
    observations.push_back(sim::to_observation(scan, common_frame));
  }
  const int victim = scenario.attack.victim;
  if (victim < 0 || static_cast<std::size_t>(victim) >= observations.size()) {
    schema_fail("attack.victim", "index out of range");
  }
  if (scenario.attack.kind == atk::AttackSpec::Kind::kNeo) {
    observations[victim] =
        atk::apply_neo(observations[victim], scenario.attack.neo_fake,
                       scenario.agents[victim].lidar, scenario.attack.seed,
                       scenario.attack.neo_superpose)
            .observation;
  } else if (scenario.attack.kind == atk::AttackSpec::Kind::kPra) {
    observations[victim] = atk::apply_pra(observations[victim],
                                          scenario.attack.pra_cylinder,
                                          scenario.attack.seed)
                               .observation;
  }

  const std::vector<percep::AgentPerception> perceptions =
      percep::perceive_observations(observations, scene, scenario.perception,
                                    ao_ids);

  ordered_json report;
  report["tool"] = {{"name", "coopguard"}, {"version", "1.0.0"}};
  report["scenario"] = {{"name", scenario.name}, {"seed", scenario.seed}};
  report["config_echo"] = scenario.raw;
  report["perception"] = ordered_json::array();
  for (const auto& p : perceptions) {
    ordered_json row;
    row["agent"] = p.agent_id;
    row["detected_obstacles"] = p.detected.size();
    row["residual_points"] = p.residual_points.size();
    report["perception"].push_back(row);
  }

  fdii::UnsafeRegion region;
  if (stage != Stage::kSimulate) {
    std::vector<percep::AgentPerception> neighbors(perceptions.begin() + 1,
                                                   perceptions.end());
    const fdii::Verdict verdict =
        fdii::run_decision_tree(perceptions.front(), neighbors);
    region = scenario.region_override
                 ? *scenario.region_override
                 : fdii::unsafe_region(perceptions, verdict);
    report["verdict"] = verdict_to_json(verdict);
    report["region"] = region_to_json(region);

    std::ofstream csv(out_dir / "region.csv");
    csv << "polygon,vertex,x_m,y_m\n";
    csv << std::setprecision(17);
    for (std::size_t i = 0; i < region.polygons.size(); ++i) {
      const auto& verts = region.polygons[i].vertices();
      for (std::size_t j = 0; j < verts.size(); ++j) {
        csv << i << "," << j << "," << verts[j].x << "," << verts[j].y << "\n";
      }
    }
  } else if (scenario.region_override) {
    region = *scenario.region_override;
  }

  if (stage == Stage::kDrive) {
    if (!scenario.task) {
      throw SchemaError("drive stage requires a task block");
    }
    const TaskSpec& task = *scenario.task;
    const control::ClosedLoopResult traj = control::run_closed_loop(
        task.start, task.goal, region, scenario.mpc, task.max_steps);
    double min_h = std::numeric_limits<double>::infinity();
    for (double h : traj.h_min) min_h = std::min(min_h, h);
    ordered_json tj;
    tj["goal_reached"] = traj.reached;
    tj["steps"] = traj.inputs.size();
    tj["min_h_bar"] = std::isfinite(min_h) ? ordered_json(min_h)
                                           : ordered_json("inf");
    tj["final_position"] = {traj.states.back().x, traj.states.back().y};
    report["trajectory"] = tj;

    std::ofstream csv(out_dir / "trajectory.csv");
    csv << "step,x_m,y_m,vx_mps,vy_mps,dvx_mps,dvy_mps,h_min\n";
    csv << std::setprecision(17);
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const auto& s = traj.states[k];
      csv << k << "," << s.x << "," << s.y << "," << s.vx << "," << s.vy;
      if (k < traj.inputs.size()) {
        csv << "," << traj.inputs[k].dvx << "," << traj.inputs[k].dvy;
      } else {
        csv << ",,";
      }
      csv << "," << traj.h_min[k] << "\n";
    }
    write_trajectory_svg(out_dir / "trajectory.svg", traj, region, task.goal);
  }

  write_scene_svg(out_dir / "scene.svg", observations, perceptions, region);

  {
    std::ofstream out(out_dir / "report.json");
    out << report.dump(2) << "\n";
  }
  const auto t_end = std::chrono::steady_clock::now();
  ordered_json timing;
  timing["elapsed_ms"] =
      std::chrono::duration<double, std::milli>(t_end - t_start).count();
  std::ofstream tout(out_dir / "timing.json");
  tout << timing.dump(2) << "\n";
  return report;
}

int run_suite(const std::string& pattern, const fs::path& out_dir,
              const std::string& format) {
  glob_t results;
  std::vector<std::string> paths;
  if (::glob(pattern.c_str(), 0, nullptr, &results) == 0) {
    for (std::size_t i = 0; i < results.gl_pathc; ++i) {
      paths.emplace_back(results.gl_pathv[i]);
    }
  }
  globfree(&results);
  if (paths.empty()) {
    std::cerr << "suite: no scenarios match '" << pattern << "'\n";
    return 1;
  }
  std::sort(paths.begin(), paths.end());

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "suite.csv");
  csv << "scenario,status,attacked,residual,region_polygons,detail\n";
  std::ostringstream table;
  table << std::left << std::setw(24) << "scenario" << std::setw(8) << "status"
        << std::setw(10) << "attacked" << std::setw(14) << "residual"
        << std::setw(8) << "region" << "detail\n";

  int failures = 0;
  for (const std::string& path : paths) {
    std::string status = "ok";
    std::string attacked = "-";
    std::string residual = "-";
    std::string region_count = "-";
    std::string detail;
    try {
      const Scenario sc = load_scenario(path);
      const Stage stage = sc.task ? Stage::kDrive : Stage::kFdii;
      const fs::path run_dir = out_dir / fs::path(path).stem();
      const ordered_json report = run_scenario(sc, stage, run_dir);
      attacked = report["verdict"]["attacked"].get<bool>() ? "yes" : "no";
      residual = report["verdict"]["residual"].get<std::string>();
      region_count = std::to_string(
          report["region"]["polygon_count"].get<std::size_t>());
      if (!sc.expect.is_null()) {
        if (sc.expect.contains("attacked") &&
            sc.expect["attacked"] != report["verdict"]["attacked"]) {
          status = "FAIL";
          detail = "attacked mismatch";
        }
        if (sc.expect.contains("residual") &&
            sc.expect["residual"] != report["verdict"]["residual"]) {
          status = "FAIL";
          detail += detail.empty() ? "residual mismatch" : "; residual mismatch";
        }
        if (sc.expect.contains("region_empty")) {
          const bool empty =
              report["region"]["polygon_count"].get<std::size_t>() == 0;
          if (sc.expect["region_empty"].get<bool>() != empty) {
            status = "FAIL";
            detail += detail.empty() ? "region mismatch" : "; region mismatch";
          }
        }
        if (sc.expect.contains("neo_detected")) {
          bool neo = false;
          for (const auto& ob : report["verdict"]["obstacles"]) {
            if (ob["class"] == "neo") neo = true;
          }
          if (sc.expect["neo_detected"].get<bool>() != neo) {
            status = "FAIL";
            detail += detail.empty() ? "neo mismatch" : "; neo mismatch";
          }
        }
        if (sc.expect.contains("goal_reached") &&
            sc.expect["goal_reached"] !=
                report["trajectory"]["goal_reached"]) {
          status = "FAIL";
          detail += detail.empty() ? "goal mismatch" : "; goal mismatch";
        }
      }
    } catch (const std::exception& e) {
      status = "FAIL";
      detail = e.what();
    }
    if (status == "FAIL") ++failures;
    const std::string name = fs::path(path).stem().string();
    csv << name << "," << status << "," << attacked << "," << residual << ","
        << region_count << ",\"" << detail << "\"\n";
    table << std::left << std::setw(24) << name << std::setw(8) << status
          << std::setw(10) << attacked << std::setw(14) << residual
          << std::setw(8) << region_count << detail << "\n";
  }
  {
    std::ofstream tout(out_dir / "suite.txt");
    tout << table.str();
  }
  if (format == "csv") {
    std::ifstream back(out_dir / "suite.csv");
    std::cout << back.rdbuf();
  } else {
    std::cout << table.str();
  }
  return failures;
}

}  // namespace coopguard::run
