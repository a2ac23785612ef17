#pragma once

// Batch front end: run configuration, pipeline assembly and the
// synthesize / select / demo / stats / inspect-mesh commands.

#include "graspforge/dataset.hpp"
#include "graspforge/demo.hpp"
#include "graspforge/geometry.hpp"
#include "graspforge/kinematics.hpp"
#include "graspforge/selection.hpp"
#include "graspforge/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#ifndef GRASPFORGE_FIXTURE_DIR
#define GRASPFORGE_FIXTURE_DIR "fixtures"
#endif

namespace graspforge {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitEmptySelection = 3,
  kExitPlanning = 4,
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

inline constexpr std::string_view kConfigSchemaVersion = "1.0";

// ---------------------------------------------------------------------------
// Run configuration

struct PlacedMesh {
  std::string id;
  std::string mesh;  // as written in the config
  std::filesystem::path path;  // resolved
  RigidTransform pose;
};

struct RunConfig {
  PlacedMesh object;
  double mass = 0.1;
  std::optional<double> table_height = 0.0;
  std::vector<PlacedMesh> scene;  // distractors
  std::filesystem::path hand_path, arm_path;
  std::array<RigidTransform, 2> mounts = {RigidTransform::from_translation(Vec3(0.0, -0.3, 0.0)),
                                          RigidTransform::from_translation(Vec3(0.0, 0.3, 0.0))};
  std::string strategy = "auto";
  int n = 64;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;  // explicit list overrides seed + n
  EnergyWeights weights;
  FrictionCone cone;
  std::optional<TargetWrenchSet> targets;
  PhysicalThresholds thresholds;
  double rot_weight = 0.1;
  OptimizerConfig optimizer;
  DemoConfig demo;
  std::filesystem::path output = "out";
  Json snapshot;  // normalized config minus the output path

  std::vector<std::uint64_t> seed_list() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    for (int i = 0; i < n; ++i) out.push_back(seed + static_cast<std::uint64_t>(i));
    return out;
  }
};

/// Fixture root: $GRASPFORGE_FIXTURES if set, else the build-time default.
inline std::filesystem::path fixture_root() {
  if (const char* env = std::getenv("GRASPFORGE_FIXTURES"); env && *env) return env;
  return GRASPFORGE_FIXTURE_DIR;
}

/// "@fixtures/x" resolves under the fixture root; other relative input
/// paths resolve against the config file's directory. The output directory
/// is taken relative to the working directory.
inline std::filesystem::path resolve_path(const std::string& spec,
                                          const std::filesystem::path& base_dir) {
  constexpr std::string_view prefix = "@fixtures/";
  std::filesystem::path p;
  if (spec.starts_with(prefix)) {
    p = fixture_root() / spec.substr(prefix.size());
  } else {
    p = spec;
    if (p.is_relative()) p = base_dir / p;
  }
  if (!std::filesystem::exists(p)) throw ConfigError("path does not exist: " + p.string());
  return p;
}

namespace detail {

inline void reject_unknown(const Json& j, std::initializer_list<std::string_view> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

inline void check_strategy(const std::string& name) {
  if (name != "auto" && !parse_strategy(name)) {
    throw ConfigError("unknown strategy '" + name + "' (Pinch2, Tripod3, WholeHand, Bimanual or auto)");
  }
}

inline Vec3 vec3_from(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline RigidTransform placement_from(const Json& j, const std::string& what) {
  Vec3 xyz = Vec3::Zero(), rpy = Vec3::Zero();
  if (j.contains("position")) xyz = vec3_from(j["position"], what + ".position");
  if (j.contains("rpy")) rpy = vec3_from(j["rpy"], what + ".rpy");
  return RigidTransform::from_xyz_rpy(xyz, rpy);
}

inline PlacedMesh placed_mesh_from(const Json& j, const std::filesystem::path& base,
                                   const std::string& what, bool needs_mass) {
  if (needs_mass) {
    reject_unknown(j, {"id", "mesh", "mass", "position", "rpy"}, what);
  } else {
    reject_unknown(j, {"id", "mesh", "position", "rpy"}, what);
  }
  PlacedMesh m;
  m.id = j.at("id").get<std::string>();
  m.mesh = j.at("mesh").get<std::string>();
  m.path = resolve_path(m.mesh, base);
  m.pose = placement_from(j, what);
  return m;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    detail::reject_unknown(j,
                           {"schema_version", "object", "table_height", "scene", "hand", "arm",
                            "arm_mounts", "strategy", "n", "seed", "seeds", "weights", "cone",
                            "targets", "thresholds", "rot_weight", "optimizer", "demo", "output"},
                           "config");
    const std::string version = j.at("schema_version").get<std::string>();
    if (detail::major_version(version) != detail::major_version(std::string(kConfigSchemaVersion))) {
      throw ConfigError("unsupported config schema_version " + version);
    }
    c.object = detail::placed_mesh_from(j.at("object"), base_dir, "object", true);
    c.mass = j.at("object").at("mass").get<double>();
    if (!(c.mass > 0.0)) throw ConfigError("object mass must be positive");
    if (j.contains("table_height")) {
      if (j["table_height"].is_null()) {
        c.table_height.reset();
      } else {
        c.table_height = j["table_height"].get<double>();
      }
    }
    if (j.contains("scene")) {
      for (const auto& s : j["scene"]) {
        c.scene.push_back(detail::placed_mesh_from(s, base_dir, "scene entry", false));
      }
    }
    c.hand_path = resolve_path(j.value("hand", "@fixtures/robots/hand.urdf"), base_dir);
    c.arm_path = resolve_path(j.value("arm", "@fixtures/robots/arm.urdf"), base_dir);
    if (j.contains("arm_mounts")) {
      const Json& m = j["arm_mounts"];
      if (!m.is_array() || m.size() != 2) throw ConfigError("arm_mounts needs two entries");
      for (int h = 0; h < 2; ++h) {
        const Json& e = m[static_cast<std::size_t>(h)];
        detail::reject_unknown(e, {"position", "rpy"}, "arm_mounts entry");
        c.mounts[h] = detail::placement_from(e, "arm_mounts");
      }
    }
    c.strategy = j.value("strategy", "auto");
    detail::check_strategy(c.strategy);
    c.n = j.value("n", 64);
    if (c.n < 1) throw ConfigError("n must be at least 1");
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("weights")) {
      const Json& w = j["weights"];
      detail::reject_unknown(w, {"kappa_w", "kappa_con", "kappa_coll", "kappa_hh", "wrench_scale"},
                             "weights");
      c.weights.kappa_w = w.value("kappa_w", c.weights.kappa_w);
      c.weights.kappa_con = w.value("kappa_con", c.weights.kappa_con);
      c.weights.kappa_coll = w.value("kappa_coll", c.weights.kappa_coll);
      c.weights.kappa_hh = w.value("kappa_hh", c.weights.kappa_hh);
      c.weights.wrench_scale = w.value("wrench_scale", c.weights.wrench_scale);
    }
    c.weights.validate();
    if (j.contains("cone")) {
      detail::reject_unknown(j["cone"], {"mu", "edge_count"}, "cone");
      c.cone.mu = j["cone"].value("mu", c.cone.mu);
      c.cone.edge_count = j["cone"].value("edge_count", c.cone.edge_count);
    }
    c.cone.validate();
    if (j.contains("targets") && !(j["targets"].is_string() && j["targets"] == "default")) {
      TargetWrenchSet t;
      for (const auto& e : j["targets"]) {
        detail::reject_unknown(e, {"force", "torque"}, "targets entry");
        Wrench w;
        if (e.contains("force")) w.force = detail::vec3_from(e["force"], "targets.force");
        if (e.contains("torque")) w.torque = detail::vec3_from(e["torque"], "targets.torque");
        t.push_back(w);
      }
      if (t.empty()) throw ConfigError("targets must not be empty");
      c.targets = t;
    }
    if (j.contains("thresholds")) {
      const Json& t = j["thresholds"];
      detail::reject_unknown(t, {"contact_distance", "penetration", "wrench_residual"},
                             "thresholds");
      c.thresholds.contact_distance = t.value("contact_distance", c.thresholds.contact_distance);
      c.thresholds.penetration = t.value("penetration", c.thresholds.penetration);
      c.thresholds.wrench_residual = t.value("wrench_residual", c.thresholds.wrench_residual);
    }
    c.rot_weight = j.value("rot_weight", c.rot_weight);
    if (j.contains("optimizer")) {
      const Json& o = j["optimizer"];
      detail::reject_unknown(o, {"max_iterations"}, "optimizer");
      c.optimizer.max_iterations = o.value("max_iterations", c.optimizer.max_iterations);
      if (c.optimizer.max_iterations < 1) throw ConfigError("optimizer.max_iterations must be >= 1");
    }
    if (j.contains("demo")) {
      const Json& d = j["demo"];
      detail::reject_unknown(d, {"squeeze_delta", "resolution", "theta_min"}, "demo");
      c.demo.squeeze_delta = d.value("squeeze_delta", c.demo.squeeze_delta);
      c.demo.resolution = d.value("resolution", c.demo.resolution);
      c.demo.theta_min = d.value("theta_min", c.demo.theta_min);
    }
    if (j.contains("output")) c.output = j["output"].get<std::string>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.snapshot = j;
  c.snapshot.erase("output");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  Json j;
  try {
    j = Json::parse(detail::read_text(path));
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

/// Command-line overrides; applied to both the config and its snapshot.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::filesystem::path> out;
};

inline void apply_overrides(RunConfig& c, const Overrides& o) {
  if (o.seed) {
    c.seed = *o.seed;
    c.seeds.clear();
    c.snapshot["seed"] = *o.seed;
    c.snapshot.erase("seeds");
  }
  if (o.strategy) {
    detail::check_strategy(*o.strategy);
    c.strategy = *o.strategy;
    c.snapshot["strategy"] = *o.strategy;
  }
  if (o.out) c.output = *o.out;
}

// ---------------------------------------------------------------------------
// Pipeline

/// Size/mass heuristic: too long or too heavy for one hand -> Bimanual;
/// tiny -> Pinch2; otherwise WholeHand. Tripod3 is only chosen explicitly.
inline GraspStrategy auto_strategy(const TriMesh& world_mesh, double mass, double hand_span) {
  const double edge = world_mesh.bounds().longest_edge();
  if (mass > 0.8 || edge > hand_span) return GraspStrategy::Bimanual;
  if (edge < 0.03) return GraspStrategy::Pinch2;
  return GraspStrategy::WholeHand;
}

struct Pipeline {
  RunConfig config;
  GraspStrategy strategy = GraspStrategy::WholeHand;
  SynthesisContext ctx;
  Scene scene;
  std::array<ArmMount, 2> arms;

  std::array<RigidTransform, 2> home_poses() const {
    return {arms[0].home_pose(), arms[1].home_pose()};
  }
  SelectionConfig selection() const {
    SelectionConfig s;
    s.thresholds = config.thresholds;
    s.rot_weight = config.rot_weight;
    return s;
  }
  DemoWorld world() const { return DemoWorld{&ctx, arms, scene, config.object.id, config.mass}; }
};

inline Pipeline build_pipeline(const RunConfig& cfg) {
  Pipeline p;
  p.config = cfg;
  const HandModel hand = load_hand_model(cfg.hand_path.string());
  auto arm = std::make_shared<const ArmModel>(load_arm_model(cfg.arm_path.string()));
  const TriMesh object = load_mesh(cfg.object.path.string()).transformed(cfg.object.pose);
  p.strategy = cfg.strategy == "auto" ? auto_strategy(object, cfg.mass, hand.span)
                                      : strategy_from_string(cfg.strategy);
  p.ctx = make_context(object, hand, cfg.mass, cfg.cone, cfg.weights, cfg.table_height);
  if (cfg.targets) p.ctx.targets = *cfg.targets;
  p.scene.table_height = cfg.table_height;
  p.scene.objects.push_back({cfg.object.id, p.ctx.object});
  std::set<std::string> ids = {cfg.object.id};
  for (const auto& s : cfg.scene) {
    if (!ids.insert(s.id).second) throw ConfigError("duplicate scene id '" + s.id + "'");
    const TriMesh m = load_mesh(s.path.string()).transformed(s.pose);
    p.scene.objects.push_back({s.id, std::make_shared<const MeshSdf>(m)});
  }
  for (int h = 0; h < 2; ++h) p.arms[h] = ArmMount{arm, cfg.mounts[h]};
  return p;
}

// ---------------------------------------------------------------------------
// Files written by the commands

inline std::filesystem::path batch_path(const RunConfig& c) { return c.output / "batch.json"; }
inline std::filesystem::path selection_path(const RunConfig& c) {
  return c.output / "selection.json";
}
inline std::filesystem::path dataset_path(const RunConfig& c) { return c.output / "dataset"; }

inline Json batch_to_json(const RunConfig& c, GraspStrategy s, const CandidateBatch& batch) {
  Json cands = Json::array();
  for (const auto& cand : batch) cands.push_back(candidate_to_json(cand));
  return Json{{"schema_version", std::string(kConfigSchemaVersion)},
              {"object_id", c.object.id},
              {"strategy", std::string(to_string(s))},
              {"count", batch.size()},
              {"candidates", cands}};
}

inline CandidateBatch batch_from_json(const Json& j) {
  CandidateBatch batch;
  for (const auto& c : j.at("candidates")) batch.push_back(candidate_from_json(c));
  if (batch.size() != j.at("count").get<std::size_t>()) {
    throw DatasetError("batch count does not match its candidates");
  }
  return batch;
}

inline Json report_to_json(const CandidateReport& r) {
  Json j{{"physical", r.physical.pass ? "pass" : "fail"},
         {"reason", r.physical.reason},
         {"reachable", r.reachable},
         {"collision_free", r.collision_free}};
  j["distance"] = r.distance ? Json(*r.distance) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Commands

struct CommandOptions {
  std::filesystem::path config;
  Overrides overrides;
  int jobs = 1;
  std::optional<std::filesystem::path> batch;      // select input
  std::optional<std::filesystem::path> selection;  // demo input
};

namespace detail {

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::filesystem::create_directories(path.parent_path());
  write_text(path, dump_json(j, 2) + "\n");
}

template <typename Fn>
int run_command(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DatasetError& e) {
    err << "dataset error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

inline RunConfig load_with_overrides(const CommandOptions& o) {
  RunConfig c = load_run_config(o.config);
  apply_overrides(c, o.overrides);
  return c;
}

}  // namespace detail

inline int cmd_synthesize(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return detail::run_command(err, [&] {
    const RunConfig cfg = detail::load_with_overrides(o);
    const Pipeline p = build_pipeline(cfg);
    const auto batch = synthesize_batch(p.ctx, p.strategy, cfg.seed_list(), {}, cfg.optimizer,
                                        std::max(1, o.jobs));
    detail::write_json_file(batch_path(cfg), batch_to_json(cfg, p.strategy, batch));
    out << "synthesized " << batch.size() << " " << to_string(p.strategy) << " candidates -> "
        << batch_path(cfg).string() << "\n";
    return int(kExitOk);
  });
}

inline int cmd_select(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return detail::run_command(err, [&] {
    const RunConfig cfg = detail::load_with_overrides(o);
    const Pipeline p = build_pipeline(cfg);
    const auto in = o.batch.value_or(batch_path(cfg));
    const CandidateBatch batch =
        batch_from_json(detail::parse_json(detail::read_text(in), in.string()));
    const FilterReport report =
        evaluate_batch(batch, p.ctx, p.scene, cfg.object.id, p.arms, p.selection());
    const auto best = select_preferred(batch, report, p.home_poses(), cfg.rot_weight);

    Json reports = Json::array();
    std::size_t physical = 0, passed = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Json r{{"index", batch[i].index}, {"seed", batch[i].seed}};
      const Json rj = report_to_json(report[i]);
      for (const auto& [k, v] : rj.items()) r[k] = v;
      reports.push_back(r);
      physical += report[i].physical.pass;
      passed += report[i].passed();
    }
    Json sel{{"schema_version", std::string(kConfigSchemaVersion)},
             {"object_id", cfg.object.id},
             {"candidate_count", batch.size()},
             {"physical_pass", physical},
             {"all_pass", passed},
             {"preferred", nullptr},
             {"reports", reports}};
    if (best) sel["preferred"] = candidate_to_json(batch[*best]);
    detail::write_json_file(selection_path(cfg), sel);
    out << "physical filter: " << physical << "/" << batch.size() << ", all filters: " << passed
        << "/" << batch.size() << "\n";
    if (!best) {
      err << "no candidate passed every filter\n";
      return int(kExitEmptySelection);
    }
    out << "preferred candidate: index " << batch[*best].index << " (seed " << batch[*best].seed
        << ")\n";
    return int(kExitOk);
  });
}

inline int cmd_demo(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return detail::run_command(err, [&] {
    const RunConfig cfg = detail::load_with_overrides(o);
    const Pipeline p = build_pipeline(cfg);
    const auto in = o.selection.value_or(selection_path(cfg));
    const Json sel = detail::parse_json(detail::read_text(in), in.string());
    if (sel.at("preferred").is_null()) {
      err << "selection has no preferred grasp\n";
      return int(kExitEmptySelection);
    }
    const Candidate cand = candidate_from_json(sel.at("preferred"));
    ConfigSnapshot snap{cfg.weights, cfg.cone, cfg.seed_list()};
    DemoOutcome res = generate_demo(cand.pose, p.world(), cfg.object.id, snap, cfg.demo);
    if (!res.record) {
      err << "planning failed: " << res.failure << "\n";
      return int(kExitPlanning);
    }
    res.record->grasp_energy = cand.energy.total;

    // Replace any earlier record for the same object and strategy so that
    // re-running is idempotent.
    const auto dir = dataset_path(cfg);
    std::vector<DemoRecord> records;
    if (std::filesystem::exists(dir / "manifest.json")) records = read_dataset(dir).records;
    std::erase_if(records, [&](const DemoRecord& r) {
      return r.object_id == res.record->object_id && r.strategy == res.record->strategy;
    });
    records.push_back(*res.record);
    write_dataset(records, dir, cfg.snapshot);
    const auto& v = res.record->validation;
    char line[160];
    std::snprintf(line, sizeof line, "demo: %zu waypoints, lift %.4f m, gravity residual %.3g, %s\n",
                  res.record->waypoints.size(), v.lift_height_m, v.gravity_residual,
                  v.success ? "success" : "failure");
    out << line;
    return int(kExitOk);
  });
}

/// Per-strategy counts, success rates and grasp-energy ranges.
inline std::string stats_report(const std::vector<DemoRecord>& records) {
  std::string s;
  char line[200];
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.validation.success;
  if (records.empty()) return "0 records\n";
  std::snprintf(line, sizeof line, "%zu records, %zu successful, success rate %.3f\n",
                records.size(), ok, double(ok) / double(records.size()));
  s += line;
  for (auto strategy : kAllStrategies) {
    std::vector<double> energies;
    std::size_t sok = 0;
    for (const auto& r : records) {
      if (r.strategy != strategy) continue;
      energies.push_back(r.grasp_energy);
      sok += r.validation.success;
    }
    if (energies.empty()) continue;
    std::sort(energies.begin(), energies.end());
    const double median = energies.size() % 2
                              ? energies[energies.size() / 2]
                              : 0.5 * (energies[energies.size() / 2 - 1] + energies[energies.size() / 2]);
    std::snprintf(line, sizeof line,
                  "  %-9s %zu records, %zu successful, success rate %.3f, energy min %.4g median "
                  "%.4g max %.4g\n",
                  std::string(to_string(strategy)).c_str(), energies.size(), sok,
                  double(sok) / double(energies.size()), energies.front(), median, energies.back());
    s += line;
  }
  return s;
}

inline int cmd_stats(const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  return detail::run_command(err, [&] {
    std::vector<DemoRecord> records;
    if (std::filesystem::exists(dir / "manifest.json")) {
      records = read_dataset(dir).records;
    } else if (!std::filesystem::exists(dir)) {
      throw ConfigError("dataset directory not found: " + dir.string());
    }
    out << stats_report(records);
    return int(kExitOk);
  });
}

inline int cmd_inspect_mesh(const std::filesystem::path& path, std::optional<double> mass,
                            std::ostream& out, std::ostream& err) {
  return detail::run_command(err, [&] {
    if (!std::filesystem::exists(path)) throw ConfigError("mesh not found: " + path.string());
    const TriMesh mesh = load_mesh(path.string());
    const Aabb box = mesh.bounds();
    const Vec3 ext = box.extents();
    char line[200];
    std::snprintf(line, sizeof line, "vertices %zu, faces %zu, watertight %s\n",
                  mesh.vertices().size(), mesh.faces().size(), mesh.watertight() ? "yes" : "no");
    out << line;
    std::snprintf(line, sizeof line, "surface area %.6g m^2\n", mesh.surface_area());
    out << line;
    std::snprintf(line, sizeof line, "bounds extents (%.6g, %.6g, %.6g), longest edge %.6g m\n",
                  ext.x(), ext.y(), ext.z(), box.longest_edge());
    out << line;
    if (mesh.watertight()) {
      const Vec3 com = center_of_mass(mesh);
      std::snprintf(line, sizeof line, "volume %.6g m^3, center of mass (%.6g, %.6g, %.6g)\n",
                    mesh.signed_volume(), com.x(), com.y(), com.z());
      out << line;
    }
    const double m = mass.value_or(0.1);
    out << "auto strategy (mass " << m << " kg, span 0.12 m): "
        << to_string(auto_strategy(mesh, m, 0.12)) << "\n";
    return int(kExitOk);
  });
}

}  // namespace graspforge
