#pragma once

// Demonstration generation: four-stage (pregrasp, grasp, squeeze, lift)
// collision-checked joint-space trajectories and quasi-static lift checks.

#include "graspforge/contact.hpp"
#include "graspforge/core.hpp"
#include "graspforge/force_qp.hpp"
#include "graspforge/kinematics.hpp"
#include "graspforge/selection.hpp"
#include "graspforge/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graspforge {

enum class Stage { Pregrasp, Grasp, Squeeze, Lift };

inline constexpr std::array<Stage, 4> kAllStages = {Stage::Pregrasp, Stage::Grasp, Stage::Squeeze,
                                                    Stage::Lift};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Pregrasp: return "Pregrasp";
    case Stage::Grasp: return "Grasp";
    case Stage::Squeeze: return "Squeeze";
    case Stage::Lift: return "Lift";
  }
  return "?";
}

inline Stage stage_from_string(std::string_view s) {
  for (auto st : kAllStages) {
    if (to_string(st) == s) return st;
  }
  throw ParseError("unknown stage '" + std::string(s) + "'");
}

struct DemoConfig {
  double pregrasp_offset = 0.1;  // m, against the palm normal
  double lift_height = 0.2;      // m, along world +z
  double min_lift = 0.17;        // m, success threshold
  double squeeze_delta = 0.15;   // rad on each squeeze joint
  double resolution = 0.05;      // rad, max per-joint step when interpolating
  double theta_min = 1e-3;       // rad, merge threshold
  double gravity_residual = 1e-2;
  ReachabilityConfig reach;
};

// ---------------------------------------------------------------------------
// Stage targets

struct StageTarget {
  std::array<RigidTransform, 2> wrist;
  std::array<JointVector, 2> hand_q;
};

/// Wrist poses and hand joints for each stage, indexed by Stage. Only
/// translations change between stages.
inline std::array<StageTarget, 4> stage_targets(const BimanualGraspPose& grasp,
                                                const HandModel& hand,
                                                const DemoConfig& cfg = {}) {
  std::array<StageTarget, 4> out;
  const JointVector& q_open = hand.open_for(grasp.strategy);
  for (int h = 0; h < 2; ++h) {
    const HandPose& g = grasp.hands[h];
    const Vec3 normal = hand.world_palm_normal(g.wrist);

    auto& pre = out[static_cast<int>(Stage::Pregrasp)];
    pre.wrist[h] = g.wrist;
    pre.wrist[h].translation -= cfg.pregrasp_offset * normal;
    pre.hand_q[h] = q_open;

    auto& gr = out[static_cast<int>(Stage::Grasp)];
    gr.wrist[h] = g.wrist;
    gr.hand_q[h] = g.q;

    auto& sq = out[static_cast<int>(Stage::Squeeze)];
    sq.wrist[h] = g.wrist;
    JointVector q = g.q;
    for (int j : hand.squeeze_joints) q[j] += cfg.squeeze_delta;
    sq.hand_q[h] = hand.chain.clamp(q);

    auto& lift = out[static_cast<int>(Stage::Lift)];
    lift.wrist[h] = g.wrist;
    lift.wrist[h].translation.z() += cfg.lift_height;
    lift.hand_q[h] = sq.hand_q[h];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories

struct RobotState {
  std::array<JointVector, 2> arm_q;
  std::array<JointVector, 2> hand_q;

  VecX pack() const {
    const Eigen::Index n = arm_q[0].size() + arm_q[1].size() + hand_q[0].size() + hand_q[1].size();
    VecX v(n);
    v << arm_q[0], arm_q[1], hand_q[0], hand_q[1];
    return v;
  }
  static RobotState unpack(const VecX& v, int arm_dof, int hand_dof) {
    RobotState s;
    s.arm_q[0] = v.segment(0, arm_dof);
    s.arm_q[1] = v.segment(arm_dof, arm_dof);
    s.hand_q[0] = v.segment(2 * arm_dof, hand_dof);
    s.hand_q[1] = v.segment(2 * arm_dof + hand_dof, hand_dof);
    return s;
  }
};

struct Waypoint {
  int index = 0;
  Stage stage = Stage::Pregrasp;
  RobotState state;
  std::array<RigidTransform, 2> wrist;  // FK of the arms, stored for convenience
};

struct PlanResult {
  bool ok = false;
  std::vector<VecX> path;
  std::optional<std::size_t> first_collision;
  std::string message;
};

/// Linear joint-space interpolation with at most `resolution` per joint per
/// step; every waypoint must satisfy `is_free`.
inline PlanResult plan_segment(const VecX& q_from, const VecX& q_to,
                               const std::function<bool(const VecX&)>& is_free,
                               double resolution = 0.05) {
  if (q_from.size() != q_to.size()) throw ValidationError("plan_segment: dimension mismatch");
  if (!(resolution > 0.0)) throw ValidationError("plan_segment: resolution must be positive");
  PlanResult out;
  const VecX delta = q_to - q_from;
  const double largest = delta.size() ? delta.cwiseAbs().maxCoeff() : 0.0;
  const auto steps = static_cast<std::size_t>(std::ceil(largest / resolution - 1e-12));
  for (std::size_t k = 0; k <= steps; ++k) {
    VecX q = k == steps ? q_to : VecX(q_from + (double(k) / double(steps)) * delta);
    if (!is_free(q)) {
      out.first_collision = k;
      out.message = "waypoint " + std::to_string(k) + " of " + std::to_string(steps + 1) +
                    " is in collision";
      out.path.clear();
      return out;
    }
    out.path.push_back(std::move(q));
  }
  out.ok = true;
  return out;
}

namespace detail {

inline double max_joint_delta(const Waypoint& a, const Waypoint& b) {
  const VecX d = a.state.pack() - b.state.pack();
  return d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace detail

/// Drops waypoints that move less than theta_min from the previously kept
/// one. The first waypoint of every stage and the final waypoint are always
/// kept; indices are renumbered. Idempotent.
inline std::vector<Waypoint> merge_small_steps(const std::vector<Waypoint>& wps,
                                               double theta_min = 1e-3) {
  if (wps.empty()) throw ValidationError("merge_small_steps needs at least one waypoint");
  std::vector<Waypoint> out;
  std::vector<char> forced;
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const bool first_of_stage = i == 0 || wps[i].stage != wps[i - 1].stage;
    if (first_of_stage || detail::max_joint_delta(out.back(), wps[i]) >= theta_min) {
      out.push_back(wps[i]);
      forced.push_back(first_of_stage);
    }
  }
  const Waypoint& last = wps.back();
  const bool last_first_of_stage = wps.size() == 1 || last.stage != wps[wps.size() - 2].stage;
  if (!last_first_of_stage) {
    while (!out.empty() && !forced.back() &&
           detail::max_joint_delta(out.back(), last) < theta_min) {
      out.pop_back();
      forced.pop_back();
    }
  }
  out.push_back(last);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].index = static_cast<int>(i);
  return out;
}

// ---------------------------------------------------------------------------
// Records and validation

struct LiftValidation {
  double lift_height_m = 0.0;
  double gravity_residual = 0.0;
  bool success = false;
};

struct ConfigSnapshot {
  EnergyWeights weights;
  FrictionCone cone;
  std::vector<std::uint64_t> seeds;
};

inline constexpr std::string_view kRecordSchemaVersion = "1.0";

struct DemoRecord {
  std::string schema_version{kRecordSchemaVersion};
  std::string object_id;
  double object_mass = 0.0;
  GraspStrategy strategy = GraspStrategy::WholeHand;
  BimanualGraspPose grasp;
  double grasp_energy = 0.0;  // total synthesis energy of the grasp
  std::vector<Waypoint> waypoints;
  LiftValidation validation;
  ConfigSnapshot config;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // unknown fields, kept verbatim
};

/// The physical setting a demonstration is generated in.
struct DemoWorld {
  const SynthesisContext* ctx = nullptr;  // target object, hand, cone, com, alpha
  std::array<ArmMount, 2> arms;
  Scene scene;
  std::string target_id;
  double mass = 0.0;
};

inline std::array<RigidTransform, 2> arm_wrists(const DemoWorld& world, const RobotState& s) {
  return {world.arms[0].tool_pose(s.arm_q[0]), world.arms[1].tool_pose(s.arm_q[1])};
}

inline bool state_collision_free(const DemoWorld& world, const RobotState& s,
                                 const std::array<bool, 2>& hands) {
  const auto wrists = arm_wrists(world, s);
  const HandModel& hand = *world.ctx->hand;
  for (int h = 0; h < 2; ++h) {
    if (!hands[h]) continue;
    const auto posed = pose_hand(hand, HandPose{wrists[h], s.hand_q[h]});
    if (!spheres_clear(hand, posed.sphere_centers, world.scene, world.target_id)) return false;
  }
  return true;
}

/// Lift height and gravity-support residual, recomputed from the stored
/// waypoints: contacts come from the last Lift waypoint (squeezed fingers),
/// and the object is carried rigidly by the hands.
inline LiftValidation validate_lift(const DemoRecord& record, const DemoWorld& world,
                                    const DemoConfig& cfg = {}) {
  LiftValidation v;
  const Waypoint* squeeze = nullptr;
  const Waypoint* lift = nullptr;
  for (const auto& w : record.waypoints) {
    if (w.stage == Stage::Squeeze) squeeze = &w;
    if (w.stage == Stage::Lift) lift = &w;
  }
  if (!squeeze || !lift) return v;
  const auto before = arm_wrists(world, squeeze->state);
  const auto after = arm_wrists(world, lift->state);
  const SynthesisContext& ctx = *world.ctx;

  double height = std::numeric_limits<double>::infinity();
  Vec3 carry = Vec3::Zero();
  int active = 0;
  for (int h = 0; h < 2; ++h) {
    if (!record.grasp.active[h]) continue;
    const Vec3 d = after[h].translation - before[h].translation;
    height = std::min(height, d.z());
    carry += d;
    ++active;
  }
  if (active == 0) return v;
  carry /= active;
  v.lift_height_m = height;

  ContactSet contacts;
  for (int h = 0; h < 2; ++h) {
    if (!record.grasp.active[h]) continue;
    auto c = contact_frames(*ctx.hand, after[h], lift->state.hand_q[h], record.strategy, h);
    contacts.insert(contacts.end(), c.begin(), c.end());
  }
  const Wrench gravity{Vec3(0.0, 0.0, record.object_mass * kGravity), Vec3::Zero()};
  v.gravity_residual =
      solve_contact_forces(grasp_maps(contacts, ctx.com + carry, ctx.alpha), ctx.cone, gravity)
          .residual_norm;
  v.success = v.lift_height_m >= cfg.min_lift && v.gravity_residual <= cfg.gravity_residual;
  return v;
}

struct DemoOutcome {
  std::optional<DemoRecord> record;
  std::string failure;  // set when planning failed
};

/// Plans the four stages from the arms' home configuration. Arm IK for each
/// stage is seeded from the previous stage's solution.
inline DemoOutcome generate_demo(const BimanualGraspPose& grasp, const DemoWorld& world,
                                 const std::string& object_id, const ConfigSnapshot& snapshot,
                                 const DemoConfig& cfg = {}) {
  const HandModel& hand = *world.ctx->hand;
  const auto targets = stage_targets(grasp, hand, cfg);
  const int arm_dof = world.arms[0].arm->chain.dof();
  const int hand_dof = hand.chain.dof();

  RobotState current;
  for (int h = 0; h < 2; ++h) {
    current.arm_q[h] = world.arms[h].arm->home;
    current.hand_q[h] = grasp.active[h] ? hand.open_for(grasp.strategy) : grasp.hands[h].q;
  }
  auto is_free = [&](const VecX& v) {
    return state_collision_free(world, RobotState::unpack(v, arm_dof, hand_dof), grasp.active);
  };

  DemoOutcome out;
  std::vector<Waypoint> wps;
  // Arm IK for every active hand, seeded from `from`.
  auto solve_state = [&](const std::array<RigidTransform, 2>& wrist,
                         const std::array<JointVector, 2>& hand_q, const RobotState& from,
                         int& failed_hand) -> std::optional<RobotState> {
    RobotState goal = from;
    for (int h = 0; h < 2; ++h) {
      if (!grasp.active[h]) continue;
      goal.hand_q[h] = hand_q[h];
      const auto ik = solve_arm_ik(world.arms[h], wrist[h], from.arm_q[h], cfg.reach);
      if (!ik.success) {
        failed_hand = h;
        return std::nullopt;
      }
      goal.arm_q[h] = ik.q;
    }
    return goal;
  };
  // Plans through a list of states; empty on collision.
  auto plan_legs = [&](const RobotState& from, const std::vector<RobotState>& legs,
                       std::string& message) {
    std::vector<VecX> path;
    VecX q = from.pack();
    for (const auto& leg : legs) {
      auto plan = plan_segment(q, leg.pack(), is_free, cfg.resolution);
      if (!plan.ok) {
        message = plan.message;
        return std::vector<VecX>{};
      }
      path.insert(path.end(), plan.path.begin() + (path.empty() ? 0 : 1), plan.path.end());
      q = leg.pack();
    }
    return path;
  };

  for (Stage stage : kAllStages) {
    const auto& t = targets[static_cast<int>(stage)];
    const std::string name(to_string(stage));
    int failed_hand = 0;
    auto goal = solve_state(t.wrist, t.hand_q, current, failed_hand);
    if (!goal) {
      out.failure = name + ": inverse kinematics failed for hand " + std::to_string(failed_hand);
      return out;
    }
    std::string message;
    auto path = plan_legs(current, {*goal}, message);
    // The approach from home may sweep the hand through the table; retry via
    // a hover pose above the pregrasp pose.
    for (double hover : {0.1, 0.2}) {
      if (!path.empty() || stage != Stage::Pregrasp) break;
      auto wrist = t.wrist;
      for (auto& w : wrist) w.translation.z() += hover;
      auto via = solve_state(wrist, t.hand_q, current, failed_hand);
      if (!via) continue;
      auto end = solve_state(t.wrist, t.hand_q, *via, failed_hand);
      if (!end) continue;
      std::string ignored;
      path = plan_legs(current, {*via, *end}, ignored);
      if (!path.empty()) goal = end;
    }
    if (path.empty()) {
      out.failure = name + ": " + message;
      return out;
    }
    for (const auto& v : path) {
      Waypoint w;
      w.index = static_cast<int>(wps.size());
      w.stage = stage;
      w.state = RobotState::unpack(v, arm_dof, hand_dof);
      w.wrist = arm_wrists(world, w.state);
      wps.push_back(std::move(w));
    }
    current = *goal;
  }

  DemoRecord rec;
  rec.object_id = object_id;
  rec.object_mass = world.mass;
  rec.strategy = grasp.strategy;
  rec.grasp = grasp;
  rec.waypoints = merge_small_steps(wps, cfg.theta_min);
  rec.config = snapshot;
  rec.validation = validate_lift(rec, world, cfg);
  out.record = std::move(rec);
  return out;
}

}  // namespace graspforge
