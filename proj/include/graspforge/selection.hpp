#pragma once

// Candidate filtering (physical plausibility, arm reachability, scene
// collisions) and ranking by SE(3) distance to the current end effectors.

#include "graspforge/core.hpp"
#include "graspforge/force_qp.hpp"
#include "graspforge/geometry.hpp"
#include "graspforge/kinematics.hpp"
#include "graspforge/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace graspforge {

// ---------------------------------------------------------------------------
// Metrics

/// Geodesic angle between two rotations.
/// Uses atan2 of the sine and cosine parts, which stays accurate near 0 and pi.
inline double rot_distance(const Mat3& r1, const Mat3& r2) {
  const Mat3 r = r1.transpose() * r2;
  const double c = (r.trace() - 1.0) / 2.0;
  const double s = 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)).norm();
  return std::atan2(s, c);
}

/// ||t1 - t2|| + rot_weight * d_rot(R1, R2).
inline double se3_distance(const RigidTransform& a, const RigidTransform& b, double rot_weight) {
  return (a.translation - b.translation).norm() + rot_weight * rot_distance(a.rotation, b.rotation);
}

/// Sum over active hands of the distance from wrist target to end effector.
inline double grasp_distance(const BimanualGraspPose& pose,
                             const std::array<RigidTransform, 2>& current_ee, double rot_weight) {
  double d = 0.0;
  for (int h = 0; h < 2; ++h) {
    if (pose.active[h]) d += se3_distance(pose.hands[h].wrist, current_ee[h], rot_weight);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Physical plausibility

struct PhysicalThresholds {
  double contact_distance = 5e-3;  // delta, m
  double penetration = 2e-3;       // epsilon, m
  double wrench_residual = 1e-2;   // rho, normalized
};

struct PhysicalVerdict {
  bool pass = false;
  std::string reason;  // empty on pass
};

/// Largest proxy-sphere penetration into the object or the table.
inline double max_penetration(const BimanualGraspPose& pose, const SynthesisContext& ctx) {
  double worst = 0.0;
  for (int h = 0; h < 2; ++h) {
    if (!pose.active[h]) continue;
    const auto posed = pose_hand(*ctx.hand, pose.hands[h]);
    for (std::size_t i = 0; i < posed.sphere_centers.size(); ++i) {
      const Vec3& c = posed.sphere_centers[i];
      const double r = ctx.hand->spheres[i].radius;
      worst = std::max(worst, r - ctx.object->distance(c));
      if (ctx.table_height) worst = std::max(worst, r - (c.z() - *ctx.table_height));
    }
  }
  return worst;
}

/// Checks (a) contact distances, (b) penetration and (c) wrench tracking, in
/// that order, on already-extracted contacts.
inline PhysicalVerdict physical_check(const ContactSet& contacts, double penetration,
                                      const SynthesisContext& ctx,
                                      const PhysicalThresholds& th = {}) {
  for (const auto& c : contacts) {
    if (std::abs(ctx.object->distance(c.position)) > th.contact_distance) {
      return {false, "contact distance"};
    }
  }
  if (penetration > th.penetration) return {false, "penetration"};
  const double err = wrench_tracking_error(grasp_maps(contacts, ctx.com, ctx.alpha), ctx.cone,
                                           ctx.targets, ctx.weights.wrench_scale);
  if (!(err <= th.wrench_residual)) return {false, "wrench residual"};
  return {true, {}};
}

inline PhysicalVerdict physical_filter(const BimanualGraspPose& pose, const SynthesisContext& ctx,
                                       const PhysicalThresholds& th = {}) {
  return physical_check(active_contacts(pose, *ctx.hand), max_penetration(pose, ctx), ctx, th);
}

// ---------------------------------------------------------------------------
// Reachability

/// An arm mounted in the world; the hand root is rigidly attached to the
/// arm's tool frame.
struct ArmMount {
  std::shared_ptr<const ArmModel> arm;
  RigidTransform base;

  RigidTransform tool_pose(const JointVector& q) const {
    return forward_kinematics(arm->chain, base, q).links[arm->tool_link];
  }
  RigidTransform home_pose() const { return tool_pose(arm->home); }
};

struct ReachabilityConfig {
  IkConfig ik;
  int restarts = 4;  // extra seeded starts after the home configuration
  std::uint64_t seed = 0x7EAC4;
};

struct ReachResult {
  bool pass = false;
  std::array<std::optional<JointVector>, 2> arm_q;
};

/// IK from `q_start`, then from deterministic random configurations.
inline IkResult solve_arm_ik(const ArmMount& mount, const RigidTransform& target,
                             const JointVector& q_start, const ReachabilityConfig& cfg) {
  const auto& chain = mount.arm->chain;
  IkResult best = ik_solve(chain, mount.base, mount.arm->tool_link, target, q_start, cfg.ik);
  CounterRng rng(cfg.seed);
  const VecX lo = chain.lower_limits(), hi = chain.upper_limits();
  for (int r = 0; r < cfg.restarts && !best.success; ++r) {
    JointVector q(chain.dof());
    for (int j = 0; j < chain.dof(); ++j) q[j] = rng.uniform(lo[j], hi[j]);
    IkResult trial = ik_solve(chain, mount.base, mount.arm->tool_link, target, q, cfg.ik);
    if (trial.success) best = std::move(trial);
  }
  return best;
}

inline ReachResult reachability_filter(const BimanualGraspPose& pose,
                                       const std::array<ArmMount, 2>& arms,
                                       const ReachabilityConfig& cfg = {}) {
  ReachResult out;
  out.pass = true;
  for (int h = 0; h < 2; ++h) {
    if (!pose.active[h]) continue;
    const auto ik = solve_arm_ik(arms[h], pose.hands[h].wrist, arms[h].arm->home, cfg);
    if (!ik.success) {
      out.pass = false;
      continue;
    }
    out.arm_q[h] = ik.q;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scene collisions

struct SceneObject {
  std::string id;
  std::shared_ptr<const MeshSdf> sdf;
};

struct Scene {
  std::vector<SceneObject> objects;
  std::optional<double> table_height;
};

/// Every proxy sphere clears every non-target object and the table.
inline bool spheres_clear(const HandModel& hand, const std::vector<Vec3>& centers,
                          const Scene& scene, const std::string& target_id) {
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double r = hand.spheres[i].radius;
    if (scene.table_height && centers[i].z() - *scene.table_height < r) return false;
    for (const auto& obj : scene.objects) {
      if (obj.id == target_id) continue;
      if (obj.sdf->distance(centers[i]) < r) return false;
    }
  }
  return true;
}

inline bool collision_filter(const BimanualGraspPose& pose, const HandModel& hand,
                             const Scene& scene, const std::string& target_id) {
  for (int h = 0; h < 2; ++h) {
    if (!pose.active[h]) continue;
    if (!spheres_clear(hand, pose_hand(hand, pose.hands[h]).sphere_centers, scene, target_id)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Reports and selection

struct CandidateReport {
  PhysicalVerdict physical;
  bool reachable = false;
  bool collision_free = false;
  std::optional<double> distance;  // present iff all filters pass
  std::array<std::optional<JointVector>, 2> arm_q;

  bool passed() const { return physical.pass && reachable && collision_free; }
};

/// One report per candidate, in batch order.
using FilterReport = std::vector<CandidateReport>;

struct SelectionConfig {
  PhysicalThresholds thresholds;
  ReachabilityConfig reach;
  double rot_weight = 0.1;  // m/rad
};

inline FilterReport evaluate_batch(const CandidateBatch& batch, const SynthesisContext& ctx,
                                   const Scene& scene, const std::string& target_id,
                                   const std::array<ArmMount, 2>& arms,
                                   const SelectionConfig& cfg = {}) {
  std::array<RigidTransform, 2> ee = {arms[0].home_pose(), arms[1].home_pose()};
  FilterReport report;
  report.reserve(batch.size());
  for (const auto& cand : batch) {
    CandidateReport r;
    r.physical = physical_filter(cand.pose, ctx, cfg.thresholds);
    const auto reach = reachability_filter(cand.pose, arms, cfg.reach);
    r.reachable = reach.pass;
    r.arm_q = reach.arm_q;
    r.collision_free = collision_filter(cand.pose, *ctx.hand, scene, target_id);
    if (r.passed()) r.distance = grasp_distance(cand.pose, ee, cfg.rot_weight);
    report.push_back(std::move(r));
  }
  return report;
}

/// Index (into `batch`) of the passing candidate closest to the current end
/// effectors; ties go to lower energy, then lower seed-list index.
inline std::optional<std::size_t> select_preferred(const CandidateBatch& batch,
                                                   const FilterReport& reports,
                                                   const std::array<RigidTransform, 2>& current_ee,
                                                   double rot_weight) {
  if (reports.size() != batch.size()) {
    throw ValidationError("select_preferred: report count does not match batch size");
  }
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!reports[i].passed()) continue;
    const double d = grasp_distance(batch[i].pose, current_ee, rot_weight);
    if (!best) {
      best = i, best_d = d;
      continue;
    }
    const auto& b = batch[*best];
    const auto& c = batch[i];
    const bool better =
        d < best_d ||
        (d == best_d && (c.energy.total < b.energy.total ||
                         (c.energy.total == b.energy.total && c.index < b.index)));
    if (better) best = i, best_d = d;
  }
  return best;
}

}  // namespace graspforge
