#pragma once

// Upper level of the bilevel grasp program: hand placement on the convex
// hull and finite-difference projected gradient descent over the hand
// poses, with the contact-force QP re-solved at every energy evaluation.

#include "graspforge/contact.hpp"
#include "graspforge/core.hpp"
#include "graspforge/force_qp.hpp"
#include "graspforge/geometry.hpp"
#include "graspforge/kinematics.hpp"
#include "graspforge/types.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

namespace graspforge {

struct HandPose {
  RigidTransform wrist;  // t_h, R_h
  JointVector q;         // q_h
};

/// Bimanual grasp pose {(t_h, R_h, q_h) | h = 0, 1} with an activity mask.
struct BimanualGraspPose {
  std::array<HandPose, 2> hands;
  std::array<bool, 2> active = {true, false};
  GraspStrategy strategy = GraspStrategy::WholeHand;

  int active_count() const { return int(active[0]) + int(active[1]); }

  /// Rotations orthonormal, joints within limits, mask matches strategy.
  bool valid(const HandModel& hand, double tol = 1e-9) const {
    if (active_count() != (is_bimanual(strategy) ? 2 : 1)) return false;
    for (int h = 0; h < 2; ++h) {
      if (!active[h]) continue;
      if (!is_rotation(hands[h].wrist.rotation, tol)) return false;
      if (hands[h].q.size() != hand.chain.dof() || !hand.chain.within_limits(hands[h].q)) {
        return false;
      }
    }
    return true;
  }
};

struct EnergyWeights {
  double kappa_w = 1.0;
  double kappa_con = 100.0;
  double kappa_coll = 500.0;
  double kappa_hh = 500.0;
  double wrench_scale = 1.0;  // lambda in the wrench term

  void validate() const {
    if (!(kappa_w > 0 && kappa_con > 0 && kappa_coll > 0 && kappa_hh > 0 && wrench_scale > 0)) {
      throw ValidationError("energy weights and wrench scale must be strictly positive");
    }
  }
};

struct EnergyBreakdown {
  double wrench = 0.0;
  double contact = 0.0;
  double collision = 0.0;
  double hand_hand = 0.0;
  double total = 0.0;
};

/// Everything an energy evaluation needs. Immutable and cheap to copy.
struct SynthesisContext {
  std::shared_ptr<const MeshSdf> object;  // world frame
  std::shared_ptr<const TriMesh> hull;    // convex hull of the object
  std::shared_ptr<const HandModel> hand;  // model used for both hands
  Vec3 com = Vec3::Zero();
  double alpha = 1.0;  // torque scale, 1 / bounding radius by default
  FrictionCone cone;
  TargetWrenchSet targets;
  EnergyWeights weights;
  std::optional<double> table_height;  // half-space z >= table_height
  double table_clearance = 1e-3;       // extra margin the penalty keeps from the table
  int unimanual_hand = 0;

  const TriMesh& mesh() const { return object->mesh(); }
};

/// Builds a context for an object mesh already expressed in the world frame.
inline SynthesisContext make_context(const TriMesh& world_mesh, const HandModel& hand,
                                     double mass, const FrictionCone& cone = {},
                                     const EnergyWeights& weights = {},
                                     std::optional<double> table_height = std::nullopt) {
  cone.validate();
  weights.validate();
  if (!(mass > 0.0)) throw ValidationError("object mass must be positive");
  SynthesisContext ctx;
  ctx.object = std::make_shared<const MeshSdf>(world_mesh);
  ctx.hull = std::make_shared<const TriMesh>(convex_hull(world_mesh));
  ctx.hand = std::make_shared<const HandModel>(hand);
  ctx.com = center_of_mass(world_mesh);
  ctx.alpha = 1.0 / bounding_radius(world_mesh, ctx.com);
  ctx.cone = cone;
  ctx.targets = default_target_wrenches(mass);
  ctx.weights = weights;
  ctx.table_height = table_height;
  return ctx;
}

// ---------------------------------------------------------------------------
// Energies

/// Posed hand geometry needed by every energy term.
struct PosedHand {
  LinkPoses links;
  std::vector<Vec3> sphere_centers;
};

inline PosedHand pose_hand(const HandModel& hand, const HandPose& pose) {
  PosedHand out{forward_kinematics(hand.chain, pose.wrist, pose.q), {}};
  out.sphere_centers = sphere_centers(hand, out.links);
  return out;
}

inline ContactSet active_contacts(const BimanualGraspPose& pose, const HandModel& hand,
                                  const std::array<std::optional<PosedHand>, 2>& posed) {
  ContactSet out;
  for (int h = 0; h < 2; ++h) {
    if (!pose.active[h]) continue;
    for (int id : hand.anchors_for(pose.strategy)) {
      const auto& a = hand.anchors[id];
      const RigidTransform world = posed[h]->links.links[a.link] * a.local;
      out.push_back(Contact{world.translation, world.rotation, h, a.name});
    }
  }
  return out;
}

inline std::array<std::optional<PosedHand>, 2> pose_hands(const BimanualGraspPose& pose,
                                                          const HandModel& hand) {
  std::array<std::optional<PosedHand>, 2> posed;
  for (int h = 0; h < 2; ++h) {
    if (pose.active[h]) posed[h] = pose_hand(hand, pose.hands[h]);
  }
  return posed;
}

inline ContactSet active_contacts(const BimanualGraspPose& pose, const HandModel& hand) {
  return active_contacts(pose, hand, pose_hands(pose, hand));
}

/// Squared-hinge penetration of one sphere against an SDF value.
inline double penetration_penalty(double sdf, double radius) {
  const double p = std::max(0.0, radius - sdf);
  return p * p;
}

namespace detail {

inline double contact_energy(const ContactSet& contacts, const MeshSdf& sdf) {
  double e = 0.0;
  for (const auto& c : contacts) {
    const double d = sdf.distance(c.position);
    e += d * d;
  }
  return e;
}

inline double collision_energy(const HandModel& hand, const std::vector<Vec3>& centers,
                               const MeshSdf& sdf, std::optional<double> table_height,
                               double table_clearance) {
  double e = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double r = hand.spheres[i].radius;
    e += penetration_penalty(sdf.distance(centers[i]), r);
    if (table_height) {
      e += penetration_penalty(centers[i].z() - *table_height, r + table_clearance);
    }
  }
  return e;
}

inline double hand_hand_energy(const HandModel& hand, const std::vector<Vec3>& a,
                               const std::vector<Vec3>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double gap = hand.spheres[i].radius + hand.spheres[j].radius - (a[i] - b[j]).norm();
      if (gap > 0.0) e += gap * gap;
    }
  }
  return e;
}

}  // namespace detail

/// Sum of squared contact-to-surface distances over the active contacts.
inline double energy_contact(const BimanualGraspPose& pose, const SynthesisContext& ctx) {
  return detail::contact_energy(active_contacts(pose, *ctx.hand), *ctx.object);
}

/// Squared-hinge penetration of hand proxy spheres into the object (and the
/// table half-space when configured).
inline double energy_collision(const BimanualGraspPose& pose, const SynthesisContext& ctx) {
  double e = 0.0;
  for (int h = 0; h < 2; ++h) {
    if (!pose.active[h]) continue;
    const auto posed = pose_hand(*ctx.hand, pose.hands[h]);
    e += detail::collision_energy(*ctx.hand, posed.sphere_centers, *ctx.object, ctx.table_height,
                                  ctx.table_clearance);
  }
  return e;
}

/// Pairwise sphere overlap between the two hands; zero for unimanual poses.
inline double energy_hand_hand(const BimanualGraspPose& pose, const SynthesisContext& ctx) {
  if (!(pose.active[0] && pose.active[1])) return 0.0;
  const auto a = pose_hand(*ctx.hand, pose.hands[0]);
  const auto b = pose_hand(*ctx.hand, pose.hands[1]);
  return detail::hand_hand_energy(*ctx.hand, a.sphere_centers, b.sphere_centers);
}

inline double energy_wrench(const ContactSet& contacts, const SynthesisContext& ctx) {
  return wrench_tracking_error(grasp_maps(contacts, ctx.com, ctx.alpha), ctx.cone, ctx.targets,
                               ctx.weights.wrench_scale);
}

inline EnergyBreakdown total_energy(const BimanualGraspPose& pose, const SynthesisContext& ctx) {
  const auto posed = pose_hands(pose, *ctx.hand);
  const ContactSet contacts = active_contacts(pose, *ctx.hand, posed);
  EnergyBreakdown e;
  e.wrench = energy_wrench(contacts, ctx);
  e.contact = detail::contact_energy(contacts, *ctx.object);
  for (int h = 0; h < 2; ++h) {
    if (posed[h]) {
      e.collision += detail::collision_energy(*ctx.hand, posed[h]->sphere_centers, *ctx.object,
                                              ctx.table_height, ctx.table_clearance);
    }
  }
  if (posed[0] && posed[1]) {
    e.hand_hand =
        detail::hand_hand_energy(*ctx.hand, posed[0]->sphere_centers, posed[1]->sphere_centers);
  }
  const auto& w = ctx.weights;
  e.total = w.kappa_w * e.wrench + w.kappa_con * e.contact + w.kappa_coll * e.collision +
            w.kappa_hh * e.hand_hand;
  return e;
}

// ---------------------------------------------------------------------------
// Initialization

struct InitConfig {
  double standoff_unimanual = 0.02;
  double standoff_bimanual = 0.05;
  int max_attempts = 64;  // hull draws before accepting a table-penetrating placement
};

namespace detail {

inline HandPose place_hand(const HandModel& hand, const SurfaceSample& s, double standoff,
                           const Vec3& x_hint, const JointVector& q) {
  // Palm normal -> -n (palm faces the object), palm origin at s + standoff n.
  const Mat3 align = frame_from_z(-s.normal, x_hint) *
                     frame_from_z(hand.palm_normal, Vec3::UnitX()).transpose();
  HandPose pose;
  pose.wrist.rotation = orthonormalize(align * hand.palm_local.rotation.transpose());
  pose.wrist.translation =
      s.position + standoff * s.normal - pose.wrist.rotation * hand.palm_local.translation;
  pose.q = q;
  return pose;
}

inline bool clears_table(const HandModel& hand, const HandPose& pose,
                         std::optional<double> table_height) {
  if (!table_height) return true;
  const auto posed = pose_hand(hand, pose);
  for (std::size_t i = 0; i < posed.sphere_centers.size(); ++i) {
    if (posed.sphere_centers[i].z() - *table_height < hand.spheres[i].radius) return false;
  }
  return true;
}

}  // namespace detail

/// Places the hand(s) on the convex hull with the palm facing the object.
/// Bimanual placements use two hull samples on opposite sides of the hull
/// centroid. Placements whose proxy spheres would cut the table are
/// redrawn (up to max_attempts).
inline BimanualGraspPose init_grasp(const SynthesisContext& ctx, GraspStrategy strategy,
                                    std::uint64_t seed, const InitConfig& cfg = {}) {
  const HandModel& hand = *ctx.hand;
  const TriMesh& hull = *ctx.hull;
  const JointVector& q_open = hand.open_for(strategy);
  CounterRng rng(seed, 0x1417);
  std::uint64_t draw = 0;
  auto next_sample = [&]() { return sample_surface(hull, 1, mix64(seed) + draw++).front(); };

  BimanualGraspPose pose;
  pose.strategy = strategy;
  for (auto& h : pose.hands) {
    h.wrist = RigidTransform::identity();
    h.q = q_open;
  }
  if (!is_bimanual(strategy)) {
    const int h = ctx.unimanual_hand;
    pose.active = {h == 0, h == 1};
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const auto s = next_sample();
      pose.hands[h] = detail::place_hand(hand, s, cfg.standoff_unimanual, rng.unit_vector(), q_open);
      if (detail::clears_table(hand, pose.hands[h], ctx.table_height)) break;
    }
    return pose;
  }

  pose.active = {true, true};
  const Vec3 centroid = center_of_mass(hull);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const auto s0 = next_sample();
    std::optional<SurfaceSample> s1;
    for (int k = 0; k < cfg.max_attempts && !s1; ++k) {
      const auto s = next_sample();
      if ((s0.position - centroid).dot(s.position - centroid) < 0.0) s1 = s;
    }
    if (!s1) continue;
    pose.hands[0] =
        detail::place_hand(hand, s0, cfg.standoff_bimanual, rng.unit_vector(), q_open);
    pose.hands[1] =
        detail::place_hand(hand, *s1, cfg.standoff_bimanual, rng.unit_vector(), q_open);
    if (detail::clears_table(hand, pose.hands[0], ctx.table_height) &&
        detail::clears_table(hand, pose.hands[1], ctx.table_height)) {
      break;
    }
  }
  return pose;
}

// ---------------------------------------------------------------------------
// Optimization

struct OptimizerConfig {
  int max_iterations = 300;
  double fd_translation = 1e-4;  // m
  double fd_rotation = 1e-4;     // rad
  double fd_joint = 1e-3;        // rad
  double min_step = 1e-5;        // scaled step norm that counts as converged
  double min_decrease = 1e-10;   // energy decrease that counts as converged
  double initial_step = 5e-3;    // first trial step length (scaled units, ~m)
  double max_step = 2e-2;
  int max_backtracks = 30;
  // Lever arms converting rotation and joint increments to metres so that
  // one step length is meaningful for every coordinate.
  double rotation_scale = 0.05;
  double joint_scale = 0.04;
};

struct OptimizeResult {
  BimanualGraspPose pose;
  EnergyBreakdown energy;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;  // accepted total energies, strictly decreasing
};

namespace detail {

struct Coordinate {
  int hand;
  int kind;  // 0 translation, 1 rotation, 2 joint
  int index;
};

inline std::vector<Coordinate> coordinates(const BimanualGraspPose& pose, int dof) {
  std::vector<Coordinate> out;
  for (int h = 0; h < 2; ++h) {
    if (!pose.active[h]) continue;
    for (int k = 0; k < 3; ++k) out.push_back({h, 0, k});
    for (int k = 0; k < 3; ++k) out.push_back({h, 1, k});
    for (int k = 0; k < dof; ++k) out.push_back({h, 2, k});
  }
  return out;
}

/// Applies a step, then projects: exponential-map retraction onto SO(3)
/// and clamping of joints to their limits.
inline BimanualGraspPose retract(const BimanualGraspPose& pose,
                                 const std::vector<Coordinate>& coords, const VecX& step,
                                 const HandModel& hand) {
  BimanualGraspPose out = pose;
  std::array<Vec3, 2> omega = {Vec3::Zero(), Vec3::Zero()};
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto& c = coords[i];
    const double v = step[static_cast<Eigen::Index>(i)];
    if (c.kind == 0) {
      out.hands[c.hand].wrist.translation[c.index] += v;
    } else if (c.kind == 1) {
      omega[c.hand][c.index] += v;
    } else {
      out.hands[c.hand].q[c.index] += v;
    }
  }
  for (int h = 0; h < 2; ++h) {
    if (!out.active[h]) continue;
    out.hands[h].wrist.rotation =
        orthonormalize(so3_exp(omega[h]) * out.hands[h].wrist.rotation);
    out.hands[h].q = hand.chain.clamp(out.hands[h].q);
  }
  return out;
}

}  // namespace detail

/// Finite-difference gradient of the total energy with respect to
/// (t_h, omega_h, q_h) of each active hand. Joint coordinates at a limit use
/// a one-sided difference so every probe stays feasible. The wrench term
/// jumps where two contacts' friction pyramids start to admit an internal
/// force; when the one-sided slopes disagree the smaller one (minmod) is
/// used so a jump never masquerades as a steep slope.
inline VecX energy_gradient(const BimanualGraspPose& pose, const SynthesisContext& ctx,
                            const OptimizerConfig& cfg) {
  const HandModel& hand = *ctx.hand;
  const auto coords = detail::coordinates(pose, hand.chain.dof());
  const VecX lower = hand.chain.lower_limits(), upper = hand.chain.upper_limits();
  VecX grad(static_cast<Eigen::Index>(coords.size()));
  VecX probe = VecX::Zero(grad.size());
  const double e0 = total_energy(pose, ctx).total;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto& c = coords[i];
    const auto ii = static_cast<Eigen::Index>(i);
    double h = c.kind == 0 ? cfg.fd_translation : c.kind == 1 ? cfg.fd_rotation : cfg.fd_joint;
    double fwd = h, bwd = h;
    if (c.kind == 2) {
      const double q = pose.hands[c.hand].q[c.index];
      fwd = std::min(h, upper[c.index] - q);
      bwd = std::min(h, q - lower[c.index]);
    }
    auto energy_at = [&](double delta) {
      probe[ii] = delta;
      const double e = total_energy(detail::retract(pose, coords, probe, hand), ctx).total;
      probe[ii] = 0.0;
      return e;
    };
    if (fwd > 0.0 && bwd > 0.0) {
      const double ef = energy_at(fwd), eb = energy_at(-bwd);
      const double sf = (ef - e0) / fwd, sb = (e0 - eb) / bwd;
      if (std::abs(sf - sb) <= 0.5 * std::max(std::abs(sf), std::abs(sb)) + 1e-9) {
        grad[ii] = (ef - eb) / (fwd + bwd);
      } else {
        grad[ii] = sf * sb <= 0.0 ? 0.0 : (std::abs(sf) < std::abs(sb) ? sf : sb);
      }
    } else if (fwd > 0.0) {
      grad[ii] = (energy_at(fwd) - e0) / fwd;
    } else if (bwd > 0.0) {
      grad[ii] = (e0 - energy_at(-bwd)) / bwd;
    } else {
      grad[ii] = 0.0;
    }
  }
  return grad;
}

/// Projected gradient descent with backtracking line search. Only strict
/// energy decreases are accepted, so `history` is strictly decreasing.
inline OptimizeResult optimize_grasp(const BimanualGraspPose& pose0, const SynthesisContext& ctx,
                                     const OptimizerConfig& cfg = {}) {
  const HandModel& hand = *ctx.hand;
  OptimizeResult res;
  res.pose = pose0;
  for (int h = 0; h < 2; ++h) {
    if (res.pose.active[h]) {
      res.pose.hands[h].wrist.rotation = orthonormalize(res.pose.hands[h].wrist.rotation);
      res.pose.hands[h].q = hand.chain.clamp(res.pose.hands[h].q);
    }
  }
  res.energy = total_energy(res.pose, ctx);
  res.history.push_back(res.energy.total);

  const auto coords = detail::coordinates(res.pose, hand.chain.dof());
  VecX metric(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double s = coords[i].kind == 0   ? 1.0
                     : coords[i].kind == 1 ? cfg.rotation_scale
                                           : cfg.joint_scale;
    metric[static_cast<Eigen::Index>(i)] = s;
  }

  double step_length = cfg.initial_step;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    res.iterations = it + 1;
    const VecX grad = energy_gradient(res.pose, ctx, cfg);
    // Steepest descent in scaled coordinates y = metric .* x.
    const VecX scaled_grad = grad.cwiseQuotient(metric);
    const double gnorm = scaled_grad.norm();
    if (!(gnorm > 0.0) || !std::isfinite(gnorm)) {
      res.converged = true;
      break;
    }
    const VecX direction = -(scaled_grad / gnorm).cwiseQuotient(metric);

    bool accepted = false;
    double trial = step_length;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt, trial *= 0.5) {
      BimanualGraspPose candidate = detail::retract(res.pose, coords, trial * direction, hand);
      const EnergyBreakdown e = total_energy(candidate, ctx);
      if (e.total < res.energy.total) {
        const double decrease = res.energy.total - e.total;
        res.pose = std::move(candidate);
        res.energy = e;
        res.history.push_back(e.total);
        accepted = true;
        step_length = std::min(cfg.max_step, 2.0 * trial);
        if (trial < cfg.min_step || decrease < cfg.min_decrease) res.converged = true;
        break;
      }
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    if (res.converged) break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Batch synthesis

struct Candidate {
  std::size_t index = 0;  // position in the seed list
  std::uint64_t seed = 0;
  BimanualGraspPose pose;
  EnergyBreakdown initial_energy;
  EnergyBreakdown energy;
  bool converged = false;
  int iterations = 0;
};

/// Candidates sorted by total energy (ties by seed-list index).
using CandidateBatch = std::vector<Candidate>;

inline Candidate synthesize_one(const SynthesisContext& ctx, GraspStrategy strategy,
                                std::uint64_t seed, std::size_t index, const InitConfig& init,
                                const OptimizerConfig& opt) {
  Candidate c;
  c.index = index;
  c.seed = seed;
  const auto pose0 = init_grasp(ctx, strategy, seed, init);
  c.initial_energy = total_energy(pose0, ctx);
  auto r = optimize_grasp(pose0, ctx, opt);
  c.pose = std::move(r.pose);
  c.energy = r.energy;
  c.converged = r.converged;
  c.iterations = r.iterations;
  return c;
}

inline void sort_batch(CandidateBatch& batch) {
  std::stable_sort(batch.begin(), batch.end(), [](const Candidate& a, const Candidate& b) {
    if (a.energy.total != b.energy.total) return a.energy.total < b.energy.total;
    return a.index < b.index;
  });
}

/// Independent init + optimize runs, one per seed. Results do not depend on
/// `jobs` or on scheduling.
inline CandidateBatch synthesize_batch(const SynthesisContext& ctx, GraspStrategy strategy,
                                       const std::vector<std::uint64_t>& seeds,
                                       const InitConfig& init = {},
                                       const OptimizerConfig& opt = {}, int jobs = 1) {
  if (seeds.empty()) throw ValidationError("synthesize_batch needs at least one seed");
  CandidateBatch batch(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      batch[i] = synthesize_one(ctx, strategy, seeds[i], i, init, opt);
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  sort_batch(batch);
  return batch;
}

}  // namespace graspforge
