#pragma once

// Lower level of the bilevel grasp program: friction-feasible contact
// forces that best realize a target wrench.

#include "graspforge/contact.hpp"
#include "graspforge/nnls.hpp"

#include <vector>

namespace graspforge {

inline constexpr double kGravity = 9.81;

using TargetWrenchSet = std::vector<Wrench>;

struct ForceSolution {
  VecX beta;                 // per contact x per edge, >= 0
  std::vector<Vec3> forces;  // local-frame force per contact
  Wrench residual;           // scale * target - sum G_i f_i
  double residual_norm = 0.0;
};

/// Gravity support (0, 0, m g) plus unit disturbance forces along +-x, +-y, +-z.
inline TargetWrenchSet default_target_wrenches(double mass) {
  TargetWrenchSet set;
  set.push_back({Vec3(0.0, 0.0, mass * kGravity), Vec3::Zero()});
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {1.0, -1.0}) {
      Wrench w;
      w.force[axis] = sign;
      set.push_back(w);
    }
  }
  return set;
}

inline ForceSolution solve_contact_forces(const std::vector<GraspMap>& maps,
                                          const FrictionCone& cone, const Wrench& target,
                                          double scale = 1.0) {
  if (maps.empty()) throw ValidationError("solve_contact_forces needs at least one contact");
  const Eigen::Matrix3Xd edges = cone_edge_matrix(cone);
  const MatX basis = wrench_basis(maps, cone);
  const Vec6 goal = scale * target.vector();
  const auto sol = nnls(basis, goal);

  ForceSolution out;
  out.beta = sol.x;
  const auto m = edges.cols();
  Vec6 realized = Vec6::Zero();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const Vec3 f = edges * out.beta.segment(static_cast<Eigen::Index>(i) * m, m);
    out.forces.push_back(f);
    realized += maps[i] * f;
  }
  out.residual = Wrench::from_vector(goal - realized);
  out.residual_norm = out.residual.norm();
  return out;
}

/// Sum over targets of the squared residual norm.
inline double wrench_tracking_error(const std::vector<GraspMap>& maps, const FrictionCone& cone,
                                   const TargetWrenchSet& targets, double scale = 1.0) {
  if (targets.empty()) throw ValidationError("wrench_tracking_error needs at least one target");
  const MatX basis = wrench_basis(maps, cone);
  double total = 0.0;
  for (const auto& t : targets) {
    const Vec6 goal = scale * t.vector();
    const auto sol = nnls(basis, goal);
    const double r = (goal - basis * sol.x).norm();
    total += r * r;
  }
  return total;
}

}  // namespace graspforge
