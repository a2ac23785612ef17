#pragma once

// Hard-finger contact model: friction cones and their pyramid
// linearization, grasp maps, contact wrenches and force-closure tests.

#include "graspforge/core.hpp"
#include "graspforge/nnls.hpp"
#include "graspforge/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace graspforge {

struct FrictionCone {
  double mu = 0.6;
  int edge_count = 8;

  void validate() const {
    if (!(mu > 0.0)) throw ValidationError("friction coefficient must be positive");
    if (edge_count < 3) throw ValidationError("friction pyramid needs at least 3 edges");
  }

  /// Normal component shared by every unit edge vector.
  double edge_normal_component() const { return 1.0 / std::sqrt(1.0 + mu * mu); }
};

/// Local-frame force f lies in the cone: f_z >= 0 and |f_tan| <= mu f_z.
inline bool cone_contains(const Vec3& f, const FrictionCone& cone) {
  constexpr double kSlack = 1e-12;
  return f.z() >= -kSlack && std::hypot(f.x(), f.y()) <= cone.mu * std::abs(f.z()) + kSlack;
}

/// Unit edge directions of the inscribed friction pyramid.
inline std::vector<Vec3> cone_edges(const FrictionCone& cone) {
  cone.validate();
  std::vector<Vec3> edges;
  edges.reserve(cone.edge_count);
  for (int k = 0; k < cone.edge_count; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / cone.edge_count;
    edges.push_back(Vec3(cone.mu * std::cos(theta), cone.mu * std::sin(theta), 1.0).normalized());
  }
  return edges;
}

inline Eigen::Matrix3Xd cone_edge_matrix(const FrictionCone& cone) {
  const auto edges = cone_edges(cone);
  Eigen::Matrix3Xd m(3, edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = edges[k];
  return m;
}

struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  Vec6 vector() const {
    Vec6 v;
    v << force, torque;
    return v;
  }
  static Wrench from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
  double norm() const { return vector().norm(); }
};

using GraspMap = Eigen::Matrix<double, 6, 3>;

/// G = [I; alpha (p - m)x] O : local contact force -> object wrench about m.
inline GraspMap grasp_map(const Contact& contact, const Vec3& com, double alpha) {
  GraspMap g;
  g.topRows<3>() = contact.frame;
  g.bottomRows<3>() = alpha * skew(contact.position - com) * contact.frame;
  return g;
}

inline Wrench contact_wrench(const GraspMap& g, const Vec3& f) {
  return Wrench::from_vector(g * f);
}

inline std::vector<GraspMap> grasp_maps(const ContactSet& contacts, const Vec3& com,
                                        double alpha) {
  std::vector<GraspMap> maps;
  maps.reserve(contacts.size());
  for (const auto& c : contacts) maps.push_back(grasp_map(c, com, alpha));
  return maps;
}

/// 6 x (k * edges) matrix whose columns are G_i e_j.
inline MatX wrench_basis(const std::vector<GraspMap>& maps, const FrictionCone& cone) {
  const Eigen::Matrix3Xd edges = cone_edge_matrix(cone);
  const auto m = edges.cols();
  MatX basis(6, static_cast<Eigen::Index>(maps.size()) * m);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    basis.middleCols(static_cast<Eigen::Index>(i) * m, m) = maps[i] * edges;
  }
  return basis;
}

// ---------------------------------------------------------------------------
// Force closure

struct ForceClosureConfig {
  double epsilon = 1e-3;      // closure threshold, normalized units
  int direction_count = 128;  // size of the 6-sphere direction design
};

struct ForceClosureResult {
  bool closed = false;
  double margin = 0.0;
};

namespace detail {

/// Unit 6-vectors invariant under every coordinate sign flip: each base
/// point contributes its 64 sign patterns.
inline std::vector<Vec6> sign_symmetric_design(int count) {
  std::vector<Vec6> base;
  base.push_back(Vec6::Ones().normalized());
  CounterRng rng(0xD15EA5E);
  while (static_cast<int>(base.size()) * 64 < count) {
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = std::abs(rng.normal()) + 0.05;
    base.push_back(v.normalized());
  }
  std::vector<Vec6> design;
  design.reserve(base.size() * 64);
  for (const auto& b : base) {
    for (int mask = 0; mask < 64; ++mask) {
      Vec6 v = b;
      for (int i = 0; i < 6; ++i) {
        if (mask & (1 << i)) v[i] = -v[i];
      }
      design.push_back(v);
      if (static_cast<int>(design.size()) == count) return design;
    }
  }
  return design;
}

}  // namespace detail

/// Largest u^T w over unit-normal-sum wrenches: the LP over a simplex
/// attains its optimum at a vertex, i.e. a single scaled column.
inline double support_value(const MatX& normalized_basis, const Vec6& u) {
  return (u.transpose() * normalized_basis).maxCoeff();
}

/// Force-closure test with margin.
///
/// margin = min over directions u of max { u^T w : w = A beta, beta >= 0,
/// sum of normal force components = 1 }. The direction design is expressed
/// in the principal frame of the wrench generators, so the margin is
/// invariant to rigid rotations of the grasp. Positive spanning of the
/// wrench space is certified by NNLS against the principal axes; any axis
/// left outside the wrench cone contributes its separating direction
/// (where the margin is <= 0).
inline ForceClosureResult force_closure(const ContactSet& contacts, const FrictionCone& cone,
                                        const Vec3& com, double alpha,
                                        const ForceClosureConfig& cfg = {}) {
  ForceClosureResult out;
  if (contacts.empty()) return out;
  const MatX basis = wrench_basis(grasp_maps(contacts, com, alpha), cone) /
                     cone.edge_normal_component();

  const Eigen::Matrix<double, 6, 6> gram = basis * basis.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(gram);
  const Eigen::Matrix<double, 6, 6> frame = eig.eigenvectors();

  double margin = std::numeric_limits<double>::infinity();
  for (const auto& d : detail::sign_symmetric_design(cfg.direction_count)) {
    margin = std::min(margin, support_value(basis, frame * d));
  }
  for (int axis = 0; axis < 6; ++axis) {
    for (double sign : {1.0, -1.0}) {
      const Vec6 target = sign * frame.col(axis);
      const auto sol = nnls(basis, target);
      if (sol.residual_norm > 1e-9) {
        const Vec6 r = target - basis * sol.x;
        margin = std::min(margin, support_value(basis, r.normalized()));
      }
    }
  }
  out.margin = margin;
  out.closed = margin >= cfg.epsilon;
  return out;
}

}  // namespace graspforge
