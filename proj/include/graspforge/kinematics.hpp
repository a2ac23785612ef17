#pragma once

// URDF-subset kinematic trees, forward kinematics, analytic Jacobians,
// damped-least-squares IK, and the hand/arm fixture models built on top.
//
// Supported URDF subset: <link>, <joint type="revolute|prismatic|fixed">
// with <parent>, <child>, <origin>, <axis>, <limit>. Geometry, inertial and
// transmission elements are skipped with a warning.

#include "graspforge/core.hpp"
#include "graspforge/types.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace graspforge {

enum class JointType { Revolute, Prismatic, Fixed };

using JointVector = VecX;

struct Joint {
  std::string name;
  JointType type = JointType::Fixed;
  int parent = -1;  // link index
  int child = -1;   // link index
  RigidTransform origin;
  Vec3 axis = Vec3::UnitX();
  double lower = 0.0;
  double upper = 0.0;
  int q_index = -1;  // position in the actuated joint vector, -1 if fixed
};

struct Link {
  std::string name;
  int parent_joint = -1;
};

/// Tree-structured kinematic model. Joints are stored in topological order
/// (every joint after the joint that moves its parent link).
class KinematicModel {
 public:
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  int root() const { return root_; }
  int dof() const { return static_cast<int>(actuated_.size()); }
  const std::vector<int>& actuated() const { return actuated_; }  // joint ids in q order
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::string& name() const { return name_; }

  int link_id(std::string_view name) const {
    auto it = link_index_.find(std::string(name));
    if (it == link_index_.end()) throw ValidationError("unknown link '" + std::string(name) + "'");
    return it->second;
  }
  bool has_link(std::string_view name) const {
    return link_index_.contains(std::string(name));
  }
  int joint_id(std::string_view name) const {
    for (std::size_t j = 0; j < joints_.size(); ++j) {
      if (joints_[j].name == name) return static_cast<int>(j);
    }
    throw ValidationError("unknown joint '" + std::string(name) + "'");
  }

  VecX lower_limits() const {
    VecX l(dof());
    for (int i = 0; i < dof(); ++i) l[i] = joints_[actuated_[i]].lower;
    return l;
  }
  VecX upper_limits() const {
    VecX u(dof());
    for (int i = 0; i < dof(); ++i) u[i] = joints_[actuated_[i]].upper;
    return u;
  }
  JointVector clamp(const JointVector& q) const {
    return q.cwiseMax(lower_limits()).cwiseMin(upper_limits());
  }
  bool within_limits(const JointVector& q, double tol = 0.0) const {
    return ((q - lower_limits()).array() >= -tol).all() &&
           ((upper_limits() - q).array() >= -tol).all();
  }

  /// Joint ids on the path root -> link, in root-to-leaf order.
  const std::vector<int>& chain_to(int link) const { return chains_[link]; }

  /// Number of joints on the longest root-to-leaf path.
  int depth() const {
    std::size_t d = 0;
    for (const auto& c : chains_) d = std::max(d, c.size());
    return static_cast<int>(d);
  }

  friend KinematicModel parse_urdf(const std::string& text);

 private:
  std::string name_;
  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<int> actuated_;
  std::vector<std::vector<int>> chains_;
  std::unordered_map<std::string, int> link_index_;
  std::vector<std::string> warnings_;
  int root_ = -1;
};

namespace detail {

namespace pt = boost::property_tree;

inline Vec3 parse_vec3(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  Vec3 v;
  if (!(in >> v.x() >> v.y() >> v.z())) throw ParseError("malformed 3-vector for " + what);
  std::string extra;
  if (in >> extra) throw ParseError("malformed 3-vector for " + what);
  return v;
}

inline RigidTransform parse_origin(const pt::ptree& node, const std::string& what) {
  auto origin = node.get_child_optional("origin");
  if (!origin) return RigidTransform::identity();
  const Vec3 xyz = parse_vec3(origin->get("<xmlattr>.xyz", "0 0 0"), what + " origin xyz");
  const Vec3 rpy = parse_vec3(origin->get("<xmlattr>.rpy", "0 0 0"), what + " origin rpy");
  return RigidTransform::from_xyz_rpy(xyz, rpy);
}

inline pt::ptree read_xml(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("malformed XML: ") + e.what());
  }
  return tree;
}

}  // namespace detail

/// Parses the supported URDF subset.
inline KinematicModel parse_urdf(const std::string& text) {
  namespace pt = boost::property_tree;
  const pt::ptree tree = detail::read_xml(text);
  auto robot = tree.get_child_optional("robot");
  if (!robot) throw ParseError("URDF has no <robot> element");

  KinematicModel m;
  m.name_ = robot->get("<xmlattr>.name", "");
  struct RawJoint {
    Joint joint;
    std::string parent, child;
  };
  std::vector<RawJoint> raw;

  for (const auto& [tag, node] : *robot) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag == "link") {
      const std::string name = node.get("<xmlattr>.name", "");
      if (name.empty()) throw ParseError("<link> without a name");
      if (m.link_index_.contains(name)) throw ParseError("duplicate link '" + name + "'");
      m.link_index_[name] = static_cast<int>(m.links_.size());
      m.links_.push_back(Link{name, -1});
      for (const auto& [child_tag, _] : node) {
        if (child_tag != "<xmlattr>" && child_tag != "<xmlcomment>") {
          m.warnings_.push_back("link '" + name + "': ignoring <" + child_tag + ">");
        }
      }
    } else if (tag == "joint") {
      RawJoint r;
      r.joint.name = node.get("<xmlattr>.name", "");
      if (r.joint.name.empty()) throw ParseError("<joint> without a name");
      const std::string type = node.get("<xmlattr>.type", "");
      if (type == "revolute") {
        r.joint.type = JointType::Revolute;
      } else if (type == "prismatic") {
        r.joint.type = JointType::Prismatic;
      } else if (type == "fixed") {
        r.joint.type = JointType::Fixed;
      } else {
        throw ParseError("joint '" + r.joint.name + "': unsupported type '" + type + "'");
      }
      r.parent = node.get("parent.<xmlattr>.link", "");
      r.child = node.get("child.<xmlattr>.link", "");
      if (r.parent.empty() || r.child.empty()) {
        throw ParseError("joint '" + r.joint.name + "' needs <parent link> and <child link>");
      }
      r.joint.origin = detail::parse_origin(node, "joint '" + r.joint.name + "'");
      if (r.joint.type != JointType::Fixed) {
        Vec3 axis = detail::parse_vec3(node.get("axis.<xmlattr>.xyz", "1 0 0"),
                                       "joint '" + r.joint.name + "' axis");
        if (axis.norm() < 1e-12) throw ParseError("joint '" + r.joint.name + "' has a zero axis");
        r.joint.axis = axis.normalized();
        auto limit = node.get_child_optional("limit");
        if (!limit || !limit->get_optional<double>("<xmlattr>.lower") ||
            !limit->get_optional<double>("<xmlattr>.upper")) {
          throw ParseError("joint '" + r.joint.name + "' is missing <limit lower upper>");
        }
        r.joint.lower = limit->get<double>("<xmlattr>.lower");
        r.joint.upper = limit->get<double>("<xmlattr>.upper");
        if (!(r.joint.lower <= r.joint.upper)) {
          throw ParseError("joint '" + r.joint.name + "' has lower > upper");
        }
      }
      for (const auto& [child_tag, _] : node) {
        if (child_tag != "<xmlattr>" && child_tag != "<xmlcomment>" && child_tag != "parent" &&
            child_tag != "child" && child_tag != "origin" && child_tag != "axis" &&
            child_tag != "limit") {
          m.warnings_.push_back("joint '" + r.joint.name + "': ignoring <" + child_tag + ">");
        }
      }
      raw.push_back(std::move(r));
    } else if (tag.rfind("graspforge_", 0) != 0) {
      m.warnings_.push_back("ignoring unsupported element <" + tag + ">");
    }
  }
  if (m.links_.empty()) throw ParseError("URDF defines no links");

  // Resolve link references; each link may have at most one parent joint.
  std::vector<Joint> joints;
  for (auto& r : raw) {
    auto p = m.link_index_.find(r.parent);
    if (p == m.link_index_.end()) {
      throw ParseError("joint '" + r.joint.name + "' references missing parent link '" +
                       r.parent + "'");
    }
    auto c = m.link_index_.find(r.child);
    if (c == m.link_index_.end()) {
      throw ParseError("joint '" + r.joint.name + "' references missing child link '" +
                       r.child + "'");
    }
    r.joint.parent = p->second;
    r.joint.child = c->second;
    if (m.links_[c->second].parent_joint >= 0) {
      throw ParseError("link '" + r.child + "' has more than one parent joint");
    }
    m.links_[c->second].parent_joint = static_cast<int>(joints.size());
    joints.push_back(r.joint);
  }

  std::vector<int> roots;
  for (std::size_t l = 0; l < m.links_.size(); ++l) {
    if (m.links_[l].parent_joint < 0) roots.push_back(static_cast<int>(l));
  }
  if (roots.empty()) throw ParseError("kinematic cycle detected: no root link");
  if (roots.size() > 1) {
    throw ParseError("multiple root links ('" + m.links_[roots[0]].name + "', '" +
                     m.links_[roots[1]].name + "')");
  }
  m.root_ = roots.front();

  // Topological order by BFS from the root; unreached links sit on a cycle.
  std::vector<std::vector<int>> children(m.links_.size());
  for (std::size_t j = 0; j < joints.size(); ++j) {
    children[joints[j].parent].push_back(static_cast<int>(j));
  }
  std::vector<int> order;
  std::deque<int> queue{m.root_};
  std::vector<bool> seen(m.links_.size(), false);
  seen[m.root_] = true;
  while (!queue.empty()) {
    const int l = queue.front();
    queue.pop_front();
    for (int j : children[l]) {
      order.push_back(j);
      seen[joints[j].child] = true;
      queue.push_back(joints[j].child);
    }
  }
  for (std::size_t l = 0; l < m.links_.size(); ++l) {
    if (!seen[l]) throw ParseError("kinematic cycle detected at link '" + m.links_[l].name + "'");
  }

  // Actuated order follows document order; storage follows topological order.
  std::vector<int> doc_to_topo(joints.size());
  for (std::size_t i = 0; i < order.size(); ++i) doc_to_topo[order[i]] = static_cast<int>(i);
  int next_q = 0;
  std::vector<int> q_of_doc(joints.size(), -1);
  for (std::size_t j = 0; j < joints.size(); ++j) {
    if (joints[j].type != JointType::Fixed) q_of_doc[j] = next_q++;
  }
  m.joints_.clear();
  for (int j : order) {
    Joint joint = joints[j];
    joint.q_index = q_of_doc[j];
    m.joints_.push_back(joint);
  }
  for (auto& link : m.links_) {
    if (link.parent_joint >= 0) link.parent_joint = doc_to_topo[link.parent_joint];
  }
  m.actuated_.assign(next_q, -1);
  for (std::size_t j = 0; j < m.joints_.size(); ++j) {
    if (m.joints_[j].q_index >= 0) m.actuated_[m.joints_[j].q_index] = static_cast<int>(j);
  }
  m.chains_.assign(m.links_.size(), {});
  for (std::size_t j = 0; j < m.joints_.size(); ++j) {
    const auto& joint = m.joints_[j];
    m.chains_[joint.child] = m.chains_[joint.parent];
    m.chains_[joint.child].push_back(static_cast<int>(j));
  }
  return m;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Forward kinematics

/// World transform of every link. `joint_frames[j]` is the frame of joint j
/// (parent link pose composed with the joint origin, before joint motion).
struct LinkPoses {
  std::vector<RigidTransform> links;
  std::vector<RigidTransform> joint_frames;
  bool clamped = false;  // q was outside limits and has been clamped

  const RigidTransform& at(const KinematicModel& model, std::string_view link) const {
    return links[model.link_id(link)];
  }
};

inline RigidTransform joint_motion(const Joint& joint, double q) {
  switch (joint.type) {
    case JointType::Revolute:
      return {Eigen::AngleAxisd(q, joint.axis).toRotationMatrix(), Vec3::Zero()};
    case JointType::Prismatic:
      return RigidTransform::from_translation(joint.axis * q);
    case JointType::Fixed:
      break;
  }
  return RigidTransform::identity();
}

/// Forward kinematics. Out-of-limit joint values are clamped and flagged.
inline LinkPoses forward_kinematics(const KinematicModel& model, const RigidTransform& base,
                                    const JointVector& q) {
  if (q.size() != model.dof()) {
    throw ValidationError("joint vector has length " + std::to_string(q.size()) + ", model '" +
                          model.name() + "' has " + std::to_string(model.dof()) +
                          " actuated joints");
  }
  LinkPoses out;
  const JointVector qc = model.clamp(q);
  out.clamped = qc != q;
  out.links.assign(model.links().size(), RigidTransform::identity());
  out.joint_frames.assign(model.joints().size(), RigidTransform::identity());
  out.links[model.root()] = base;
  for (std::size_t j = 0; j < model.joints().size(); ++j) {
    const Joint& joint = model.joints()[j];
    out.joint_frames[j] = out.links[joint.parent] * joint.origin;
    const double value = joint.q_index >= 0 ? qc[joint.q_index] : 0.0;
    out.links[joint.child] = out.joint_frames[j] * joint_motion(joint, value);
  }
  return out;
}

/// 3 x dof Jacobian of a point fixed on `link` (given in world coordinates).
inline MatX point_jacobian(const KinematicModel& model, const LinkPoses& poses, int link,
                           const Vec3& world_point) {
  MatX jac = MatX::Zero(3, model.dof());
  for (int j : model.chain_to(link)) {
    const Joint& joint = model.joints()[j];
    if (joint.q_index < 0) continue;
    const Vec3 axis = poses.joint_frames[j].rotation * joint.axis;
    if (joint.type == JointType::Revolute) {
      jac.col(joint.q_index) = axis.cross(world_point - poses.joint_frames[j].translation);
    } else {
      jac.col(joint.q_index) = axis;
    }
  }
  return jac;
}

/// 6 x dof geometric Jacobian (linear rows first) of a frame on `link`.
inline MatX geometric_jacobian(const KinematicModel& model, const LinkPoses& poses, int link,
                               const Vec3& world_point) {
  MatX jac = MatX::Zero(6, model.dof());
  jac.topRows(3) = point_jacobian(model, poses, link, world_point);
  for (int j : model.chain_to(link)) {
    const Joint& joint = model.joints()[j];
    if (joint.q_index < 0 || joint.type != JointType::Revolute) continue;
    jac.block<3, 1>(3, joint.q_index) = poses.joint_frames[j].rotation * joint.axis;
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Inverse kinematics

struct IkConfig {
  double damping = 1e-2;
  int max_iterations = 200;
  double step_clamp = 0.2;          // rad (or m) per joint per iteration
  double position_tolerance = 1e-4;  // m
  double rotation_tolerance = 1e-3;  // rad
};

struct IkResult {
  bool success = false;
  JointVector q;
  double position_error = 0.0;
  double rotation_error = 0.0;
  int iterations = 0;
};

/// Damped least squares IK for the pose of `tool_link`. Deterministic;
/// on failure `q` is the best iterate found.
inline IkResult ik_solve(const KinematicModel& model, const RigidTransform& base,
                         int tool_link, const RigidTransform& target, const JointVector& q_init,
                         const IkConfig& cfg = {}) {
  IkResult best;
  JointVector q = model.clamp(q_init);
  const double lambda2 = cfg.damping * cfg.damping;
  double best_score = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    const LinkPoses poses = forward_kinematics(model, base, q);
    const RigidTransform& tool = poses.links[tool_link];
    Vec6 err;
    err.head<3>() = target.translation - tool.translation;
    err.tail<3>() = so3_log(target.rotation * tool.rotation.transpose());
    const double pe = err.head<3>().norm(), re = err.tail<3>().norm();
    const double score = pe / cfg.position_tolerance + re / cfg.rotation_tolerance;
    if (score < best_score) {
      best_score = score;
      best.q = q;
      best.position_error = pe;
      best.rotation_error = re;
      best.iterations = it;
    }
    if (pe <= cfg.position_tolerance && re <= cfg.rotation_tolerance) {
      best.success = true;
      best.q = q;
      best.position_error = pe;
      best.rotation_error = re;
      best.iterations = it;
      return best;
    }
    if (it >= cfg.max_iterations) break;
    const MatX jac = geometric_jacobian(model, poses, tool_link, tool.translation);
    const Eigen::Matrix<double, 6, 6> jjt =
        jac * jac.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    VecX dq = jac.transpose() * jjt.ldlt().solve(err);
    const double largest = dq.size() ? dq.cwiseAbs().maxCoeff() : 0.0;
    if (largest > cfg.step_clamp) dq *= cfg.step_clamp / largest;
    q = model.clamp(q + dq);
  }
  best.success = false;
  return best;
}

// ---------------------------------------------------------------------------
// Hand and arm fixtures

struct ContactAnchor {
  std::string name;
  int link = -1;
  RigidTransform local;  // local frame; z column is the pressing direction
};

struct ProxySphere {
  int link = -1;
  Vec3 center = Vec3::Zero();  // link-local
  double radius = 0.0;
};

/// Dexterous hand: kinematic chain plus grasp metadata (palm frame, contact
/// anchors per strategy, collision spheres, open postures, squeeze joints).
///
/// Palm convention: the palm frame's z axis (palm_normal) points out of the
/// palm toward the object; the hand pose (t_h, R_h) is the root link pose.
struct HandModel {
  KinematicModel chain;
  int palm_link = -1;
  RigidTransform palm_local;
  Vec3 palm_normal = Vec3::UnitZ();
  std::vector<ContactAnchor> anchors;
  std::map<GraspStrategy, std::vector<int>> strategy_anchors;  // indices into anchors
  std::vector<ProxySphere> spheres;
  std::map<GraspStrategy, JointVector> open_posture;
  std::vector<int> squeeze_joints;  // q indices
  double span = 0.12;               // largest object edge a single hand handles

  const std::vector<int>& anchors_for(GraspStrategy s) const {
    auto it = strategy_anchors.find(s);
    if (it == strategy_anchors.end()) {
      throw ValidationError("hand has no contact anchors for strategy " +
                            std::string(to_string(s)));
    }
    return it->second;
  }

  const JointVector& open_for(GraspStrategy s) const {
    auto it = open_posture.find(s);
    if (it == open_posture.end()) {
      throw ValidationError("hand has no open posture for strategy " + std::string(to_string(s)));
    }
    return it->second;
  }

  /// World palm normal for a hand at `pose`.
  Vec3 world_palm_normal(const RigidTransform& pose) const {
    return pose.rotation * palm_local.rotation * palm_normal;
  }
};

struct ArmModel {
  KinematicModel chain;
  int tool_link = -1;
  JointVector home;
};

namespace detail {

inline VecX parse_vector(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  if (!in.eof()) throw ParseError("malformed number list for " + what);
  return Eigen::Map<VecX>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace detail

/// Parses a hand URDF carrying a <graspforge_hand> metadata block.
inline HandModel parse_hand_model(const std::string& text) {
  namespace pt = boost::property_tree;
  HandModel hand;
  hand.chain = parse_urdf(text);
  const pt::ptree tree = detail::read_xml(text);
  auto meta = tree.get_child_optional("robot.graspforge_hand");
  if (!meta) throw ParseError("hand URDF lacks a <graspforge_hand> block");
  const auto& m = hand.chain;

  hand.palm_link = m.link_id(meta->get("<xmlattr>.palm_link", ""));
  hand.palm_normal = detail::parse_vec3(meta->get("<xmlattr>.palm_normal", "0 0 1"),
                                        "palm_normal")
                         .normalized();
  hand.span = meta->get("<xmlattr>.span", 0.12);

  for (const auto& [tag, node] : *meta) {
    if (tag == "palm_frame") {
      hand.palm_local = RigidTransform::from_xyz_rpy(
          detail::parse_vec3(node.get("<xmlattr>.xyz", "0 0 0"), "palm_frame xyz"),
          detail::parse_vec3(node.get("<xmlattr>.rpy", "0 0 0"), "palm_frame rpy"));
    } else if (tag == "anchor") {
      ContactAnchor a;
      a.name = node.get("<xmlattr>.name", "");
      a.link = m.link_id(node.get("<xmlattr>.link", ""));
      a.local = RigidTransform::from_xyz_rpy(
          detail::parse_vec3(node.get("<xmlattr>.xyz", "0 0 0"), "anchor '" + a.name + "' xyz"),
          detail::parse_vec3(node.get("<xmlattr>.rpy", "0 0 0"), "anchor '" + a.name + "' rpy"));
      const int id = static_cast<int>(hand.anchors.size());
      hand.anchors.push_back(a);
      for (const auto& s : detail::split_words(node.get("<xmlattr>.strategies", ""))) {
        hand.strategy_anchors[strategy_from_string(s)].push_back(id);
      }
    } else if (tag == "sphere") {
      ProxySphere s;
      s.link = m.link_id(node.get("<xmlattr>.link", ""));
      s.center = detail::parse_vec3(node.get("<xmlattr>.xyz", "0 0 0"), "sphere xyz");
      s.radius = node.get<double>("<xmlattr>.radius");
      if (!(s.radius > 0.0)) throw ParseError("proxy sphere radius must be positive");
      hand.spheres.push_back(s);
    } else if (tag == "open_posture") {
      const auto s = strategy_from_string(node.get("<xmlattr>.strategy", ""));
      JointVector q = detail::parse_vector(node.get("<xmlattr>.q", ""), "open_posture");
      if (q.size() != m.dof()) throw ParseError("open_posture length does not match the hand");
      if (!m.within_limits(q)) throw ParseError("open_posture outside joint limits");
      hand.open_posture[s] = q;
    } else if (tag == "squeeze") {
      for (const auto& name : detail::split_words(node.get("<xmlattr>.joints", ""))) {
        const int j = m.joint_id(name);
        if (m.joints()[j].q_index < 0) throw ParseError("squeeze joint '" + name + "' is fixed");
        hand.squeeze_joints.push_back(m.joints()[j].q_index);
      }
    }
  }
  for (auto s : kAllStrategies) {
    const auto it = hand.strategy_anchors.find(s);
    const std::size_t have = it == hand.strategy_anchors.end() ? 0 : it->second.size();
    if (have < 2) {
      throw ParseError("strategy " + std::string(to_string(s)) + " needs at least 2 anchors");
    }
    if (!hand.open_posture.contains(s)) {
      throw ParseError("strategy " + std::string(to_string(s)) + " has no open posture");
    }
  }
  return hand;
}

/// Parses an arm URDF carrying a <graspforge_arm tool_link home> block.
inline ArmModel parse_arm_model(const std::string& text) {
  namespace pt = boost::property_tree;
  ArmModel arm;
  arm.chain = parse_urdf(text);
  const pt::ptree tree = detail::read_xml(text);
  auto meta = tree.get_child_optional("robot.graspforge_arm");
  if (!meta) throw ParseError("arm URDF lacks a <graspforge_arm> block");
  arm.tool_link = arm.chain.link_id(meta->get("<xmlattr>.tool_link", ""));
  arm.home = detail::parse_vector(meta->get("<xmlattr>.home", ""), "arm home");
  if (arm.home.size() != arm.chain.dof()) throw ParseError("arm home length mismatch");
  if (!arm.chain.within_limits(arm.home)) throw ParseError("arm home outside joint limits");
  return arm;
}

inline HandModel load_hand_model(const std::string& path) {
  return parse_hand_model(read_text_file(path));
}
inline ArmModel load_arm_model(const std::string& path) {
  return parse_arm_model(read_text_file(path));
}

/// World-frame contacts of the strategy's anchors for a hand at `pose` with
/// joints `q`.
inline ContactSet contact_frames(const HandModel& hand, const RigidTransform& pose,
                                 const JointVector& q, GraspStrategy strategy, int hand_index = 0) {
  const auto& ids = hand.anchors_for(strategy);
  const LinkPoses poses = forward_kinematics(hand.chain, pose, q);
  ContactSet out;
  out.reserve(ids.size());
  for (int id : ids) {
    const auto& a = hand.anchors[id];
    const RigidTransform world = poses.links[a.link] * a.local;
    out.push_back(Contact{world.translation, world.rotation, hand_index, a.name});
  }
  return out;
}

/// World-frame centers of the hand's proxy spheres.
inline std::vector<Vec3> sphere_centers(const HandModel& hand, const LinkPoses& poses) {
  std::vector<Vec3> out;
  out.reserve(hand.spheres.size());
  for (const auto& s : hand.spheres) out.push_back(poses.links[s.link].apply(s.center));
  return out;
}

}  // namespace graspforge
