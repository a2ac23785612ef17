#pragma once

// Triangle meshes and the geometric queries used by grasp synthesis:
// OBJ ingest, convex hull, signed distance (BVH accelerated), surface
// sampling, mass properties and a few analytic primitives for fixtures.

#include "graspforge/core.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace graspforge {

using Face = std::array<std::uint32_t, 3>;

/// Raised when one or more triangles have zero area. Carries the face ids.
class DegenerateMeshError : public ValidationError {
 public:
  explicit DegenerateMeshError(std::vector<std::size_t> faces)
      : ValidationError(describe(faces)), faces_(std::move(faces)) {}

  const std::vector<std::size_t>& faces() const { return faces_; }

 private:
  static std::string describe(const std::vector<std::size_t>& faces) {
    std::ostringstream os;
    os << "degenerate triangles (zero area):";
    for (std::size_t i = 0; i < faces.size() && i < 16; ++i) os << ' ' << faces[i];
    if (faces.size() > 16) os << " ... (" << faces.size() << " total)";
    return os.str();
  }
  std::vector<std::size_t> faces_;
};

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  Vec3 extents() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double longest_edge() const { return extents().maxCoeff(); }

  double squared_distance(const Vec3& p) const {
    const Vec3 d = (min - p).cwiseMax(Vec3::Zero()).cwiseMax(p - max);
    return d.squaredNorm();
  }
};

/// Triangle mesh with validated indices and non-degenerate triangles.
///
/// Closed meshes whose faces wind inward are flipped at construction so that
/// face normals always point out of the enclosed volume.
class TriMesh {
 public:
  TriMesh() = default;

  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
      : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    validate();
    watertight_ = compute_watertight();
    if (watertight_ && signed_volume() < 0.0) {
      for (auto& f : faces_) std::swap(f[1], f[2]);
    }
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  bool empty() const { return faces_.empty(); }
  bool watertight() const { return watertight_; }

  const Vec3& corner(std::size_t face, int k) const { return vertices_[faces_[face][k]]; }

  Vec3 face_area_vector(std::size_t f) const {
    return 0.5 * (corner(f, 1) - corner(f, 0)).cross(corner(f, 2) - corner(f, 0));
  }
  double face_area(std::size_t f) const { return face_area_vector(f).norm(); }
  Vec3 face_normal(std::size_t f) const { return face_area_vector(f).normalized(); }

  double surface_area() const {
    double a = 0.0;
    for (std::size_t f = 0; f < faces_.size(); ++f) a += face_area(f);
    return a;
  }

  /// Signed enclosed volume (positive for outward winding).
  double signed_volume() const {
    double v = 0.0;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      v += corner(f, 0).dot(corner(f, 1).cross(corner(f, 2))) / 6.0;
    }
    return v;
  }

  Aabb bounds() const {
    Aabb b;
    for (const auto& v : vertices_) b.expand(v);
    return b;
  }

  TriMesh transformed(const RigidTransform& tf) const {
    std::vector<Vec3> v;
    v.reserve(vertices_.size());
    for (const auto& p : vertices_) v.push_back(tf.apply(p));
    return TriMesh(std::move(v), faces_);
  }

 private:
  void validate() const {
    for (const auto& v : vertices_) {
      if (!v.allFinite()) throw ValidationError("mesh has non-finite vertex coordinates");
    }
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      for (int k = 0; k < 3; ++k) {
        if (faces_[f][k] >= vertices_.size()) {
          throw ValidationError("face " + std::to_string(f) + " references vertex " +
                                std::to_string(faces_[f][k] + 1) + " of " +
                                std::to_string(vertices_.size()) + " (index out of range)");
        }
      }
    }
    std::vector<std::size_t> degenerate;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      if (!(face_area(f) > 0.0)) degenerate.push_back(f);
    }
    if (!degenerate.empty()) throw DegenerateMeshError(std::move(degenerate));
  }

  bool compute_watertight() const {
    if (faces_.empty()) return false;
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
    for (const auto& f : faces_) {
      for (int k = 0; k < 3; ++k) {
        auto a = f[k], b = f[(k + 1) % 3];
        if (a > b) std::swap(a, b);
        ++edge_use[{a, b}];
      }
    }
    return std::all_of(edge_use.begin(), edge_use.end(),
                       [](const auto& e) { return e.second == 2; });
  }

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  bool watertight_ = false;
};

// ---------------------------------------------------------------------------
// OBJ I/O

/// Reads `v` and `f` records; texture/normal indices and other records are
/// ignored. Faces with more than three vertices are rejected.
inline TriMesh parse_obj(std::istream& in, const std::string& source = "<stream>") {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail("malformed vertex");
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<long> idx;
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        long value = 0;
        try {
          std::size_t used = 0;
          value = std::stol(head, &used);
          if (used != head.size()) fail("malformed face index '" + tok + "'");
        } catch (const std::logic_error&) {
          fail("malformed face index '" + tok + "'");
        }
        if (value < 0) value = static_cast<long>(vertices.size()) + value + 1;
        if (value <= 0) fail("face index '" + tok + "' out of range");
        idx.push_back(value - 1);
      }
      if (idx.size() != 3) {
        fail("face with " + std::to_string(idx.size()) + " vertices; only triangles are accepted");
      }
      faces.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[1]),
                       static_cast<std::uint32_t>(idx[2])});
    }
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

inline TriMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file '" + path + "'");
  return parse_obj(in, path);
}

inline void write_obj(const TriMesh& mesh, std::ostream& out) {
  char buf[128];
  for (const auto& v : mesh.vertices()) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& f : mesh.faces()) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

// ---------------------------------------------------------------------------
// Mass properties

/// Uniform-density volume centroid. Requires a closed mesh.
inline Vec3 center_of_mass(const TriMesh& mesh) {
  if (!mesh.watertight()) {
    throw ValidationError(
        "center_of_mass requires a watertight mesh; use area_centroid() for open surfaces");
  }
  double volume = 0.0;
  Vec3 moment = Vec3::Zero();
  // Tetrahedra against a local origin to reduce cancellation.
  const Vec3 o = mesh.vertices().front();
  for (std::size_t f = 0; f < mesh.faces().size(); ++f) {
    const Vec3 a = mesh.corner(f, 0) - o, b = mesh.corner(f, 1) - o, c = mesh.corner(f, 2) - o;
    const double v = a.dot(b.cross(c)) / 6.0;
    volume += v;
    moment += v * (a + b + c) / 4.0;
  }
  return o + moment / volume;
}

/// Area-weighted surface centroid; the fallback for open meshes.
inline Vec3 area_centroid(const TriMesh& mesh) {
  double area = 0.0;
  Vec3 acc = Vec3::Zero();
  for (std::size_t f = 0; f < mesh.faces().size(); ++f) {
    const double a = mesh.face_area(f);
    area += a;
    acc += a * (mesh.corner(f, 0) + mesh.corner(f, 1) + mesh.corner(f, 2)) / 3.0;
  }
  if (area <= 0.0) throw ValidationError("area_centroid of an empty mesh");
  return acc / area;
}

/// Radius of the smallest sphere about `center` that contains all vertices.
inline double bounding_radius(const TriMesh& mesh, const Vec3& center) {
  double r = 0.0;
  for (const auto& v : mesh.vertices()) r = std::max(r, (v - center).norm());
  return r;
}

// ---------------------------------------------------------------------------
// Convex hull (incremental)

namespace detail {

struct HullFace {
  std::array<std::uint32_t, 3> v;
  Vec3 normal;
  double offset;
  bool alive = true;
};

inline HullFace make_hull_face(const std::vector<Vec3>& pts, std::uint32_t a, std::uint32_t b,
                               std::uint32_t c) {
  HullFace f;
  f.v = {a, b, c};
  f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]).normalized();
  f.offset = f.normal.dot(pts[a]);
  return f;
}

}  // namespace detail

/// Convex hull of the mesh vertices. Hull vertices are a subset of the input
/// vertices (copied bit-exactly); faces are wound outward.
inline TriMesh convex_hull(const TriMesh& mesh) {
  const auto& pts = mesh.vertices();
  const std::size_t n = pts.size();
  if (n < 4) throw ValidationError("convex_hull needs at least 4 vertices");

  Aabb box;
  for (const auto& p : pts) box.expand(p);
  const double scale = std::max(box.longest_edge(), 1e-300);
  const double eps = 1e-12 * scale;

  // Initial simplex from extreme points.
  std::uint32_t i0 = 0;
  for (std::uint32_t i = 1; i < n; ++i) {
    if (pts[i].x() < pts[i0].x()) i0 = i;
  }
  std::uint32_t i1 = i0;
  double best = 0.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).squaredNorm();
    if (d > best) best = d, i1 = i;
  }
  if (std::sqrt(best) <= eps) throw ValidationError("convex_hull: all points coincide");
  const Vec3 axis = (pts[i1] - pts[i0]).normalized();
  std::uint32_t i2 = i0;
  best = 0.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const Vec3 d = pts[i] - pts[i0];
    const double dist = (d - d.dot(axis) * axis).norm();
    if (dist > best) best = dist, i2 = i;
  }
  if (best <= 1e3 * eps) throw ValidationError("convex_hull: input is collinear");
  const Vec3 pn = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  std::uint32_t i3 = i0;
  best = 0.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const double dist = std::abs((pts[i] - pts[i0]).dot(pn));
    if (dist > best) best = dist, i3 = i;
  }
  if (best <= 1e3 * eps) throw ValidationError("convex_hull: input is coplanar");

  std::vector<detail::HullFace> faces;
  const Vec3 inner = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  auto add_face = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    auto f = detail::make_hull_face(pts, a, b, c);
    if (f.normal.dot(inner) - f.offset > 0.0) f = detail::make_hull_face(pts, a, c, b);
    faces.push_back(f);
  };
  add_face(i0, i1, i2);
  add_face(i0, i1, i3);
  add_face(i0, i2, i3);
  add_face(i1, i2, i3);

  std::vector<bool> is_seed(n, false);
  is_seed[i0] = is_seed[i1] = is_seed[i2] = is_seed[i3] = true;

  std::vector<std::size_t> visible;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_count;
  for (std::uint32_t p = 0; p < n; ++p) {
    if (is_seed[p]) continue;
    visible.clear();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && faces[f].normal.dot(pts[p]) - faces[f].offset > eps) {
        visible.push_back(f);
      }
    }
    if (visible.empty()) continue;
    // Horizon: directed edges of visible faces whose reverse is not visible.
    edge_count.clear();
    for (auto f : visible) {
      for (int k = 0; k < 3; ++k) edge_count[{faces[f].v[k], faces[f].v[(k + 1) % 3]}] += 1;
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> horizon;
    for (const auto& [edge, count] : edge_count) {
      if (!edge_count.contains({edge.second, edge.first})) horizon.push_back(edge);
    }
    for (auto f : visible) faces[f].alive = false;
    for (const auto& [a, b] : horizon) faces.push_back(detail::make_hull_face(pts, a, b, p));
    if (faces.size() > 8 * n) {
      std::erase_if(faces, [](const detail::HullFace& f) { return !f.alive; });
    }
  }

  std::vector<bool> used(n, false);
  for (const auto& f : faces) {
    if (f.alive) used[f.v[0]] = used[f.v[1]] = used[f.v[2]] = true;
  }
  std::vector<std::int64_t> remap(n, -1);
  std::vector<Vec3> out_vertices;
  std::vector<Face> out_faces;
  // Input order is preserved among hull vertices.
  for (std::uint32_t i = 0; i < n; ++i) {
    if (used[i]) {
      remap[i] = static_cast<std::int64_t>(out_vertices.size());
      out_vertices.push_back(pts[i]);
    }
  }
  for (const auto& f : faces) {
    if (!f.alive) continue;
    out_faces.push_back({static_cast<std::uint32_t>(remap[f.v[0]]),
                         static_cast<std::uint32_t>(remap[f.v[1]]),
                         static_cast<std::uint32_t>(remap[f.v[2]])});
  }
  return TriMesh(std::move(out_vertices), std::move(out_faces));
}

// ---------------------------------------------------------------------------
// Point / triangle primitives

/// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

enum class RayHit { Miss, Hit, Ambiguous };

/// Moller-Trumbore with an explicit "too close to an edge to trust" outcome.
inline RayHit ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                           const Vec3& c) {
  constexpr double kEdgeTol = 1e-10;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 h = dir.cross(e2);
  const double det = e1.dot(h);
  const double scale = e1.norm() * e2.norm();
  if (std::abs(det) <= 1e-14 * scale) {
    // Ray parallel to the triangle plane; only ambiguous if it lies in it.
    const Vec3 nrm = e1.cross(e2);
    return std::abs(nrm.dot(origin - a)) <= 1e-14 * scale ? RayHit::Ambiguous : RayHit::Miss;
  }
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = inv * s.dot(h);
  const Vec3 q = s.cross(e1);
  const double v = inv * dir.dot(q);
  const double t = inv * e2.dot(q);
  if (u < -kEdgeTol || v < -kEdgeTol || u + v > 1.0 + kEdgeTol || t < -kEdgeTol) {
    return RayHit::Miss;
  }
  if (u < kEdgeTol || v < kEdgeTol || u + v > 1.0 - kEdgeTol || t < kEdgeTol) {
    return RayHit::Ambiguous;
  }
  return RayHit::Hit;
}

struct SdfResult {
  double value = 0.0;       // signed (or unsigned, see is_signed) distance
  bool is_signed = true;    // false for open meshes: value is unsigned
  Vec3 closest = Vec3::Zero();
};

namespace detail {

inline const std::array<Vec3, 3>& parity_directions() {
  static const std::array<Vec3, 3> dirs = {
      Vec3(0.5773502691896258, 0.5773502691896257, 0.5773502691896259).normalized(),
      Vec3(-0.2672612419124244, 0.8017837257372732, -0.5345224838248488).normalized(),
      Vec3(0.7071067811865476, -0.1, 0.7).normalized()};
  return dirs;
}

}  // namespace detail

/// Brute-force O(F) signed distance. Kept as an independent reference for
/// the BVH path.
inline SdfResult signed_distance(const TriMesh& mesh, const Vec3& p) {
  SdfResult r;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < mesh.faces().size(); ++f) {
    const Vec3 q = closest_point_on_triangle(p, mesh.corner(f, 0), mesh.corner(f, 1),
                                             mesh.corner(f, 2));
    const double d = (q - p).squaredNorm();
    if (d < best) best = d, r.closest = q;
  }
  r.value = std::sqrt(best);
  if (!mesh.watertight()) {
    r.is_signed = false;
    return r;
  }
  int votes_inside = 0, decided = 0;
  for (const auto& dir : detail::parity_directions()) {
    int hits = 0;
    bool ambiguous = false;
    for (std::size_t f = 0; f < mesh.faces().size() && !ambiguous; ++f) {
      switch (ray_triangle(p, dir, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2))) {
        case RayHit::Hit: ++hits; break;
        case RayHit::Ambiguous: ambiguous = true; break;
        case RayHit::Miss: break;
      }
    }
    if (ambiguous) continue;
    ++decided;
    votes_inside += hits % 2;
    break;
  }
  if (decided > 0 && votes_inside > 0) r.value = -r.value;
  return r;
}

/// Signed distance to a triangle mesh, accelerated by an AABB tree.
/// Immutable after construction; safe for concurrent queries.
class MeshSdf {
 public:
  MeshSdf() = default;

  explicit MeshSdf(TriMesh mesh) : mesh_(std::move(mesh)) { build(); }

  const TriMesh& mesh() const { return mesh_; }

  SdfResult query(const Vec3& p) const {
    SdfResult r;
    double best = std::numeric_limits<double>::infinity();
    closest(p, best, r.closest);
    r.value = std::sqrt(best);
    if (!mesh_.watertight()) {
      r.is_signed = false;
      return r;
    }
    if (r.value == 0.0) return r;
    if (inside(p)) r.value = -r.value;
    return r;
  }

  double distance(const Vec3& p) const { return query(p).value; }

  /// Ray-parity inside test. Falls back to further directions when a ray
  /// grazes an edge or vertex; majority vote if all are ambiguous.
  bool inside(const Vec3& p) const {
    if (mesh_.empty() || !root_box_contains(p)) return false;
    int odd = 0, total = 0;
    for (const auto& dir : detail::parity_directions()) {
      int hits = 0;
      if (count_hits(p, dir, hits)) {
        odd += hits % 2;
        ++total;
        continue;
      }
      return hits % 2 == 1;
    }
    return total > 0 && 2 * odd > total;
  }

 private:
  struct Node {
    Aabb box;
    std::int32_t left = -1, right = -1;
    std::uint32_t begin = 0, count = 0;
  };

  bool root_box_contains(const Vec3& p) const {
    const auto& b = nodes_.front().box;
    return (p.array() >= b.min.array()).all() && (p.array() <= b.max.array()).all();
  }

  void build() {
    const std::size_t nf = mesh_.faces().size();
    order_.resize(nf);
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.resize(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      centroids_[f] = (mesh_.corner(f, 0) + mesh_.corner(f, 1) + mesh_.corner(f, 2)) / 3.0;
    }
    nodes_.clear();
    nodes_.reserve(2 * nf + 1);
    if (nf == 0) {
      nodes_.push_back(Node{});
      return;
    }
    build_node(0, static_cast<std::uint32_t>(nf));
  }

  std::int32_t build_node(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{});
    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i) {
      for (int k = 0; k < 3; ++k) box.expand(mesh_.corner(order_[i], k));
    }
    nodes_[id].box = box;
    if (end - begin <= 4) {
      nodes_[id].begin = begin;
      nodes_[id].count = end - begin;
      return id;
    }
    Aabb cbox;
    for (std::uint32_t i = begin; i < end; ++i) cbox.expand(centroids_[order_[i]]);
    int axis = 0;
    cbox.extents().maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       if (centroids_[a][axis] != centroids_[b][axis]) {
                         return centroids_[a][axis] < centroids_[b][axis];
                       }
                       return a < b;
                     });
    const auto left = build_node(begin, mid);
    const auto right = build_node(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void closest(const Vec3& p, double& best, Vec3& best_point) const {
    std::int32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.squared_distance(p) >= best) continue;
      if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.begin + node.count; ++i) {
          const auto f = order_[i];
          const Vec3 q = closest_point_on_triangle(p, mesh_.corner(f, 0), mesh_.corner(f, 1),
                                                   mesh_.corner(f, 2));
          const double d = (q - p).squaredNorm();
          if (d < best) best = d, best_point = q;
        }
        continue;
      }
      const double dl = nodes_[node.left].box.squared_distance(p);
      const double dr = nodes_[node.right].box.squared_distance(p);
      // Push the farther child first so the nearer one is visited first.
      if (dl < dr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
  }

  static bool ray_hits_box(const Vec3& o, const Vec3& inv_dir, const Aabb& b) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      double a = (b.min[k] - o[k]) * inv_dir[k];
      double c = (b.max[k] - o[k]) * inv_dir[k];
      if (a > c) std::swap(a, c);
      t0 = std::max(t0, a);
      t1 = std::min(t1, c);
      if (t0 > t1 * (1.0 + 1e-12) + 1e-15) return false;
    }
    return true;
  }

  // Returns true when some crossing was ambiguous.
  bool count_hits(const Vec3& p, const Vec3& dir, int& hits) const {
    const Vec3 inv_dir = dir.cwiseInverse();
    std::int32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    bool ambiguous = false;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!ray_hits_box(p, inv_dir, node.box)) continue;
      if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.begin + node.count; ++i) {
          const auto f = order_[i];
          switch (ray_triangle(p, dir, mesh_.corner(f, 0), mesh_.corner(f, 1),
                               mesh_.corner(f, 2))) {
            case RayHit::Hit: ++hits; break;
            case RayHit::Ambiguous: ambiguous = true; break;
            case RayHit::Miss: break;
          }
        }
        continue;
      }
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
    return ambiguous;
  }

  TriMesh mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centroids_;
};

// ---------------------------------------------------------------------------
// Surface sampling

struct SurfaceSample {
  Vec3 position;
  Vec3 normal;  // outward unit normal
  std::size_t face = 0;
};

/// Area-weighted uniform samples. Sample i depends only on (seed, i).
inline std::vector<SurfaceSample> sample_surface(const TriMesh& mesh, std::size_t n,
                                                 std::uint64_t seed) {
  if (mesh.empty()) throw ValidationError("sample_surface on an empty mesh");
  if (n == 0) throw ValidationError("sample_surface needs n >= 1");
  std::vector<double> cdf(mesh.faces().size());
  double acc = 0.0;
  for (std::size_t f = 0; f < cdf.size(); ++f) cdf[f] = (acc += mesh.face_area(f));
  std::vector<SurfaceSample> out;
  out.reserve(n);
  CounterRng rng(seed, 0x5A3F);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), pick);
    const auto f = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    const double s = std::sqrt(rng.uniform());
    const double t = rng.uniform();
    const double w0 = 1.0 - s, w1 = s * (1.0 - t), w2 = s * t;
    SurfaceSample sample;
    sample.position = w0 * mesh.corner(f, 0) + w1 * mesh.corner(f, 1) + w2 * mesh.corner(f, 2);
    sample.normal = mesh.face_normal(f);
    sample.face = f;
    out.push_back(sample);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analytic primitives (fixtures and tests)

inline TriMesh make_box(const Vec3& size, const Vec3& center = Vec3::Zero()) {
  const Vec3 h = 0.5 * size;
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back(center.x() + ((i & 1) ? h.x() : -h.x()), center.y() + ((i & 2) ? h.y() : -h.y()),
                   center.z() + ((i & 4) ? h.z() : -h.z()));
  }
  std::vector<Face> f = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                         {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return TriMesh(std::move(v), std::move(f));
}

/// Unit cube [0,1]^3.
inline TriMesh make_unit_cube() { return make_box(Vec3::Ones(), Vec3::Constant(0.5)); }

/// Icosahedron refined `subdivisions` times, vertices projected onto the sphere.
/// Vertex counts: 12, 42, 162, 642, ...
inline TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero()) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const auto id = static_cast<std::uint32_t>(v.size() - 1);
      mid.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const auto a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]),
                 c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& p : v) p = center + radius * p;
  return TriMesh(std::move(v), std::move(f));
}

/// Closed cylinder along z, centered at `center`.
inline TriMesh make_cylinder(double radius, double height, int segments,
                             const Vec3& center = Vec3::Zero()) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    v.emplace_back(radius * std::cos(a), radius * std::sin(a), -0.5 * height);
    v.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.5 * height);
  }
  const std::uint32_t bottom = 2 * n, top = 2 * n + 1;
  v.emplace_back(0.0, 0.0, -0.5 * height);
  v.emplace_back(0.0, 0.0, 0.5 * height);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    f.push_back({2 * i, 2 * j, 2 * i + 1});
    f.push_back({2 * i + 1, 2 * j, 2 * j + 1});
    f.push_back({bottom, 2 * j, 2 * i});
    f.push_back({top, 2 * i + 1, 2 * j + 1});
  }
  for (auto& p : v) p += center;
  return TriMesh(std::move(v), std::move(f));
}

}  // namespace graspforge
