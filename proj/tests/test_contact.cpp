#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace graspforge;

namespace {

Contact contact_at(const Vec3& p, const Mat3& frame = Mat3::Identity()) {
  Contact c;
  c.position = p;
  c.frame = frame;
  return c;
}

/// Contact on a sphere of radius r centred at the origin, pressing inward.
Contact sphere_contact(const Vec3& dir, double r, const Vec3& x_hint = Vec3::UnitX()) {
  const Vec3 n = dir.normalized();
  return contact_at(r * n, frame_from_z(-n, x_hint));
}

}  // namespace

TEST(Cone, ContainsExamples) {
  FrictionCone cone;
  cone.mu = 0.5;
  EXPECT_TRUE(cone_contains(Vec3(0, 0, 1), cone));
  EXPECT_FALSE(cone_contains(Vec3(0, 0, -1), cone));
  EXPECT_TRUE(cone_contains(Vec3(0.5, 0, 1), cone));
  EXPECT_FALSE(cone_contains(Vec3(0.6, 0, 1), cone));
  for (double mu : {0.1, 1.0, 3.0}) {
    cone.mu = mu;
    EXPECT_TRUE(cone_contains(Vec3(0, 0, 1), cone));
  }
}

TEST(Cone, FourEdgesAtFortyFiveDegrees) {
  FrictionCone cone;
  cone.mu = 1.0;
  cone.edge_count = 4;
  const auto edges = cone_edges(cone);
  ASSERT_EQ(edges.size(), 4u);
  const double s = 1.0 / std::sqrt(2.0);
  const std::array<Vec3, 4> expect = {Vec3(s, 0, s), Vec3(0, s, s), Vec3(-s, 0, s), Vec3(0, -s, s)};
  for (int k = 0; k < 4; ++k) EXPECT_LE((edges[k] - expect[k]).norm(), 1e-15);
}

TEST(Cone, EdgesAreUnitAndInsideTheCone) {
  for (int m : {3, 8, 16}) {
    FrictionCone cone;
    cone.mu = 0.7;
    cone.edge_count = m;
    for (const auto& e : cone_edges(cone)) {
      EXPECT_NEAR(e.norm(), 1.0, 1e-15);
      EXPECT_TRUE(cone_contains(e, cone));
      EXPECT_NEAR(e.z(), cone.edge_normal_component(), 1e-15);
    }
  }
}

TEST(Cone, SixteenEdgesLeaveSmallAngularGap) {
  FrictionCone cone;
  cone.mu = 0.6;
  cone.edge_count = 16;
  const auto edges = cone_edges(cone);
  // The polygon's deepest point lies midway between adjacent edges.
  double worst = 0.0;
  const double half_apex = std::atan(cone.mu);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Vec3 mid = (edges[k] + edges[(k + 1) % edges.size()]).normalized();
    const double boundary_angle = half_apex - std::atan2(std::hypot(mid.x(), mid.y()), mid.z());
    worst = std::max(worst, boundary_angle);
  }
  EXPECT_LT(worst * 180.0 / std::numbers::pi, 12.0);
}

TEST(Cone, InvalidParametersAreRejected) {
  FrictionCone bad;
  bad.mu = 0.0;
  EXPECT_THROW(cone_edges(bad), ValidationError);
  bad.mu = 0.5;
  bad.edge_count = 2;
  EXPECT_THROW(cone_edges(bad), ValidationError);
}

TEST(GraspMap, HandComputedExample) {
  const GraspMap g = grasp_map(contact_at(Vec3(1, 0, 0)), Vec3::Zero(), 1.0);
  const Vec6 w = contact_wrench(g, Vec3(0, 0, 1)).vector();
  Vec6 expect;
  expect << 0, 0, 1, 0, -1, 0;
  EXPECT_LE((w - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GraspMap, MatchesHandWrittenWrench) {
  CounterRng rng(51);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vec3 com(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Mat3 frame = so3_exp(Vec3(rng.normal(), rng.normal(), rng.normal()));
    const Vec3 f(rng.normal(), rng.normal(), rng.normal());
    const double alpha = rng.uniform(0.1, 30);
    const Vec6 w = contact_wrench(grasp_map(contact_at(p, frame), com, alpha), f).vector();
    EXPECT_LE((w - oracle::wrench_of(p, frame, com, alpha, f)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GraspMap, ZeroLeverArmAndZeroAlpha) {
  const Contact c = contact_at(Vec3(0.3, 0.2, 0.1), so3_exp(Vec3(0.1, 0.2, 0.3)));
  EXPECT_TRUE(grasp_map(c, c.position, 1.0).bottomRows<3>().isZero(0.0));
  EXPECT_TRUE(grasp_map(c, Vec3::Zero(), 0.0).bottomRows<3>().isZero(0.0));
  EXPECT_TRUE(grasp_map(c, Vec3::Zero(), 2.0).topRows<3>().isApprox(c.frame, 0.0));
}

TEST(GraspMap, WrenchIsLinearInForce) {
  const GraspMap g = grasp_map(contact_at(Vec3(0.1, -0.2, 0.3), so3_exp(Vec3(0.5, -0.1, 0.2))),
                               Vec3(0.01, 0.02, 0.03), 7.0);
  const Vec3 f(0.3, -0.2, 1.1);
  for (double a : {-2.0, 0.5, 3.0}) {
    EXPECT_LE((contact_wrench(g, a * f).vector() - a * contact_wrench(g, f).vector()).norm(), 1e-13);
  }
}

TEST(ForceClosure, SingleContactIsOpen) {
  const auto r = force_closure({sphere_contact(Vec3::UnitX(), 0.04)}, FrictionCone{}, Vec3::Zero(), 25.0);
  EXPECT_FALSE(r.closed);
  const auto o = oracle::force_closure_oracle({sphere_contact(Vec3::UnitX(), 0.04)}, 0.6, 8,
                                              Vec3::Zero(), 25.0);
  EXPECT_FALSE(o.closed);
}

TEST(ForceClosure, TwoAntipodalHardFingersAreOpen) {
  const ContactSet cs = {sphere_contact(Vec3::UnitX(), 0.04), sphere_contact(-Vec3::UnitX(), 0.04)};
  FrictionCone cone;
  cone.mu = 1.0;
  EXPECT_FALSE(force_closure(cs, cone, Vec3::Zero(), 25.0).closed);
  EXPECT_FALSE(oracle::force_closure_oracle(cs, 1.0, 8, Vec3::Zero(), 25.0).closed);
}

TEST(ForceClosure, ThreeEquatorialContactsMatchOracle) {
  ContactSet cs;
  for (int k = 0; k < 3; ++k) {
    const double th = 2.0 * std::numbers::pi * k / 3.0;
    cs.push_back(sphere_contact(Vec3(std::cos(th), std::sin(th), 0), 0.04, Vec3::UnitZ()));
  }
  FrictionCone cone;
  cone.mu = 1.0;
  const auto lib = force_closure(cs, cone, Vec3::Zero(), 1.0);
  const auto o = oracle::force_closure_oracle(cs, 1.0, 8, Vec3::Zero(), 1.0);
  EXPECT_EQ(lib.closed, o.closed);
}

TEST(ForceClosure, RandomConfigurationsMatchOracle) {
  const TriMesh mesh = make_icosphere(0.04, 3);
  FrictionCone cone;
  for (int i = 0; i < 50; ++i) {
    const int k = 3 + i % 4;
    const auto cs = oracle::random_sphere_contacts(mesh, k, 5000 + i);
    const auto lib = force_closure(cs, cone, Vec3::Zero(), 25.0);
    const auto o = oracle::force_closure_oracle(cs, cone.mu, cone.edge_count, Vec3::Zero(), 25.0,
                                                1e-3, 1024);
    EXPECT_EQ(lib.closed, o.closed) << "configuration " << i << " margin " << lib.margin
                                    << " oracle " << o.sampled_margin;
  }
}

TEST(ForceClosure, MarginIsRotationInvariant) {
  const TriMesh mesh = make_icosphere(0.04, 2);
  const auto cs = oracle::random_sphere_contacts(mesh, 4, 77);
  const Vec3 com(0.001, -0.002, 0.0005);
  const auto base = force_closure(cs, FrictionCone{}, com, 25.0);
  CounterRng rng(78);
  for (int t = 0; t < 5; ++t) {
    const RigidTransform g{so3_exp(Vec3(rng.normal(), rng.normal(), rng.normal())),
                           Vec3(rng.normal(), rng.normal(), rng.normal())};
    ContactSet moved = cs;
    for (auto& c : moved) c.position = g.apply(c.position), c.frame = g.rotation * c.frame;
    const auto r = force_closure(moved, FrictionCone{}, g.apply(com), 25.0);
    EXPECT_NEAR(r.margin, base.margin, 1e-9);
    EXPECT_EQ(r.closed, base.closed);
  }
}

TEST(ForceClosure, ScalingPreservesVerdictWithMatchedAlpha) {
  const TriMesh mesh = make_icosphere(0.04, 2);
  for (int i = 0; i < 10; ++i) {
    const auto cs = oracle::random_sphere_contacts(mesh, 3 + i % 3, 300 + i);
    ContactSet scaled = cs;
    for (auto& c : scaled) c.position *= 2.5;
    const bool a = force_closure(cs, FrictionCone{}, Vec3::Zero(), 25.0).closed;
    const bool b = force_closure(scaled, FrictionCone{}, Vec3::Zero(), 25.0 / 2.5).closed;
    EXPECT_EQ(a, b);
  }
}

// ---------------------------------------------------------------------------
// NNLS and the lower-level force QP

TEST(Nnls, RandomInstancesSatisfyKktAndBeatRandomFeasiblePoints) {
  std::mt19937_64 gen(91);
  std::normal_distribution<double> gauss;
  std::exponential_distribution<double> expo(1.0);
  for (int inst = 0; inst < 100; ++inst) {
    const int cols = 8 * (1 + inst % 6);
    MatX a(6, cols);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = gauss(gen);
    Vec6 b;
    for (int i = 0; i < 6; ++i) b[i] = 3.0 * gauss(gen);
    const auto sol = nnls(a, b);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(oracle::nnls_kkt_violation(a, b, sol.x), 1e-8) << "instance " << inst;
    const double obj = (a * sol.x - b).squaredNorm();
    EXPECT_NEAR(std::sqrt(obj), sol.residual_norm, 1e-12);
    for (int s = 0; s < 1000; ++s) {
      VecX x(cols);
      const double scale = expo(gen);
      for (int i = 0; i < cols; ++i) x[i] = scale * expo(gen) / cols;
      EXPECT_LE(obj, (a * x - b).squaredNorm() + 1e-12);
    }
  }
}

TEST(Nnls, ZeroTargetGivesZero) {
  MatX a = MatX::Random(6, 10);
  const auto sol = nnls(a, Vec6::Zero());
  EXPECT_TRUE(sol.x.isZero(0.0));
  EXPECT_EQ(sol.residual_norm, 0.0);
}

TEST(ForceQp, ContactAtComSupportsPureForce) {
  const double lambda = 2.0;
  const auto maps = grasp_maps({contact_at(Vec3::Zero())}, Vec3::Zero(), 1.0);
  const auto s = solve_contact_forces(maps, FrictionCone{}, Wrench{Vec3(0, 0, 1), Vec3::Zero()}, lambda);
  EXPECT_LE(s.residual_norm, 1e-8);
  EXPECT_LE((s.forces[0] - Vec3(0, 0, lambda)).norm(), 1e-8);
}

TEST(ForceQp, ZeroTargetGivesZeroBeta) {
  const auto maps = grasp_maps({contact_at(Vec3(0.1, 0, 0))}, Vec3::Zero(), 1.0);
  const auto s = solve_contact_forces(maps, FrictionCone{}, Wrench{});
  EXPECT_TRUE(s.beta.isZero(0.0));
  EXPECT_EQ(s.residual_norm, 0.0);
}

TEST(ForceQp, TensileTargetIsUnreachable) {
  const auto maps = grasp_maps({contact_at(Vec3::Zero())}, Vec3::Zero(), 1.0);
  const auto s = solve_contact_forces(maps, FrictionCone{}, Wrench{Vec3(0, 0, -1), Vec3::Zero()});
  EXPECT_NEAR(s.residual_norm, 1.0, 1e-12);
  EXPECT_TRUE(s.beta.isZero(0.0));
  // Dense sampling of the cone image cannot do better than the origin.
  CounterRng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 f = Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), 1.0) * rng.uniform(0, 2);
    if (!cone_contains(f, FrictionCone{})) continue;
    EXPECT_GE((Vec3(0, 0, -1) - f).norm(), 1.0 - 1e-12);
  }
}

TEST(ForceQp, SolutionInvariants) {
  const TriMesh mesh = make_icosphere(0.04, 2);
  FrictionCone cone;
  const auto edges = cone_edges(cone);
  for (int i = 0; i < 20; ++i) {
    const auto cs = oracle::random_sphere_contacts(mesh, 2 + i % 5, 700 + i);
    const auto maps = grasp_maps(cs, Vec3::Zero(), 25.0);
    const Wrench target{Vec3(0.1 * i - 1, 0.5, 0.98), Vec3(0.01, -0.02, 0.0)};
    const auto s = solve_contact_forces(maps, cone, target, 1.5);
    EXPECT_TRUE((s.beta.array() >= 0).all());
    Vec6 realized = Vec6::Zero();
    for (std::size_t c = 0; c < cs.size(); ++c) {
      Vec3 f = Vec3::Zero();
      for (std::size_t k = 0; k < edges.size(); ++k) f += s.beta[c * edges.size() + k] * edges[k];
      EXPECT_LE((f - s.forces[c]).norm(), 1e-12);
      EXPECT_TRUE(cone_contains(s.forces[c], cone));
      realized += maps[c] * s.forces[c];
    }
    EXPECT_LE((s.residual.vector() - (1.5 * target.vector() - realized)).norm(), 1e-12);
    const MatX a = wrench_basis(maps, cone);
    EXPECT_LE(oracle::nnls_kkt_violation(a, 1.5 * target.vector(), s.beta), 1e-8);
  }
}

TEST(ForceQp, TrackingErrorSumsSquaredResiduals) {
  const TriMesh mesh = make_icosphere(0.04, 2);
  const auto cs = oracle::random_sphere_contacts(mesh, 3, 11);
  const auto maps = grasp_maps(cs, Vec3::Zero(), 25.0);
  const auto targets = default_target_wrenches(0.1);
  ASSERT_EQ(targets.size(), 7u);
  EXPECT_NEAR(targets[0].force.z(), 0.1 * 9.81, 1e-15);
  double sum = 0.0;
  for (const auto& t : targets) {
    const double r = solve_contact_forces(maps, FrictionCone{}, t).residual_norm;
    sum += r * r;
  }
  EXPECT_NEAR(wrench_tracking_error(maps, FrictionCone{}, targets), sum, 1e-12);
  EXPECT_THROW(wrench_tracking_error(maps, FrictionCone{}, {}), ValidationError);
  EXPECT_THROW(solve_contact_forces({}, FrictionCone{}, Wrench{}), ValidationError);
}
