#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace graspforge;

namespace {

const SynthesisContext& sphere_ctx() {
  static const SynthesisContext ctx = [] {
    const TriMesh m = make_icosphere(0.04, 2, Vec3(0.45, 0, 0.04));
    return make_context(m, oracle::hand(), 0.1, FrictionCone{}, EnergyWeights{}, 0.0);
  }();
  return ctx;
}

std::array<ArmMount, 2> arms() {
  auto arm = std::make_shared<const ArmModel>(oracle::arm());
  return {ArmMount{arm, RigidTransform::from_translation(Vec3(0, -0.3, 0))},
          ArmMount{arm, RigidTransform::from_translation(Vec3(0, 0.3, 0))}};
}

BimanualGraspPose unimanual_at(const RigidTransform& wrist) {
  BimanualGraspPose p;
  p.hands[0].wrist = wrist;
  p.hands[0].q = oracle::hand().open_for(GraspStrategy::WholeHand);
  p.hands[1].q = p.hands[0].q;
  return p;
}

Candidate candidate(std::size_t index, double energy, const RigidTransform& wrist) {
  Candidate c;
  c.index = index;
  c.seed = index;
  c.energy.total = energy;
  c.pose = unimanual_at(wrist);
  return c;
}

CandidateReport passing(bool pass = true) {
  CandidateReport r;
  r.physical.pass = pass;
  r.reachable = pass;
  r.collision_free = pass;
  return r;
}

}  // namespace

TEST(Metrics, RotDistanceExamples) {
  EXPECT_EQ(rot_distance(Mat3::Identity(), Mat3::Identity()), 0.0);
  EXPECT_NEAR(rot_distance(Mat3::Identity(), oracle::axis_angle(Vec3::UnitZ(), std::numbers::pi)),
              std::numbers::pi, 1e-12);
  CounterRng rng(61);
  for (int i = 0; i < 20; ++i) {
    const Vec3 axis = rng.unit_vector();
    EXPECT_NEAR(rot_distance(Mat3::Identity(), oracle::axis_angle(axis, 0.3)), 0.3, 1e-12);
  }
}

TEST(Metrics, RotDistanceIsAMetric) {
  CounterRng rng(62);
  auto random_rot = [&] { return oracle::axis_angle(rng.unit_vector(), rng.uniform(0, std::numbers::pi)); };
  for (int i = 0; i < 200; ++i) {
    const Mat3 a = random_rot(), b = random_rot(), c = random_rot();
    EXPECT_NEAR(rot_distance(a, b), rot_distance(b, a), 1e-12);
    EXPECT_LE(rot_distance(a, a), 1e-9);
    EXPECT_LE(rot_distance(a, c), rot_distance(a, b) + rot_distance(b, c) + 1e-12);
  }
}

TEST(Metrics, Se3DistanceExamples) {
  const RigidTransform a = RigidTransform::from_xyz_rpy(Vec3(0.1, 0.2, 0.3), Vec3(0.3, 0.2, 0.1));
  EXPECT_EQ(se3_distance(a, a, 1.0), 0.0);
  RigidTransform b = a;
  b.translation += Vec3(1, 0, 0);
  EXPECT_EQ(se3_distance(a, b, 1.0), 1.0);
  RigidTransform c = b;
  c.rotation = oracle::axis_angle(Vec3::UnitY(), 0.5) * a.rotation;
  EXPECT_NEAR(se3_distance(a, c, 0.1), 1.0 + 0.1 * 0.5, 1e-12);
  EXPECT_EQ(se3_distance(a, c, 0.1), se3_distance(c, a, 0.1));
}

TEST(Metrics, GraspDistanceSumsActiveHands) {
  BimanualGraspPose p;
  p.strategy = GraspStrategy::Bimanual;
  p.active = {true, true};
  p.hands[0].wrist = RigidTransform::from_translation(Vec3(1, 0, 0));
  p.hands[1].wrist = RigidTransform::from_translation(Vec3(0, 2, 0));
  const std::array<RigidTransform, 2> ee = {RigidTransform{}, RigidTransform{}};
  EXPECT_EQ(grasp_distance(p, ee, 0.1), 3.0);
  p.active = {false, true};
  EXPECT_EQ(grasp_distance(p, ee, 0.1), 2.0);
}

TEST(Physical, FailureReasonsInOrder) {
  const auto& ctx = sphere_ctx();
  const TriMesh& m = ctx.mesh();
  ContactSet far = oracle::random_sphere_contacts(m, 3, 1);
  for (auto& c : far) c.position += Vec3(0, 0, 0.1);
  EXPECT_EQ(physical_check(far, 0.0, ctx).reason, "contact distance");
  const ContactSet on = oracle::random_sphere_contacts(m, 3, 1);
  EXPECT_EQ(physical_check(on, 0.01, ctx).reason, "penetration");
  const ContactSet two = oracle::random_sphere_contacts(m, 1, 2);
  const auto v = physical_check(two, 0.0, ctx);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.reason, "wrench residual");
}

TEST(Physical, TighteningThresholdsNeverAddsPasses) {
  const auto& ctx = sphere_ctx();
  CounterRng rng(63);
  int passes = 0;
  for (int i = 0; i < 60; ++i) {
    ContactSet cs = oracle::random_sphere_contacts(ctx.mesh(), 3 + i % 4, 100 + i);
    for (auto& c : cs) c.position += rng.uniform(0, 0.006) * rng.unit_vector();
    const double pen = rng.uniform(0, 0.003);
    PhysicalThresholds loose;
    loose.wrench_residual = 10.0;
    PhysicalThresholds tight = loose;
    tight.contact_distance *= rng.uniform(0.3, 1.0);
    tight.penetration *= rng.uniform(0.3, 1.0);
    tight.wrench_residual *= rng.uniform(0.001, 1.0);
    const bool a = physical_check(cs, pen, ctx, loose).pass;
    const bool b = physical_check(cs, pen, ctx, tight).pass;
    EXPECT_TRUE(!b || a);
    passes += a;
  }
  EXPECT_GT(passes, 0);
}

TEST(Physical, MaxPenetrationSeesTable) {
  const auto& ctx = sphere_ctx();
  auto pose = unimanual_at(RigidTransform::from_translation(Vec3(-1, 0, -0.1)));
  EXPECT_GT(max_penetration(pose, ctx), 0.05);
  pose = unimanual_at(RigidTransform::from_translation(Vec3(-1, 0, 1.0)));
  EXPECT_EQ(max_penetration(pose, ctx), 0.0);
}

TEST(Reachability, FkOfArmConfigurationPasses) {
  const auto mounts = arms();
  const auto& chain = mounts[0].arm->chain;
  CounterRng rng(64);
  int ok = 0;
  for (int i = 0; i < 10; ++i) {
    JointVector q(chain.dof());
    for (int j = 0; j < chain.dof(); ++j) {
      q[j] = rng.uniform(chain.lower_limits()[j], chain.upper_limits()[j]);
    }
    const auto r = reachability_filter(unimanual_at(mounts[0].tool_pose(q)), mounts);
    ok += r.pass;
    if (r.pass) {
      const RigidTransform got = mounts[0].tool_pose(*r.arm_q[0]);
      EXPECT_LE((got.translation - mounts[0].tool_pose(q).translation).norm(), 1e-4);
      EXPECT_FALSE(r.arm_q[1].has_value());
    }
  }
  EXPECT_GE(ok, 9);
}

TEST(Reachability, FarPoseFails) {
  const auto r = reachability_filter(unimanual_at(RigidTransform::from_translation(Vec3(5, 0, 0))), arms());
  EXPECT_FALSE(r.pass);
}

TEST(Collision, SceneExamples) {
  const HandModel& hand = oracle::hand();
  const auto pose = unimanual_at(RigidTransform::from_translation(Vec3(0.4, 0, 0.3)));
  Scene scene;
  EXPECT_TRUE(collision_filter(pose, hand, scene, "target"));

  scene.objects.push_back({"target", std::make_shared<const MeshSdf>(make_icosphere(0.3, 1, Vec3(0.4, 0, 0.3)))});
  EXPECT_TRUE(collision_filter(pose, hand, scene, "target"));

  scene.objects.push_back(
      {"far_cube", std::make_shared<const MeshSdf>(make_box(Vec3(0.1, 0.1, 0.1), Vec3(1.4, 0, 0.3)))});
  EXPECT_TRUE(collision_filter(pose, hand, scene, "target"));

  scene.objects.push_back(
      {"near_cube", std::make_shared<const MeshSdf>(make_box(Vec3(0.2, 0.2, 0.2), Vec3(0.4, 0, 0.3)))});
  EXPECT_FALSE(collision_filter(pose, hand, scene, "target"));

  Scene table;
  table.table_height = 0.0;
  EXPECT_TRUE(collision_filter(pose, hand, table, "target"));
  const auto low = unimanual_at(RigidTransform::from_translation(Vec3(0.4, 0, -0.01)));
  EXPECT_FALSE(collision_filter(low, hand, table, "target"));
}

TEST(Select, Examples) {
  const std::array<RigidTransform, 2> ee = {RigidTransform::from_translation(Vec3(0.3, 0, 0.3)),
                                            RigidTransform{}};
  CandidateBatch batch = {candidate(0, 1.0, RigidTransform::from_translation(Vec3(0.5, 0, 0.3)))};
  EXPECT_EQ(select_preferred(batch, {passing()}, ee, 0.1), std::optional<std::size_t>(0));
  EXPECT_FALSE(select_preferred(batch, {passing(false)}, ee, 0.1).has_value());
  EXPECT_FALSE(select_preferred({}, {}, ee, 0.1).has_value());

  batch.push_back(candidate(1, 5.0, ee[0]));
  EXPECT_EQ(select_preferred(batch, {passing(), passing()}, ee, 0.1), std::optional<std::size_t>(1));
  EXPECT_EQ(select_preferred(batch, {passing(), passing(false)}, ee, 0.1),
            std::optional<std::size_t>(0));
  EXPECT_THROW(select_preferred(batch, {passing()}, ee, 0.1), ValidationError);
}

TEST(Select, TiesGoToEnergyThenIndex) {
  const std::array<RigidTransform, 2> ee = {RigidTransform{}, RigidTransform{}};
  const RigidTransform w = RigidTransform::from_translation(Vec3(0.2, 0, 0));
  CandidateBatch batch = {candidate(3, 2.0, w), candidate(1, 1.0, w), candidate(0, 1.0, w)};
  const FilterReport all = {passing(), passing(), passing()};
  EXPECT_EQ(select_preferred(batch, all, ee, 0.1), std::optional<std::size_t>(2));
  batch[2].energy.total = 3.0;
  EXPECT_EQ(select_preferred(batch, all, ee, 0.1), std::optional<std::size_t>(1));
}

TEST(Select, ArgminInvariantUnderCommonScaling) {
  CounterRng rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    CandidateBatch batch, scaled;
    FilterReport reports;
    const double s = rng.uniform(0.1, 10.0);
    for (std::size_t i = 0; i < 6; ++i) {
      const Vec3 t(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      batch.push_back(candidate(i, rng.uniform(0, 1), RigidTransform::from_translation(t)));
      scaled.push_back(candidate(i, batch.back().energy.total, RigidTransform::from_translation(s * t)));
      reports.push_back(passing(rng.uniform() < 0.7));
    }
    const std::array<RigidTransform, 2> ee = {RigidTransform{}, RigidTransform{}};
    // With equal rotations, scaling every translation scales every distance.
    EXPECT_EQ(select_preferred(batch, reports, ee, 0.1), select_preferred(scaled, reports, ee, 0.1));
  }
}

TEST(Evaluate, ReportsAreConsistentWithIndividualFilters) {
  const auto& ctx = sphere_ctx();
  OptimizerConfig opt;
  opt.max_iterations = 30;
  const auto batch = synthesize_batch(ctx, GraspStrategy::WholeHand, {0, 1}, {}, opt);
  Scene scene;
  scene.table_height = 0.0;
  scene.objects.push_back({"ball", ctx.object});
  const auto mounts = arms();
  const auto reports = evaluate_batch(batch, ctx, scene, "ball", mounts);
  ASSERT_EQ(reports.size(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(reports[i].physical.pass, physical_filter(batch[i].pose, ctx).pass);
    EXPECT_EQ(reports[i].collision_free, collision_filter(batch[i].pose, *ctx.hand, scene, "ball"));
    EXPECT_EQ(reports[i].distance.has_value(), reports[i].passed());
  }
}
