#include <doctest.h>

#include "dexpush/energy.hpp"
#include "dexpush/rng.hpp"

#include <cmath>

using namespace dexpush;

namespace {

double dense_fc(const PointCloud& x, const PointCloud& n) {
  const Eigen::Index k = x.rows();
  const Vec3 centroid = x.colwise().mean().transpose();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(6, 3 * k);
  Eigen::VectorXd c(3 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vec3 r = x.row(i).transpose() - centroid;
    g.block<3, 3>(0, 3 * i).setIdentity();
    g.block<3, 3>(3, 3 * i) << 0, -r.z(), r.y(), r.z(), 0, -r.x(), -r.y(), r.x(), 0;
    c.segment<3>(3 * i) = n.row(i).transpose();
  }
  return (g * c).norm();
}

struct Fixture {
  std::shared_ptr<const HandKinematics> hand =
      std::make_shared<const HandKinematics>(HandKinematics::load(shipped_hand("allegro")));
  std::shared_ptr<const ContactCandidateSet> candidates =
      std::make_shared<const ContactCandidateSet>(generate_contact_candidates(*hand, "allegro", 1));
  std::shared_ptr<const HandSurface> surface = std::make_shared<const HandSurface>(sample_hand_surface(*hand, 16, 2));
  std::shared_ptr<const DistanceQuery> cube =
      std::make_shared<const DistanceQuery>(make_box(Vec3::Constant(0.04), Vec3(0, 0, 0.04)));
  EnergyScene scene = make_energy_scene(hand, candidates, surface, cube, Vec3::UnitX());
};

}  // namespace

TEST_CASE("direction and arm terms") {
  CHECK(e_dir(Vec3::UnitX(), Vec3::UnitX()) == -1.0);
  CHECK(e_dir(Vec3::UnitX(), -Vec3::UnitX()) == 1.0);
  CHECK(e_dir(Vec3::UnitX(), Vec3::UnitY()) == 0.0);
  CHECK_THROWS(e_dir(Vec3::Zero(), Vec3::UnitX()));
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Vec3 u = rng.unit_vector(), v = rng.unit_vector();
    CHECK(e_dir(u, v) == doctest::Approx(e_dir(v, u)));
    CHECK(e_dir(u, -v) == doctest::Approx(-e_dir(u, v)));
  }
  CHECK(e_arm(Vec3(0, 0, -1)) == 0.0);
  CHECK(e_arm(Vec3(0, 0, 0.7)) == 0.7);
  CHECK(e_arm(Vec3(1, 0, 0)) == 0.0);
}

TEST_CASE("distance term against the box oracle") {
  const DistanceQuery cube(make_box(Vec3::Constant(0.5)));
  PointCloud on(3, 3);
  on << 0.5, 0.1, 0.2, -0.3, 0.5, 0.0, 0.1, 0.1, -0.5;
  CHECK(e_dis(on, cube) < 1e-4);
  PointCloud out(1, 3);
  out << 0.6, 0.1, 0.1;
  CHECK(e_dis(out, cube) == doctest::Approx(0.1).epsilon(1e-3));
  out << 0.7, 0.1, 0.1;
  CHECK(e_dis(out, cube) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("joint hinge penalty") {
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(4, -1.0), hi = Eigen::VectorXd::Constant(4, 1.0);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(4);
  CHECK(e_joint(t, lo, hi) == 0.0);
  t[3] = 1.1;
  CHECK(e_joint(t, lo, hi) == doctest::Approx(0.1));
  t.setZero();
  t[1] = -1.2;
  t[2] = 1.3;
  CHECK(e_joint(t, lo, hi) == doctest::Approx(0.5));
}

TEST_CASE("penetration terms") {
  const DistanceQuery cube(make_box(Vec3::Constant(0.05), Vec3(0, 0, 0.05)));
  PointCloud far(2, 3);
  far << 1, 1, 1, -1, 2, 0.5;
  auto pen = e_pen(far, cube, 0.0, {}, {});
  CHECK(pen.object == 0.0);
  CHECK(pen.table == 0.0);
  PointCloud inside(1, 3);
  inside << 0.03, 0.0, 0.05;
  CHECK(e_pen(inside, cube, 0.0, {}, {}).object == doctest::Approx(0.02).epsilon(1e-3));
  PointCloud below(1, 3);
  below << 1.0, 0.0, -0.01;
  CHECK(e_pen(below, cube, 0.0, {}, {}).table == doctest::Approx(0.01));

  const std::vector<CollisionSphere> spheres = {{Vec3::Zero(), 0.1}, {Vec3(0.15, 0, 0), 0.1}, {Vec3(1, 0, 0), 0.1}};
  pen = e_pen(far, cube, 0.0, spheres, {{0, 1}, {0, 2}});
  CHECK(pen.self == doctest::Approx(0.05));
}

TEST_CASE("force closure surrogate") {
  PointCloud x(2, 3), n(2, 3);
  x << 1, 0, 0, -1, 0, 0;
  n << -1, 0, 0, 1, 0, 0;
  CHECK(e_fc(x, n) < 1e-9);
  n << 0, 0, 1, 0, 0, 1;
  x << 0.3, 0, 0, 0.3, 0.2, 0;
  // Centroid-relative arms cancel, only the net force remains.
  CHECK(e_fc(x, n) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS(e_fc(x.topRows(1), n.topRows(1)));

  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    PointCloud p(4, 3), m(4, 3);
    for (int i = 0; i < 4; ++i) {
      p.row(i) = Vec3(rng.normal(), rng.normal(), rng.normal()).transpose();
      m.row(i) = rng.unit_vector().transpose();
    }
    const double base = e_fc(p, m);
    CHECK(std::abs(base - dense_fc(p, m)) < 1e-12);
    const Mat3 r = rotation_about(rng.unit_vector(), rng.uniform(-3, 3));
    const Vec3 shift(rng.normal(), rng.normal(), rng.normal());
    const PointCloud pr = ((p * r.transpose()).rowwise() + shift.transpose()).eval();
    const PointCloud mr = (m * r.transpose()).eval();
    CHECK(std::abs(e_fc(pr, mr) - base) < 1e-9);
  }
}

TEST_CASE("weights defaults, aliases and validation") {
  const EnergyWeights w;
  CHECK(w.w_fc == 0.5);
  CHECK(w.w_dis == 500.0);
  CHECK(w.w_pen == 300.0);
  CHECK(w.w_spen == 100.0);
  CHECK(w.w_tpen == 100.0);
  CHECK(w.w_joints == 1.0);
  CHECK(w.w_dir == 200.0);
  CHECK(w.w_arm == 100.0);
  CHECK(w.w_ff == 3.0);
  CHECK(w.w_fp == 0.0);
  const auto cfg = KeyValueConfig::parse_string("w_direction = 7\nw_kinematics = 9\n");
  CHECK(EnergyWeights::from_config(cfg).w_dir == 7.0);
  CHECK(EnergyWeights::from_config(cfg).w_arm == 9.0);
  CHECK_THROWS(EnergyWeights::from_config(KeyValueConfig::parse_string("w_pen = -1\n")));
  const EnergyWeights back = EnergyWeights::from_config(w.to_config());
  CHECK(back.w_dis == w.w_dis);
  CHECK(back.w_ff == w.w_ff);
}

TEST_CASE("total energy equals the weighted sum of its parts") {
  Fixture f;
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    HandPose pose;
    pose.theta = Eigen::VectorXd(16);
    for (int k = 0; k < 16; ++k) pose.theta[k] = rng.uniform(-0.5, 1.8);
    pose.wrist.rotation = rotation_about(rng.unit_vector(), rng.uniform(-3, 3));
    pose.wrist.translation = Vec3(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(-0.05, 0.15));
    ContactSelection sel;
    for (int k = 0; k < 8; ++k) sel.indices.push_back(int(rng.uniform_index(688)));
    EnergyWeights w;
    w.w_fc = rng.uniform(0, 2);
    w.w_dis = rng.uniform(0, 600);
    const EnergyBreakdown e = total_energy(pose, sel, f.scene, w);
    CHECK(std::abs(e.total - weighted_total(e, w)) <= 1e-9 * std::max(1.0, std::abs(e.total)));
    CHECK(e.e_pen_obj >= 0);
    CHECK(e.e_pen_table >= 0);
    CHECK(e.e_pen_self >= 0);
    CHECK(e.e_dis >= 0);
    CHECK(e.e_joint >= 0);
    CHECK(e.e_arm >= 0);
    CHECK(std::abs(e.e_dir) <= 1.0);
    CHECK(total_energy(pose, sel, f.scene, EnergyWeights::zero()).total == 0.0);
  }
}

TEST_CASE("a clean pose has no penalties") {
  Fixture f;
  HandPose pose;
  pose.theta = f.hand->lower_limits().cwiseMax(0.0);
  // Palm facing +x, far from the cube and above the table; palm normal horizontal.
  pose.wrist = Transform3{Mat3::Identity(), Vec3(-0.5, 0.0, 0.05)};
  ContactSelection sel{{0, 200, 400}};
  const EnergyBreakdown e = total_energy(pose, sel, f.scene, EnergyWeights());
  CHECK(e.e_pen_obj == 0.0);
  CHECK(e.e_pen_table == 0.0);
  CHECK(e.e_pen_self == 0.0);
  CHECK(e.e_joint == 0.0);
  CHECK(e.e_arm == 0.0);
  CHECK(e.e_dir == -1.0);
}
