#include <doctest.h>

#include "dexpush/planner.hpp"
#include "dexpush/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

using namespace dexpush;

namespace {

struct Rig {
  std::shared_ptr<const HandKinematics> kin =
      std::make_shared<const HandKinematics>(HandKinematics::load(shipped_hand("allegro")));
  PushHand hand = make_push_hand(kin, SimConfig{});
};

Rig& rig() {
  static Rig r;
  return r;
}

// Open hand, palm facing +x, `gap` behind the object's -x face.
HandPose flat_palm(const ObjectModel& obj, double gap, double lift = 0.0) {
  const Rig& r = rig();
  HandPose pose;
  pose.theta = r.kin->lower_limits().cwiseMax(0.0);
  const auto links = r.kin->forward_kinematics(pose);
  const PointCloud w = world_points(r.hand.surface, links);
  const Aabb palm = bounds(transformed(r.kin->links()[std::size_t(r.kin->palm_link())].mesh.vertices,
                                       links[std::size_t(r.kin->palm_link())]));
  pose.wrist.translation = Vec3(obj.bounds().lo.x() - gap - w.col(0).maxCoeff(),
                                obj.center().y() - palm.center().y(), 0.002 + lift - w.col(2).minCoeff());
  return pose;
}

RankedPose synthetic(int index, double goal, double coll, double dir) {
  RankedPose r;
  r.index = index;
  r.feasible = true;
  r.l_goal = goal;
  r.l_coll = coll;
  r.l_dir = dir;
  return r;
}

std::vector<RankedPose> scored(std::vector<RankedPose> v, const RankWeights& w) {
  for (auto& r : v) r.score = rank_score(r.l_goal, r.l_coll, r.l_dir, w);
  return v;
}

Transform3 translation(double x, double y) {
  Transform3 t;
  t.translation = Vec3(x, y, 0.0);
  return t;
}

}  // namespace

TEST_CASE("rank weights defaults and validation") {
  RankWeights w;
  CHECK(w.alpha == 5.0);
  CHECK(w.beta == 1.0);
  CHECK(w.gamma == 0.5);
  CHECK(rank_score(0.1, 1.0, -1.0, w) == doctest::Approx(0.5 + 1.0 - 0.5));
  KeyValueConfig cfg;
  cfg.set("alpha", "0");
  CHECK_THROWS(RankWeights::from_config(cfg));
  cfg.set("alpha", "2");
  CHECK(RankWeights::from_config(cfg).alpha == 2.0);
}

TEST_CASE("the balanced candidate beats the accurate colliding one and the misaligned one") {
  const RankWeights w;
  auto v = scored({synthetic(0, 0.005, 1.0, -1.0),  // aligned, drags on the table
                   synthetic(1, 0.03, 0.0, -0.8),   // clean and close
                   synthetic(2, 0.20, 0.0, -1.0)},  // clean, never reaches
                  w);
  sort_ranking(v);
  CHECK(v.front().index == 1);
  CHECK(rank_score(0.1, 0.0, -0.5, w) < rank_score(0.1, 1.0, -0.5, w));
}

TEST_CASE("argmin is invariant to a common positive weight scale") {
  Rng rng(7);
  for (int set = 0; set < 100; ++set) {
    std::vector<RankedPose> v;
    for (int i = 0; i < 10; ++i)
      v.push_back(synthetic(i, rng.uniform(0.0, 0.3), rng.bernoulli(0.3) ? 1.0 : 0.0, rng.uniform(-1.0, 1.0)));
    RankWeights w{rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0)};
    RankWeights w2{w.alpha * 3.7, w.beta * 3.7, w.gamma * 3.7};
    auto a = scored(v, w), b = scored(v, w2);
    sort_ranking(a);
    sort_ranking(b);
    CHECK(a.front().index == b.front().index);
  }
}

TEST_CASE("ties resolve by goal error then index and duplicates keep input order") {
  const RankWeights w;
  // Equal V, different l_goal: 5*0.1 + 0 + 0.5*(-1) = 0 and 5*0 + 0 + 0.5*0 = 0.
  auto v = scored({synthetic(0, 0.1, 0.0, -1.0), synthetic(1, 0.0, 0.0, 0.0)}, w);
  sort_ranking(v);
  CHECK(v[0].index == 1);
  auto d = scored({synthetic(0, 0.05, 0.0, -0.5), synthetic(1, 0.05, 0.0, -0.5), synthetic(2, 0.05, 0.0, -0.5)}, w);
  std::reverse(d.begin(), d.end());
  sort_ranking(d);
  CHECK(d[0].index == 0);
  CHECK(d[1].index == 1);
  CHECK(d[2].index == 2);
}

TEST_CASE("ranking is a total order on random sets") {
  Rng rng(11);
  std::vector<RankedPose> v;
  for (int i = 0; i < 200; ++i)
    v.push_back(synthetic(i, std::round(rng.uniform(0.0, 0.1) * 100) / 100, rng.bernoulli(0.5) ? 1.0 : 0.0,
                          std::round(rng.uniform(-1.0, 1.0) * 10) / 10));
  v = scored(v, RankWeights{});
  auto shuffled = v;
  std::reverse(shuffled.begin(), shuffled.end());
  sort_ranking(v);
  sort_ranking(shuffled);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i].index == shuffled[i].index);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const auto &a = v[i - 1], &b = v[i];
    CHECK((a.score < b.score || (a.score == b.score && (a.l_goal < b.l_goal ||
                                                        (a.l_goal == b.l_goal && a.index < b.index)))));
  }
}

TEST_CASE("feasibility of reach and table") {
  const ObjectModel box = load_object(shipped_object("low_box"));
  const PushTrial trial = make_trial(box, Vec3::UnitX());
  const WorkspaceModel ws;
  std::string why;
  HandPose ok = flat_palm(box, 0.005);
  CHECK(check_feasibility(ok, trial, ws, rig().hand, &why));
  CHECK(why.empty());

  HandPose far = ok;
  far.wrist.translation = ws.base + Vec3(0.0, ws.r_max + 0.1, 0.1);
  CHECK_FALSE(check_feasibility(far, trial, ws, rig().hand, &why));
  CHECK(why.find("reach") != std::string::npos);

  HandPose near = ok;
  near.wrist.translation = ws.base + Vec3(0.05, 0.0, 0.1);
  CHECK_FALSE(check_feasibility(near, trial, ws, rig().hand));

  HandPose low = flat_palm(box, 0.005, -0.012);  // lowest point 10 mm under the table
  CHECK_FALSE(check_feasibility(low, trial, ws, rig().hand, &why));
  CHECK(why.find("table") != std::string::npos);
  HandPose touching = flat_palm(box, 0.005, -0.0025);  // 0.5 mm under, within tolerance
  CHECK(check_feasibility(touching, trial, ws, rig().hand));

  // A push whose end leaves the annulus.
  const PushTrial away = make_trial(box, Vec3::UnitX(), 1.5);
  CHECK_FALSE(check_feasibility(ok, away, ws, rig().hand, &why));
  CHECK(why.find("end") != std::string::npos);
}

TEST_CASE("rank_and_select drops infeasible candidates and prefers the push that arrives") {
  const ObjectModel box = load_object(shipped_object("low_box"));
  const PushTrial trial = make_trial(box, Vec3::UnitX());
  HandPose unreachable = flat_palm(box, 0.005);
  unreachable.wrist.translation.y() += 1.5;
  const std::vector<HandPose> cands{flat_palm(box, 0.1), flat_palm(box, 0.005), flat_palm(box, 0.005, -0.02),
                                    unreachable};
  const Ranking r = rank_and_select(cands, trial, box, rig().hand, WorkspaceModel{}, SimConfig{}, RankWeights{});
  REQUIRE(r.ranked.size() == 2);
  CHECK(r.best().index == 1);
  CHECK(r.best().outcome.success);
  CHECK(r.ranked[1].index == 0);
  CHECK(r.ranked[1].l_goal == doctest::Approx(0.1).epsilon(0.1));
  REQUIRE(r.dropped.size() == 2);
  CHECK(r.dropped[0].index == 2);
  CHECK(r.dropped[1].index == 3);

  const Ranking r2 = rank_and_select(cands, trial, box, rig().hand, WorkspaceModel{}, SimConfig{}, RankWeights{}, 3);
  REQUIRE(r2.ranked.size() == r.ranked.size());
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    CHECK(r2.ranked[i].index == r.ranked[i].index);
    CHECK(r2.ranked[i].score == r.ranked[i].score);
  }
  CHECK_THROWS(rank_and_select({}, trial, box, rig().hand, WorkspaceModel{}, SimConfig{}, RankWeights{}));
}

TEST_CASE("segment distance") {
  CHECK(segment_distance(Vec2(0, 0), Vec2(1, 0), Vec2(0.5, 0.3)) == doctest::Approx(0.3));
  CHECK(segment_distance(Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)) == doctest::Approx(1.0));
  CHECK(segment_distance(Vec2(0, 0), Vec2(0, 0), Vec2(0, 2)) == doctest::Approx(2.0));
  CHECK_FALSE(segment_clear(Vec2(-1, 0), Vec2(1, 0), {Disc{Vec2(0, 0.1), 0.2}}));
  CHECK(segment_clear(Vec2(-1, 0), Vec2(1, 0), {Disc{Vec2(0, 0.3), 0.2}}));
}

TEST_CASE("rrt* approaches the straight line without obstacles") {
  const Vec2 s(-0.3, 0.0), g(0.3, 0.0);
  const PathPlan p = rrt_star(s, g, {}, PlanarBounds{}, RrtConfig{}, 1);
  REQUIRE(p.found);
  CHECK(p.cost <= 0.6 * 1.01);
  CHECK(p.waypoints.front() == s);
  CHECK(p.waypoints.back() == g);
  double sum = 0.0;
  for (double c : p.edge_costs) sum += c;
  CHECK(sum == doctest::Approx(p.cost));
  for (double c : p.edge_costs) CHECK(c <= RrtConfig{}.step + 1e-12);
}

TEST_CASE("rrt* keeps the full disc clearance") {
  const std::vector<Disc> obs{Disc{Vec2(0, 0), 0.2}};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PathPlan p = rrt_star(Vec2(-0.3, 0), Vec2(0.3, 0), obs, PlanarBounds{}, RrtConfig{}, seed);
    REQUIRE(p.found);
    for (std::size_t i = 1; i < p.waypoints.size(); ++i)
      CHECK(segment_distance(p.waypoints[i - 1], p.waypoints[i], obs[0].center) >= 0.2);
    // Around a disc of radius 0.2: two tangents plus an arc is about 0.82.
    CHECK(p.cost < 0.95);
  }
}

TEST_CASE("rrt* reports no path when the goal is walled in") {
  std::vector<Disc> ring;
  for (int k = 0; k < 12; ++k) {
    const double a = 2.0 * M_PI * k / 12;
    ring.push_back(Disc{Vec2(0.5 + 0.3 * std::cos(a), 0.5 + 0.3 * std::sin(a)), 0.1});
  }
  const PathPlan p = rrt_star(Vec2(-0.5, -0.5), Vec2(0.5, 0.5), ring, PlanarBounds{}, RrtConfig{}, 3);
  CHECK_FALSE(p.found);
  CHECK(p.waypoints.empty());
  CHECK_THROWS(rrt_star(Vec2(0, 0), Vec2(0.5, 0.5), {Disc{Vec2(0, 0.05), 0.2}}, PlanarBounds{}, RrtConfig{}, 0));
  CHECK_THROWS(rrt_star(Vec2(0, 0), Vec2(2.0, 0.0), {}, PlanarBounds{}, RrtConfig{}, 0));
}

TEST_CASE("rrt* best cost does not increase with iterations") {
  const std::vector<Disc> obs{Disc{Vec2(0, 0), 0.2}};
  double prev = std::numeric_limits<double>::infinity();
  for (int iters : {500, 1000, 2000, 4000}) {
    RrtConfig cfg;
    cfg.iterations = iters;
    const PathPlan p = rrt_star(Vec2(-0.3, 0), Vec2(0.3, 0), obs, PlanarBounds{}, cfg, 9);
    if (!p.found) continue;
    CHECK(p.cost <= prev + 1e-12);
    prev = p.cost;
  }
  CHECK(std::isfinite(prev));
}

TEST_CASE("direction frame maps the push onto +x") {
  const Vec3 u = Vec3(1, 1, 0).normalized();
  const Transform3 f = direction_frame(u);
  CHECK((f.rotation * u).isApprox(Vec3::UnitX()));
  HandPose p;
  p.theta = Eigen::VectorXd::Zero(16);
  p.wrist.translation = Vec3(1, 2, 3);
  const HandPose q = transform_pose(f.inverse(), transform_pose(f, p));
  CHECK(q.wrist.translation.isApprox(p.wrist.translation));
  CHECK_THROWS(direction_frame(Vec3(0, 0, 1)));
}

TEST_CASE("a straight 0.4 m route is pushed in two 0.2 m steps") {
  const ObjectModel box = load_object(shipped_object("low_box"));
  const Vec2 start = box.center().head<2>();
  const CandidateSource source = [](const ObjectModel& canonical, int) {
    return std::vector<HandPose>{flat_palm(canonical, 0.005)};
  };
  MultiStepConfig cfg;
  cfg.rrt.step = 0.5;  // the whole route is one edge
  cfg.max_corrections = 0;
  const MultiStepPlan plan = multi_step_plan(box, start, start + Vec2(0.4, 0.0), {}, source, rig().hand, cfg, 0);
  REQUIRE(plan.status == MultiStepPlan::Status::complete);
  REQUIRE(plan.pushes.size() == 2);
  for (const auto& s : plan.pushes) CHECK(s.length <= 0.2 + 1e-12);
  CHECK((plan.final_position - (start + Vec2(0.4, 0.0))).norm() < 0.05);
}

TEST_CASE("an empty candidate bank stops the plan at the first edge") {
  const ObjectModel box = load_object(shipped_object("low_box"));
  const Vec2 start = box.center().head<2>();
  const CandidateSource none = [](const ObjectModel&, int) { return std::vector<HandPose>{}; };
  const MultiStepPlan plan = multi_step_plan(box, start, start + Vec2(0.4, 0.0), {}, none, rig().hand, {}, 0);
  CHECK(plan.status == MultiStepPlan::Status::partial);
  CHECK(plan.blocking_edge == 0);
  CHECK(plan.pushes.empty());
  CHECK(std::string(to_string(plan.status)) == "partial");
  CHECK_THROWS(multi_step_plan(box, start + Vec2(0.1, 0.0), Vec2(0.5, 0.0), {}, none, rig().hand, {}, 0));
}

TEST_CASE("multi-step plan around a disc") {
  const ObjectModel box = moved_object(load_object(shipped_object("low_box")), translation(-0.3, 0.0));
  const CandidateSource source = [](const ObjectModel& canonical, int) {
    return std::vector<HandPose>{flat_palm(canonical, 0.005), flat_palm(canonical, 0.01)};
  };
  const std::vector<Disc> obs{Disc{Vec2(0, 0), 0.2}};
  MultiStepConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const MultiStepPlan plan = multi_step_plan(box, box.center().head<2>(), Vec2(0.3, 0.0), obs, source, rig().hand,
                                             cfg, 4);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(plan.status == MultiStepPlan::Status::complete);
  for (std::size_t i = 1; i < plan.path.waypoints.size(); ++i)
    CHECK(segment_distance(plan.path.waypoints[i - 1], plan.path.waypoints[i], obs[0].center) >= 0.2);
  for (const auto& s : plan.pushes) CHECK(s.length <= 0.2 + 1e-12);
  CHECK((plan.final_position - Vec2(0.3, 0.0)).norm() <= 0.05);
  MESSAGE("pushes " << plan.pushes.size() << ", final error " << (plan.final_position - Vec2(0.3, 0.0)).norm()
                    << " m, " << secs << " s");
}

TEST_CASE("obstacle files") {
  const std::string path = "planner_obstacles_test.txt";
  {
    std::ofstream os(path);
    os << "# x y radius\n0 0\n0.5 -0.2 0.1  # small\n\n";
  }
  const auto obs = load_obstacles(path);
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].radius == 0.2);
  CHECK(obs[1].center.isApprox(Vec2(0.5, -0.2)));
  CHECK(obs[1].radius == 0.1);
  {
    std::ofstream os(path);
    os << "0 0 -1\n";
  }
  CHECK_THROWS(load_obstacles(path));
  {
    std::ofstream os(path);
    os << "0 zero\n";
  }
  CHECK_THROWS(load_obstacles(path));
  std::remove(path.c_str());
  CHECK_THROWS(load_obstacles("/nonexistent/obstacles.txt"));
}
