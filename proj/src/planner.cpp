#include "dexpush/planner.hpp"

#include "dexpush/parallel.hpp"
#include "dexpush/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dexpush {

RankWeights RankWeights::from_config(const KeyValueConfig& cfg) {
  RankWeights w;
  w.alpha = cfg.get_double("alpha", w.alpha);
  w.beta = cfg.get_double("beta", w.beta);
  w.gamma = cfg.get_double("gamma", w.gamma);
  w.validate();
  return w;
}

void RankWeights::validate() const {
  for (double v : {alpha, beta, gamma})
    if (!std::isfinite(v) || v <= 0.0) throw std::invalid_argument("rank weights must be finite and > 0");
}

double rank_score(double l_goal, double l_coll, double l_dir, const RankWeights& w) {
  return w.alpha * l_goal + w.beta * l_coll + w.gamma * l_dir;
}

WorkspaceModel WorkspaceModel::from_config(const KeyValueConfig& cfg) {
  WorkspaceModel ws;
  if (cfg.has("base")) {
    const auto b = cfg.get_doubles("base");
    if (b.size() != 3) throw std::invalid_argument("workspace: base needs three numbers");
    ws.base = Vec3(b[0], b[1], b[2]);
  }
  ws.r_min = cfg.get_double("r_min", ws.r_min);
  ws.r_max = cfg.get_double("r_max", ws.r_max);
  ws.table_z = cfg.get_double("table_z", ws.table_z);
  ws.table_tol = cfg.get_double("table_tol", ws.table_tol);
  ws.clearance = cfg.get_double("clearance", ws.clearance);
  ws.validate();
  return ws;
}

void WorkspaceModel::validate() const {
  if (!(r_min > 0.0 && r_min < r_max)) throw std::invalid_argument("workspace: need 0 < r_min < r_max");
  if (!(clearance >= 0.0 && r_min + clearance < r_max - clearance))
    throw std::invalid_argument("workspace: clearance leaves no reachable band");
  if (!(table_tol >= 0.0)) throw std::invalid_argument("workspace: table_tol must be >= 0");
}

bool check_feasibility(const HandPose& pose, const PushTrial& trial, const WorkspaceModel& ws, const PushHand& hand,
                       std::string* reason) {
  auto fail = [reason](const char* why) {
    if (reason) *reason = why;
    return false;
  };
  const double lo = ws.r_min + ws.clearance, hi = ws.r_max - ws.clearance;
  const Vec3 a = pose.wrist.translation;
  const Vec3 b = a + trial.push_length * trial.u_dir.normalized();
  const double ra = (a - ws.base).norm(), rb = (b - ws.base).norm();
  if (ra < lo || ra > hi) return fail("wrist start out of reach");
  if (rb < lo || rb > hi) return fail("wrist end out of reach");
  // The far end of a segment is at an endpoint; only the near side needs the closest point.
  const Vec3 ab = b - a;
  const double s = ab.squaredNorm() > 0.0 ? std::clamp((ws.base - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0) : 0.0;
  if ((a + s * ab - ws.base).norm() < lo) return fail("wrist path passes too close to the base");
  // The push is horizontal, so start and end share the lowest point.
  const PointCloud pts = world_points(hand.surface, hand.kin->forward_kinematics(pose));
  if (pts.col(2).minCoeff() < ws.table_z - ws.table_tol) return fail("hand below the table");
  if (reason) reason->clear();
  return true;
}

RankedPose score_pose(const HandPose& pose, const PushTrial& trial, const ObjectModel& obj, const PushHand& hand,
                      const SimConfig& sim, const RankWeights& weights) {
  RankedPose r;
  r.pose = pose;
  r.outcome = simulate_push(hand, pose, obj, trial, sim);
  r.l_goal = r.outcome.position_error;
  r.l_coll = (r.outcome.table_contact || r.outcome.toppled) ? 1.0 : 0.0;
  r.l_dir = e_dir(trial.u_dir, palm_normal(*hand.kin, pose));
  r.score = rank_score(r.l_goal, r.l_coll, r.l_dir, weights);
  r.feasible = true;
  return r;
}

void sort_ranking(std::vector<RankedPose>& ranked) {
  std::sort(ranked.begin(), ranked.end(), [](const RankedPose& a, const RankedPose& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.l_goal != b.l_goal) return a.l_goal < b.l_goal;
    return a.index < b.index;
  });
}

Ranking rank_and_select(const std::vector<HandPose>& candidates, const PushTrial& trial, const ObjectModel& obj,
                        const PushHand& hand, const WorkspaceModel& ws, const SimConfig& sim,
                        const RankWeights& weights, int jobs) {
  if (candidates.empty()) throw std::invalid_argument("rank_and_select: no candidates");
  weights.validate();
  std::vector<RankedPose> all(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    RankedPose& r = all[i];
    r.index = int(i);
    r.pose = candidates[i];
    if (!r.pose.theta.allFinite() || !r.pose.wrist.translation.allFinite() || !r.pose.wrist.rotation.allFinite()) {
      r.reason = "non-finite pose";
      return;
    }
    if (!settle_pose(hand, r.pose, obj, trial.u_dir, sim, &r.retreat)) {
      r.reason = "penetrates the object beyond the retreat limit";
      return;
    }
    std::string why;
    if (!check_feasibility(r.pose, trial, ws, hand, &why)) {
      r.reason = why;
      return;
    }
    try {
      const double retreat = r.retreat;
      r = score_pose(r.pose, trial, obj, hand, sim, weights);
      r.index = int(i);
      r.retreat = retreat;
    } catch (const std::exception& e) {
      r.feasible = false;
      r.reason = e.what();
    }
  });
  Ranking out;
  for (auto& r : all) (r.feasible ? out.ranked : out.dropped).push_back(std::move(r));
  sort_ranking(out.ranked);
  return out;
}

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + s * ab - p).norm();
}

bool segment_clear(const Vec2& a, const Vec2& b, const std::vector<Disc>& obstacles) {
  for (const Disc& d : obstacles)
    if (segment_distance(a, b, d.center) < d.radius) return false;
  return true;
}

namespace {

bool inside_bounds(const Vec2& p, const PlanarBounds& b) {
  return (p.array() >= b.lo.array()).all() && (p.array() <= b.hi.array()).all();
}

struct Tree {
  std::vector<Vec2> pos;
  std::vector<int> parent;
  std::vector<double> cost;
  std::vector<std::vector<int>> children;

  int add(const Vec2& p, int par, double c) {
    pos.push_back(p);
    parent.push_back(par);
    cost.push_back(c);
    children.emplace_back();
    if (par >= 0) children[std::size_t(par)].push_back(int(pos.size()) - 1);
    return int(pos.size()) - 1;
  }

  void reparent(int node, int par, double c) {
    auto& sib = children[std::size_t(parent[std::size_t(node)])];
    sib.erase(std::find(sib.begin(), sib.end(), node));
    parent[std::size_t(node)] = par;
    children[std::size_t(par)].push_back(node);
    const double delta = c - cost[std::size_t(node)];
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      cost[std::size_t(n)] += delta;
      for (int ch : children[std::size_t(n)]) stack.push_back(ch);
    }
  }
};

}  // namespace

PathPlan rrt_star(const Vec2& start, const Vec2& goal, const std::vector<Disc>& obstacles, const PlanarBounds& bounds,
                  const RrtConfig& cfg, std::uint64_t seed) {
  if (!inside_bounds(start, bounds) || !inside_bounds(goal, bounds))
    throw std::invalid_argument("rrt_star: start or goal outside the planning bounds");
  for (const Disc& d : obstacles) {
    if ((start - d.center).norm() < d.radius) throw std::invalid_argument("rrt_star: start inside an obstacle");
    if ((goal - d.center).norm() < d.radius) throw std::invalid_argument("rrt_star: goal inside an obstacle");
  }
  if (!(cfg.step > 0.0) || cfg.iterations < 0) throw std::invalid_argument("rrt_star: bad configuration");

  // Smallest asymptotically optimal constant for the plane, scaled by rewire_gamma.
  const Vec2 extent = bounds.hi - bounds.lo;
  const double gamma = cfg.rewire_gamma * 2.0 * std::sqrt(1.5) * std::sqrt(extent.x() * extent.y() / std::numbers::pi);

  Rng rng(derive_seed(seed, "rrt"));
  Tree tree;
  tree.add(start, -1, 0.0);
  for (int it = 0; it < cfg.iterations; ++it) {
    Vec2 q = goal;
    if (!rng.bernoulli(cfg.goal_bias)) {
      q.x() = rng.uniform(bounds.lo.x(), bounds.hi.x());
      q.y() = rng.uniform(bounds.lo.y(), bounds.hi.y());
    }
    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tree.pos.size(); ++i) {
      const double d = (tree.pos[i] - q).squaredNorm();
      if (d < best) {
        best = d;
        nearest = int(i);
      }
    }
    const Vec2 from = tree.pos[std::size_t(nearest)];
    const double dist = std::sqrt(best);
    if (dist < 1e-12) continue;
    const Vec2 p = dist > cfg.step ? Vec2(from + (q - from) * (cfg.step / dist)) : q;
    if (!segment_clear(from, p, obstacles)) continue;

    const double n = double(tree.pos.size() + 1);
    const double radius = std::min(gamma * std::sqrt(std::log(n) / n), cfg.step);
    std::vector<int> near;
    for (std::size_t i = 0; i < tree.pos.size(); ++i)
      if ((tree.pos[i] - p).norm() <= radius) near.push_back(int(i));

    int parent = nearest;
    double cost = tree.cost[std::size_t(nearest)] + (p - from).norm();
    for (int m : near) {
      const double c = tree.cost[std::size_t(m)] + (p - tree.pos[std::size_t(m)]).norm();
      if (c < cost && segment_clear(tree.pos[std::size_t(m)], p, obstacles)) {
        cost = c;
        parent = m;
      }
    }
    const int id = tree.add(p, parent, cost);
    for (int m : near) {
      if (m == parent) continue;
      const double c = cost + (p - tree.pos[std::size_t(m)]).norm();
      if (c < tree.cost[std::size_t(m)] - 1e-12 && segment_clear(p, tree.pos[std::size_t(m)], obstacles))
        tree.reparent(m, id, c);
    }
  }

  PathPlan plan;
  plan.obstacles = obstacles;
  plan.tree_size = int(tree.pos.size());
  int end = -1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tree.pos.size(); ++i) {
    const double d = (tree.pos[i] - goal).norm();
    if (d > cfg.step) continue;
    const double c = tree.cost[i] + d;
    if (c < best && segment_clear(tree.pos[i], goal, obstacles)) {
      best = c;
      end = int(i);
    }
  }
  if (end < 0) return plan;
  plan.found = true;
  plan.cost = best;
  for (int v = end; v >= 0; v = tree.parent[std::size_t(v)]) plan.waypoints.push_back(tree.pos[std::size_t(v)]);
  std::reverse(plan.waypoints.begin(), plan.waypoints.end());
  if ((plan.waypoints.back() - goal).norm() > 0.0) plan.waypoints.push_back(goal);
  for (std::size_t i = 1; i < plan.waypoints.size(); ++i)
    plan.edge_costs.push_back((plan.waypoints[i] - plan.waypoints[i - 1]).norm());
  return plan;
}

Transform3 direction_frame(const Vec3& u_dir) {
  if (std::abs(u_dir.z()) > 1e-9 || u_dir.head<2>().norm() < 1e-12)
    throw std::invalid_argument("direction_frame: u_dir must be horizontal and nonzero");
  Transform3 t;
  t.rotation = rotation_z(-std::atan2(u_dir.y(), u_dir.x()));
  return t;
}

HandPose transform_pose(const Transform3& t, const HandPose& pose) {
  HandPose out = pose;
  out.wrist = t * pose.wrist;
  return out;
}

const char* to_string(MultiStepPlan::Status s) {
  switch (s) {
    case MultiStepPlan::Status::complete: return "complete";
    case MultiStepPlan::Status::partial: return "partial";
    case MultiStepPlan::Status::no_path: return "no_path";
  }
  return "unknown";
}

MultiStepPlan multi_step_plan(const ObjectModel& obj, const Vec2& start, const Vec2& goal,
                              const std::vector<Disc>& obstacles, const CandidateSource& source, const PushHand& hand,
                              const MultiStepConfig& cfg, std::uint64_t seed) {
  if (!(cfg.max_push > 0.0)) throw std::invalid_argument("multi_step_plan: max_push must be positive");
  if ((obj.center().head<2>() - start).norm() > 0.01)
    throw std::invalid_argument("multi_step_plan: start must be the object's planar center");
  MultiStepPlan plan;
  plan.path = rrt_star(start, goal, obstacles, cfg.bounds, cfg.rrt, seed);
  plan.final_position = start;
  if (!plan.path.found) return plan;

  const Vec3 reference = obj.center();
  Transform3 motion = Transform3::identity();
  Vec2 p = start;

  // Returns false when no candidate is feasible.
  auto push_toward = [&](const Vec2& target, int edge) {
    const Vec2 d = target - p;
    const double length = std::min(d.norm(), cfg.max_push);
    if (length < 1e-3) return true;
    const Vec3 u(d.x() / d.norm(), d.y() / d.norm(), 0.0);

    const ObjectModel current = moved_object(obj, motion);
    Transform3 frame = direction_frame(u);
    frame.translation = -(frame.rotation * Vec3(p.x(), p.y(), 0.0));
    std::vector<HandPose> candidates;
    if (source) candidates = source(moved_object(obj, frame * motion), edge);
    const Transform3 back = frame.inverse();
    for (auto& c : candidates) c = transform_pose(back, c);

    Ranking ranking;
    if (!candidates.empty())
      ranking = rank_and_select(candidates, make_trial(current, u, length), current, hand, cfg.workspace, cfg.sim,
                                cfg.weights, cfg.jobs);
    if (ranking.empty()) return false;

    PushStep step;
    step.edge = edge;
    step.from = p;
    step.to = p + length * u.head<2>();
    step.u_dir = u;
    step.length = length;
    step.selected = ranking.best();
    motion = step.selected.outcome.final_pose * motion;
    p = motion(reference).head<2>();
    step.object_after = p;
    plan.pushes.push_back(std::move(step));
    return true;
  };
  auto stop = [&](int edge) {
    plan.status = MultiStepPlan::Status::partial;
    plan.blocking_edge = edge;
    plan.final_position = p;
    plan.final_motion = motion;
    return plan;
  };

  const auto& wp = plan.path.waypoints;
  const int last = int(wp.size()) - 2;
  for (int e = 0; e <= last; ++e) {
    const Vec2 a = wp[std::size_t(e)], b = wp[std::size_t(e) + 1];
    const int k = std::max(1, int(std::ceil((b - a).norm() / cfg.max_push - 1e-9)));
    // Each push aims from where the object actually is at the next split point of the edge.
    for (int j = 1; j <= k; ++j)
      if (!push_toward(a + (b - a) * (double(j) / k), e)) return stop(e);
  }
  for (int c = 0; c < cfg.max_corrections && (p - goal).norm() > cfg.goal_tolerance; ++c) {
    if (!segment_clear(p, goal, obstacles)) break;
    if (!push_toward(goal, last)) break;
  }
  plan.status = MultiStepPlan::Status::complete;
  plan.final_position = p;
  plan.final_motion = motion;
  return plan;
}

std::vector<Disc> load_obstacles(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open obstacle file: " + path);
  std::vector<Disc> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (!ss.eof()) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected numbers");
    if (v.empty()) continue;
    if (v.size() != 2 && v.size() != 3)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'x y [radius]'");
    Disc d;
    d.center = Vec2(v[0], v[1]);
    if (v.size() == 3) d.radius = v[2];
    if (!(d.radius > 0.0)) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": radius must be positive");
    out.push_back(d);
  }
  return out;
}

}  // namespace dexpush
