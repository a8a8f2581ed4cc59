#pragma once

#include "dexpush/kv_config.hpp"
#include "dexpush/push_sim.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dexpush {

struct RankWeights {
  double alpha = 5.0;  // goal error (m)
  double beta = 1.0;   // table contact or topple
  double gamma = 0.5;  // e_dir, negative when aligned

  static RankWeights from_config(const KeyValueConfig& cfg);
  /// Throws unless all three are finite and > 0.
  void validate() const;
};

struct RankedPose {
  int index = -1;  // position in the candidate list
  HandPose pose;   // as scored (after settling)
  bool feasible = false;
  std::string reason;  // why a candidate was dropped
  double l_goal = 0.0;
  double l_coll = 0.0;
  double l_dir = 0.0;
  double score = 0.0;
  double retreat = 0.0;
  SimOutcome outcome;
};

/// V = alpha l_goal + beta l_coll + gamma l_dir.
double rank_score(double l_goal, double l_coll, double l_dir, const RankWeights& w);

/// Stand-in for arm motion planning: reach annulus about the arm base and the table.
struct WorkspaceModel {
  Vec3 base = Vec3(-0.75, 0.0, 0.0);
  double r_min = 0.20;
  double r_max = 1.10;
  double table_z = 0.0;
  double table_tol = 1e-3;  // hand points may sit this far below the table
  double clearance = 0.0;   // margin kept from both annulus radii

  static WorkspaceModel from_config(const KeyValueConfig& cfg);
  void validate() const;
};

/// Wrist start and end within the annulus, the straight wrist path inside it,
/// and no hand surface point below the table. `reason` says which test failed.
bool check_feasibility(const HandPose& pose, const PushTrial& trial, const WorkspaceModel& ws, const PushHand& hand,
                       std::string* reason = nullptr);

/// Simulates the push and fills the three rank terms. Simulation errors propagate.
RankedPose score_pose(const HandPose& pose, const PushTrial& trial, const ObjectModel& obj, const PushHand& hand,
                      const SimConfig& sim, const RankWeights& weights);

struct Ranking {
  std::vector<RankedPose> ranked;   // feasible candidates, best first
  std::vector<RankedPose> dropped;  // infeasible or unsimulatable, input order
  bool empty() const { return ranked.empty(); }
  const RankedPose& best() const { return ranked.front(); }
};

/// Orders V ascending, then l_goal, then input index.
void sort_ranking(std::vector<RankedPose>& ranked);

/// Settles each candidate (retreat along -u), checks feasibility, scores the
/// rest and sorts them. Throws on an empty candidate list.
Ranking rank_and_select(const std::vector<HandPose>& candidates, const PushTrial& trial, const ObjectModel& obj,
                        const PushHand& hand, const WorkspaceModel& ws, const SimConfig& sim,
                        const RankWeights& weights, int jobs = 1);

struct Disc {
  Vec2 center = Vec2::Zero();
  double radius = 0.20;
};

struct PlanarBounds {
  Vec2 lo = Vec2(-1.0, -1.0);
  Vec2 hi = Vec2(1.0, 1.0);
};

struct RrtConfig {
  int iterations = 5000;
  double step = 0.20;        // steering distance
  double goal_bias = 0.05;
  double rewire_gamma = 1.0;  // multiple of the smallest asymptotically optimal constant; radius capped at step
};

struct PathPlan {
  bool found = false;
  std::vector<Vec2> waypoints;
  std::vector<double> edge_costs;
  double cost = 0.0;  // path length
  std::vector<Disc> obstacles;
  int tree_size = 0;
};

/// Distance from p to segment ab.
double segment_distance(const Vec2& a, const Vec2& b, const Vec2& p);
bool segment_clear(const Vec2& a, const Vec2& b, const std::vector<Disc>& obstacles);

/// RRT* with the standard shrinking rewiring radius. Deterministic per seed.
/// Throws if start or goal lies inside an obstacle or outside the bounds.
PathPlan rrt_star(const Vec2& start, const Vec2& goal, const std::vector<Disc>& obstacles, const PlanarBounds& bounds,
                  const RrtConfig& cfg, std::uint64_t seed);

/// Rotation about z taking u_dir onto +x: the direction frame poses are generated in.
Transform3 direction_frame(const Vec3& u_dir);
HandPose transform_pose(const Transform3& t, const HandPose& pose);

/// Candidate poses for one push, expressed in the direction frame of
/// `canonical` (object at the origin, push along +x).
using CandidateSource = std::function<std::vector<HandPose>(const ObjectModel& canonical, int edge)>;

struct PushStep {
  int edge = 0;  // path edge this push belongs to
  Vec2 from = Vec2::Zero();
  Vec2 to = Vec2::Zero();
  Vec3 u_dir = Vec3::UnitX();
  double length = 0.0;
  RankedPose selected;
  Vec2 object_after = Vec2::Zero();
};

struct MultiStepPlan {
  enum class Status { complete, partial, no_path };
  Status status = Status::no_path;
  PathPlan path;
  std::vector<PushStep> pushes;
  int blocking_edge = -1;
  Vec2 final_position = Vec2::Zero();
  Transform3 final_motion;  // object motion from its start placement
};

const char* to_string(MultiStepPlan::Status s);

struct MultiStepConfig {
  double max_push = 0.20;
  double goal_tolerance = 0.02;  // extra pushes at the goal until within this
  int max_corrections = 3;
  RrtConfig rrt;
  PlanarBounds bounds;
  WorkspaceModel workspace;
  SimConfig sim;
  RankWeights weights;
  int jobs = 1;
};

/// Plans an obstacle-free route for the object center, then pushes along it.
/// Each push aims from the object's simulated position at the next waypoint
/// and is at most max_push long. Once the route is done, up to
/// max_corrections straight pushes move the object toward the goal while it is
/// further than goal_tolerance and the way is clear. `obj` sits at its start
/// placement with its center over `start`.
MultiStepPlan multi_step_plan(const ObjectModel& obj, const Vec2& start, const Vec2& goal,
                              const std::vector<Disc>& obstacles, const CandidateSource& source, const PushHand& hand,
                              const MultiStepConfig& cfg, std::uint64_t seed);

/// Obstacle file: one "x y [radius]" per line, '#' comments.
std::vector<Disc> load_obstacles(const std::string& path);

}  // namespace dexpush
