#pragma once

#include "dexpush/distance_query.hpp"
#include "dexpush/hand_model.hpp"
#include "dexpush/kv_config.hpp"
#include "dexpush/object_model.hpp"

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace dexpush {

/// Energy weights. w_ff and w_fp are read and written but no energy term uses them.
struct EnergyWeights {
  double w_fc = 0.5;
  double w_dis = 500.0;
  double w_pen = 300.0;
  double w_spen = 100.0;
  double w_tpen = 100.0;
  double w_joints = 1.0;
  double w_dir = 200.0;
  double w_arm = 100.0;
  double w_ff = 3.0;
  double w_fp = 0.0;

  /// Keys as in the weights file: w_fc, w_dis, w_pen, w_spen, w_joints, w_ff,
  /// w_fp, w_tpen, w_direction (or w_dir), w_kinematics (or w_arm).
  static EnergyWeights from_config(const KeyValueConfig& cfg);
  static EnergyWeights load(const std::string& path);
  KeyValueConfig to_config() const;
  /// Throws unless every weight is finite and >= 0.
  void validate() const;
  static EnergyWeights zero();
};

struct EnergyBreakdown {
  double e_fc = 0.0;
  double e_dis = 0.0;
  double e_joint = 0.0;
  double e_pen_obj = 0.0;
  double e_pen_table = 0.0;
  double e_pen_self = 0.0;
  double e_dir = 0.0;
  double e_arm = 0.0;
  double total = 0.0;

  static constexpr std::array<const char*, 8> kNames = {"e_fc",        "e_dis",      "e_joint", "e_pen_obj",
                                                        "e_pen_table", "e_pen_self", "e_dir",   "e_arm"};
  Eigen::Matrix<double, 8, 1> components() const;
};

double weighted_total(const EnergyBreakdown& e, const EnergyWeights& w);

/// -cos of the angle between the vectors. Throws on a zero vector.
double e_dir(const Vec3& u_dir, const Vec3& v_palm);
/// max(0, z-component).
double e_arm(const Vec3& v_palm);
/// Sum of |signed distance| of the contact points to the object.
double e_dis(const PointCloud& contacts, const DistanceQuery& object);
/// L1 hinge on joint-limit violation.
double e_joint(const Eigen::VectorXd& theta, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

struct CollisionSphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

struct PenetrationTerms {
  double object = 0.0;
  double table = 0.0;
  double self = 0.0;
};

/// Object: sum of max(0, -sdf); table: sum of max(0, table_z - z); self: sum
/// over the listed sphere pairs of max(0, r_i + r_j - |c_i - c_j|).
PenetrationTerms e_pen(const PointCloud& hand_points, const DistanceQuery& object, double table_z,
                       const std::vector<CollisionSphere>& spheres, const std::vector<std::pair<int, int>>& pairs);

/// ||G c|| with G = [I; skew(x_i - centroid)] blocks and c the stacked contact normals.
/// Throws with fewer than two contacts.
double e_fc(const PointCloud& contact_points, const PointCloud& contact_normals);

/// Non-adjacent link pairs for the self-collision term.
std::vector<std::pair<int, int>> self_collision_pairs(const HandKinematics& kin);

/// Everything the energy needs besides the pose and contact selection.
struct EnergyScene {
  std::shared_ptr<const HandKinematics> hand;
  std::shared_ptr<const ContactCandidateSet> candidates;
  std::shared_ptr<const HandSurface> surface;
  std::shared_ptr<const DistanceQuery> object;
  double table_z = 0.0;
  Vec3 u_dir = Vec3::UnitX();
  std::vector<std::pair<int, int>> self_pairs;
};

EnergyScene make_energy_scene(std::shared_ptr<const HandKinematics> hand,
                              std::shared_ptr<const ContactCandidateSet> candidates,
                              std::shared_ptr<const HandSurface> surface,
                              std::shared_ptr<const DistanceQuery> object, const Vec3& u_dir, double table_z = 0.0);

/// World-frame contact points and inward object normals at their nearest surface points.
struct ContactGeometry {
  PointCloud points;
  PointCloud inward_normals;
  Eigen::VectorXd signed_distance;
};

ContactGeometry contact_geometry(const std::vector<Transform3>& link_transforms, const ContactSelection& selection,
                                 const EnergyScene& scene);

EnergyBreakdown total_energy(const HandPose& pose, const ContactSelection& selection, const EnergyScene& scene,
                             const EnergyWeights& weights);

}  // namespace dexpush
