#pragma once

#include "dexpush/distance_query.hpp"
#include "dexpush/geometry.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace dexpush {

/// Joint configuration plus wrist (palm) transform.
struct HandPose {
  Eigen::VectorXd theta;
  Transform3 wrist;
};

struct HandLink {
  std::string name;
  TriangleMesh mesh;  // link frame
  std::shared_ptr<const DistanceQuery> query;
  int parent_joint = -1;
  bool is_tip = false;
  Vec3 tip_center = Vec3::Zero();  // hemisphere base center, link frame
  Vec3 tip_axis = Vec3::UnitZ();   // dome direction, link frame
  double tip_radius = 0.0;
  // Self-collision proxy.
  Vec3 sphere_center = Vec3::Zero();
  double sphere_radius = 0.0;
};

struct HandJoint {
  std::string name;
  int parent = -1;
  int child = -1;
  Transform3 origin;  // child frame at zero angle, expressed in the parent frame
  Vec3 axis = Vec3::UnitZ();
  double lower = 0.0;
  double upper = 0.0;
  int dof = -1;  // index into theta, -1 for fixed joints
};

/// Kinematic tree of a multi-finger hand rooted at the palm. Loaded from a
/// line-oriented description:
///
///   hand  name=allegro
///   palm  link=palm normal=1,0,0
///   link  name=palm shape=box center=0,0,0.0475 half=0.0125,0.045,0.0475
///   link  name=tip_1 shape=hemisphere radius=0.012
///   link  name=base shape=mesh file=base.obj scale=0.001
///   joint name=joint_0 parent=palm child=link_0 xyz=... rpy=... axis=... lower=... upper=...
///   joint name=tip_1_mount type=fixed parent=link_3 child=tip_1 xyz=...
///   sphere link=palm center=... radius=...
///
/// Revolute joints get consecutive dof indices in file order.
class HandKinematics {
 public:
  static HandKinematics parse(std::istream& in, const std::string& base_dir = ".", const std::string& source = "<hand>");
  static HandKinematics load(const std::string& path);

  const std::string& name() const { return name_; }
  const std::vector<HandLink>& links() const { return links_; }
  const std::vector<HandJoint>& joints() const { return joints_; }
  int dof() const { return dof_; }
  int palm_link() const { return palm_; }
  const Vec3& palm_normal_local() const { return palm_normal_local_; }
  /// Throws on an unknown name.
  int link_index(const std::string& name) const;
  int link_index_or(const std::string& name) const;
  bool adjacent(int link_a, int link_b) const;

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;

  /// Link transforms indexed like links(). Throws on a theta size mismatch.
  std::vector<Transform3> forward_kinematics(const HandPose& pose) const;

 private:
  std::string name_;
  std::vector<HandLink> links_;
  std::vector<HandJoint> joints_;  // topological order
  int dof_ = 0;
  int palm_ = -1;
  Vec3 palm_normal_local_ = Vec3::UnitX();
};

/// World-frame palm normal: wrist rotation applied to the local palm normal.
Vec3 palm_normal(const HandKinematics& kin, const HandPose& pose);

struct ContactCandidate {
  int link = -1;
  Vec3 point = Vec3::Zero();   // link frame
  Vec3 normal = Vec3::UnitZ(); // link frame, outward
};

struct ContactCandidateSet {
  std::string profile;
  std::vector<ContactCandidate> candidates;
  std::map<std::string, int> per_link;

  std::size_t size() const { return candidates.size(); }
};

struct ContactSelection {
  std::vector<int> indices;
};

/// Per-link candidate counts. Links absent from the map get none.
struct ContactProfile {
  std::string name;
  std::map<std::string, int> counts;
};

/// Built-in profiles: "allegro", "leap". Throws on an unknown name.
ContactProfile contact_profile(const std::string& name);

/// Fingertips: directions drawn uniformly on the hemisphere around the tip
/// axis, projected to the tip surface. Other links: area-uniform surface
/// samples.
ContactCandidateSet generate_contact_candidates(const HandKinematics& kin, const ContactProfile& profile,
                                                std::uint64_t seed);
ContactCandidateSet generate_contact_candidates(const HandKinematics& kin, const std::string& profile,
                                                std::uint64_t seed);

constexpr int kRotationBlock = 6;

/// [translation(3), first two rotation columns(6), theta(dof)].
Eigen::VectorXd encode_pose(const HandPose& pose);
/// Gram-Schmidt on the rotation block. Throws when the two columns are
/// near-parallel (cross-norm < 1e-8) or a column is near zero.
HandPose decode_pose(const Eigen::Ref<const Eigen::VectorXd>& v);
Mat3 rotation_from_6d(const Eigen::Ref<const Eigen::VectorXd>& six);

/// Fixed link-frame samples over every link surface, n_per_link each.
struct HandSurface {
  std::vector<int> link;
  PointCloud local;

  Eigen::Index size() const { return local.rows(); }
};

HandSurface sample_hand_surface(const HandKinematics& kin, int n_per_link, std::uint64_t seed);
/// Area-proportional samples (points per m^2, at least min_per_link per link)
/// plus the mesh vertices of non-tip links.
HandSurface sample_hand_surface_by_area(const HandKinematics& kin, double density, int min_per_link, std::uint64_t seed);
PointCloud world_points(const HandSurface& surface, const std::vector<Transform3>& link_transforms);
PointCloud hand_surface_points(const HandKinematics& kin, const HandPose& pose, int n_per_link,
                               std::uint64_t seed = 0);

/// Path of a shipped hand description, e.g. shipped_hand("allegro").
std::string shipped_hand(const std::string& name);
std::string data_path(const std::string& relative);

}  // namespace dexpush
