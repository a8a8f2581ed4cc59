#include "dexpush/energy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dexpush {

EnergyWeights EnergyWeights::from_config(const KeyValueConfig& cfg) {
  EnergyWeights w;
  w.w_fc = cfg.get_double("w_fc", w.w_fc);
  w.w_dis = cfg.get_double("w_dis", w.w_dis);
  w.w_pen = cfg.get_double("w_pen", w.w_pen);
  w.w_spen = cfg.get_double("w_spen", w.w_spen);
  w.w_tpen = cfg.get_double("w_tpen", w.w_tpen);
  w.w_joints = cfg.get_double("w_joints", w.w_joints);
  w.w_dir = cfg.get_double("w_direction", cfg.get_double("w_dir", w.w_dir));
  w.w_arm = cfg.get_double("w_kinematics", cfg.get_double("w_arm", w.w_arm));
  w.w_ff = cfg.get_double("w_ff", w.w_ff);
  w.w_fp = cfg.get_double("w_fp", w.w_fp);
  w.validate();
  return w;
}

EnergyWeights EnergyWeights::load(const std::string& path) { return from_config(KeyValueConfig::load(path)); }

KeyValueConfig EnergyWeights::to_config() const {
  KeyValueConfig cfg;
  auto put = [&cfg](const char* k, double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    cfg.set(k, s.str());
  };
  put("w_fc", w_fc);
  put("w_dis", w_dis);
  put("w_pen", w_pen);
  put("w_spen", w_spen);
  put("w_joints", w_joints);
  put("w_ff", w_ff);
  put("w_fp", w_fp);
  put("w_tpen", w_tpen);
  put("w_direction", w_dir);
  put("w_kinematics", w_arm);
  return cfg;
}

void EnergyWeights::validate() const {
  for (double v : {w_fc, w_dis, w_pen, w_spen, w_tpen, w_joints, w_dir, w_arm, w_ff, w_fp})
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("energy weights must be finite and >= 0");
}

EnergyWeights EnergyWeights::zero() {
  EnergyWeights w;
  w.w_fc = w.w_dis = w.w_pen = w.w_spen = w.w_tpen = w.w_joints = w.w_dir = w.w_arm = w.w_ff = w.w_fp = 0.0;
  return w;
}

Eigen::Matrix<double, 8, 1> EnergyBreakdown::components() const {
  Eigen::Matrix<double, 8, 1> c;
  c << e_fc, e_dis, e_joint, e_pen_obj, e_pen_table, e_pen_self, e_dir, e_arm;
  return c;
}

double weighted_total(const EnergyBreakdown& e, const EnergyWeights& w) {
  return w.w_fc * e.e_fc + w.w_dis * e.e_dis + w.w_joints * e.e_joint + w.w_pen * e.e_pen_obj +
         w.w_tpen * e.e_pen_table + w.w_spen * e.e_pen_self + w.w_dir * e.e_dir + w.w_arm * e.e_arm;
}

double e_dir(const Vec3& u_dir, const Vec3& v_palm) {
  const double nu = u_dir.norm(), nv = v_palm.norm();
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("e_dir: zero vector");
  return std::clamp(-u_dir.dot(v_palm) / (nu * nv), -1.0, 1.0);
}

double e_arm(const Vec3& v_palm) { return std::max(0.0, v_palm.z()); }

double e_dis(const PointCloud& contacts, const DistanceQuery& object) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < contacts.rows(); ++i) sum += object.closest_point(contacts.row(i).transpose()).distance;
  return sum;
}

double e_joint(const Eigen::VectorXd& theta, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  return ((theta - upper).cwiseMax(0.0) + (lower - theta).cwiseMax(0.0)).sum();
}

PenetrationTerms e_pen(const PointCloud& hand_points, const DistanceQuery& object, double table_z,
                       const std::vector<CollisionSphere>& spheres, const std::vector<std::pair<int, int>>& pairs) {
  PenetrationTerms out;
  const Aabb& box = object.bounds();
  for (Eigen::Index i = 0; i < hand_points.rows(); ++i) {
    const Vec3 p = hand_points.row(i).transpose();
    out.table += std::max(0.0, table_z - p.z());
    // Points outside the bounding box cannot be inside the object.
    if (box.contains(p)) out.object += std::max(0.0, -object.signed_distance(p).distance);
  }
  for (const auto& [a, b] : pairs) {
    const auto &sa = spheres[std::size_t(a)], &sb = spheres[std::size_t(b)];
    out.self += std::max(0.0, sa.radius + sb.radius - (sa.center - sb.center).norm());
  }
  return out;
}

double e_fc(const PointCloud& points, const PointCloud& normals) {
  if (points.rows() < 2 || normals.rows() != points.rows())
    throw std::invalid_argument("e_fc: needs at least two contacts with matching normals");
  const Vec3 centroid = points.colwise().mean().transpose();
  Vec3 force = Vec3::Zero(), torque = Vec3::Zero();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vec3 n = normals.row(i).transpose();
    force += n;
    torque += (points.row(i).transpose() - centroid).cross(n);
  }
  return std::sqrt(force.squaredNorm() + torque.squaredNorm());
}

std::vector<std::pair<int, int>> self_collision_pairs(const HandKinematics& kin) {
  std::vector<std::pair<int, int>> pairs;
  const int n = int(kin.links().size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (!kin.adjacent(a, b)) pairs.emplace_back(a, b);
  return pairs;
}

EnergyScene make_energy_scene(std::shared_ptr<const HandKinematics> hand,
                              std::shared_ptr<const ContactCandidateSet> candidates,
                              std::shared_ptr<const HandSurface> surface,
                              std::shared_ptr<const DistanceQuery> object, const Vec3& u_dir, double table_z) {
  EnergyScene s;
  s.self_pairs = self_collision_pairs(*hand);
  s.hand = std::move(hand);
  s.candidates = std::move(candidates);
  s.surface = std::move(surface);
  s.object = std::move(object);
  s.u_dir = u_dir;
  s.table_z = table_z;
  return s;
}

ContactGeometry contact_geometry(const std::vector<Transform3>& link_transforms, const ContactSelection& selection,
                                 const EnergyScene& scene) {
  const auto k = Eigen::Index(selection.indices.size());
  ContactGeometry g;
  g.points.resize(k, 3);
  g.inward_normals.resize(k, 3);
  g.signed_distance.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const ContactCandidate& c = scene.candidates->candidates.at(std::size_t(selection.indices[std::size_t(i)]));
    const Vec3 p = link_transforms[std::size_t(c.link)](c.point);
    const SignedDistance sd = scene.object->signed_distance(p);
    g.points.row(i) = p.transpose();
    g.inward_normals.row(i) = -sd.gradient.transpose();
    g.signed_distance[i] = sd.distance;
  }
  return g;
}

EnergyBreakdown total_energy(const HandPose& pose, const ContactSelection& selection, const EnergyScene& scene,
                             const EnergyWeights& weights) {
  const HandKinematics& kin = *scene.hand;
  const std::vector<Transform3> links = kin.forward_kinematics(pose);

  EnergyBreakdown e;
  const ContactGeometry contacts = contact_geometry(links, selection, scene);
  e.e_dis = contacts.signed_distance.cwiseAbs().sum();
  if (contacts.points.rows() >= 2) e.e_fc = e_fc(contacts.points, contacts.inward_normals);

  e.e_joint = e_joint(pose.theta, kin.lower_limits(), kin.upper_limits());

  std::vector<CollisionSphere> spheres(kin.links().size());
  for (std::size_t l = 0; l < spheres.size(); ++l)
    spheres[l] = {links[l](kin.links()[l].sphere_center), kin.links()[l].sphere_radius};
  const PenetrationTerms pen =
      e_pen(world_points(*scene.surface, links), *scene.object, scene.table_z, spheres, scene.self_pairs);
  e.e_pen_obj = pen.object;
  e.e_pen_table = pen.table;
  e.e_pen_self = pen.self;

  const Vec3 v_palm = palm_normal(kin, pose);
  e.e_dir = e_dir(scene.u_dir, v_palm);
  e.e_arm = e_arm(v_palm);
  e.total = weighted_total(e, weights);
  return e;
}

}  // namespace dexpush
