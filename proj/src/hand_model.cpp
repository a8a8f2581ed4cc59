#include "dexpush/hand_model.hpp"

#include "dexpush/kv_config.hpp"
#include "dexpush/mesh_io.hpp"
#include "dexpush/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dexpush {

namespace {

Mat3 rpy_matrix(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

void default_sphere(HandLink& link) {
  if (link.is_tip) {
    link.sphere_center = link.tip_center;
    link.sphere_radius = link.tip_radius;
    return;
  }
  const Aabb box = bounds(link.mesh);
  link.sphere_center = box.center();
  const Vec3 half = 0.5 * box.extent();
  // Thickness of the two smallest half extents.
  std::array<double, 3> h{half.x(), half.y(), half.z()};
  std::sort(h.begin(), h.end());
  link.sphere_radius = h[0];
}

}  // namespace

std::string data_path(const std::string& relative) {
  if (const char* env = std::getenv("DEXPUSH_DATA_DIR")) return std::string(env) + "/" + relative;
  return std::string(DEXPUSH_DATA_DIR) + "/" + relative;
}

std::string shipped_hand(const std::string& name) { return data_path("hands/" + name + ".hand"); }

HandKinematics HandKinematics::parse(std::istream& in, const std::string& base_dir, const std::string& source) {
  HandKinematics kin;
  const auto records = parse_records(in, source);
  std::string palm_name;
  std::vector<Record> joint_records, sphere_records;
  auto fail = [&](const Record& r, const std::string& msg) {
    throw std::runtime_error(source + ":" + std::to_string(r.line) + ": " + msg);
  };

  for (const auto& r : records) {
    if (r.kind == "hand") {
      kin.name_ = r.has("name") ? r.get("name") : "";
    } else if (r.kind == "palm") {
      palm_name = r.get("link");
      const Vec3 n = r.get_vec3("normal");
      if (n.norm() < 1e-12) fail(r, "palm normal must be nonzero");
      kin.palm_normal_local_ = n.normalized();
    } else if (r.kind == "link") {
      HandLink link;
      link.name = r.get("name");
      const std::string shape = r.get("shape");
      if (shape == "box") {
        link.mesh = make_box(r.get_vec3("half"), r.get_vec3("center", Vec3::Zero()));
      } else if (shape == "hemisphere") {
        link.is_tip = true;
        link.tip_radius = r.get_double("radius");
        link.mesh = make_hemisphere(link.tip_radius, r.get_int("rings", 8), r.get_int("segments", 16));
      } else if (shape == "mesh") {
        link.mesh = load_obj((std::filesystem::path(base_dir) / r.get("file")).string(), r.get_double("scale", 1.0));
      } else {
        fail(r, "unknown link shape '" + shape + "'");
      }
      if (kin.link_index_or(link.name) >= 0) fail(r, "duplicate link '" + link.name + "'");
      link.query = std::make_shared<const DistanceQuery>(link.mesh);
      default_sphere(link);
      kin.links_.push_back(std::move(link));
    } else if (r.kind == "joint") {
      joint_records.push_back(r);
    } else if (r.kind == "sphere") {
      sphere_records.push_back(r);
    } else {
      fail(r, "unknown record '" + r.kind + "'");
    }
  }
  if (kin.links_.empty()) throw std::runtime_error(source + ": no links");
  if (palm_name.empty()) throw std::runtime_error(source + ": missing palm record");
  kin.palm_ = kin.link_index(palm_name);

  std::vector<HandJoint> pending;
  for (const auto& r : joint_records) {
    HandJoint j;
    j.name = r.get("name");
    j.parent = kin.link_index_or(r.get("parent"));
    j.child = kin.link_index_or(r.get("child"));
    if (j.parent < 0 || j.child < 0) fail(r, "joint references an unknown link");
    j.origin.translation = r.get_vec3("xyz", Vec3::Zero());
    j.origin.rotation = rpy_matrix(r.get_vec3("rpy", Vec3::Zero()));
    const std::string type = r.has("type") ? r.get("type") : "revolute";
    if (type == "revolute") {
      const Vec3 axis = r.get_vec3("axis");
      if (axis.norm() < 1e-12) fail(r, "joint axis must be nonzero");
      j.axis = axis.normalized();
      j.lower = r.get_double("lower");
      j.upper = r.get_double("upper");
      if (!(j.lower < j.upper)) fail(r, "joint limits need lower < upper");
      j.dof = kin.dof_++;
    } else if (type != "fixed") {
      fail(r, "unknown joint type '" + type + "'");
    }
    if (kin.links_[std::size_t(j.child)].parent_joint >= 0) fail(r, "link '" + r.get("child") + "' has two parents");
    if (j.child == kin.palm_) fail(r, "the palm must be the root");
    kin.links_[std::size_t(j.child)].parent_joint = int(pending.size());
    pending.push_back(j);
  }

  // Topological order from the palm; every non-palm link must be reached.
  std::vector<bool> placed(kin.links_.size(), false);
  placed[std::size_t(kin.palm_)] = true;
  std::vector<bool> used(pending.size(), false);
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (used[i] || !placed[std::size_t(pending[i].parent)]) continue;
      used[i] = true;
      placed[std::size_t(pending[i].child)] = true;
      kin.joints_.push_back(pending[i]);
      progress = true;
    }
  }
  for (std::size_t l = 0; l < placed.size(); ++l)
    if (!placed[l]) throw std::runtime_error(source + ": link '" + kin.links_[l].name + "' is not connected to the palm");
  for (std::size_t i = 0; i < kin.joints_.size(); ++i)
    kin.links_[std::size_t(kin.joints_[i].child)].parent_joint = int(i);

  for (const auto& r : sphere_records) {
    const int l = kin.link_index_or(r.get("link"));
    if (l < 0) fail(r, "sphere references an unknown link");
    kin.links_[std::size_t(l)].sphere_center = r.get_vec3("center");
    kin.links_[std::size_t(l)].sphere_radius = r.get_double("radius");
  }
  return kin;
}

HandKinematics HandKinematics::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hand description: " + path);
  return parse(in, std::filesystem::path(path).parent_path().string(), path);
}

int HandKinematics::link_index_or(const std::string& name) const {
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (links_[i].name == name) return int(i);
  return -1;
}

int HandKinematics::link_index(const std::string& name) const {
  const int i = link_index_or(name);
  if (i < 0) throw std::runtime_error("unknown hand link '" + name + "'");
  return i;
}

bool HandKinematics::adjacent(int a, int b) const {
  if (a == b) return true;
  const int ja = links_[std::size_t(a)].parent_joint, jb = links_[std::size_t(b)].parent_joint;
  return (ja >= 0 && joints_[std::size_t(ja)].parent == b) || (jb >= 0 && joints_[std::size_t(jb)].parent == a);
}

Eigen::VectorXd HandKinematics::lower_limits() const {
  Eigen::VectorXd out(dof_);
  for (const auto& j : joints_)
    if (j.dof >= 0) out[j.dof] = j.lower;
  return out;
}

Eigen::VectorXd HandKinematics::upper_limits() const {
  Eigen::VectorXd out(dof_);
  for (const auto& j : joints_)
    if (j.dof >= 0) out[j.dof] = j.upper;
  return out;
}

std::vector<Transform3> HandKinematics::forward_kinematics(const HandPose& pose) const {
  if (pose.theta.size() != dof_)
    throw std::invalid_argument("forward_kinematics: theta has " + std::to_string(pose.theta.size()) +
                                " entries, hand has " + std::to_string(dof_) + " dof");
  std::vector<Transform3> out(links_.size());
  out[std::size_t(palm_)] = pose.wrist;
  for (const auto& j : joints_) {
    Transform3 local = j.origin;
    if (j.dof >= 0) local.rotation = j.origin.rotation * rotation_about(j.axis, pose.theta[j.dof]);
    out[std::size_t(j.child)] = out[std::size_t(j.parent)] * local;
  }
  return out;
}

Vec3 palm_normal(const HandKinematics& kin, const HandPose& pose) {
  return (pose.wrist.rotation * kin.palm_normal_local()).normalized();
}

ContactProfile contact_profile(const std::string& name) {
  ContactProfile p;
  p.name = name;
  if (name == "allegro") {
    for (const char* tip : {"tip_1", "tip_2", "tip_3", "tip_4"}) p.counts[tip] = 96;
    for (int l : {1, 2, 3, 5, 6, 7, 9, 10, 11, 14, 15}) p.counts["link_" + std::to_string(l)] = 16;
    p.counts["palm"] = 128;
  } else if (name == "leap") {
    for (const char* tip : {"tip_1", "tip_2", "tip_3", "thumb_tip"}) p.counts[tip] = 24;
    for (int f = 1; f <= 3; ++f) {
      p.counts["mcp_joint_" + std::to_string(f)] = 16;
      p.counts["dip_" + std::to_string(f)] = 16;
      p.counts["pip_" + std::to_string(f)] = 4;
    }
    p.counts["thumb_pip"] = 16;
    p.counts["thumb_dip"] = 16;
    p.counts["palm"] = 128;
  } else {
    throw std::invalid_argument("unknown contact profile '" + name + "' (expected allegro or leap)");
  }
  return p;
}

ContactCandidateSet generate_contact_candidates(const HandKinematics& kin, const ContactProfile& profile,
                                                std::uint64_t seed) {
  ContactCandidateSet out;
  out.profile = profile.name;
  // Iterate links in kinematic order so output order does not depend on map order.
  for (std::size_t l = 0; l < kin.links().size(); ++l) {
    const HandLink& link = kin.links()[l];
    auto it = profile.counts.find(link.name);
    if (it == profile.counts.end()) continue;
    const int count = it->second;
    const std::uint64_t link_seed = derive_seed(seed, link.name);
    if (link.is_tip) {
      Rng rng(link_seed);
      const Mat3 frame = rotation_between(Vec3::UnitZ(), link.tip_axis);
      for (int i = 0; i < count; ++i) {
        Vec3 d = rng.unit_vector();
        if (d.z() < 0.0) d.z() = -d.z();
        const Vec3 on_sphere = link.tip_center + link.tip_radius * (frame * d);
        const ClosestPoint cp = link.query->closest_point(on_sphere);
        out.candidates.push_back({int(l), cp.point, link.query->triangle_normal(cp.triangle)});
      }
    } else {
      const SurfaceSamples s = sample_surface_with_faces(link.mesh, count, link_seed);
      for (int i = 0; i < count; ++i)
        out.candidates.push_back({int(l), s.points.row(i).transpose(), link.query->triangle_normal(s.triangles[std::size_t(i)])});
    }
    out.per_link[link.name] = count;
  }
  for (const auto& [name, count] : profile.counts)
    if (out.per_link.count(name) == 0)
      throw std::runtime_error("contact profile '" + profile.name + "' names link '" + name + "' missing from hand '" +
                               kin.name() + "'");
  return out;
}

ContactCandidateSet generate_contact_candidates(const HandKinematics& kin, const std::string& profile,
                                                std::uint64_t seed) {
  return generate_contact_candidates(kin, contact_profile(profile), seed);
}

Mat3 rotation_from_6d(const Eigen::Ref<const Eigen::VectorXd>& six) {
  const Vec3 a1 = six.segment<3>(0), a2 = six.segment<3>(3);
  const double n1 = a1.norm();
  if (n1 < 1e-8 || a1.cross(a2).norm() < 1e-8 * n1)
    throw std::invalid_argument("decode_pose: rotation columns are degenerate or near-parallel");
  const Vec3 b1 = a1 / n1;
  const Vec3 b2 = (a2 - b1.dot(a2) * b1).normalized();
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

Eigen::VectorXd encode_pose(const HandPose& pose) {
  Eigen::VectorXd v(3 + kRotationBlock + pose.theta.size());
  v.segment<3>(0) = pose.wrist.translation;
  v.segment<3>(3) = pose.wrist.rotation.col(0);
  v.segment<3>(6) = pose.wrist.rotation.col(1);
  v.tail(pose.theta.size()) = pose.theta;
  return v;
}

HandPose decode_pose(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() < 9) throw std::invalid_argument("decode_pose: vector shorter than 9");
  if (!v.allFinite()) throw std::invalid_argument("decode_pose: non-finite entries");
  HandPose pose;
  pose.wrist.translation = v.segment<3>(0);
  pose.wrist.rotation = rotation_from_6d(v.segment<6>(3));
  pose.theta = v.tail(v.size() - 9);
  return pose;
}

HandSurface sample_hand_surface(const HandKinematics& kin, int n_per_link, std::uint64_t seed) {
  if (n_per_link < 1) throw std::invalid_argument("sample_hand_surface: n_per_link must be >= 1");
  HandSurface s;
  const auto n_links = Eigen::Index(kin.links().size());
  s.local.resize(n_links * n_per_link, 3);
  s.link.resize(std::size_t(n_links * n_per_link));
  for (Eigen::Index l = 0; l < n_links; ++l) {
    const auto& link = kin.links()[std::size_t(l)];
    s.local.middleRows(l * n_per_link, n_per_link) = sample_surface(link.mesh, n_per_link, derive_seed(seed, link.name));
    std::fill_n(s.link.begin() + l * n_per_link, n_per_link, int(l));
  }
  return s;
}

HandSurface sample_hand_surface_by_area(const HandKinematics& kin, double density, int min_per_link, std::uint64_t seed) {
  if (!(density > 0.0) || min_per_link < 1) throw std::invalid_argument("sample_hand_surface_by_area: bad density");
  HandSurface s;
  std::vector<PointCloud> parts;
  Eigen::Index total = 0;
  for (const auto& link : kin.links()) {
    const int n = std::max(min_per_link, int(std::ceil(surface_area(link.mesh) * density)));
    PointCloud part = sample_surface(link.mesh, n, derive_seed(seed, link.name));
    // Corners catch edge contacts the random samples miss.
    if (!link.is_tip) {
      part.conservativeResize(part.rows() + link.mesh.num_vertices(), 3);
      part.bottomRows(link.mesh.num_vertices()) = link.mesh.vertices;
    }
    total += part.rows();
    parts.push_back(std::move(part));
  }
  s.local.resize(total, 3);
  Eigen::Index row = 0;
  for (std::size_t l = 0; l < parts.size(); ++l) {
    s.local.middleRows(row, parts[l].rows()) = parts[l];
    s.link.insert(s.link.end(), std::size_t(parts[l].rows()), int(l));
    row += parts[l].rows();
  }
  return s;
}

PointCloud world_points(const HandSurface& surface, const std::vector<Transform3>& link_transforms) {
  PointCloud out(surface.size(), 3);
  for (Eigen::Index i = 0; i < surface.size(); ++i) {
    const Transform3& t = link_transforms[std::size_t(surface.link[std::size_t(i)])];
    out.row(i) = (t.rotation * surface.local.row(i).transpose() + t.translation).transpose();
  }
  return out;
}

PointCloud hand_surface_points(const HandKinematics& kin, const HandPose& pose, int n_per_link, std::uint64_t seed) {
  return world_points(sample_hand_surface(kin, n_per_link, seed), kin.forward_kinematics(pose));
}

}  // namespace dexpush
