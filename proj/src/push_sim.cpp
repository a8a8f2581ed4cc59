#include "dexpush/push_sim.hpp"

#include "dexpush/parallel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dexpush {

namespace {

struct Contact {
  Vec3 point;
  Vec3 normal;  // outward object normal, world
  double depth;
};

void collect_contacts(const PointCloud& pts, const ObjectModel& obj, const Transform3& motion,
                      std::vector<Contact>& out) {
  out.clear();
  const Transform3 inv = motion.inverse();
  const Aabb& box = obj.bounds();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec3 p = pts.row(i).transpose();
    const Vec3 q = inv(p);
    if (!box.contains(q)) continue;
    const SignedDistance sd = obj.query->signed_distance(q);
    if (sd.distance >= 0.0) continue;
    out.push_back({p, motion.rotation * sd.gradient, -sd.distance});
  }
}

double yaw_of(const Mat3& r) { return std::atan2(r(1, 0), r(0, 0)); }

// Distance from c along unit direction d to the boundary of a convex CCW polygon.
double exit_distance(const std::vector<Vec2>& poly, const Vec2& c, const Vec2& d) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const Vec2 e = b - a;
    const Vec2 n(e.y(), -e.x());
    const double nd = n.dot(d);
    if (nd <= 0.0) continue;
    const double t = n.dot(a - c) / nd;
    best = std::min(best, std::max(t, 0.0));
  }
  return std::isfinite(best) ? best : 0.0;
}

}  // namespace

PushTrial make_trial(const ObjectModel& obj, const Vec3& u_dir, double push_length) {
  if (std::abs(u_dir.z()) > 1e-12 || u_dir.norm() < 1e-12)
    throw std::invalid_argument("push direction must be horizontal and nonzero");
  if (!(push_length > 0.0)) throw std::invalid_argument("push length must be positive");
  PushTrial t;
  t.u_dir = u_dir.normalized();
  t.push_length = push_length;
  t.u_targ = obj.center() + push_length * t.u_dir;
  return t;
}

PushHand make_push_hand(std::shared_ptr<const HandKinematics> kin, const SimConfig& cfg) {
  PushHand hand;
  hand.surface = sample_hand_surface_by_area(*kin, cfg.point_density, cfg.min_points_per_link, cfg.surface_seed);
  hand.kin = std::move(kin);
  return hand;
}

bool evaluate_success(double position_error, double yaw_change_deg, bool toppled, const SimConfig& cfg) {
  return !toppled && position_error <= cfg.max_position_error && yaw_change_deg <= cfg.max_yaw_deg;
}

double max_penetration(const PushHand& hand, const HandPose& pose, const ObjectModel& obj) {
  std::vector<Contact> contacts;
  collect_contacts(world_points(hand.surface, hand.kin->forward_kinematics(pose)), obj, Transform3::identity(),
                   contacts);
  double d = 0.0;
  for (const auto& c : contacts) d = std::max(d, c.depth);
  return d;
}

SimOutcome simulate_push(const PushHand& hand, const HandPose& pose, const ObjectModel& obj, const PushTrial& trial,
                         const SimConfig& cfg) {
  if (!(cfg.step > 0.0 && cfg.step <= 0.005)) throw std::invalid_argument("simulate_push: step must lie in (0, 5 mm]");
  const PointCloud start = world_points(hand.surface, hand.kin->forward_kinematics(pose));

  std::vector<Contact> contacts;
  collect_contacts(start, obj, Transform3::identity(), contacts);
  double initial_depth = 0.0;
  for (const auto& c : contacts) initial_depth = std::max(initial_depth, c.depth);
  if (initial_depth > cfg.max_initial_penetration)
    throw std::runtime_error("simulate_push: hand starts " + std::to_string(initial_depth * 1000.0) +
                             " mm inside object '" + obj.id + "' (limit " +
                             std::to_string(cfg.max_initial_penetration * 1000.0) + " mm)");

  SimOutcome out;
  out.table_contact = start.col(2).minCoeff() < cfg.table_z - cfg.table_tol;

  const Vec3 u = trial.u_dir.normalized();
  const int n_inc = std::max(1, int(std::ceil(trial.push_length / cfg.step - 1e-9)));
  const double inc = trial.push_length / n_inc;
  const double c2 = obj.dynamics.pressure_radius * obj.dynamics.pressure_radius;
  const double mu = obj.dynamics.support_friction;

  Transform3 motion = Transform3::identity();
  int first_contact = -1, empty_after_contact = 0;

  for (int k = 1; k <= n_inc; ++k) {
    const Vec3 offset = (k * inc) * u;
    const PointCloud pts = (start.rowwise() + offset.transpose()).eval();
    ++out.increments;

    double moved = 0.0;
    bool touched = false;
    for (int iter = 0; iter < cfg.max_resolve_iterations; ++iter) {
      collect_contacts(pts, obj, motion, contacts);
      if (contacts.empty()) break;
      const Vec3 com = motion(obj.dynamics.com);

      Vec2 f = Vec2::Zero();
      double tau = 0.0, depth_max = 0.0, zsum = 0.0, wsum = 0.0;
      std::size_t deepest = 0;
      for (std::size_t i = 0; i < contacts.size(); ++i) {
        const Contact& c = contacts[i];
        const Vec2 fi = -c.depth * c.normal.head<2>();
        const Vec2 r = (c.point - com).head<2>();
        f += fi;
        tau += r.x() * fi.y() - r.y() * fi.x();
        zsum += c.depth * c.point.z();
        wsum += c.depth;
        if (c.depth > depth_max) {
          depth_max = c.depth;
          deepest = i;
        }
      }

      if (iter == 0) {
        touched = true;
        // Tipping about the leading support edge.
        if (f.norm() > 1e-15 && wsum > 0.0) {
          const double h_c = zsum / wsum - cfg.table_z;
          std::vector<Vec2> poly;
          for (const Vec2& p : obj.dynamics.support_polygon) poly.push_back((motion(Vec3(p.x(), p.y(), 0.0))).head<2>());
          const double d_edge = exit_distance(poly, com.head<2>(), f.normalized());
          if (mu * h_c > d_edge) out.toppled = true;
        }
      }
      if (out.toppled || depth_max <= cfg.penetration_tol) break;

      const Vec2 v = f;
      const double w = tau / c2;
      const Contact& d = contacts[deepest];
      const Vec2 r = (d.point - com).head<2>();
      const Vec2 disp = v + w * Vec2(-r.y(), r.x());
      const double rate = -d.normal.head<2>().dot(disp);
      if (rate <= 1e-15 || v.norm() <= 1e-15) break;
      double lambda = depth_max / rate;
      const double cap = 1.5 * inc - moved;
      bool capped = false;
      if (lambda * v.norm() > cap) {
        lambda = std::max(cap, 0.0) / v.norm();
        capped = true;
      }
      const Transform3 step{rotation_z(lambda * w), com + lambda * Vec3(v.x(), v.y(), 0.0) -
                                                       rotation_z(lambda * w) * com};
      motion = step * motion;
      moved += lambda * v.norm();
      if (capped) break;
    }
    out.max_increment_displacement = std::max(out.max_increment_displacement, moved);
    if (touched) {
      ++out.contact_increments;
      if (first_contact < 0) first_contact = k;
    } else if (first_contact >= 0) {
      ++empty_after_contact;
    }
    if (out.toppled) break;
  }

  if (first_contact >= 0) {
    const int after = out.increments - first_contact + 1;
    out.lost_contact = empty_after_contact > cfg.lost_contact_fraction * after;
  }
  out.final_pose = motion;
  out.final_center = motion(obj.dynamics.com);
  out.position_error = (out.final_center - trial.u_targ).norm();
  out.yaw_change = std::abs(yaw_of(motion.rotation)) * 180.0 / std::numbers::pi;
  out.success = evaluate_success(out.position_error, out.yaw_change, out.toppled, cfg);
  return out;
}

bool settle_pose(const PushHand& hand, HandPose& pose, const ObjectModel& obj, const Vec3& u_dir, const SimConfig& cfg,
                 double* retreat) {
  const Vec3 u = u_dir.normalized();
  const HandPose original = pose;
  const Eigen::VectorXd open =
      Eigen::VectorXd::Zero(pose.theta.size()).cwiseMax(hand.kin->lower_limits()).cwiseMin(hand.kin->upper_limits());
  // Back off along -u first; if that is not enough, open the fingers in quarters.
  for (double blend : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    pose.theta = (1.0 - blend) * original.theta + blend * open;
    for (double back = 0.0; back <= cfg.max_retreat + 1e-12; back += cfg.retreat_step) {
      pose.wrist.translation = original.wrist.translation - back * u;
      if (max_penetration(hand, pose, obj) <= cfg.max_initial_penetration) {
        if (retreat) *retreat = back;
        return true;
      }
    }
  }
  pose = original;
  return false;
}

std::vector<HandPose> augment_pose(const HandPose& pose, int count, std::uint64_t index_offset,
                                   const AugmentBounds& bounds, const HandKinematics* limits) {
  const int dof = int(pose.theta.size());
  const double max_angle = bounds.rotation_deg * std::numbers::pi / 180.0;
  std::vector<HandPose> out;
  for (int k = 0; k < count; ++k) {
    const Eigen::VectorXd h = (2.0 * halton(index_offset + std::uint64_t(k) + 1, 6 + dof).array() - 1.0).matrix();
    Vec3 rv = max_angle * h.head<3>();
    if (rv.norm() > max_angle) rv *= max_angle / rv.norm();
    HandPose p = pose;
    if (rv.norm() > 0.0) p.wrist.rotation = rotation_about(rv.normalized(), rv.norm()) * pose.wrist.rotation;
    p.wrist.translation += bounds.translation * h.segment<3>(3);
    p.theta += bounds.joint * h.tail(dof);
    if (limits) p.theta = p.theta.cwiseMax(limits->lower_limits()).cwiseMin(limits->upper_limits());
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

DatasetRecord run_record(const PushHand& hand, const HandPose& pose, const EnergyBreakdown& energy,
                         const ObjectModel& obj, const PushTrial& trial, const SimConfig& cfg) {
  DatasetRecord rec;
  rec.object_id = obj.id;
  rec.u_dir = trial.u_dir;
  rec.pose = pose;
  rec.energy = energy;
  try {
    if (!settle_pose(hand, rec.pose, obj, trial.u_dir, cfg, &rec.retreat))
      throw std::runtime_error("hand penetrates the object beyond the retreat limit");
    rec.outcome = simulate_push(hand, rec.pose, obj, trial, cfg);
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.outcome = SimOutcome{};
    rec.outcome.position_error = (obj.center() - trial.u_targ).norm();
  }
  return rec;
}

}  // namespace

std::vector<DatasetRecord> validate_batch(const std::vector<CandidatePose>& poses, const PushHand& hand,
                                          const ObjectModel& obj, const PushTrial& trial, const ValidateConfig& cfg) {
  std::vector<DatasetRecord> first(poses.size());
  parallel_for(poses.size(), cfg.jobs, [&](std::size_t i) {
    first[i] = run_record(hand, poses[i].pose, poses[i].energy, obj, trial, cfg.sim);
    first[i].source = int(i);
  });

  std::vector<std::pair<std::size_t, HandPose>> extra;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (!first[i].outcome.success) continue;
    for (HandPose& p : augment_pose(first[i].pose, cfg.augment_count, std::uint64_t(i) * std::uint64_t(cfg.augment_count),
                                    cfg.bounds, hand.kin.get()))
      extra.emplace_back(i, std::move(p));
  }
  std::vector<DatasetRecord> aug(extra.size());
  parallel_for(extra.size(), cfg.jobs, [&](std::size_t j) {
    const std::size_t src = extra[j].first;
    aug[j] = run_record(hand, extra[j].second, poses[src].energy, obj, trial, cfg.sim);
    aug[j].source = int(src);
    aug[j].augmented = true;
  });

  std::vector<DatasetRecord> out;
  out.reserve(first.size() + aug.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    out.push_back(std::move(first[i]));
    while (j < aug.size() && std::size_t(aug[j].source) == i) out.push_back(std::move(aug[j++]));
  }
  return out;
}

}  // namespace dexpush
