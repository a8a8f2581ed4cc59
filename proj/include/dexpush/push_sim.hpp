#pragma once

#include "dexpush/energy.hpp"
#include "dexpush/hand_model.hpp"
#include "dexpush/object_model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace dexpush {

struct PushTrial {
  Vec3 u_dir = Vec3::UnitX();  // horizontal unit vector
  double push_length = 0.20;
  Vec3 u_targ = Vec3::Zero();
};

/// Target = object center + push_length * u_dir. Throws unless u_dir is horizontal and nonzero.
PushTrial make_trial(const ObjectModel& obj, const Vec3& u_dir, double push_length = 0.20);

struct SimConfig {
  double step = 0.002;
  double point_density = 40000.0;  // hand surface samples per m^2
  int min_points_per_link = 16;
  std::uint64_t surface_seed = 0;
  double penetration_tol = 1e-4;
  double max_initial_penetration = 1e-3;
  double table_z = 0.0;
  double table_tol = 1e-3;
  double lost_contact_fraction = 0.25;
  int max_resolve_iterations = 40;
  // Pre-contact settling used by validate_batch.
  double max_retreat = 0.03;
  double retreat_step = 5e-4;
  // Success thresholds.
  double max_position_error = 0.03;
  double max_yaw_deg = 45.0;
};

/// Hand kinematics plus the link-frame point set the simulator collides.
struct PushHand {
  std::shared_ptr<const HandKinematics> kin;
  HandSurface surface;
};

PushHand make_push_hand(std::shared_ptr<const HandKinematics> kin, const SimConfig& cfg);

struct SimOutcome {
  Transform3 final_pose;  // object motion from its initial placement
  Vec3 final_center = Vec3::Zero();
  double position_error = 0.0;
  double yaw_change = 0.0;  // degrees, absolute
  bool toppled = false;
  bool lost_contact = false;
  bool table_contact = false;
  bool success = false;
  int increments = 0;
  int contact_increments = 0;
  double max_increment_displacement = 0.0;
};

/// Inclusive thresholds: error <= 0.03 m, yaw <= 45 deg, not toppled.
bool evaluate_success(double position_error, double yaw_change_deg, bool toppled, const SimConfig& cfg = {});

/// Deepest hand point inside the object (0 when none).
double max_penetration(const PushHand& hand, const HandPose& pose, const ObjectModel& obj);

/// Quasi-static planar push. The hand translates rigidly along u_dir; every
/// increment the object takes the twist (f_x, f_y, tau / c^2) of the
/// depth-weighted contact wrench, scaled until penetration is resolved.
/// Throws on a step outside (0, 5 mm] or initial penetration deeper than 1 mm.
SimOutcome simulate_push(const PushHand& hand, const HandPose& pose, const ObjectModel& obj, const PushTrial& trial,
                         const SimConfig& cfg = {});

/// Moves the hand back along -u_dir (up to max_retreat) until penetration is
/// within the simulator's limit, opening the fingers toward zero in quarter
/// steps when retreat alone is not enough. Returns false if nothing works.
bool settle_pose(const PushHand& hand, HandPose& pose, const ObjectModel& obj, const Vec3& u_dir, const SimConfig& cfg,
                 double* retreat = nullptr);

/// Halton perturbations: rotation vector norm <= 2.5 deg, translation
/// components <= 5 mm, joints <= 0.05 rad (clamped to limits when given).
struct AugmentBounds {
  double rotation_deg = 2.5;
  double translation = 0.005;
  double joint = 0.05;
};

std::vector<HandPose> augment_pose(const HandPose& pose, int count, std::uint64_t index_offset,
                                   const AugmentBounds& bounds = {}, const HandKinematics* limits = nullptr);

struct CandidatePose {
  HandPose pose;
  EnergyBreakdown energy;
};

struct DatasetRecord {
  std::string object_id;
  Vec3 u_dir = Vec3::UnitX();
  HandPose pose;
  EnergyBreakdown energy;
  SimOutcome outcome;
  bool augmented = false;
  int source = -1;  // input index the record derives from
  double retreat = 0.0;
  std::string error;  // non-empty when simulation failed
};

struct ValidateConfig {
  SimConfig sim;
  int augment_count = 10;
  AugmentBounds bounds;
  int jobs = 1;
};

/// Simulates every candidate; each success is augmented and the
/// augmentations simulated as well. Output order follows input order.
std::vector<DatasetRecord> validate_batch(const std::vector<CandidatePose>& poses, const PushHand& hand,
                                          const ObjectModel& obj, const PushTrial& trial, const ValidateConfig& cfg);

}  // namespace dexpush
