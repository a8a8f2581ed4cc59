#pragma once

#include "dexpush/energy.hpp"
#include "dexpush/hand_model.hpp"
#include "dexpush/object_model.hpp"
#include "dexpush/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dexpush {

struct OptimizerConfig {
  double switch_possibility = 0.5;
  double mu = 0.98;
  double step_size = 0.005;
  int stepsize_period = 50;
  double starting_temp = 18.0;
  int annealing_period = 30;
  double temp_decay = 0.95;
  int iterations = 2000;
  int restarts = 16;
  int contacts = 8;            // selected contact points per chain
  std::string profile = "allegro";
  std::uint64_t candidate_seed = 0;
  double surface_density = 20000.0;  // hand samples per m^2 for the penetration terms
  double standoff = 0.05;      // init: gap added to the object bounding radius
  double init_jitter_deg = 30.0;
  double fd_step = 1e-4;       // translation and rotation columns
  double fd_step_joint = 1e-3;
  int jobs = 1;

  static OptimizerConfig from_config(const KeyValueConfig& cfg);
  static OptimizerConfig load(const std::string& path);
  KeyValueConfig to_config() const;
  /// Throws on out-of-range values.
  void validate() const;
};

/// eta = step_size / 2^floor(iteration / stepsize_period).
double step_size_at(const OptimizerConfig& cfg, int iteration);
/// T = starting_temp * temp_decay^floor(iteration / annealing_period).
double temperature_at(const OptimizerConfig& cfg, int iteration);

struct AnnealState {
  HandPose pose;
  ContactSelection selection;
  EnergyBreakdown energy;
  double temperature = 18.0;
  Eigen::VectorXd accumulator;  // RMSProp second moment over the pose encoding
  int iteration = 0;
  Rng rng{0};
};

struct InitialGuess {
  HandPose pose;
  ContactSelection selection;
};

/// Wrist on the far side of the object from u_dir, palm roughly facing u_dir.
InitialGuess init_pose(const ObjectModel& obj, const HandKinematics& hand, std::size_t n_candidates, const Vec3& u_dir,
                       const OptimizerConfig& cfg, std::uint64_t seed);

/// Central differences of the total energy over the pose encoding.
Eigen::VectorXd energy_gradient(const HandPose& pose, const ContactSelection& selection, const EnergyScene& scene,
                                const EnergyWeights& weights, const OptimizerConfig& cfg);

/// Updates the accumulator and returns the proposal. A non-finite gradient
/// leaves the state untouched and yields no proposal.
std::optional<HandPose> rmsprop_step(AnnealState& state, const Eigen::VectorXd& grad, const OptimizerConfig& cfg);

/// Metropolis test at the state's temperature.
bool anneal_accept(const AnnealState& state, double proposal_energy, Rng& rng);
/// Sets the temperature for the state's iteration counter.
void update_temperature(AnnealState& state, const OptimizerConfig& cfg);

/// Each index switches with probability switch_possibility to a candidate not
/// in the current or the original selection.
ContactSelection resample_contacts(const ContactSelection& selection, std::size_t n_candidates,
                                   double switch_possibility, Rng& rng);

struct ChainResult {
  HandPose pose;                 // best visited state
  ContactSelection selection;
  EnergyBreakdown energy;
  EnergyBreakdown initial_energy;
  int accepted = 0;
  std::uint64_t seed = 0;
};

/// Everything a chain needs that does not depend on the seed.
struct OptimizerSetup {
  std::shared_ptr<const HandKinematics> hand;
  EnergyScene scene;
};

OptimizerSetup make_optimizer_setup(const ObjectModel& obj, std::shared_ptr<const HandKinematics> hand,
                                    const Vec3& u_dir, const OptimizerConfig& cfg);

ChainResult run_chain(const ObjectModel& obj, const OptimizerSetup& setup, const OptimizerConfig& cfg,
                      const EnergyWeights& weights, std::uint64_t chain_seed);

/// `restarts` independent chains, seeds derived from (seed, chain index).
/// Output is ordered by chain and does not depend on cfg.jobs.
std::vector<ChainResult> optimize(const ObjectModel& obj, std::shared_ptr<const HandKinematics> hand,
                                  const Vec3& u_dir, const OptimizerConfig& cfg, const EnergyWeights& weights,
                                  std::uint64_t seed);

}  // namespace dexpush
