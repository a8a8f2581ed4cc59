#include "dexpush/pose_optimizer.hpp"

#include "dexpush/parallel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dexpush {

OptimizerConfig OptimizerConfig::from_config(const KeyValueConfig& cfg) {
  OptimizerConfig c;
  c.switch_possibility = cfg.get_double("switch_possibility", c.switch_possibility);
  c.mu = cfg.get_double("mu", c.mu);
  c.step_size = cfg.get_double("step_size", c.step_size);
  c.stepsize_period = int(cfg.get_int("stepsize_period", c.stepsize_period));
  c.starting_temp = cfg.get_double("starting_temperature", cfg.get_double("starting_temp", c.starting_temp));
  c.annealing_period = int(cfg.get_int("annealing_period", c.annealing_period));
  c.temp_decay = cfg.get_double("temperature_decay", cfg.get_double("temp_decay", c.temp_decay));
  c.iterations = int(cfg.get_int("iterations", c.iterations));
  c.restarts = int(cfg.get_int("restarts", c.restarts));
  c.contacts = int(cfg.get_int("contacts", c.contacts));
  c.profile = cfg.get_string("profile", c.profile);
  c.candidate_seed = std::uint64_t(cfg.get_int("candidate_seed", 0));
  c.surface_density = cfg.get_double("surface_density", c.surface_density);
  c.standoff = cfg.get_double("standoff", c.standoff);
  c.init_jitter_deg = cfg.get_double("init_jitter_deg", c.init_jitter_deg);
  c.fd_step = cfg.get_double("fd_step", c.fd_step);
  c.fd_step_joint = cfg.get_double("fd_step_joint", c.fd_step_joint);
  c.jobs = int(cfg.get_int("jobs", c.jobs));
  c.validate();
  return c;
}

OptimizerConfig OptimizerConfig::load(const std::string& path) { return from_config(KeyValueConfig::load(path)); }

KeyValueConfig OptimizerConfig::to_config() const {
  KeyValueConfig cfg;
  auto put = [&cfg](const char* k, auto v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    cfg.set(k, s.str());
  };
  put("switch_possibility", switch_possibility);
  put("mu", mu);
  put("step_size", step_size);
  put("stepsize_period", stepsize_period);
  put("starting_temperature", starting_temp);
  put("annealing_period", annealing_period);
  put("temperature_decay", temp_decay);
  put("iterations", iterations);
  put("restarts", restarts);
  put("contacts", contacts);
  put("profile", profile);
  put("candidate_seed", candidate_seed);
  put("surface_density", surface_density);
  put("standoff", standoff);
  put("init_jitter_deg", init_jitter_deg);
  put("fd_step", fd_step);
  put("fd_step_joint", fd_step_joint);
  return cfg;
}

void OptimizerConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("optimizer config: ") + what);
  };
  require(switch_possibility >= 0.0 && switch_possibility <= 1.0, "switch_possibility must lie in [0, 1]");
  require(mu >= 0.0 && mu < 1.0, "mu must lie in [0, 1)");
  require(step_size > 0.0, "step_size must be positive");
  require(stepsize_period > 0 && annealing_period > 0, "periods must be positive");
  require(starting_temp > 0.0, "starting temperature must be positive");
  require(temp_decay > 0.0 && temp_decay <= 1.0, "temperature decay must lie in (0, 1]");
  require(iterations >= 0 && restarts >= 1, "need iterations >= 0 and restarts >= 1");
  require(contacts >= 2, "need at least two contacts");
  require(surface_density > 0.0, "surface_density must be positive");
  require(fd_step > 0.0 && fd_step_joint > 0.0, "finite-difference steps must be positive");
}

double step_size_at(const OptimizerConfig& cfg, int iteration) {
  return std::ldexp(cfg.step_size, -(iteration / cfg.stepsize_period));
}

double temperature_at(const OptimizerConfig& cfg, int iteration) {
  return cfg.starting_temp * std::pow(cfg.temp_decay, iteration / cfg.annealing_period);
}

InitialGuess init_pose(const ObjectModel& obj, const HandKinematics& hand, std::size_t n_candidates, const Vec3& u_dir,
                       const OptimizerConfig& cfg, std::uint64_t seed) {
  if (n_candidates < std::size_t(cfg.contacts)) throw std::invalid_argument("init_pose: fewer candidates than contacts");
  Rng rng(seed);
  const Vec3 u = u_dir.normalized();

  // Palm normal: u tilted by up to the jitter angle about a random perpendicular axis.
  Vec3 axis = u.cross(rng.unit_vector());
  if (axis.norm() < 1e-9) axis = u.unitOrthogonal();
  const double tilt = rng.uniform(0.0, cfg.init_jitter_deg * std::numbers::pi / 180.0);
  const Vec3 n = rotation_about(axis.normalized(), tilt) * u;

  Vec3 up = Vec3::UnitZ() - Vec3::UnitZ().dot(n) * n;
  if (up.norm() < 1e-9) up = n.unitOrthogonal();
  const Vec3 fingers = rotation_about(n, rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2)) * up.normalized();

  const Mat3 local_frame = [&] {
    // Columns: palm normal, finger direction and their completion, in the hand's local axes.
    Mat3 m;
    const Vec3 ln = hand.palm_normal_local();
    const Vec3 lz = (Vec3::UnitZ() - Vec3::UnitZ().dot(ln) * ln).normalized();
    m << ln, lz.cross(ln), lz;
    return m;
  }();
  Mat3 world_frame;
  world_frame << n, fingers.cross(n), fingers;

  InitialGuess g;
  g.pose.wrist.rotation = world_frame * local_frame.transpose();

  const Eigen::VectorXd lo = hand.lower_limits(), hi = hand.upper_limits();
  g.pose.theta.resize(hand.dof());
  for (int k = 0; k < hand.dof(); ++k) g.pose.theta[k] = rng.uniform(lo[k], hi[k]);

  const HandLink& palm = hand.links()[std::size_t(hand.palm_link())];
  const Vec3 palm_center = bounds(palm.mesh).center();
  const Vec3 target = obj.center() - u * (obj.bounding_radius() + cfg.standoff);
  g.pose.wrist.translation = target - g.pose.wrist.rotation * palm_center;

  // Lift so no link vertex starts below the table.
  const auto links = hand.forward_kinematics(g.pose);
  double z_min = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < links.size(); ++l)
    z_min = std::min(z_min, transformed(hand.links()[l].mesh.vertices, links[l]).col(2).minCoeff());
  const double clearance = 0.005;
  if (z_min < clearance) g.pose.wrist.translation.z() += clearance - z_min;

  // Curled fingers can reach into the object; back off along -u until clear.
  const HandSurface probe =
      sample_hand_surface_by_area(hand, cfg.surface_density, 8, derive_seed(cfg.candidate_seed, "surface"));
  auto penetrates = [&] {
    const PointCloud w = world_points(probe, hand.forward_kinematics(g.pose));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const Vec3 p = w.row(i).transpose();
      if (obj.bounds().contains(p) && obj.query->signed_distance(p).distance < 0.0) return true;
    }
    return false;
  };
  for (int k = 0; k < 40 && penetrates(); ++k) g.pose.wrist.translation -= 0.005 * u;

  // Partial Fisher-Yates.
  std::vector<int> pool(n_candidates);
  for (std::size_t i = 0; i < n_candidates; ++i) pool[i] = int(i);
  for (int i = 0; i < cfg.contacts; ++i) {
    const std::size_t j = std::size_t(i) + rng.uniform_index(n_candidates - std::size_t(i));
    std::swap(pool[std::size_t(i)], pool[j]);
    g.selection.indices.push_back(pool[std::size_t(i)]);
  }
  return g;
}

Eigen::VectorXd energy_gradient(const HandPose& pose, const ContactSelection& selection, const EnergyScene& scene,
                                const EnergyWeights& weights, const OptimizerConfig& cfg) {
  const Eigen::VectorXd v = encode_pose(pose);
  Eigen::VectorXd grad(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double h = i < 3 + kRotationBlock ? cfg.fd_step : cfg.fd_step_joint;
    Eigen::VectorXd plus = v, minus = v;
    plus[i] += h;
    minus[i] -= h;
    const double ep = total_energy(decode_pose(plus), selection, scene, weights).total;
    const double em = total_energy(decode_pose(minus), selection, scene, weights).total;
    grad[i] = (ep - em) / (2.0 * h);
  }
  return grad;
}

std::optional<HandPose> rmsprop_step(AnnealState& state, const Eigen::VectorXd& grad, const OptimizerConfig& cfg) {
  if (!grad.allFinite()) return std::nullopt;
  const Eigen::VectorXd v = encode_pose(state.pose);
  if (state.accumulator.size() != v.size()) state.accumulator = Eigen::VectorXd::Zero(v.size());
  state.accumulator = cfg.mu * state.accumulator + (1.0 - cfg.mu) * grad.cwiseAbs2();
  const double eta = step_size_at(cfg, state.iteration);
  const Eigen::VectorXd next = v - eta * (grad.array() / (state.accumulator.array() + 1e-8).sqrt()).matrix();
  try {
    return decode_pose(next);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

bool anneal_accept(const AnnealState& state, double proposal_energy, Rng& rng) {
  const double delta = proposal_energy - state.energy.total;
  if (!std::isfinite(proposal_energy)) return false;
  if (delta <= 0.0) return true;
  return rng.uniform() < std::exp(-delta / state.temperature);
}

void update_temperature(AnnealState& state, const OptimizerConfig& cfg) {
  state.temperature = temperature_at(cfg, state.iteration);
}

ContactSelection resample_contacts(const ContactSelection& selection, std::size_t n_candidates,
                                   double switch_possibility, Rng& rng) {
  const std::size_t k = selection.indices.size();
  if (n_candidates < 2 * k) throw std::invalid_argument("resample_contacts: candidate set too small");
  std::vector<char> taken(n_candidates, 0);
  for (int i : selection.indices) taken[std::size_t(i)] = 1;
  ContactSelection out = selection;
  for (std::size_t i = 0; i < k; ++i) {
    if (!rng.bernoulli(switch_possibility)) continue;
    std::size_t j;
    do {
      j = rng.uniform_index(n_candidates);
    } while (taken[j]);
    taken[j] = 1;
    out.indices[i] = int(j);
  }
  return out;
}

OptimizerSetup make_optimizer_setup(const ObjectModel& obj, std::shared_ptr<const HandKinematics> hand,
                                    const Vec3& u_dir, const OptimizerConfig& cfg) {
  auto candidates =
      std::make_shared<const ContactCandidateSet>(generate_contact_candidates(*hand, cfg.profile, cfg.candidate_seed));
  auto surface = std::make_shared<const HandSurface>(
      sample_hand_surface_by_area(*hand, cfg.surface_density, 8, derive_seed(cfg.candidate_seed, "surface")));
  OptimizerSetup setup;
  setup.scene = make_energy_scene(hand, candidates, surface, obj.query, u_dir.normalized(), 0.0);
  setup.hand = std::move(hand);
  return setup;
}

ChainResult run_chain(const ObjectModel& obj, const OptimizerSetup& setup, const OptimizerConfig& cfg,
                      const EnergyWeights& weights, std::uint64_t chain_seed) {
  const EnergyScene& scene = setup.scene;
  const std::size_t n_candidates = scene.candidates->size();
  const InitialGuess init =
      init_pose(obj, *setup.hand, n_candidates, scene.u_dir, cfg, derive_seed(chain_seed, "init"));

  AnnealState state;
  state.pose = init.pose;
  state.selection = init.selection;
  state.energy = total_energy(state.pose, state.selection, scene, weights);
  state.rng = Rng(derive_seed(chain_seed, "anneal"));
  state.temperature = cfg.starting_temp;

  ChainResult result;
  result.seed = chain_seed;
  result.initial_energy = state.energy;
  result.pose = state.pose;
  result.selection = state.selection;
  result.energy = state.energy;

  for (int it = 0; it < cfg.iterations; ++it) {
    state.iteration = it;
    update_temperature(state, cfg);
    const ContactSelection selection = resample_contacts(state.selection, n_candidates, cfg.switch_possibility, state.rng);
    const Eigen::VectorXd grad = energy_gradient(state.pose, selection, scene, weights, cfg);
    const std::optional<HandPose> proposal = rmsprop_step(state, grad, cfg);
    if (!proposal) continue;
    const EnergyBreakdown e = total_energy(*proposal, selection, scene, weights);
    if (!anneal_accept(state, e.total, state.rng)) continue;
    state.pose = *proposal;
    state.selection = selection;
    state.energy = e;
    ++result.accepted;
    if (e.total < result.energy.total) {
      result.pose = state.pose;
      result.selection = state.selection;
      result.energy = e;
    }
  }
  return result;
}

std::vector<ChainResult> optimize(const ObjectModel& obj, std::shared_ptr<const HandKinematics> hand,
                                  const Vec3& u_dir, const OptimizerConfig& cfg, const EnergyWeights& weights,
                                  std::uint64_t seed) {
  cfg.validate();
  weights.validate();
  const OptimizerSetup setup = make_optimizer_setup(obj, std::move(hand), u_dir, cfg);
  std::vector<ChainResult> out(std::size_t(cfg.restarts));
  parallel_for(out.size(), cfg.jobs,
               [&](std::size_t i) { out[i] = run_chain(obj, setup, cfg, weights, derive_seed(seed, std::uint64_t(i))); });
  return out;
}

}  // namespace dexpush
