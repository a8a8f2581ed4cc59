#pragma once

#include "dexpush/denoiser.hpp"
#include "dexpush/kv_config.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dexpush {

struct NoiseSchedule {
  int steps = 100;
  double offset = 0.008;  // s in the squared-cosine law
  double beta_cap = 0.999;
  Eigen::VectorXd betas, alphas, alpha_bars;
};

/// Squared-cosine schedule: beta_t = min(1 - f(t+1)/f(t), cap) with
/// f(t) = cos^2(((t/T) + s)/(1 + s) * pi/2); alpha_bar is the running product.
NoiseSchedule make_schedule(int steps = 100, double offset = 0.008, double beta_cap = 0.999);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise.
Eigen::VectorXd forward_diffuse(const Eigen::VectorXd& x0, int t, const Eigen::VectorXd& noise,
                                const NoiseSchedule& schedule);

/// x0 implied by x_t and a noise estimate.
Eigen::VectorXd predict_x0(const Eigen::VectorXd& x_t, int t, const Eigen::VectorXd& eps, const NoiseSchedule& schedule);

/// One ancestral step t -> t-1 given a noise estimate. The implied x0 is
/// clipped to [-1, 1] when `clip` is set; `z` is the fresh noise (unused at t = 0).
/// `x0_out` receives the (clipped) x0 estimate.
Eigen::VectorXd reverse_step(const Eigen::VectorXd& x_t, int t, const Eigen::VectorXd& eps, const Eigen::VectorXd& z,
                             const NoiseSchedule& schedule, bool clip = true, Eigen::VectorXd* x0_out = nullptr);

/// Affine per-dimension map of the pose range onto [-1, 1]. Constant
/// dimensions map to 0.
struct PoseNormalizer {
  Eigen::VectorXd lo, hi;

  static PoseNormalizer fit(const std::vector<Eigen::VectorXd>& poses);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& y) const;
};

struct TrainConfig {
  int batch_size = 16;
  int epochs = 200;
  double lr = 1e-4;
  double weight_decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 1.0;
  int warmup_steps = 500;
  double ema_power = 0.75;
  double ema_max_decay = 0.9999;
  int diffusion_steps = 100;
  int pose_dim = 25;
  int cond_dim = 4096;
  int width = 256;
  int depth = 4;
  int time_dim = 64;
  int projection_dim = 0;  // > 0: fixed random projection of the condition
  std::uint64_t projection_seed = 0;
  std::string head = "x0";  // network output: "x0" or "epsilon"

  static TrainConfig from_config(const KeyValueConfig& cfg);
  static TrainConfig load(const std::string& path);
  KeyValueConfig to_config() const;
  void validate() const;
};

/// Linear warmup from 0 then cosine decay to 0 at total_steps. `step` is the
/// zero-based optimizer step.
double learning_rate(const TrainConfig& cfg, long step, long total_steps);

/// decay = clamp(1 - (1 + step)^-power, 0, max_decay); ema <- decay ema + (1 - decay) params.
double ema_decay(long step, double power = 0.75, double max_decay = 0.9999);
void ema_update(Eigen::VectorXf& ema, const Eigen::VectorXf& params, long step, double power = 0.75,
                double max_decay = 0.9999);

struct PoseSample {
  Eigen::VectorXd pose25;     // raw pose encoding in the direction frame
  Eigen::VectorXd condition;  // raw BPS features
  std::string object_id;
  Eigen::Vector3d u_dir = Eigen::Vector3d::UnitX();
};

/// Everything needed to sample: network, schedule and the data maps.
struct GeneratorModel {
  Denoiser net;
  NoiseSchedule schedule;
  PoseNormalizer pose_norm;
  Eigen::VectorXf cond_mean;  // raw condition centering
  float cond_scale = 1.0f;
  int projection_dim = 0;
  std::uint64_t projection_seed = 0;
  Eigen::MatrixXf projection;  // rebuilt from the seed, never stored
  bool x0_head = true;
  std::uint64_t seed = 0;

  /// Raw condition -> network input (centered, scaled, optionally projected).
  Eigen::VectorXf condition_input(const Eigen::VectorXd& raw) const;
  /// Noise estimate for a batch of normalized noisy poses.
  Eigen::MatrixXf predict_noise(const Eigen::MatrixXf& x_t, const std::vector<int>& t, const Eigen::MatrixXf& cond) const;

  void save(const std::string& path) const;
  static GeneratorModel load(const std::string& path);
};

struct LossRecord {
  long step;
  double loss;
  double lr;
};

struct TrainResult {
  GeneratorModel model;  // raw weights
  GeneratorModel ema;    // same maps, EMA weights
  std::vector<LossRecord> losses;  // one per optimizer step
  std::vector<double> epoch_losses;
};

/// Minimizes the noise-prediction error. Deterministic per seed.
/// Throws on an empty dataset or a non-finite loss.
TrainResult train(const std::vector<PoseSample>& data, const TrainConfig& cfg, std::uint64_t seed,
                  const std::function<void(int epoch, double loss)>& on_epoch = {});

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& losses, const std::string& header_comment = "");

/// Observer for the reverse process: (t, clipped x0 estimates as columns).
using SampleTrace = std::function<void(int, const Eigen::MatrixXf&)>;

/// Ancestral sampling of n raw poses for one condition. Sample i draws from
/// its own stream derive_seed(seed, i), so results do not depend on `jobs`.
std::vector<Eigen::VectorXd> sample(const GeneratorModel& model, const Eigen::VectorXd& condition, int n,
                                    std::uint64_t seed, int jobs = 1, const SampleTrace& trace = {});

}  // namespace dexpush
