#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace dexpush {

struct DenoiserConfig {
  int pose_dim = 25;
  int cond_dim = 4096;   // width of the condition as fed to the network
  int width = 256;
  int depth = 4;         // residual blocks
  int time_dim = 64;     // sinusoidal embedding size, even
};

/// Sinusoidal embedding of integer timesteps, one column per entry.
Eigen::MatrixXf timestep_embedding(const std::vector<int>& t, int dim);

/// Conditional residual MLP. The timestep embedding and the projected
/// condition are summed into one vector g that enters the input layer and
/// every block:
///   h = W_in x + g;  h += W2 silu(W1 silu(h) + P_k g);  out = W_out silu(h)
/// All parameters live in one flat float vector.
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(const DenoiserConfig& cfg, std::uint64_t seed);

  const DenoiserConfig& config() const { return cfg_; }
  Eigen::Index parameter_count() const { return params_.size(); }
  Eigen::VectorXf& params() { return params_; }
  const Eigen::VectorXf& params() const { return params_; }
  /// Throws when the size does not match the configuration.
  void set_params(const Eigen::VectorXf& p);

  /// Activations kept for the backward pass.
  struct Tape {
    Eigen::MatrixXf x, cond, temb, pre_t, g;
    std::vector<Eigen::MatrixXf> h, pre;  // h[0..depth], block pre-activations
  };

  /// x: pose_dim x B, cond: cond_dim x B. Returns pose_dim x B.
  Eigen::MatrixXf forward(const Eigen::MatrixXf& x, const std::vector<int>& t, const Eigen::MatrixXf& cond,
                          Tape* tape = nullptr) const;
  /// Gradient of sum(d_out .* out) with respect to the parameters.
  Eigen::VectorXf backward(const Tape& tape, const Eigen::MatrixXf& d_out) const;

 private:
  struct Layout {
    Eigen::Index wc, bc, wt, bt, win, bin, wout, bout;
    std::vector<Eigen::Index> p, w1, b1, w2, b2;
    Eigen::Index total = 0;
  };
  static Layout make_layout(const DenoiserConfig& cfg);

  using MapM = Eigen::Map<const Eigen::MatrixXf>;
  using MapV = Eigen::Map<const Eigen::VectorXf>;
  MapM mat(Eigen::Index off, int rows, int cols) const { return MapM(params_.data() + off, rows, cols); }
  MapV vec(Eigen::Index off, int n) const { return MapV(params_.data() + off, n); }

  DenoiserConfig cfg_;
  Layout layout_;
  Eigen::VectorXf params_;
};

}  // namespace dexpush
