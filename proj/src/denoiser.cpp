#include "dexpush/denoiser.hpp"

#include "dexpush/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dexpush {

namespace {

Eigen::MatrixXf silu(const Eigen::MatrixXf& x) { return x.array() / (1.0f + (-x.array()).exp()); }

Eigen::MatrixXf silu_grad(const Eigen::MatrixXf& x) {
  const Eigen::ArrayXXf s = 1.0f / (1.0f + (-x.array()).exp());
  return s * (1.0f + x.array() * (1.0f - s));
}

}  // namespace

Eigen::MatrixXf timestep_embedding(const std::vector<int>& t, int dim) {
  if (dim < 2 || dim % 2) throw std::invalid_argument("timestep_embedding: dim must be even and >= 2");
  const int half = dim / 2;
  Eigen::MatrixXf e(dim, Eigen::Index(t.size()));
  for (std::size_t j = 0; j < t.size(); ++j)
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
      e(i, Eigen::Index(j)) = float(std::sin(t[j] * freq));
      e(half + i, Eigen::Index(j)) = float(std::cos(t[j] * freq));
    }
  return e;
}

Denoiser::Layout Denoiser::make_layout(const DenoiserConfig& c) {
  Layout l;
  Eigen::Index off = 0;
  auto take = [&off](Eigen::Index n) {
    const Eigen::Index at = off;
    off += n;
    return at;
  };
  const Eigen::Index w = c.width;
  l.wc = take(w * c.cond_dim);
  l.bc = take(w);
  l.wt = take(w * c.time_dim);
  l.bt = take(w);
  l.win = take(w * c.pose_dim);
  l.bin = take(w);
  for (int k = 0; k < c.depth; ++k) {
    l.p.push_back(take(w * w));
    l.w1.push_back(take(w * w));
    l.b1.push_back(take(w));
    l.w2.push_back(take(w * w));
    l.b2.push_back(take(w));
  }
  l.wout = take(c.pose_dim * w);
  l.bout = take(c.pose_dim);
  l.total = off;
  return l;
}

Denoiser::Denoiser(const DenoiserConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.pose_dim < 1 || cfg.cond_dim < 1 || cfg.width < 1 || cfg.depth < 0 || cfg.time_dim < 2 || cfg.time_dim % 2)
    throw std::invalid_argument("denoiser: invalid dimensions");
  layout_ = make_layout(cfg);
  params_.resize(layout_.total);
  Rng rng(derive_seed(seed, "denoiser-init"));
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases of each layer.
  auto fill = [&](Eigen::Index off, Eigen::Index n, int fan_in, double gain = 1.0) {
    const double b = gain / std::sqrt(double(fan_in));
    for (Eigen::Index i = 0; i < n; ++i) params_[off + i] = float(rng.uniform(-b, b));
  };
  const int w = cfg.width;
  fill(layout_.wc, Eigen::Index(w) * cfg.cond_dim, cfg.cond_dim);
  fill(layout_.bc, w, cfg.cond_dim);
  fill(layout_.wt, Eigen::Index(w) * cfg.time_dim, cfg.time_dim);
  fill(layout_.bt, w, cfg.time_dim);
  fill(layout_.win, Eigen::Index(w) * cfg.pose_dim, cfg.pose_dim);
  fill(layout_.bin, w, cfg.pose_dim);
  for (int k = 0; k < cfg.depth; ++k) {
    fill(layout_.p[std::size_t(k)], Eigen::Index(w) * w, w);
    fill(layout_.w1[std::size_t(k)], Eigen::Index(w) * w, w);
    fill(layout_.b1[std::size_t(k)], w, w);
    // Blocks start close to the identity.
    fill(layout_.w2[std::size_t(k)], Eigen::Index(w) * w, w, 0.1);
    fill(layout_.b2[std::size_t(k)], w, w, 0.1);
  }
  fill(layout_.wout, Eigen::Index(cfg.pose_dim) * w, w);
  fill(layout_.bout, cfg.pose_dim, w);
}

void Denoiser::set_params(const Eigen::VectorXf& p) {
  if (p.size() != layout_.total)
    throw std::invalid_argument("denoiser: expected " + std::to_string(layout_.total) + " parameters, got " +
                                std::to_string(p.size()));
  params_ = p;
}

Eigen::MatrixXf Denoiser::forward(const Eigen::MatrixXf& x, const std::vector<int>& t, const Eigen::MatrixXf& cond,
                                  Tape* tape) const {
  const int w = cfg_.width;
  const Eigen::Index batch = x.cols();
  if (x.rows() != cfg_.pose_dim || cond.rows() != cfg_.cond_dim || cond.cols() != batch ||
      Eigen::Index(t.size()) != batch)
    throw std::invalid_argument("denoiser forward: shape mismatch");

  const Eigen::MatrixXf temb = timestep_embedding(t, cfg_.time_dim);
  const Eigen::MatrixXf pre_t = (mat(layout_.wt, w, cfg_.time_dim) * temb).colwise() + vec(layout_.bt, w);
  Eigen::MatrixXf g = (mat(layout_.wc, w, cfg_.cond_dim) * cond).colwise() + vec(layout_.bc, w);
  g += silu(pre_t);

  Eigen::MatrixXf h = (mat(layout_.win, w, cfg_.pose_dim) * x).colwise() + vec(layout_.bin, w);
  h += g;
  if (tape) {
    tape->x = x;
    tape->cond = cond;
    tape->temb = temb;
    tape->pre_t = pre_t;
    tape->g = g;
    tape->h.assign(1, h);
    tape->pre.clear();
  }
  for (int k = 0; k < cfg_.depth; ++k) {
    const auto kk = std::size_t(k);
    const Eigen::MatrixXf pre = (mat(layout_.w1[kk], w, w) * silu(h) + mat(layout_.p[kk], w, w) * g).colwise() +
                                vec(layout_.b1[kk], w);
    h += (mat(layout_.w2[kk], w, w) * silu(pre)).colwise() + vec(layout_.b2[kk], w);
    if (tape) {
      tape->pre.push_back(pre);
      tape->h.push_back(h);
    }
  }
  return (mat(layout_.wout, cfg_.pose_dim, w) * silu(h)).colwise() + vec(layout_.bout, cfg_.pose_dim);
}

Eigen::VectorXf Denoiser::backward(const Tape& tape, const Eigen::MatrixXf& d_out) const {
  const int w = cfg_.width;
  Eigen::VectorXf grad = Eigen::VectorXf::Zero(layout_.total);
  auto gmat = [&](Eigen::Index off, int rows, int cols) { return Eigen::Map<Eigen::MatrixXf>(grad.data() + off, rows, cols); };
  auto gvec = [&](Eigen::Index off, int n) { return Eigen::Map<Eigen::VectorXf>(grad.data() + off, n); };

  const Eigen::MatrixXf& h_last = tape.h.back();
  gmat(layout_.wout, cfg_.pose_dim, w) = d_out * silu(h_last).transpose();
  gvec(layout_.bout, cfg_.pose_dim) = d_out.rowwise().sum();
  Eigen::MatrixXf dh = (mat(layout_.wout, cfg_.pose_dim, w).transpose() * d_out).cwiseProduct(silu_grad(h_last));
  Eigen::MatrixXf dg = Eigen::MatrixXf::Zero(w, d_out.cols());

  for (int k = cfg_.depth - 1; k >= 0; --k) {
    const auto kk = std::size_t(k);
    const Eigen::MatrixXf& pre = tape.pre[kk];
    const Eigen::MatrixXf& h_in = tape.h[kk];
    gmat(layout_.w2[kk], w, w) = dh * silu(pre).transpose();
    gvec(layout_.b2[kk], w) = dh.rowwise().sum();
    const Eigen::MatrixXf dpre = (mat(layout_.w2[kk], w, w).transpose() * dh).cwiseProduct(silu_grad(pre));
    const Eigen::MatrixXf a = silu(h_in);
    gmat(layout_.w1[kk], w, w) = dpre * a.transpose();
    gvec(layout_.b1[kk], w) = dpre.rowwise().sum();
    gmat(layout_.p[kk], w, w) = dpre * tape.g.transpose();
    dg.noalias() += mat(layout_.p[kk], w, w).transpose() * dpre;
    dh += (mat(layout_.w1[kk], w, w).transpose() * dpre).cwiseProduct(silu_grad(h_in));
  }

  gmat(layout_.win, w, cfg_.pose_dim) = dh * tape.x.transpose();
  gvec(layout_.bin, w) = dh.rowwise().sum();
  dg += dh;
  gmat(layout_.wc, w, cfg_.cond_dim) = dg * tape.cond.transpose();
  gvec(layout_.bc, w) = dg.rowwise().sum();
  const Eigen::MatrixXf dpre_t = dg.cwiseProduct(silu_grad(tape.pre_t));
  gmat(layout_.wt, w, cfg_.time_dim) = dpre_t * tape.temb.transpose();
  gvec(layout_.bt, w) = dpre_t.rowwise().sum();
  return grad;
}

}  // namespace dexpush
