#include "dexpush/generator.hpp"

#include "dexpush/rng.hpp"
#include "dexpush/parallel.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dexpush {

NoiseSchedule make_schedule(int steps, double offset, double beta_cap) {
  if (steps < 2) throw std::invalid_argument("make_schedule: need at least 2 steps");
  NoiseSchedule s;
  s.steps = steps;
  s.offset = offset;
  s.beta_cap = beta_cap;
  auto f = [&](double t) {
    const double c = std::cos((t / steps + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
    return c * c;
  };
  s.betas.resize(steps);
  s.alphas.resize(steps);
  s.alpha_bars.resize(steps);
  double running = 1.0;
  for (int t = 0; t < steps; ++t) {
    s.betas[t] = std::min(1.0 - f(t + 1) / f(t), beta_cap);
    s.alphas[t] = 1.0 - s.betas[t];
    running *= s.alphas[t];
    s.alpha_bars[t] = running;
  }
  return s;
}

namespace {

void check_step(int t, const NoiseSchedule& s) {
  if (t < 0 || t >= s.steps) throw std::out_of_range("diffusion step " + std::to_string(t) + " outside [0, T)");
}

}  // namespace

Eigen::VectorXd forward_diffuse(const Eigen::VectorXd& x0, int t, const Eigen::VectorXd& noise,
                                const NoiseSchedule& schedule) {
  check_step(t, schedule);
  const double ab = schedule.alpha_bars[t];
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

Eigen::VectorXd predict_x0(const Eigen::VectorXd& x_t, int t, const Eigen::VectorXd& eps, const NoiseSchedule& schedule) {
  check_step(t, schedule);
  const double ab = schedule.alpha_bars[t];
  return (x_t - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
}

Eigen::VectorXd reverse_step(const Eigen::VectorXd& x_t, int t, const Eigen::VectorXd& eps, const Eigen::VectorXd& z,
                             const NoiseSchedule& schedule, bool clip, Eigen::VectorXd* x0_out) {
  Eigen::VectorXd x0 = predict_x0(x_t, t, eps, schedule);
  if (clip) x0 = x0.cwiseMax(-1.0).cwiseMin(1.0);
  if (x0_out) *x0_out = x0;
  const double ab = schedule.alpha_bars[t];
  const double ab_prev = t > 0 ? schedule.alpha_bars[t - 1] : 1.0;
  const double beta = schedule.betas[t];
  const double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
  const double ct = std::sqrt(schedule.alphas[t]) * (1.0 - ab_prev) / (1.0 - ab);
  Eigen::VectorXd mean = c0 * x0 + ct * x_t;
  if (t == 0) return mean;
  const double var = std::max(beta * (1.0 - ab_prev) / (1.0 - ab), 1e-20);
  return mean + std::sqrt(var) * z;
}

PoseNormalizer PoseNormalizer::fit(const std::vector<Eigen::VectorXd>& poses) {
  if (poses.empty()) throw std::invalid_argument("PoseNormalizer: no poses");
  PoseNormalizer n;
  n.lo = n.hi = poses.front();
  for (const auto& p : poses) {
    if (p.size() != n.lo.size()) throw std::invalid_argument("PoseNormalizer: mixed dimensions");
    n.lo = n.lo.cwiseMin(p);
    n.hi = n.hi.cwiseMax(p);
  }
  return n;
}

Eigen::VectorXd PoseNormalizer::normalize(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double span = hi[i] - lo[i];
    y[i] = span > 0.0 ? 2.0 * (x[i] - lo[i]) / span - 1.0 : x[i] - lo[i];
  }
  return y;
}

Eigen::VectorXd PoseNormalizer::denormalize(const Eigen::VectorXd& y) const {
  Eigen::VectorXd x(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double span = hi[i] - lo[i];
    x[i] = span > 0.0 ? lo[i] + 0.5 * (y[i] + 1.0) * span : lo[i] + y[i];
  }
  return x;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  TrainConfig c;
  c.batch_size = int(kv.get_int("batch_size", c.batch_size));
  c.epochs = int(kv.get_int("epochs", kv.get_int("num_epochs", c.epochs)));
  c.lr = kv.get_double("lr", c.lr);
  c.weight_decay = kv.get_double("weight_decay", c.weight_decay);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.eps = kv.get_double("eps", c.eps);
  c.grad_clip = kv.get_double("grad_clip", c.grad_clip);
  c.warmup_steps = int(kv.get_int("lr_warmup_steps", kv.get_int("warmup_steps", c.warmup_steps)));
  c.ema_power = kv.get_double("ema_power", c.ema_power);
  c.ema_max_decay = kv.get_double("ema_max_decay", c.ema_max_decay);
  c.diffusion_steps = int(kv.get_int("num_diffusion_timesteps", kv.get_int("diffusion_steps", c.diffusion_steps)));
  c.pose_dim = int(kv.get_int("input_dim", kv.get_int("pose_dim", c.pose_dim)));
  c.cond_dim = int(kv.get_int("global_cond_dim", kv.get_int("cond_dim", c.cond_dim)));
  c.width = int(kv.get_int("width", c.width));
  c.depth = int(kv.get_int("depth", c.depth));
  c.time_dim = int(kv.get_int("time_dim", c.time_dim));
  c.projection_dim = int(kv.get_int("projection_dim", c.projection_dim));
  c.projection_seed = std::uint64_t(kv.get_int("projection_seed", (long long)c.projection_seed));
  c.head = kv.get_string("head", c.head);
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) { return from_config(KeyValueConfig::load(path)); }

KeyValueConfig TrainConfig::to_config() const {
  KeyValueConfig kv;
  auto put = [&kv](const char* k, auto v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    kv.set(k, s.str());
  };
  put("batch_size", batch_size);
  put("epochs", epochs);
  put("lr", lr);
  put("weight_decay", weight_decay);
  put("beta1", beta1);
  put("beta2", beta2);
  put("eps", eps);
  put("grad_clip", grad_clip);
  put("lr_warmup_steps", warmup_steps);
  put("ema_power", ema_power);
  put("ema_max_decay", ema_max_decay);
  put("num_diffusion_timesteps", diffusion_steps);
  put("input_dim", pose_dim);
  put("global_cond_dim", cond_dim);
  put("width", width);
  put("depth", depth);
  put("time_dim", time_dim);
  put("projection_dim", projection_dim);
  put("projection_seed", projection_seed);
  put("head", head);
  return kv;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("train config: ") + what);
  };
  require(batch_size >= 1 && epochs >= 1, "batch_size and epochs must be >= 1");
  require(lr > 0.0 && weight_decay >= 0.0 && eps > 0.0, "lr and eps must be positive, weight_decay >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "betas must lie in [0, 1)");
  require(grad_clip > 0.0 && warmup_steps >= 0, "grad_clip must be positive, warmup >= 0");
  require(ema_power > 0.0 && ema_max_decay >= 0.0 && ema_max_decay < 1.0, "bad EMA settings");
  require(diffusion_steps >= 2 && pose_dim >= 1 && cond_dim >= 1, "bad dimensions");
  require(width >= 1 && depth >= 0 && time_dim >= 2 && time_dim % 2 == 0, "bad network shape");
  require(projection_dim >= 0, "projection_dim must be >= 0");
  require(head == "x0" || head == "epsilon", "head must be x0 or epsilon");
}

double learning_rate(const TrainConfig& cfg, long step, long total_steps) {
  if (step < cfg.warmup_steps) return cfg.lr * double(step) / double(cfg.warmup_steps);
  const double span = double(std::max<long>(1, total_steps - cfg.warmup_steps));
  const double progress = std::min(1.0, double(step - cfg.warmup_steps) / span);
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double ema_decay(long step, double power, double max_decay) {
  return std::clamp(1.0 - std::pow(1.0 + double(step), -power), 0.0, max_decay);
}

void ema_update(Eigen::VectorXf& ema, const Eigen::VectorXf& params, long step, double power, double max_decay) {
  if (ema.size() != params.size()) throw std::invalid_argument("ema_update: shape mismatch");
  const float d = float(ema_decay(step, power, max_decay));
  ema = d * ema + (1.0f - d) * params;
}

Eigen::VectorXf GeneratorModel::condition_input(const Eigen::VectorXd& raw) const {
  if (raw.size() != cond_mean.size())
    throw std::invalid_argument("condition has " + std::to_string(raw.size()) + " features, model expects " +
                                std::to_string(cond_mean.size()));
  const Eigen::VectorXf c = (raw.cast<float>() - cond_mean) * cond_scale;
  if (projection_dim > 0) return projection * c;
  return c;
}

namespace {

Eigen::MatrixXf make_projection(int rows, int cols, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "projection"));
  Eigen::MatrixXf p(rows, cols);
  const double s = 1.0 / std::sqrt(double(rows));
  for (Eigen::Index j = 0; j < p.cols(); ++j)
    for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, j) = float(s * rng.normal());
  return p;
}

// sqrt(alpha_bar) and sqrt(1 - alpha_bar) per column.
void coefficients(const NoiseSchedule& s, const std::vector<int>& t, Eigen::RowVectorXf& a, Eigen::RowVectorXf& b) {
  a.resize(Eigen::Index(t.size()));
  b.resize(Eigen::Index(t.size()));
  for (std::size_t j = 0; j < t.size(); ++j) {
    a[Eigen::Index(j)] = float(std::sqrt(s.alpha_bars[t[j]]));
    b[Eigen::Index(j)] = float(std::sqrt(1.0 - s.alpha_bars[t[j]]));
  }
}

// Noise implied by an x0 estimate: (x_t - a x0) / b, column scalars a and b.
Eigen::MatrixXf noise_from_x0(const Eigen::MatrixXf& x_t, const Eigen::MatrixXf& x0, const Eigen::RowVectorXf& a,
                              const Eigen::RowVectorXf& b) {
  Eigen::ArrayXXf r = x0.array().rowwise() * a.array();
  r = x_t.array() - r;
  r.rowwise() /= b.array();
  return r.matrix();
}

}  // namespace

Eigen::MatrixXf GeneratorModel::predict_noise(const Eigen::MatrixXf& x_t, const std::vector<int>& t,
                                              const Eigen::MatrixXf& cond) const {
  const Eigen::MatrixXf out = net.forward(x_t, t, cond);
  if (!x0_head) return out;
  Eigen::RowVectorXf a, b;
  coefficients(schedule, t, a, b);
  return noise_from_x0(x_t, out, a, b);
}

TrainResult train(const std::vector<PoseSample>& data, const TrainConfig& cfg, std::uint64_t seed,
                  const std::function<void(int, double)>& on_epoch) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const auto n = Eigen::Index(data.size());
  const int d = cfg.pose_dim;

  GeneratorModel model;
  model.seed = seed;
  model.schedule = make_schedule(cfg.diffusion_steps);
  model.x0_head = cfg.head == "x0";
  model.projection_dim = cfg.projection_dim;
  model.projection_seed = cfg.projection_seed;

  std::vector<Eigen::VectorXd> poses;
  for (const auto& s : data) {
    if (s.pose25.size() != d || s.condition.size() != cfg.cond_dim)
      throw std::invalid_argument("train: sample '" + s.object_id + "' has wrong pose or condition size");
    if (!s.pose25.allFinite() || !s.condition.allFinite())
      throw std::invalid_argument("train: non-finite sample '" + s.object_id + "'");
    poses.push_back(s.pose25);
  }
  model.pose_norm = PoseNormalizer::fit(poses);

  // Condition centering and one global scale to unit RMS.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(cfg.cond_dim);
  for (const auto& s : data) mean += s.condition;
  mean /= double(n);
  double ss = 0.0;
  for (const auto& s : data) ss += (s.condition - mean).squaredNorm();
  const double rms = std::sqrt(ss / (double(n) * cfg.cond_dim));
  model.cond_mean = mean.cast<float>();
  model.cond_scale = rms > 1e-12 ? float(1.0 / rms) : 1.0f;
  if (cfg.projection_dim > 0) model.projection = make_projection(cfg.projection_dim, cfg.cond_dim, cfg.projection_seed);

  DenoiserConfig net_cfg;
  net_cfg.pose_dim = d;
  net_cfg.cond_dim = cfg.projection_dim > 0 ? cfg.projection_dim : cfg.cond_dim;
  net_cfg.width = cfg.width;
  net_cfg.depth = cfg.depth;
  net_cfg.time_dim = cfg.time_dim;
  model.net = Denoiser(net_cfg, derive_seed(seed, "net"));

  Eigen::MatrixXf y(d, n), c(net_cfg.cond_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y.col(i) = model.pose_norm.normalize(data[std::size_t(i)].pose25).cast<float>();
    c.col(i) = model.condition_input(data[std::size_t(i)].condition);
  }

  TrainResult result;
  Eigen::VectorXf ema = model.net.params();
  Eigen::VectorXf m = Eigen::VectorXf::Zero(ema.size()), v = Eigen::VectorXf::Zero(ema.size());
  const long per_epoch = long((n + cfg.batch_size - 1) / cfg.batch_size);
  const long total = per_epoch * cfg.epochs;
  Rng shuffle_rng(derive_seed(seed, "shuffle")), noise_rng(derive_seed(seed, "noise"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    double epoch_loss = 0.0;
    for (long b = 0; b < per_epoch; ++b, ++step) {
      const Eigen::Index begin = b * cfg.batch_size, count = std::min<Eigen::Index>(cfg.batch_size, n - begin);
      Eigen::MatrixXf x0(d, count), cond(net_cfg.cond_dim, count), noise(d, count);
      std::vector<int> t(static_cast<std::size_t>(count));
      for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index idx = order[std::size_t(begin + j)];
        x0.col(j) = y.col(idx);
        cond.col(j) = c.col(idx);
        t[std::size_t(j)] = int(noise_rng.uniform_index(std::uint64_t(cfg.diffusion_steps)));
        for (int k = 0; k < d; ++k) noise(k, j) = float(noise_rng.normal());
      }
      Eigen::RowVectorXf a, s;
      coefficients(model.schedule, t, a, s);
      Eigen::ArrayXXf mixed = x0.array().rowwise() * a.array();
      mixed += noise.array().rowwise() * s.array();
      const Eigen::MatrixXf x_t = mixed.matrix();

      Denoiser::Tape tape;
      const Eigen::MatrixXf out = model.net.forward(x_t, t, cond, &tape);
      Eigen::MatrixXf eps_hat = out;
      if (model.x0_head) eps_hat = noise_from_x0(x_t, out, a, s);
      const Eigen::MatrixXf diff = eps_hat - noise;
      const double loss = double(diff.squaredNorm()) / double(diff.size());
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                 std::to_string(step));
      Eigen::MatrixXf d_out = (2.0f / float(diff.size())) * diff;
      if (model.x0_head) {
        const Eigen::RowVectorXf ratio = (a.array() / s.array()).matrix();
        d_out.array().rowwise() *= -ratio.array();
      }

      Eigen::VectorXf grad = model.net.backward(tape, d_out);
      const float norm = grad.norm();
      if (norm > cfg.grad_clip) grad *= float(cfg.grad_clip) / (norm + 1e-6f);

      // AdamW.
      const double lr = learning_rate(cfg, step, total);
      Eigen::VectorXf& p = model.net.params();
      p *= float(1.0 - lr * cfg.weight_decay);
      m = float(cfg.beta1) * m + float(1.0 - cfg.beta1) * grad;
      v = float(cfg.beta2) * v + float(1.0 - cfg.beta2) * grad.cwiseAbs2();
      const double bc1 = 1.0 - std::pow(cfg.beta1, double(step + 1));
      const double bc2 = 1.0 - std::pow(cfg.beta2, double(step + 1));
      p.array() -= float(lr / bc1) * m.array() / ((v.array() / float(bc2)).sqrt() + float(cfg.eps));
      ema_update(ema, p, step, cfg.ema_power, cfg.ema_max_decay);

      result.losses.push_back({step, loss, lr});
      epoch_loss += loss;
    }
    result.epoch_losses.push_back(epoch_loss / double(per_epoch));
    if (on_epoch) on_epoch(epoch, result.epoch_losses.back());
  }

  result.ema = model;
  result.ema.net.set_params(ema);
  result.model = std::move(model);
  return result;
}

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& losses, const std::string& header_comment) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write loss csv: " + path);
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "step,loss,lr\n";
  os.precision(9);
  for (const auto& r : losses) os << r.step << ',' << r.loss << ',' << r.lr << '\n';
}

std::vector<Eigen::VectorXd> sample(const GeneratorModel& model, const Eigen::VectorXd& condition, int n,
                                    std::uint64_t seed, int jobs, const SampleTrace& trace) {
  if (n < 0) throw std::invalid_argument("sample: n must be >= 0");
  const int d = model.net.config().pose_dim;
  const Eigen::VectorXf cin = model.condition_input(condition);
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(n));

  // Chunks run independently and each sample owns its random stream. Every
  // chunk is padded to full width so the matrix kernels, and with them the
  // rounding, are the same for a sample whatever n and jobs are.
  constexpr int kChunk = 32;
  const int chunks = (n + kChunk - 1) / kChunk;
  parallel_for(std::size_t(chunks), jobs, [&](std::size_t ci) {
    const int begin = int(ci) * kChunk, count = std::min(kChunk, n - begin);
    std::vector<Rng> rngs;
    for (int j = 0; j < count; ++j) rngs.emplace_back(derive_seed(seed, std::uint64_t(begin + j)));
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(d, kChunk);
    for (int j = 0; j < count; ++j)
      for (int k = 0; k < d; ++k) x(k, j) = rngs[std::size_t(j)].normal();
    const Eigen::MatrixXf cond = cin.replicate(1, kChunk);
    Eigen::MatrixXf x0s(d, count);
    for (int t = model.schedule.steps - 1; t >= 0; --t) {
      const std::vector<int> ts(std::size_t(kChunk), t);
      const Eigen::MatrixXf eps = model.predict_noise(x.cast<float>(), ts, cond);
      for (int j = 0; j < count; ++j) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
        if (t > 0)
          for (int k = 0; k < d; ++k) z[k] = rngs[std::size_t(j)].normal();
        Eigen::VectorXd x0;
        x.col(j) = reverse_step(x.col(j), t, eps.col(j).cast<double>(), z, model.schedule, true, &x0);
        x0s.col(j) = x0.cast<float>();
      }
      if (trace && jobs <= 1) trace(t, x0s);
    }
    for (int j = 0; j < count; ++j) out[std::size_t(begin + j)] = model.pose_norm.denormalize(x.col(j));
  });
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little, "model IO assumes a little-endian host");
constexpr char kModelMagic[4] = {'D', 'X', 'D', 'M'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("model file truncated");
  return v;
}

}  // namespace

void GeneratorModel::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write model: " + path);
  const DenoiserConfig& c = net.config();
  os.write(kModelMagic, 4);
  put(os, kModelVersion);
  for (int v : {c.pose_dim, int(cond_mean.size()), c.cond_dim, c.width, c.depth, c.time_dim, projection_dim,
                int(x0_head)})
    put(os, std::uint32_t(v));
  put(os, std::uint64_t(projection_seed));
  put(os, std::uint64_t(seed));
  put(os, std::uint32_t(schedule.steps));
  put(os, schedule.offset);
  put(os, schedule.beta_cap);
  for (Eigen::Index i = 0; i < c.pose_dim; ++i) put(os, pose_norm.lo[i]);
  for (Eigen::Index i = 0; i < c.pose_dim; ++i) put(os, pose_norm.hi[i]);
  put(os, cond_scale);
  os.write(reinterpret_cast<const char*>(cond_mean.data()), std::streamsize(sizeof(float) * std::size_t(cond_mean.size())));
  put(os, std::uint64_t(net.parameter_count()));
  os.write(reinterpret_cast<const char*>(net.params().data()),
           std::streamsize(sizeof(float) * std::size_t(net.parameter_count())));
  if (!os) throw std::runtime_error("failed writing model: " + path);
}

GeneratorModel GeneratorModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open model: " + path);
  try {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) throw std::runtime_error("bad magic");
    const auto version = get<std::uint32_t>(is);
    if (version != kModelVersion) throw std::runtime_error("unsupported version " + std::to_string(version));
    std::uint32_t dims[8];
    for (auto& v : dims) v = get<std::uint32_t>(is);
    GeneratorModel m;
    DenoiserConfig c;
    c.pose_dim = int(dims[0]);
    const int raw_cond = int(dims[1]);
    c.cond_dim = int(dims[2]);
    c.width = int(dims[3]);
    c.depth = int(dims[4]);
    c.time_dim = int(dims[5]);
    m.projection_dim = int(dims[6]);
    m.x0_head = dims[7] != 0;
    if (c.pose_dim < 1 || c.pose_dim > 4096 || raw_cond < 1 || raw_cond > (1 << 20) || c.width > 65536 || c.depth > 1024)
      throw std::runtime_error("implausible dimensions");
    m.projection_seed = get<std::uint64_t>(is);
    m.seed = get<std::uint64_t>(is);
    const auto steps = get<std::uint32_t>(is);
    const double offset = get<double>(is), cap = get<double>(is);
    m.schedule = make_schedule(int(steps), offset, cap);
    m.pose_norm.lo.resize(c.pose_dim);
    m.pose_norm.hi.resize(c.pose_dim);
    for (int i = 0; i < c.pose_dim; ++i) m.pose_norm.lo[i] = get<double>(is);
    for (int i = 0; i < c.pose_dim; ++i) m.pose_norm.hi[i] = get<double>(is);
    m.cond_scale = get<float>(is);
    m.cond_mean.resize(raw_cond);
    if (!is.read(reinterpret_cast<char*>(m.cond_mean.data()), std::streamsize(sizeof(float) * std::size_t(raw_cond))))
      throw std::runtime_error("truncated condition statistics");
    if (m.projection_dim > 0) m.projection = make_projection(m.projection_dim, raw_cond, m.projection_seed);
    m.net = Denoiser(c, 0);
    const auto count = get<std::uint64_t>(is);
    if (count != std::uint64_t(m.net.parameter_count())) throw std::runtime_error("parameter count mismatch");
    Eigen::VectorXf p(static_cast<Eigen::Index>(count));
    if (!is.read(reinterpret_cast<char*>(p.data()), std::streamsize(sizeof(float) * count)))
      throw std::runtime_error("truncated parameters");
    m.net.set_params(p);
    return m;
  } catch (const std::runtime_error& e) {
    throw std::runtime_error("model file " + path + ": " + e.what());
  }
}

}  // namespace dexpush
