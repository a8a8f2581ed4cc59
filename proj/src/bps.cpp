#include "dexpush/bps.hpp"

#include "dexpush/parallel.hpp"
#include "dexpush/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace dexpush {

static_assert(std::endian::native == std::endian::little, "cache IO assumes a little-endian host");

BasisPointSet generate_basis(std::uint64_t seed, int n, double radius) {
  if (n < 1) throw std::invalid_argument("generate_basis: n must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("generate_basis: radius must be positive");
  BasisPointSet b;
  b.seed = seed;
  b.radius = radius;
  b.basis.resize(n, 3);
  Rng rng(derive_seed(seed, "bps"));
  for (int i = 0; i < n; ++i) {
    const Vec3 dir = rng.unit_vector();
    b.basis.row(i) = (radius * std::cbrt(rng.uniform()) * dir).transpose();
  }
  return b;
}

PointCloud canonicalize(const PointCloud& cloud) {
  if (cloud.rows() == 0) throw std::invalid_argument("canonicalize: empty cloud");
  const Eigen::RowVector3d mean = cloud.colwise().mean();
  const Eigen::RowVector3d shift(mean.x(), mean.y(), cloud.col(2).minCoeff());
  return cloud.rowwise() - shift;
}

KdTree::KdTree(const PointCloud& points) : points_(points), order_(std::size_t(points.rows())) {
  std::iota(order_.begin(), order_.end(), 0);
  if (!order_.empty()) build(0, int(order_.size()));
}

int KdTree::build(int begin, int end) {
  const int id = int(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  constexpr int kLeaf = 8;
  if (end - begin <= kLeaf) return id;
  Aabb box;
  for (int i = begin; i < end; ++i) box.extend(Vec3(points_.row(order_[std::size_t(i)]).transpose()));
  int axis;
  box.extent().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_(a, axis) < points_(b, axis); });
  const double split = points_(order_[std::size_t(mid)], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[std::size_t(id)].left = left;
  nodes_[std::size_t(id)].right = right;
  nodes_[std::size_t(id)].axis = axis;
  nodes_[std::size_t(id)].split = split;
  return id;
}

void KdTree::search(int node, const Vec3& q, double& best) const {
  const Node& n = nodes_[std::size_t(node)];
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const double d2 = (q - points_.row(order_[std::size_t(i)]).transpose()).squaredNorm();
      if (d2 < best) best = d2;
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double diff = q[n.axis] - n.split;
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  search(near, q, best);
  if (diff * diff <= best) search(far, q, best);
}

double KdTree::nearest_squared(const Vec3& q) const {
  if (order_.empty()) throw std::invalid_argument("KdTree: empty point set");
  double best = std::numeric_limits<double>::infinity();
  search(0, q, best);
  return best;
}

BpsEncoding encode(const BasisPointSet& basis, const PointCloud& cloud, int jobs) {
  if (cloud.rows() == 0) throw std::invalid_argument("bps encode: empty cloud");
  const KdTree tree(cloud);
  BpsEncoding out(basis.size());
  parallel_for(std::size_t(basis.size()), jobs, [&](std::size_t k) {
    out[Eigen::Index(k)] = std::sqrt(tree.nearest_squared(basis.basis.row(Eigen::Index(k)).transpose()));
  });
  return out;
}

BpsEncoding encode_brute_force(const BasisPointSet& basis, const PointCloud& cloud) {
  if (cloud.rows() == 0) throw std::invalid_argument("bps encode: empty cloud");
  BpsEncoding out(basis.size());
  for (Eigen::Index k = 0; k < basis.size(); ++k) {
    const Vec3 q = basis.basis.row(k).transpose();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) best = std::min(best, (q - cloud.row(i).transpose()).squaredNorm());
    out[k] = std::sqrt(best);
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'D', 'X', 'B', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("bps cache truncated: " + path);
  return v;
}

}  // namespace

void BpsCache::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write bps cache: " + path);
  const std::uint32_t dim = entries.empty() ? std::uint32_t(kBpsSize) : std::uint32_t(entries.begin()->second.size());
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, std::uint32_t(entries.size()));
  put(os, dim);
  for (const auto& [id, f] : entries) {
    if (std::uint32_t(f.size()) != dim) throw std::invalid_argument("bps cache: mixed feature dimensions");
    put(os, std::uint32_t(id.size()));
    os.write(id.data(), std::streamsize(id.size()));
    os.write(reinterpret_cast<const char*>(f.data()), std::streamsize(sizeof(float) * std::size_t(dim)));
  }
  if (!os) throw std::runtime_error("failed writing bps cache: " + path);
}

BpsCache BpsCache::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open bps cache: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a bps cache: " + path);
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) throw std::runtime_error("unsupported bps cache version " + std::to_string(version));
  const auto count = get<std::uint32_t>(is, path);
  const auto dim = get<std::uint32_t>(is, path);
  BpsCache cache;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto len = get<std::uint32_t>(is, path);
    if (len > 4096) throw std::runtime_error("bps cache: implausible id length in " + path);
    std::string id(len, '\0');
    Eigen::VectorXf f(dim);
    if (!is.read(id.data(), len) || !is.read(reinterpret_cast<char*>(f.data()), std::streamsize(sizeof(float) * dim)))
      throw std::runtime_error("bps cache truncated: " + path);
    cache.entries.emplace(std::move(id), std::move(f));
  }
  return cache;
}

}  // namespace dexpush
