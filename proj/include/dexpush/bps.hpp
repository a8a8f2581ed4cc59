#pragma once

#include "dexpush/geometry.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace dexpush {

constexpr int kBpsSize = 4096;

struct BasisPointSet {
  PointCloud basis;
  double radius = 0.25;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return basis.rows(); }
};

/// Uniform in the ball: direction from a normalized Gaussian, radius R * u^(1/3).
BasisPointSet generate_basis(std::uint64_t seed, int n = kBpsSize, double radius = 0.25);

/// Table frame: x-y centroid at the origin, min z = 0. No scaling.
PointCloud canonicalize(const PointCloud& cloud);

/// features[k] = distance from basis point k to its nearest cloud point.
using BpsEncoding = Eigen::VectorXd;

/// kd-tree search; equal bit for bit to encode_brute_force.
BpsEncoding encode(const BasisPointSet& basis, const PointCloud& cloud, int jobs = 1);
BpsEncoding encode_brute_force(const BasisPointSet& basis, const PointCloud& cloud);

/// Static kd-tree over a point cloud, exact nearest neighbour.
class KdTree {
 public:
  explicit KdTree(const PointCloud& points);
  /// Squared distance to the nearest point, computed as (q - p).squaredNorm().
  double nearest_squared(const Vec3& q) const;

 private:
  struct Node {
    int begin, end;   // range in order_
    int left, right;  // child nodes, -1 for leaves
    int axis;
    double split;
  };
  int build(int begin, int end);
  void search(int node, const Vec3& q, double& best) const;

  const PointCloud& points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

/// object_id -> float32 encoding. File: 16-byte header ("DXBP", version,
/// entry count, feature dimension) then per entry a u32 id length, the id
/// bytes and the little-endian floats.
struct BpsCache {
  std::map<std::string, Eigen::VectorXf> entries;

  void save(const std::string& path) const;
  static BpsCache load(const std::string& path);
};

}  // namespace dexpush
