#pragma once

#include "dexpush/geometry.hpp"

#include <vector>

namespace dexpush {

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  int triangle = -1;
  double distance = 0.0;  // unsigned
  bool face_interior = false;
};

struct SignedDistance {
  double distance = 0.0;           // negative inside
  Vec3 gradient = Vec3::UnitZ();   // unit, points away from the surface (outward)
};

/// Bounding-volume hierarchy over a triangle mesh answering closest-point and
/// signed-distance queries. Inside/outside comes from the generalized winding
/// number (far-field dipole approximation per node), so open or slightly
/// broken meshes still get a sensible sign. Immutable once built.
class DistanceQuery {
 public:
  DistanceQuery() = default;
  explicit DistanceQuery(TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }
  const Aabb& bounds() const { return bounds_; }

  ClosestPoint closest_point(const Vec3& p) const;
  double winding_number(const Vec3& p) const;
  bool inside(const Vec3& p) const { return winding_number(p) > 0.5; }
  SignedDistance signed_distance(const Vec3& p) const;

  /// Unit outward normal of a triangle.
  const Vec3& triangle_normal(int tri) const { return normals_[std::size_t(tri)]; }

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;  // children, -1 for leaves
    int begin = 0, end = 0;     // range into order_ for leaves
    Vec3 area_normal = Vec3::Zero();
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
  };

  int build(int begin, int end);
  double winding_recursive(int node, const Vec3& p) const;

  TriangleMesh mesh_;
  Aabb bounds_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  std::vector<Vec3> normals_;
  std::vector<Vec3> centroids_;
};

/// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Signed solid angle of triangle abc seen from p, divided by 4π.
double triangle_winding(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace dexpush
