#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <iosfwd>
#include <vector>

namespace dexpush {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rows are points.
using PointCloud = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FaceMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Rigid transform p -> R p + t.
template <typename Scalar>
struct Transform3T {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static Transform3T identity() { return {}; }

  static Transform3T from_translation(const Vector3& t) {
    Transform3T out;
    out.translation = t;
    return out;
  }

  Vector3 operator()(const Vector3& p) const { return rotation * p + translation; }

  Vector3 apply_direction(const Vector3& d) const { return rotation * d; }

  Transform3T inverse() const {
    Transform3T out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  template <typename Other>
  Transform3T<Other> cast() const {
    Transform3T<Other> out;
    out.rotation = rotation.template cast<Other>();
    out.translation = translation.template cast<Other>();
    return out;
  }
};

/// (a∘b)(p) = a(b(p)).
template <typename Scalar>
Transform3T<Scalar> compose(const Transform3T<Scalar>& a, const Transform3T<Scalar>& b) {
  Transform3T<Scalar> out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

template <typename Scalar>
Transform3T<Scalar> operator*(const Transform3T<Scalar>& a, const Transform3T<Scalar>& b) {
  return compose(a, b);
}

using Transform3 = Transform3T<double>;

/// Orthonormal with det +1 within tol.
template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& r, double tol = 1e-9) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, 3, 3> m = r;
  return (m.transpose() * m - Eigen::Matrix<Scalar, 3, 3>::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(m.determinant() - Scalar(1)) <= tol;
}

Mat3 rotation_about(const Vec3& axis, double angle);
Mat3 rotation_z(double angle);

/// Angle of the relative rotation a^T b, radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Rotation taking unit vector `from` onto unit vector `to` by the shortest arc.
Mat3 rotation_between(const Vec3& from, const Vec3& to);

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool empty() const { return (lo.array() > hi.array()).any(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  bool contains(const Vec3& p, double pad = 0.0) const {
    return (p.array() >= lo.array() - pad).all() && (p.array() <= hi.array() + pad).all();
  }
  double squared_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }
};

struct TriangleMesh {
  VertexMatrix vertices;
  FaceMatrix triangles;

  Eigen::Index num_vertices() const { return vertices.rows(); }
  Eigen::Index num_triangles() const { return triangles.rows(); }
  bool empty() const { return triangles.rows() == 0; }

  Vec3 vertex(Eigen::Index i) const { return vertices.row(i).transpose(); }
  Vec3 corner(Eigen::Index tri, int k) const { return vertices.row(triangles(tri, k)).transpose(); }
};

Aabb bounds(const TriangleMesh& mesh);
Aabb bounds(const PointCloud& cloud);

TriangleMesh transformed(const TriangleMesh& mesh, const Transform3& t);
PointCloud transformed(const PointCloud& cloud, const Transform3& t);
TriangleMesh scaled(const TriangleMesh& mesh, double factor);
TriangleMesh translated(const TriangleMesh& mesh, const Vec3& offset);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
Eigen::VectorXd triangle_areas(const TriangleMesh& mesh);
double surface_area(const TriangleMesh& mesh);
/// Enclosed volume of a closed, outward-oriented mesh.
double volume(const TriangleMesh& mesh);
Vec3 volume_centroid(const TriangleMesh& mesh);
Vec3 face_normal(const TriangleMesh& mesh, Eigen::Index tri);

/// Validates indices and drops triangles with area below min_area.
/// Dropped triangles are reported to `warn` when given.
TriangleMesh clean_mesh(const TriangleMesh& mesh, double min_area = 1e-14, std::ostream* warn = nullptr);

/// Append b to a (indices shifted).
TriangleMesh merge(const TriangleMesh& a, const TriangleMesh& b);

struct SurfaceSamples {
  PointCloud points;
  std::vector<int> triangles;
};

/// n area-weighted uniform samples. Throws on an empty mesh or n < 1.
SurfaceSamples sample_surface_with_faces(const TriangleMesh& mesh, int n, std::uint64_t seed);
PointCloud sample_surface(const TriangleMesh& mesh, int n, std::uint64_t seed);

/// Radical inverse of index in the given base.
double radical_inverse(std::uint64_t index, int base);
/// Halton point; dimension k uses the k-th prime as base. dims <= 64.
Eigen::VectorXd halton(std::uint64_t index, int dims);

// Closed primitives with outward-facing triangles.
TriangleMesh make_box(const Vec3& half_extents, const Vec3& center = Vec3::Zero());
TriangleMesh make_cylinder(double radius, double height, int segments, const Vec3& base_center = Vec3::Zero());
/// Dome toward +z from a flat disc at z = 0.
TriangleMesh make_hemisphere(double radius, int rings, int segments);
/// Extrusion of a simple counter-clockwise polygon from z0 to z1.
TriangleMesh make_prism(const std::vector<Vec2>& polygon, double z0, double z1);

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
std::vector<std::array<int, 3>> triangulate_polygon(const std::vector<Vec2>& polygon);

/// Counter-clockwise convex hull (Andrew's monotone chain).
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Circumradius of a polygon about `about`.
double max_radius(const std::vector<Vec2>& polygon, const Vec2& about);

}  // namespace dexpush
