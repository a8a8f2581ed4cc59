#include "dexpush/geometry.hpp"

#include "dexpush/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dexpush {

Mat3 rotation_about(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Mat3 rotation_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  // atan2 form is accurate near zero, unlike acos of the trace.
  const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (rel.trace() - 1.0));
}

Mat3 rotation_between(const Vec3& from, const Vec3& to) {
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

Aabb bounds(const TriangleMesh& mesh) {
  Aabb box;
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) box.extend(mesh.vertex(i));
  return box;
}

Aabb bounds(const PointCloud& cloud) {
  Aabb box;
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) box.extend(Vec3(cloud.row(i).transpose()));
  return box;
}

TriangleMesh transformed(const TriangleMesh& mesh, const Transform3& t) {
  TriangleMesh out = mesh;
  out.vertices = (mesh.vertices * t.rotation.transpose()).rowwise() + t.translation.transpose();
  return out;
}

PointCloud transformed(const PointCloud& cloud, const Transform3& t) {
  PointCloud out = (cloud * t.rotation.transpose()).rowwise() + t.translation.transpose();
  return out;
}

TriangleMesh scaled(const TriangleMesh& mesh, double factor) {
  TriangleMesh out = mesh;
  out.vertices *= factor;
  return out;
}

TriangleMesh translated(const TriangleMesh& mesh, const Vec3& offset) {
  TriangleMesh out = mesh;
  out.vertices.rowwise() += offset.transpose();
  return out;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }

Eigen::VectorXd triangle_areas(const TriangleMesh& mesh) {
  Eigen::VectorXd areas(mesh.num_triangles());
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t)
    areas[t] = triangle_area(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
  return areas;
}

double surface_area(const TriangleMesh& mesh) { return triangle_areas(mesh).sum(); }

double volume(const TriangleMesh& mesh) {
  double v = 0.0;
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t)
    v += mesh.corner(t, 0).dot(mesh.corner(t, 1).cross(mesh.corner(t, 2)));
  return v / 6.0;
}

Vec3 volume_centroid(const TriangleMesh& mesh) {
  double v = 0.0;
  Vec3 c = Vec3::Zero();
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
    const Vec3 a = mesh.corner(t, 0), b = mesh.corner(t, 1), d = mesh.corner(t, 2);
    const double tv = a.dot(b.cross(d)) / 6.0;
    v += tv;
    c += tv * (a + b + d) / 4.0;
  }
  if (std::abs(v) < 1e-300) return bounds(mesh).center();
  return c / v;
}

Vec3 face_normal(const TriangleMesh& mesh, Eigen::Index tri) {
  const Vec3 a = mesh.corner(tri, 0);
  const Vec3 n = (mesh.corner(tri, 1) - a).cross(mesh.corner(tri, 2) - a);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
}

TriangleMesh clean_mesh(const TriangleMesh& mesh, double min_area, std::ostream* warn) {
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k)
      if (mesh.triangles(t, k) < 0 || mesh.triangles(t, k) >= mesh.num_vertices())
        throw std::invalid_argument("triangle " + std::to_string(t) + " references vertex " +
                                    std::to_string(mesh.triangles(t, k)) + " out of range");
  if (!mesh.vertices.allFinite()) throw std::invalid_argument("mesh has non-finite vertex coordinates");

  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(mesh.num_triangles()));
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t)
    if (triangle_area(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)) > min_area) keep.push_back(int(t));

  const auto dropped = mesh.num_triangles() - static_cast<Eigen::Index>(keep.size());
  if (dropped > 0 && warn) *warn << "warning: dropped " << dropped << " degenerate triangle(s)\n";

  TriangleMesh out;
  out.vertices = mesh.vertices;
  out.triangles.resize(static_cast<Eigen::Index>(keep.size()), 3);
  for (std::size_t i = 0; i < keep.size(); ++i) out.triangles.row(Eigen::Index(i)) = mesh.triangles.row(keep[i]);
  return out;
}

TriangleMesh merge(const TriangleMesh& a, const TriangleMesh& b) {
  TriangleMesh out;
  out.vertices.resize(a.num_vertices() + b.num_vertices(), 3);
  out.vertices << a.vertices, b.vertices;
  out.triangles.resize(a.num_triangles() + b.num_triangles(), 3);
  out.triangles.topRows(a.num_triangles()) = a.triangles;
  out.triangles.bottomRows(b.num_triangles()) = b.triangles.array() + int(a.num_vertices());
  return out;
}

SurfaceSamples sample_surface_with_faces(const TriangleMesh& mesh, int n, std::uint64_t seed) {
  if (mesh.empty()) throw std::invalid_argument("sample_surface: empty mesh");
  if (n < 1) throw std::invalid_argument("sample_surface: n must be >= 1");

  const Eigen::VectorXd areas = triangle_areas(mesh);
  std::vector<double> cumulative(static_cast<std::size_t>(areas.size()));
  double total = 0.0;
  for (Eigen::Index t = 0; t < areas.size(); ++t) {
    total += areas[t];
    cumulative[std::size_t(t)] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_surface: mesh has zero area");

  Rng rng(seed);
  SurfaceSamples out;
  out.points.resize(n, 3);
  out.triangles.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const auto t = static_cast<Eigen::Index>(it - cumulative.begin());
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3 p = (1.0 - r1) * mesh.corner(t, 0) + r1 * (1.0 - r2) * mesh.corner(t, 1) + r1 * r2 * mesh.corner(t, 2);
    out.points.row(i) = p.transpose();
    out.triangles[std::size_t(i)] = int(t);
  }
  return out;
}

PointCloud sample_surface(const TriangleMesh& mesh, int n, std::uint64_t seed) {
  return sample_surface_with_faces(mesh, n, seed).points;
}

namespace {

constexpr std::array<int, 64> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,  59,  61,  67,  71,  73,  79,
    83,  89,  97,  101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311};

}  // namespace

double radical_inverse(std::uint64_t index, int base) {
  double inv = 1.0 / base, factor = inv, value = 0.0;
  while (index > 0) {
    value += double(index % std::uint64_t(base)) * factor;
    index /= std::uint64_t(base);
    factor *= inv;
  }
  return value;
}

Eigen::VectorXd halton(std::uint64_t index, int dims) {
  if (dims < 0 || dims > int(kPrimes.size())) throw std::invalid_argument("halton: dims must be in [0, 64]");
  Eigen::VectorXd out(dims);
  for (int k = 0; k < dims; ++k) out[k] = radical_inverse(index, kPrimes[std::size_t(k)]);
  return out;
}

TriangleMesh make_box(const Vec3& h, const Vec3& c) {
  TriangleMesh m;
  m.vertices.resize(8, 3);
  for (int i = 0; i < 8; ++i) {
    const Vec3 s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    m.vertices.row(i) = (c + s.cwiseProduct(h)).transpose();
  }
  m.triangles.resize(12, 3);
  m.triangles << 0, 2, 1, 1, 2, 3,  // -z
      4, 5, 6, 5, 7, 6,             // +z
      0, 1, 4, 1, 5, 4,             // -y
      2, 6, 3, 3, 6, 7,             // +y
      0, 4, 2, 2, 4, 6,             // -x
      1, 3, 5, 3, 7, 5;             // +x
  return m;
}

TriangleMesh make_cylinder(double radius, double height, int segments, const Vec3& base) {
  std::vector<Vec2> polygon;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * M_PI * i / segments;
    polygon.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return translated(make_prism(polygon, 0.0, height), base);
}

TriangleMesh make_hemisphere(double radius, int rings, int segments) {
  // Ring 0 is the equator at z = 0, the pole is the last vertex, the disc
  // center closes the base.
  std::vector<Vec3> v;
  for (int r = 0; r < rings; ++r) {
    const double polar = 0.5 * M_PI * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double az = 2.0 * M_PI * s / segments;
      v.emplace_back(radius * std::cos(polar) * std::cos(az), radius * std::cos(polar) * std::sin(az),
                     radius * std::sin(polar));
    }
  }
  const int pole = int(v.size());
  v.emplace_back(0.0, 0.0, radius);
  const int base = int(v.size());
  v.emplace_back(0.0, 0.0, 0.0);

  std::vector<std::array<int, 3>> f;
  auto idx = [segments](int r, int s) { return r * segments + (s % segments); };
  for (int r = 0; r + 1 < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      f.push_back({idx(r, s), idx(r, s + 1), idx(r + 1, s + 1)});
      f.push_back({idx(r, s), idx(r + 1, s + 1), idx(r + 1, s)});
    }
  for (int s = 0; s < segments; ++s) {
    f.push_back({idx(rings - 1, s), idx(rings - 1, s + 1), pole});
    f.push_back({base, idx(0, s + 1), idx(0, s)});
  }

  TriangleMesh m;
  m.vertices.resize(Eigen::Index(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) m.vertices.row(Eigen::Index(i)) = v[i].transpose();
  m.triangles.resize(Eigen::Index(f.size()), 3);
  for (std::size_t i = 0; i < f.size(); ++i) m.triangles.row(Eigen::Index(i)) << f[i][0], f[i][1], f[i][2];
  return m;
}

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross2(b - a, p - a) >= 0.0 && cross2(c - b, p - b) >= 0.0 && cross2(a - c, p - c) >= 0.0;
}

}  // namespace

std::vector<std::array<int, 3>> triangulate_polygon(const std::vector<Vec2>& polygon) {
  std::vector<int> remaining(polygon.size());
  for (std::size_t i = 0; i < polygon.size(); ++i) remaining[i] = int(i);
  std::vector<std::array<int, 3>> out;
  std::size_t guard = 0;
  while (remaining.size() > 3 && guard < polygon.size() * polygon.size()) {
    ++guard;
    bool clipped = false;
    const std::size_t n = remaining.size();
    for (std::size_t i = 0; i < n; ++i) {
      const int ia = remaining[(i + n - 1) % n], ib = remaining[i], ic = remaining[(i + 1) % n];
      const Vec2 &a = polygon[std::size_t(ia)], &b = polygon[std::size_t(ib)], &c = polygon[std::size_t(ic)];
      if (cross2(b - a, c - b) <= 0.0) continue;  // reflex
      bool blocked = false;
      for (int j : remaining)
        if (j != ia && j != ib && j != ic && point_in_triangle(polygon[std::size_t(j)], a, b, c)) {
          blocked = true;
          break;
        }
      if (blocked) continue;
      out.push_back({ia, ib, ic});
      remaining.erase(remaining.begin() + std::ptrdiff_t(i));
      clipped = true;
      break;
    }
    if (!clipped) throw std::invalid_argument("triangulate_polygon: polygon is not simple and counter-clockwise");
  }
  if (remaining.size() == 3) out.push_back({remaining[0], remaining[1], remaining[2]});
  return out;
}

TriangleMesh make_prism(const std::vector<Vec2>& polygon, double z0, double z1) {
  const int n = int(polygon.size());
  if (n < 3) throw std::invalid_argument("make_prism: polygon needs >= 3 vertices");
  const auto caps = triangulate_polygon(polygon);
  TriangleMesh m;
  m.vertices.resize(2 * n, 3);
  for (int i = 0; i < n; ++i) {
    m.vertices.row(i) << polygon[std::size_t(i)].x(), polygon[std::size_t(i)].y(), z0;
    m.vertices.row(n + i) << polygon[std::size_t(i)].x(), polygon[std::size_t(i)].y(), z1;
  }
  m.triangles.resize(Eigen::Index(2 * caps.size() + 2 * std::size_t(n)), 3);
  Eigen::Index row = 0;
  for (const auto& t : caps) {
    m.triangles.row(row++) << t[0], t[2], t[1];              // bottom faces -z
    m.triangles.row(row++) << n + t[0], n + t[1], n + t[2];  // top faces +z
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    m.triangles.row(row++) << i, j, n + j;
    m.triangles.row(row++) << i, n + j, n + i;
  }
  return m;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return (a - b).norm() < 1e-12; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double max_radius(const std::vector<Vec2>& polygon, const Vec2& about) {
  double r = 0.0;
  for (const auto& p : polygon) r = std::max(r, (p - about).norm());
  return r;
}

}  // namespace dexpush
