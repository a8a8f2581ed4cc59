#include "dexpush/distance_query.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dexpush {

namespace {

constexpr int kLeafSize = 4;
constexpr double kFarFieldRatio = 2.0;

}  // namespace

namespace {

// Ericson's region test. `interior` is set when the closest point is inside the face.
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, bool& interior) {
  interior = false;
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double denom = 1.0 / (va + vb + vc);
  interior = true;
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  bool interior;
  return closest_on_triangle(p, a, b, c, interior);
}

double triangle_winding(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Van Oosterom & Strackee.
  const Vec3 x = a - p, y = b - p, z = c - p;
  const double lx = x.norm(), ly = y.norm(), lz = z.norm();
  const double numer = x.dot(y.cross(z));
  const double denom = lx * ly * lz + x.dot(y) * lz + y.dot(z) * lx + z.dot(x) * ly;
  return std::atan2(numer, denom) / (2.0 * M_PI);
}

DistanceQuery::DistanceQuery(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.empty()) throw std::invalid_argument("DistanceQuery: empty mesh");
  const auto n = std::size_t(mesh_.num_triangles());
  normals_.resize(n);
  centroids_.resize(n);
  order_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    normals_[t] = face_normal(mesh_, Eigen::Index(t));
    centroids_[t] = (mesh_.corner(Eigen::Index(t), 0) + mesh_.corner(Eigen::Index(t), 1) +
                     mesh_.corner(Eigen::Index(t), 2)) / 3.0;
    order_[t] = int(t);
  }
  nodes_.reserve(2 * n / kLeafSize + 2);
  build(0, int(n));
  bounds_ = nodes_[0].box;
}

int DistanceQuery::build(int begin, int end) {
  const int id = int(nodes_.size());
  nodes_.emplace_back();
  Node node;
  node.begin = begin;
  node.end = end;

  Aabb centroid_box;
  double area_sum = 0.0;
  for (int i = begin; i < end; ++i) {
    const int t = order_[std::size_t(i)];
    for (int k = 0; k < 3; ++k) node.box.extend(mesh_.corner(t, k));
    centroid_box.extend(centroids_[std::size_t(t)]);
    const Vec3 a = mesh_.corner(t, 0);
    const Vec3 cross = (mesh_.corner(t, 1) - a).cross(mesh_.corner(t, 2) - a);
    const double area = 0.5 * cross.norm();
    node.area_normal += 0.5 * cross;
    node.center += area * centroids_[std::size_t(t)];
    area_sum += area;
  }
  node.center = area_sum > 0.0 ? Vec3(node.center / area_sum) : node.box.center();
  for (int i = begin; i < end; ++i)
    for (int k = 0; k < 3; ++k)
      node.radius = std::max(node.radius, (mesh_.corner(order_[std::size_t(i)], k) - node.center).norm());

  if (end - begin > kLeafSize) {
    int axis;
    centroid_box.extent().maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
      const double ca = centroids_[std::size_t(a)][axis], cb = centroids_[std::size_t(b)][axis];
      return ca < cb || (ca == cb && a < b);
    });
    node.left = build(begin, mid);
    node.right = build(mid, end);
  }
  nodes_[std::size_t(id)] = node;
  return id;
}

ClosestPoint DistanceQuery::closest_point(const Vec3& p) const {
  ClosestPoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[std::size_t(stack[--top])];
    if (node.box.squared_distance(p) >= best_d2) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int t = order_[std::size_t(i)];
        bool interior;
        const Vec3 q = closest_on_triangle(p, mesh_.corner(t, 0), mesh_.corner(t, 1), mesh_.corner(t, 2), interior);
        const double d2 = (q - p).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best.point = q;
          best.triangle = t;
          best.face_interior = interior;
        }
      }
      continue;
    }
    const double dl = nodes_[std::size_t(node.left)].box.squared_distance(p);
    const double dr = nodes_[std::size_t(node.right)].box.squared_distance(p);
    // Push the farther child first so the nearer one is visited next.
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

double DistanceQuery::winding_recursive(int id, const Vec3& p) const {
  const Node& node = nodes_[std::size_t(id)];
  const Vec3 r = node.center - p;
  const double dist = r.norm();
  if (dist > kFarFieldRatio * node.radius) return node.area_normal.dot(r) / (4.0 * M_PI * dist * dist * dist);
  if (node.left < 0) {
    double w = 0.0;
    for (int i = node.begin; i < node.end; ++i) {
      const int t = order_[std::size_t(i)];
      w += triangle_winding(p, mesh_.corner(t, 0), mesh_.corner(t, 1), mesh_.corner(t, 2));
    }
    return w;
  }
  return winding_recursive(node.left, p) + winding_recursive(node.right, p);
}

double DistanceQuery::winding_number(const Vec3& p) const { return winding_recursive(0, p); }

SignedDistance DistanceQuery::signed_distance(const Vec3& p) const {
  const ClosestPoint cp = closest_point(p);
  SignedDistance out;
  // A closest point strictly inside a face settles the sign locally; edges and
  // vertices fall back to the winding number.
  const bool is_inside = cp.face_interior && cp.distance > 1e-9
                             ? (p - cp.point).dot(normals_[std::size_t(cp.triangle)]) < 0.0
                             : inside(p);
  out.distance = is_inside ? -cp.distance : cp.distance;
  if (cp.distance > 1e-12) {
    const Vec3 away = (p - cp.point) / cp.distance;
    out.gradient = is_inside ? Vec3(-away) : away;
  } else {
    out.gradient = normals_[std::size_t(cp.triangle)];
  }
  return out;
}

}  // namespace dexpush
