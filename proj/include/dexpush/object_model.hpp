#pragma once

#include "dexpush/distance_query.hpp"
#include "dexpush/geometry.hpp"
#include "dexpush/kv_config.hpp"

#include <memory>
#include <string>
#include <vector>

namespace dexpush {

/// Planar sliding parameters of an object resting on the table.
struct ObjectDynamics {
  double mass = 1.0;               // kg
  double support_friction = 0.3;   // mu_s
  double pressure_radius = 0.05;   // c, torsional moment arm (m)
  Vec3 com = Vec3::Zero();
  std::vector<Vec2> support_polygon;  // convex, counter-clockwise, object frame
};

/// Rigid object on the table plane z = 0, in its initial world placement.
struct ObjectModel {
  std::string id;
  TriangleMesh mesh;
  std::shared_ptr<const DistanceQuery> query;
  PointCloud cloud;  // surface samples
  ObjectDynamics dynamics;

  const Aabb& bounds() const { return query->bounds(); }
  /// Horizontal bounding radius about the COM.
  double bounding_radius() const;
  Vec3 center() const { return dynamics.com; }
};

struct ObjectOptions {
  double density = 500.0;  // kg/m^3, used when mass is not given
  double mass = -1.0;      // <= 0: from volume * density
  double support_friction = 0.3;
  double pressure_radius_factor = 0.6;
  int cloud_points = 2048;
  std::uint64_t cloud_seed = 0;
  bool place_on_table = true;  // shift so min z = 0 and the x-y bounds center is at the origin
};

/// Builds query, surface cloud and dynamics. Support polygon = hull of the
/// vertices within 1e-4 m of the lowest point.
ObjectModel make_object(const std::string& id, TriangleMesh mesh, const ObjectOptions& options = {});

/// Manifest keys: id, mesh (path relative to the manifest), scale, mass,
/// density, mu_s, pressure_radius_factor, cloud_points, cloud_seed.
ObjectModel load_object(const std::string& manifest_path);

/// Manifest path of a shipped object, e.g. shipped_object("low_box").
std::string shipped_object(const std::string& name);

/// Same object moved rigidly (query rebuilt, dynamics carried along).
ObjectModel moved_object(const ObjectModel& obj, const Transform3& motion);

}  // namespace dexpush
