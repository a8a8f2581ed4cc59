#include "dexpush/object_model.hpp"

#include "dexpush/hand_model.hpp"
#include "dexpush/mesh_io.hpp"

#include <filesystem>
#include <iostream>
#include <stdexcept>

namespace dexpush {

double ObjectModel::bounding_radius() const {
  double r = 0.0;
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) r = std::max(r, (mesh.vertex(i) - dynamics.com).head<2>().norm());
  return r;
}

ObjectModel make_object(const std::string& id, TriangleMesh mesh, const ObjectOptions& options) {
  if (mesh.empty()) throw std::invalid_argument("object '" + id + "': empty mesh");
  if (options.place_on_table) {
    const Aabb box = bounds(mesh);
    mesh = translated(mesh, Vec3(-box.center().x(), -box.center().y(), -box.lo.z()));
  }

  ObjectModel obj;
  obj.id = id;
  obj.mesh = mesh;
  obj.query = std::make_shared<const DistanceQuery>(mesh);
  obj.cloud = sample_surface(mesh, options.cloud_points, options.cloud_seed);

  const double vol = volume(mesh);
  ObjectDynamics& dyn = obj.dynamics;
  dyn.com = volume_centroid(mesh);
  dyn.mass = options.mass > 0.0 ? options.mass : std::abs(vol) * options.density;
  dyn.support_friction = options.support_friction;
  if (!(dyn.mass > 0.0)) throw std::invalid_argument("object '" + id + "': mass must be positive");
  if (!(dyn.support_friction > 0.0 && dyn.support_friction <= 2.0))
    throw std::invalid_argument("object '" + id + "': mu_s must lie in (0, 2]");

  const double z_min = bounds(mesh).lo.z();
  std::vector<Vec2> base;
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i)
    if (mesh.vertices(i, 2) <= z_min + 1e-4) base.emplace_back(mesh.vertices(i, 0), mesh.vertices(i, 1));
  dyn.support_polygon = convex_hull(base);
  if (dyn.support_polygon.size() < 3) throw std::invalid_argument("object '" + id + "': degenerate support polygon");
  dyn.pressure_radius = options.pressure_radius_factor * max_radius(dyn.support_polygon, dyn.com.head<2>());
  return obj;
}

ObjectModel load_object(const std::string& manifest_path) {
  const KeyValueConfig cfg = KeyValueConfig::load(manifest_path);
  const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
  ObjectOptions opt;
  opt.mass = cfg.get_double("mass", -1.0);
  opt.density = cfg.get_double("density", opt.density);
  opt.support_friction = cfg.get_double("mu_s", opt.support_friction);
  opt.pressure_radius_factor = cfg.get_double("pressure_radius_factor", opt.pressure_radius_factor);
  opt.cloud_points = int(cfg.get_int("cloud_points", opt.cloud_points));
  opt.cloud_seed = std::uint64_t(cfg.get_int("cloud_seed", 0));
  const std::string id = cfg.get_string("id", std::filesystem::path(manifest_path).stem().string());
  TriangleMesh mesh = load_obj((dir / cfg.get_string("mesh")).string(), cfg.get_double("scale", 1.0), &std::cerr);
  return make_object(id, std::move(mesh), opt);
}

std::string shipped_object(const std::string& name) { return data_path("objects/" + name + ".object"); }

ObjectModel moved_object(const ObjectModel& obj, const Transform3& motion) {
  ObjectModel out = obj;
  out.mesh = transformed(obj.mesh, motion);
  out.query = std::make_shared<const DistanceQuery>(out.mesh);
  out.cloud = transformed(obj.cloud, motion);
  out.dynamics.com = motion(obj.dynamics.com);
  for (auto& p : out.dynamics.support_polygon) {
    const Vec3 q = motion(Vec3(p.x(), p.y(), 0.0));
    p = q.head<2>();
  }
  return out;
}

}  // namespace dexpush
