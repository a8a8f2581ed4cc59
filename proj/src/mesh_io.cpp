#include "dexpush/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace dexpush {

namespace {

int parse_index(const std::string& token, int vertex_count, int line) {
  // Accepts "7", "7/1", "7//3", "7/1/3" and negative (relative) indices.
  const std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    idx = std::stoi(head);
  } catch (const std::exception&) {
    throw std::runtime_error("obj line " + std::to_string(line) + ": bad face index '" + token + "'");
  }
  if (idx < 0) idx = vertex_count + idx + 1;
  return idx - 1;
}

}  // namespace

TriangleMesh read_obj(std::istream& in, double scale, std::ostream* warn) {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::istringstream ls(raw);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z()))
        throw std::runtime_error("obj line " + std::to_string(line) + ": malformed vertex");
      verts.push_back(p * scale);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      for (std::string t; ls >> t;) tokens.push_back(t);
      if (tokens.size() != 3)
        throw std::runtime_error("obj line " + std::to_string(line) + ": only triangular faces are supported");
      std::array<int, 3> f{};
      for (int k = 0; k < 3; ++k) f[std::size_t(k)] = parse_index(tokens[std::size_t(k)], int(verts.size()), line);
      faces.push_back(f);
    }
  }
  TriangleMesh mesh;
  mesh.vertices.resize(Eigen::Index(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(Eigen::Index(i)) = verts[i].transpose();
  mesh.triangles.resize(Eigen::Index(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i)
    mesh.triangles.row(Eigen::Index(i)) << faces[i][0], faces[i][1], faces[i][2];
  return clean_mesh(mesh, 1e-14, warn);
}

TriangleMesh load_obj(const std::string& path, double scale, std::ostream* warn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  return read_obj(in, scale, warn);
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i)
    out << "v " << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t)
    out << "f " << mesh.triangles(t, 0) + 1 << ' ' << mesh.triangles(t, 1) + 1 << ' ' << mesh.triangles(t, 2) + 1
        << '\n';
}

void save_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file: " + path);
  write_obj(out, mesh);
}

PointCloud read_cloud(std::istream& in) {
  std::vector<Vec3> pts;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos || raw[raw.find_first_not_of(" \t")] == '#') continue;
    std::istringstream ls(raw);
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z()) || !p.allFinite())
      throw std::runtime_error("cloud line " + std::to_string(line) + ": expected three finite numbers");
    pts.push_back(p);
  }
  PointCloud cloud(Eigen::Index(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) cloud.row(Eigen::Index(i)) = pts[i].transpose();
  return cloud;
}

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cloud file: " + path);
  return read_cloud(in);
}

void write_cloud(std::ostream& out, const PointCloud& cloud) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) out << cloud(i, 0) << ' ' << cloud(i, 1) << ' ' << cloud(i, 2) << '\n';
}

void save_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write cloud file: " + path);
  write_cloud(out, cloud);
}

}  // namespace dexpush
