#pragma once

#include "dexpush/geometry.hpp"

#include <iosfwd>
#include <string>

namespace dexpush {

/// Wavefront OBJ, `v` and triangular `f` records only. Vertex coordinates are
/// multiplied by `scale` (units -> meters) and degenerate triangles dropped.
TriangleMesh read_obj(std::istream& in, double scale = 1.0, std::ostream* warn = nullptr);
TriangleMesh load_obj(const std::string& path, double scale = 1.0, std::ostream* warn = nullptr);
void write_obj(std::ostream& out, const TriangleMesh& mesh);
void save_obj(const std::string& path, const TriangleMesh& mesh);

/// Line-delimited `x y z` text.
PointCloud read_cloud(std::istream& in);
PointCloud load_cloud(const std::string& path);
void write_cloud(std::ostream& out, const PointCloud& cloud);
void save_cloud(const std::string& path, const PointCloud& cloud);

}  // namespace dexpush
