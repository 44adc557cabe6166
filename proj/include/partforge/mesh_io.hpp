#pragma once

#include <string>

#include "partforge/geometry.hpp"

namespace partforge {

// OBJ: v/f lines, polygons fan-triangulated on read.
// PLY: binary little-endian, double vertex properties, uchar-count int-index faces.
// A PLY with zero faces round-trips a bare point cloud.

TriMesh read_obj(const std::string& path);
void write_obj(const std::string& path, const TriMesh& mesh);

TriMesh read_ply(const std::string& path);
void write_ply(const std::string& path, const TriMesh& mesh);

// Dispatch on extension (.obj / .ply).
TriMesh read_mesh(const std::string& path);
void write_mesh(const std::string& path, const TriMesh& mesh);

void write_point_cloud_ply(const std::string& path, const PointSample& points);
PointSample read_point_cloud_ply(const std::string& path);

} // namespace partforge
