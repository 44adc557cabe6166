#include <algorithm>
#include <cmath>

#include "partforge/geometry.hpp"

namespace partforge {

namespace {

struct Tri2D {
    // triangle projected to the (y, z) plane, x kept for interpolation
    double y0, z0, y1, z1, y2, z2;
    double x0, x1, x2;
    double area2; // signed double area in yz
};

// Crossing collection for one ray; returns false on a grazing hit that needs a
// jittered retry.
bool collect_crossings(const std::vector<Tri2D>& tris, double y, double z,
                       std::vector<double>& xs) {
    xs.clear();
    for (const Tri2D& t : tris) {
        if (t.area2 == 0.0) continue; // parallel to the ray; neighbors carry parity
        const double e0 = (t.y1 - t.y0) * (z - t.z0) - (t.z1 - t.z0) * (y - t.y0);
        const double e1 = (t.y2 - t.y1) * (z - t.z1) - (t.z2 - t.z1) * (y - t.y1);
        const double e2 = (t.y0 - t.y2) * (z - t.z2) - (t.z0 - t.z2) * (y - t.y2);
        const double scale = std::abs(t.area2);
        const bool pos = e0 > 0 && e1 > 0 && e2 > 0;
        const bool neg = e0 < 0 && e1 < 0 && e2 < 0;
        const double margin = 1e-12 * scale;
        if (std::abs(e0) <= margin || std::abs(e1) <= margin || std::abs(e2) <= margin) {
            // on or extremely close to an edge: ambiguous, ask for jitter
            const bool near_inside =
                (e0 >= -margin && e1 >= -margin && e2 >= -margin) ||
                (e0 <= margin && e1 <= margin && e2 <= margin);
            if (near_inside) return false;
            continue;
        }
        if (!pos && !neg) continue;
        const double b0 = e1 / t.area2, b1 = e2 / t.area2, b2 = e0 / t.area2;
        xs.push_back(b0 * t.x0 + b1 * t.x1 + b2 * t.x2);
    }
    std::sort(xs.begin(), xs.end());
    return true;
}

VoxelGrid voxelize_surface_band(const TriMesh& mesh, int resolution) {
    VoxelGrid grid(resolution);
    grid.surface_only = true;
    const double pitch = 2.0 / resolution;
    const double band = 0.5 * std::sqrt(3.0) * pitch; // any cell the surface passes through
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(f[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(f[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(f[2])];
        Aabb box;
        box.grow(a);
        box.grow(b);
        box.grow(c);
        int lo[3], hi[3];
        for (int axis = 0; axis < 3; ++axis) {
            lo[axis] = std::max(0, static_cast<int>(std::floor((box.lo[axis] - band + 1.0) / pitch)));
            hi[axis] = std::min(resolution - 1,
                                static_cast<int>(std::floor((box.hi[axis] + band + 1.0) / pitch)));
        }
        for (int i = lo[0]; i <= hi[0]; ++i)
            for (int j = lo[1]; j <= hi[1]; ++j)
                for (int k = lo[2]; k <= hi[2]; ++k) {
                    if (grid.occupied(i, j, k)) continue;
                    const Vec3 center{grid.center_coord(i), grid.center_coord(j),
                                      grid.center_coord(k)};
                    if (point_triangle_distance(center, a, b, c) <= band) grid.set(i, j, k);
                }
    }
    return grid;
}

} // namespace

VoxelGrid voxelize_solid(const TriMesh& mesh, int resolution) {
    if (mesh.faces.empty()) return VoxelGrid(resolution);
    if (!mesh.is_watertight()) return voxelize_surface_band(mesh, resolution);

    VoxelGrid grid(resolution);
    std::vector<Tri2D> tris;
    tris.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(f[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(f[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(f[2])];
        Tri2D t{a[1], a[2], b[1], b[2], c[1], c[2], a[0], b[0], c[0], 0.0};
        t.area2 = (t.y1 - t.y0) * (t.z2 - t.z0) - (t.z1 - t.z0) * (t.y2 - t.y0);
        tris.push_back(t);
    }

    std::vector<double> xs;
    for (int j = 0; j < resolution; ++j) {
        for (int k = 0; k < resolution; ++k) {
            const double y0 = grid.center_coord(j);
            const double z0 = grid.center_coord(k);
            // epsilon jitter resolves rays grazing an edge or vertex
            double jitter = 0.0;
            bool ok = false;
            for (int attempt = 0; attempt < 12 && !ok; ++attempt) {
                ok = collect_crossings(tris, y0 + jitter, z0 + 0.5 * jitter, xs);
                jitter = jitter == 0.0 ? 1e-9 : jitter * 7.3;
            }
            if (!ok) continue; // pathological ray; leave the row empty
            if (xs.empty()) continue;
            std::size_t cursor = 0;
            for (int i = 0; i < resolution; ++i) {
                const double xc = grid.center_coord(i);
                while (cursor < xs.size() && xs[cursor] < xc) ++cursor;
                if (cursor & 1) grid.set(i, j, k);
            }
        }
    }
    return grid;
}

} // namespace partforge
