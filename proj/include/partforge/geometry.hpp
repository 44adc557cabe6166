#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "partforge/error.hpp"
#include "partforge/rng.hpp"

namespace partforge {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a);

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void grow(const Vec3& p);
    void grow(const Aabb& other);
    bool empty() const { return lo[0] > hi[0]; }
    Vec3 center() const { return 0.5 * (lo + hi); }
    Vec3 extent() const { return hi - lo; }
};

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    // Drops zero-area and out-of-range faces; the invariants below hold after this.
    void cleanup();
    void validate() const; // indices in range, no degenerate faces
    Aabb bounds() const;
    double face_area(std::size_t f) const;
    double surface_area() const;
    // Every undirected edge shared by exactly two faces.
    bool is_watertight() const;
};

struct PointSample {
    std::vector<Vec3> points;
    std::uint64_t seed = 0;
};

// Occupancy over the canonical cube [-1,1]^3. Voxel centers sit at
// -1 + (i + 0.5) * 2/R per axis.
class VoxelGrid {
public:
    VoxelGrid() = default;
    explicit VoxelGrid(int resolution);

    int resolution() const { return resolution_; }
    bool surface_only = false; // set when a non-watertight mesh fell back to a surface band

    bool occupied(int i, int j, int k) const;
    void set(int i, int j, int k);
    std::int64_t count() const;
    double center_coord(int index) const { return -1.0 + (index + 0.5) * 2.0 / resolution_; }

    std::int64_t intersection_count(const VoxelGrid& other) const;
    std::int64_t union_count(const VoxelGrid& other) const;
    bool operator==(const VoxelGrid& other) const;

private:
    std::size_t word_index(int i, int j, int k) const;
    int resolution_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Area-weighted uniform surface sampling; deterministic per seed.
PointSample sample_surface(const TriMesh& mesh, int n, std::uint64_t seed);

// Symmetric mean nearest-neighbor L2 distance (non-squared, both directions
// summed). Accelerated by an axis-sorted sweep that provably matches brute force.
double chamfer(const PointSample& p, const PointSample& q);

// Harmonic mean of precision/recall at point-to-point threshold tau; 0 when
// both vanish.
double f_score(const PointSample& p, const PointSample& q, double tau = 0.1);

// Solid occupancy by parity ray casting along +x through voxel centers.
// Non-watertight meshes fall back to a surface band and flag surface_only.
VoxelGrid voxelize_solid(const TriMesh& mesh, int resolution = 64);

// Occupancy of the cells containing the points; used for sampled parts.
VoxelGrid voxelize_points(const PointSample& points, int resolution = 64);

// Mean IoU over unordered pairs; a single part scores 0, as does a pair whose
// union is empty.
double pairwise_iou(const std::vector<VoxelGrid>& parts);

// Vertex/face concatenation with index offsetting; no welding.
TriMesh assemble(const std::vector<TriMesh>& parts);

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);
double point_mesh_distance(const Vec3& p, const TriMesh& mesh);

} // namespace partforge
