#include "partforge/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace partforge {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

void Aabb::grow(const Vec3& p) {
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
    }
}

void Aabb::grow(const Aabb& other) {
    if (other.empty()) return;
    grow(other.lo);
    grow(other.hi);
}

void TriMesh::cleanup() {
    std::vector<std::array<int, 3>> kept;
    kept.reserve(faces.size());
    const int v = static_cast<int>(vertices.size());
    for (const auto& f : faces) {
        if (f[0] < 0 || f[1] < 0 || f[2] < 0 || f[0] >= v || f[1] >= v || f[2] >= v) continue;
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
        const Vec3 e1 = vertices[static_cast<std::size_t>(f[1])] - vertices[static_cast<std::size_t>(f[0])];
        const Vec3 e2 = vertices[static_cast<std::size_t>(f[2])] - vertices[static_cast<std::size_t>(f[0])];
        if (norm(cross(e1, e2)) <= 0.0) continue;
        kept.push_back(f);
    }
    faces = std::move(kept);
}

void TriMesh::validate() const {
    const int v = static_cast<int>(vertices.size());
    for (const auto& f : faces) {
        if (f[0] < 0 || f[1] < 0 || f[2] < 0 || f[0] >= v || f[1] >= v || f[2] >= v)
            fail(ErrorKind::domain, "mesh face index out of range");
        const Vec3 e1 = vertices[static_cast<std::size_t>(f[1])] - vertices[static_cast<std::size_t>(f[0])];
        const Vec3 e2 = vertices[static_cast<std::size_t>(f[2])] - vertices[static_cast<std::size_t>(f[0])];
        if (norm(cross(e1, e2)) <= 0.0) fail(ErrorKind::domain, "mesh has a zero-area face");
    }
}

Aabb TriMesh::bounds() const {
    Aabb box;
    for (const Vec3& p : vertices) box.grow(p);
    return box;
}

double TriMesh::face_area(std::size_t f) const {
    const auto& face = faces[f];
    const Vec3 e1 = vertices[static_cast<std::size_t>(face[1])] - vertices[static_cast<std::size_t>(face[0])];
    const Vec3 e2 = vertices[static_cast<std::size_t>(face[2])] - vertices[static_cast<std::size_t>(face[0])];
    return 0.5 * norm(cross(e1, e2));
}

double TriMesh::surface_area() const {
    double total = 0.0;
    for (std::size_t f = 0; f < faces.size(); ++f) total += face_area(f);
    return total;
}

bool TriMesh::is_watertight() const {
    if (faces.empty()) return false;
    // undirected edge -> face incidence count
    std::vector<std::pair<std::uint64_t, int>> edges;
    edges.reserve(faces.size() * 3);
    for (const auto& f : faces) {
        for (int e = 0; e < 3; ++e) {
            const int a = f[static_cast<std::size_t>(e)];
            const int b = f[static_cast<std::size_t>((e + 1) % 3)];
            const std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
                                      static_cast<std::uint64_t>(std::max(a, b));
            edges.emplace_back(key, 1);
        }
    }
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 0; i < edges.size();) {
        std::size_t j = i;
        while (j < edges.size() && edges[j].first == edges[i].first) ++j;
        if (j - i != 2) return false;
        i = j;
    }
    return true;
}

VoxelGrid::VoxelGrid(int resolution) : resolution_(resolution) {
    if (resolution < 1) fail(ErrorKind::domain, "voxel resolution must be >= 1");
    const std::size_t cells = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution) *
                              static_cast<std::size_t>(resolution);
    bits_.assign((cells + 63) / 64, 0);
}

std::size_t VoxelGrid::word_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(resolution_) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(resolution_) +
           static_cast<std::size_t>(k);
}

bool VoxelGrid::occupied(int i, int j, int k) const {
    const std::size_t idx = word_index(i, j, k);
    return (bits_[idx >> 6] >> (idx & 63)) & 1u;
}

void VoxelGrid::set(int i, int j, int k) {
    const std::size_t idx = word_index(i, j, k);
    bits_[idx >> 6] |= (std::uint64_t{1} << (idx & 63));
}

std::int64_t VoxelGrid::count() const {
    std::int64_t n = 0;
    for (std::uint64_t w : bits_) n += std::popcount(w);
    return n;
}

std::int64_t VoxelGrid::intersection_count(const VoxelGrid& other) const {
    if (resolution_ != other.resolution_)
        fail(ErrorKind::shape, "voxel grids have different resolutions");
    std::int64_t n = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) n += std::popcount(bits_[i] & other.bits_[i]);
    return n;
}

std::int64_t VoxelGrid::union_count(const VoxelGrid& other) const {
    if (resolution_ != other.resolution_)
        fail(ErrorKind::shape, "voxel grids have different resolutions");
    std::int64_t n = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) n += std::popcount(bits_[i] | other.bits_[i]);
    return n;
}

bool VoxelGrid::operator==(const VoxelGrid& other) const {
    return resolution_ == other.resolution_ && bits_ == other.bits_;
}

PointSample sample_surface(const TriMesh& mesh, int n, std::uint64_t seed) {
    if (n < 0) fail(ErrorKind::domain, "sample count must be >= 0");
    PointSample out;
    out.seed = seed;
    if (mesh.faces.empty() || n == 0) return out;

    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        total += mesh.face_area(f);
        cumulative[f] = total;
    }
    if (total <= 0.0) fail(ErrorKind::domain, "mesh has zero surface area");

    Rng rng(seed);
    out.points.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const double pick = rng.uniform() * total;
        const std::size_t f = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
        const auto& face = mesh.faces[std::min(f, mesh.faces.size() - 1)];
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(face[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(face[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(face[2])];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        out.points.push_back((1.0 - r1) * a + (r1 * (1.0 - r2)) * b + (r1 * r2) * c);
    }
    return out;
}

namespace {

// Nearest-neighbor search over points sorted along x: scan outward from the
// insertion point and stop once the x gap alone exceeds the best distance.
// Exact by construction.
class SortedSweep {
public:
    explicit SortedSweep(const std::vector<Vec3>& points) : pts_(points) {
        std::sort(pts_.begin(), pts_.end(),
                  [](const Vec3& a, const Vec3& b) { return a[0] < b[0]; });
    }

    double nearest_distance(const Vec3& q) const {
        const auto it = std::lower_bound(pts_.begin(), pts_.end(), q[0],
                                         [](const Vec3& p, double x) { return p[0] < x; });
        const std::ptrdiff_t start = it - pts_.begin();
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(pts_.size());
        double best_sq = 1e300;
        std::ptrdiff_t lo = start - 1, hi = start;
        while (lo >= 0 || hi < n) {
            // advance whichever side is closer in x
            const double dlo = lo >= 0 ? q[0] - pts_[static_cast<std::size_t>(lo)][0] : 1e300;
            const double dhi = hi < n ? pts_[static_cast<std::size_t>(hi)][0] - q[0] : 1e300;
            const std::ptrdiff_t idx = dlo <= dhi ? lo : hi;
            const double dx = std::min(dlo, dhi);
            if (dx * dx > best_sq) break;
            const Vec3& p = pts_[static_cast<std::size_t>(idx)];
            const Vec3 d = p - q;
            best_sq = std::min(best_sq, dot(d, d));
            if (idx == lo) --lo;
            else ++hi;
        }
        return std::sqrt(best_sq);
    }

private:
    std::vector<Vec3> pts_;
};

double directed_mean_nn(const std::vector<Vec3>& from, const SortedSweep& to) {
    double sum = 0.0;
    for (const Vec3& p : from) sum += to.nearest_distance(p);
    return sum / static_cast<double>(from.size());
}

} // namespace

double chamfer(const PointSample& p, const PointSample& q) {
    if (p.points.empty() || q.points.empty())
        fail(ErrorKind::domain, "chamfer: point sets must be nonempty");
    SortedSweep sp(p.points), sq(q.points);
    return directed_mean_nn(p.points, sq) + directed_mean_nn(q.points, sp);
}

double f_score(const PointSample& p, const PointSample& q, double tau) {
    if (p.points.empty() || q.points.empty())
        fail(ErrorKind::domain, "f_score: point sets must be nonempty");
    if (!(tau > 0.0)) fail(ErrorKind::domain, "f_score: tau must be positive");
    SortedSweep sp(p.points), sq(q.points);
    std::int64_t hit_p = 0, hit_q = 0;
    for (const Vec3& x : p.points) hit_p += sq.nearest_distance(x) <= tau;
    for (const Vec3& x : q.points) hit_q += sp.nearest_distance(x) <= tau;
    const double precision = static_cast<double>(hit_p) / static_cast<double>(p.points.size());
    const double recall = static_cast<double>(hit_q) / static_cast<double>(q.points.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

VoxelGrid voxelize_points(const PointSample& points, int resolution) {
    VoxelGrid grid(resolution);
    const double pitch = 2.0 / resolution;
    for (const Vec3& p : points.points) {
        int idx[3];
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
            const int i = static_cast<int>(std::floor((p[a] + 1.0) / pitch));
            if (i < 0 || i >= resolution) {
                inside = false;
                break;
            }
            idx[a] = i;
        }
        if (inside) grid.set(idx[0], idx[1], idx[2]);
    }
    return grid;
}

double pairwise_iou(const std::vector<VoxelGrid>& parts) {
    if (parts.size() < 2) return 0.0;
    double sum = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (std::size_t j = i + 1; j < parts.size(); ++j) {
            const std::int64_t uni = parts[i].union_count(parts[j]);
            const std::int64_t inter = parts[i].intersection_count(parts[j]);
            sum += uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson, Real-Time Collision Detection 5.1.5
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return norm(p - a);
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return norm(p - b);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return norm(p - (a + v * ab));
    }
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return norm(p - c);
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return norm(p - (a + w * ac));
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return norm(p - (b + w * (c - b)));
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return norm(p - (a + v * ab + w * ac));
}

double point_mesh_distance(const Vec3& p, const TriMesh& mesh) {
    double best = 1e300;
    for (const auto& f : mesh.faces)
        best = std::min(best, point_triangle_distance(
                                  p, mesh.vertices[static_cast<std::size_t>(f[0])],
                                  mesh.vertices[static_cast<std::size_t>(f[1])],
                                  mesh.vertices[static_cast<std::size_t>(f[2])]));
    return best;
}

TriMesh assemble(const std::vector<TriMesh>& parts) {
    TriMesh out;
    for (const TriMesh& part : parts) {
        const int offset = static_cast<int>(out.vertices.size());
        out.vertices.insert(out.vertices.end(), part.vertices.begin(), part.vertices.end());
        for (const auto& f : part.faces)
            out.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    }
    return out;
}

} // namespace partforge
