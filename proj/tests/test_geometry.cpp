#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "partforge/geometry.hpp"
#include "partforge/mesh_io.hpp"
#include "support/brute_metrics.hpp"
#include "support/shapes.hpp"

using namespace partforge;
using testing::brute_chamfer;
using testing::brute_f_score;
using testing::make_box;

namespace {

PointSample random_cloud(int n, Rng& rng, double spread = 1.0) {
    PointSample s;
    for (int i = 0; i < n; ++i)
        s.points.push_back(
            {spread * rng.uniform(-1, 1), spread * rng.uniform(-1, 1), spread * rng.uniform(-1, 1)});
    return s;
}

} // namespace

TEST_CASE("sample_surface: per-triangle counts follow face areas") {
    // unit square split into two equal triangles
    TriMesh square;
    square.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    square.faces = {{0, 1, 2}, {0, 2, 3}};
    const int n = 10000;
    PointSample s = sample_surface(square, n, 5);
    REQUIRE(static_cast<int>(s.points.size()) == n);

    // a point lands in face 0 iff x > y
    int in_first = 0;
    for (const Vec3& p : s.points) in_first += p[0] > p[1];
    const double sigma = std::sqrt(n * 0.25);
    CHECK(std::abs(in_first - n / 2.0) <= 3.0 * sigma);
}

TEST_CASE("sample_surface: samples lie inside the triangle, deterministic per seed") {
    TriMesh tri;
    tri.vertices = {{0, 0, 0}, {2, 0, 1}, {0.5, 1.5, -0.5}};
    tri.faces = {{0, 1, 2}};
    PointSample a = sample_surface(tri, 500, 17);
    PointSample b = sample_surface(tri, 500, 17);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i] == b.points[i]);
        // barycentric validity
        const Vec3 v0 = tri.vertices[1] - tri.vertices[0];
        const Vec3 v1 = tri.vertices[2] - tri.vertices[0];
        const Vec3 w = a.points[i] - tri.vertices[0];
        const double d00 = dot(v0, v0), d01 = dot(v0, v1), d11 = dot(v1, v1);
        const double d20 = dot(w, v0), d21 = dot(w, v1);
        const double denom = d00 * d11 - d01 * d01;
        const double v = (d11 * d20 - d01 * d21) / denom;
        const double u = (d00 * d21 - d01 * d20) / denom;
        CHECK(v >= -1e-12);
        CHECK(u >= -1e-12);
        CHECK(v + u <= 1.0 + 1e-12);
    }
    PointSample c = sample_surface(tri, 500, 18);
    CHECK(c.points != a.points);
}

TEST_CASE("chamfer: identical sets, hand arithmetic, empty error") {
    Rng rng(7);
    PointSample p = random_cloud(50, rng);
    CHECK(chamfer(p, p) == 0.0);

    PointSample a, b;
    a.points = {{0, 0, 0}};
    b.points = {{1, 0, 0}};
    CHECK(chamfer(a, b) == 2.0);

    PointSample empty;
    CHECK_THROWS_AS(chamfer(empty, p), Error);
}

TEST_CASE("chamfer: accelerated path equals brute force") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        PointSample p = random_cloud(1 + static_cast<int>(rng.below(100)), rng);
        PointSample q = random_cloud(1 + static_cast<int>(rng.below(100)), rng);
        const double fast = chamfer(p, q);
        const double brute = brute_chamfer(p, q);
        CHECK(std::abs(fast - brute) <= 1e-12);
        CHECK(chamfer(p, q) == chamfer(q, p));
    }
}

TEST_CASE("f_score: identical, disjoint, constructed two-thirds case") {
    Rng rng(9);
    PointSample p = random_cloud(64, rng);
    CHECK(f_score(p, p) == 1.0);

    PointSample far_away = p;
    for (Vec3& x : far_away.points) x[0] += 10.0;
    CHECK(f_score(p, far_away) == 0.0);

    // half of P within tau of Q, all of Q within tau of P -> F = 2/3
    PointSample a, b;
    for (int i = 0; i < 10; ++i) {
        const double y = 0.2 * i;
        a.points.push_back({0.0, y, 0.0});           // near b
        a.points.push_back({5.0 + 0.2 * i, 0, 0});   // far from b
        b.points.push_back({0.05, y, 0.0});          // 0.05 from a's near point
    }
    const double f = f_score(a, b, 0.1);
    CHECK(f == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(f == brute_f_score(a, b, 0.1));
}

TEST_CASE("f_score: accelerated path equals brute force") {
    Rng rng(10);
    for (int trial = 0; trial < 30; ++trial) {
        PointSample p = random_cloud(1 + static_cast<int>(rng.below(80)), rng, 0.3);
        PointSample q = random_cloud(1 + static_cast<int>(rng.below(80)), rng, 0.3);
        CHECK(f_score(p, q) == brute_f_score(p, q, 0.1));
        CHECK(f_score(p, q) == f_score(q, p));
    }
}

TEST_CASE("voxelize_solid: unit cube occupancy matches the analytic volume") {
    TriMesh cube = make_box({0, 0, 0}, {0.5, 0.5, 0.5});
    REQUIRE(cube.is_watertight());
    VoxelGrid grid = voxelize_solid(cube, 64);
    CHECK(!grid.surface_only);
    const double expected = 32.0 * 32.0 * 32.0;
    CHECK(std::abs(static_cast<double>(grid.count()) - expected) <= 0.02 * expected);
}

TEST_CASE("voxelize_solid: non-watertight patch falls back to a flagged surface band") {
    TriMesh patch;
    patch.vertices = {{-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0.5, 0.5, 0}, {-0.5, 0.5, 0}};
    patch.faces = {{0, 1, 2}, {0, 2, 3}};
    CHECK(!patch.is_watertight());
    VoxelGrid grid = voxelize_solid(patch, 32);
    CHECK(grid.surface_only);
    CHECK(grid.count() > 0);

    TriMesh empty;
    VoxelGrid nothing = voxelize_solid(empty, 32);
    CHECK(nothing.count() == 0);
}

TEST_CASE("voxelize_solid: translation by one voxel pitch shifts occupancy by one cell") {
    const int r = 32;
    const double pitch = 2.0 / r;
    TriMesh base = make_box({0, 0, 0}, {0.26, 0.26, 0.26});
    TriMesh moved = base;
    for (Vec3& v : moved.vertices) v[0] += pitch;
    VoxelGrid ga = voxelize_solid(base, r);
    VoxelGrid gb = voxelize_solid(moved, r);
    CHECK(ga.count() == gb.count());
    for (int i = 0; i + 1 < r; ++i)
        for (int j = 0; j < r; ++j)
            for (int k = 0; k < r; ++k) CHECK(ga.occupied(i, j, k) == gb.occupied(i + 1, j, k));
}

TEST_CASE("voxelize_solid: invariant to face order permutation") {
    Rng rng(11);
    TriMesh cube = make_box({0.1, -0.05, 0.2}, {0.31, 0.22, 0.27});
    TriMesh shuffled = cube;
    rng.shuffle(shuffled.faces);
    CHECK(voxelize_solid(cube, 32) == voxelize_solid(shuffled, 32));
}

TEST_CASE("pairwise_iou: identical, disjoint, half-overlap analytic case") {
    TriMesh a = make_box({0, 0, 0}, {0.3, 0.3, 0.3});
    VoxelGrid ga = voxelize_solid(a, 64);
    CHECK(pairwise_iou({ga, ga}) == 1.0);

    TriMesh far_box = make_box({0, 0.7, 0}, {0.2, 0.2, 0.2});
    CHECK(pairwise_iou({ga, voxelize_solid(far_box, 64)}) == 0.0);

    // side-1 cubes overlapping half their volume: IoU = 0.5/1.5
    TriMesh c1 = make_box({-0.25, 0, 0}, {0.5, 0.5, 0.5});
    TriMesh c2 = make_box({0.25, 0, 0}, {0.5, 0.5, 0.5});
    const double iou = pairwise_iou({voxelize_solid(c1, 64), voxelize_solid(c2, 64)});
    CHECK(std::abs(iou - 1.0 / 3.0) <= 0.02);

    CHECK(pairwise_iou({ga}) == 0.0); // single part convention

    VoxelGrid empty_a(64), empty_b(64);
    CHECK(pairwise_iou({empty_a, empty_b}) == 0.0); // empty union convention
}

TEST_CASE("pairwise_iou: order invariant and matches the brute count") {
    TriMesh a = make_box({-0.2, 0, 0}, {0.3, 0.3, 0.3});
    TriMesh b = make_box({0.2, 0, 0.1}, {0.3, 0.25, 0.3});
    TriMesh c = make_box({0, 0.4, -0.2}, {0.2, 0.3, 0.2});
    std::vector<VoxelGrid> grids = {voxelize_solid(a, 16), voxelize_solid(b, 16),
                                    voxelize_solid(c, 16)};
    const double base = pairwise_iou(grids);
    std::vector<VoxelGrid> reordered = {grids[2], grids[0], grids[1]};
    CHECK(pairwise_iou(reordered) == base);
    CHECK(base == doctest::Approx(testing::brute_pairwise_iou(grids)).epsilon(1e-12));
}

TEST_CASE("voxelize_points marks exactly the cells containing points") {
    PointSample s;
    s.points = {{-0.99, -0.99, -0.99}, {0.99, 0.99, 0.99}, {0.0, 0.0, 0.0}, {2.0, 0, 0}};
    VoxelGrid g = voxelize_points(s, 4);
    CHECK(g.count() == 3); // the out-of-cube point is dropped
    CHECK(g.occupied(0, 0, 0));
    CHECK(g.occupied(3, 3, 3));
    CHECK(g.occupied(2, 2, 2));
}

TEST_CASE("assemble: identity, vertex counts, index validity") {
    TriMesh a = make_box({0, 0, 0}, {0.2, 0.2, 0.2});
    TriMesh one = assemble({a});
    CHECK(one.vertices.size() == a.vertices.size());
    CHECK(one.faces == a.faces);

    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        TriMesh b = make_box({rng.uniform(-0.5, 0.5), 0, 0}, {0.1, 0.3, 0.2});
        TriMesh both = assemble({a, b});
        CHECK(both.vertices.size() == a.vertices.size() + b.vertices.size());
        CHECK(both.faces.size() == a.faces.size() + b.faces.size());
        both.validate();
        CHECK(both.surface_area() ==
              doctest::Approx(a.surface_area() + b.surface_area()).epsilon(1e-12));
    }
}

TEST_CASE("mesh io: OBJ and PLY round trips") {
    const auto dir = std::filesystem::temp_directory_path() / "partforge_meshio";
    std::filesystem::create_directories(dir);
    TriMesh box = make_box({0.05, -0.125, 0.3}, {0.35, 0.22, 0.185});

    const std::string obj_path = (dir / "box.obj").string();
    write_obj(obj_path, box);
    TriMesh from_obj = read_obj(obj_path);
    REQUIRE(from_obj.vertices.size() == box.vertices.size());
    for (std::size_t i = 0; i < box.vertices.size(); ++i)
        CHECK(from_obj.vertices[i] == box.vertices[i]);
    CHECK(from_obj.faces == box.faces);

    const std::string ply_path = (dir / "box.ply").string();
    write_ply(ply_path, box);
    TriMesh from_ply = read_ply(ply_path);
    REQUIRE(from_ply.vertices.size() == box.vertices.size());
    for (std::size_t i = 0; i < box.vertices.size(); ++i)
        CHECK(from_ply.vertices[i] == box.vertices[i]);
    CHECK(from_ply.faces == box.faces);

    Rng rng(13);
    PointSample cloud = random_cloud(37, rng);
    const std::string cloud_path = (dir / "cloud.ply").string();
    write_point_cloud_ply(cloud_path, cloud);
    PointSample cloud_back = read_point_cloud_ply(cloud_path);
    CHECK(cloud_back.points == cloud.points);

    std::filesystem::remove_all(dir);
}

TEST_CASE("mesh io: quad OBJ faces fan-triangulate, ascii PLY rejected") {
    const auto dir = std::filesystem::temp_directory_path() / "partforge_meshio2";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "quad.obj");
        out << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    }
    TriMesh quad = read_obj((dir / "quad.obj").string());
    CHECK(quad.faces.size() == 2);
    {
        std::ofstream out(dir / "ascii.ply");
        out << "ply\nformat ascii 1.0\nelement vertex 0\nend_header\n";
    }
    CHECK_THROWS_AS(read_ply((dir / "ascii.ply").string()), Error);
    std::filesystem::remove_all(dir);
}
