#include <cmath>

#include "partforge/dataset.hpp"

namespace partforge {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

ToyKind toy_kind_from_string(const std::string& name) {
    if (name == "stacked_boxes") return ToyKind::stacked_boxes;
    if (name == "spheres_on_rod") return ToyKind::spheres_on_rod;
    if (name == "l_bracket") return ToyKind::l_bracket;
    if (name == "tableau") return ToyKind::tableau;
    fail(ErrorKind::config, "unknown toy generator '" + name + "'");
}

std::string to_string(ToyKind kind) {
    switch (kind) {
        case ToyKind::stacked_boxes: return "stacked_boxes";
        case ToyKind::spheres_on_rod: return "spheres_on_rod";
        case ToyKind::l_bracket: return "l_bracket";
        case ToyKind::tableau: return "tableau";
    }
    return "?";
}

TriMesh make_box(const Vec3& center, const Vec3& half) {
    TriMesh m;
    for (int corner = 0; corner < 8; ++corner)
        m.vertices.push_back({center[0] + (corner & 1 ? half[0] : -half[0]),
                              center[1] + (corner & 2 ? half[1] : -half[1]),
                              center[2] + (corner & 4 ? half[2] : -half[2])});
    const int quads[6][4] = {
        {0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5},
    };
    for (const auto& q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    return m;
}

TriMesh make_uv_sphere(const Vec3& center, double radius, int segments, int rings) {
    if (segments < 3 || rings < 2) fail(ErrorKind::config, "sphere needs >=3 segments, >=2 rings");
    TriMesh m;
    // poles + (rings-1) latitude circles of `segments` points
    m.vertices.push_back({center[0], center[1], center[2] + radius}); // north
    for (int r = 1; r < rings; ++r) {
        const double phi = kPi * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double theta = 2.0 * kPi * s / segments;
            m.vertices.push_back({center[0] + radius * std::sin(phi) * std::cos(theta),
                                  center[1] + radius * std::sin(phi) * std::sin(theta),
                                  center[2] + radius * std::cos(phi)});
        }
    }
    m.vertices.push_back({center[0], center[1], center[2] - radius}); // south
    const int south = static_cast<int>(m.vertices.size()) - 1;
    auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };

    for (int s = 0; s < segments; ++s)
        m.faces.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
    for (int r = 1; r + 1 < rings; ++r)
        for (int s = 0; s < segments; ++s) {
            const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
            const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
            m.faces.push_back({a, c, d});
            m.faces.push_back({a, d, b});
        }
    for (int s = 0; s < segments; ++s)
        m.faces.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
    return m;
}

TriMesh make_cylinder(const Vec3& center, double radius, double half_height, int segments) {
    if (segments < 3) fail(ErrorKind::config, "cylinder needs >= 3 segments");
    TriMesh m;
    for (int ring = 0; ring < 2; ++ring) {
        const double z = center[2] + (ring ? half_height : -half_height);
        for (int s = 0; s < segments; ++s) {
            const double theta = 2.0 * kPi * s / segments;
            m.vertices.push_back(
                {center[0] + radius * std::cos(theta), center[1] + radius * std::sin(theta), z});
        }
    }
    const int top_center = static_cast<int>(m.vertices.size());
    m.vertices.push_back({center[0], center[1], center[2] + half_height});
    const int bottom_center = top_center + 1;
    m.vertices.push_back({center[0], center[1], center[2] - half_height});

    auto lower = [&](int s) { return s % segments; };
    auto upper = [&](int s) { return segments + s % segments; };
    for (int s = 0; s < segments; ++s) {
        m.faces.push_back({lower(s), lower(s + 1), upper(s + 1)});
        m.faces.push_back({lower(s), upper(s + 1), upper(s)});
        m.faces.push_back({top_center, upper(s), upper(s + 1)});
        m.faces.push_back({bottom_center, lower(s + 1), lower(s)});
    }
    return m;
}

namespace {

CanonicalAsset finish(std::vector<TriMesh> parts, std::vector<std::string> labels) {
    return normalize_canonical(std::move(parts), std::move(labels));
}

CanonicalAsset gen_stacked_boxes(int n, Rng& rng) {
    std::vector<TriMesh> parts;
    std::vector<std::string> labels;
    double y = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec3 half{rng.uniform(0.25, 0.6), rng.uniform(0.1, 0.3), rng.uniform(0.25, 0.6)};
        const double gap = rng.uniform(0.05, 0.15);
        parts.push_back(make_box({0, y + half[1], 0}, half));
        labels.push_back("box_" + std::to_string(i));
        y += 2.0 * half[1] + gap;
    }
    return finish(std::move(parts), std::move(labels));
}

CanonicalAsset gen_spheres_on_rod(int n, Rng& rng) {
    std::vector<TriMesh> parts;
    std::vector<std::string> labels;
    if (n == 1) {
        parts.push_back(make_uv_sphere({0, 0, 0}, rng.uniform(0.4, 0.8)));
        labels.push_back("sphere_0");
        return finish(std::move(parts), std::move(labels));
    }
    const int spheres = n - 1;
    const double spacing = 1.0;
    const double radius_cap = 0.32 * spacing; // keeps rod/sphere overlap well under the IoU bound
    const double rod_half_x = 0.5 * spacing * (spheres - 1) + 0.45 * spacing;
    parts.push_back(make_box({0, 0, 0}, {rod_half_x, 0.03, 0.03}));
    labels.push_back("rod");
    for (int i = 0; i < spheres; ++i) {
        const double x = -0.5 * spacing * (spheres - 1) + spacing * i;
        parts.push_back(make_uv_sphere({x, 0, 0}, rng.uniform(0.55, 1.0) * radius_cap));
        labels.push_back("sphere_" + std::to_string(i));
    }
    return finish(std::move(parts), std::move(labels));
}

CanonicalAsset gen_l_bracket(int n, Rng& rng) {
    if (n < 2 || n > 3) fail(ErrorKind::config, "l_bracket supports 2 or 3 parts");
    std::vector<TriMesh> parts;
    std::vector<std::string> labels;
    const double foot_len = rng.uniform(0.8, 1.4);
    const double upright_h = rng.uniform(0.8, 1.4);
    const double thick = rng.uniform(0.12, 0.2);
    const double gap = 0.02;
    parts.push_back(make_box({foot_len / 2, thick / 2, 0}, {foot_len / 2, thick / 2, 0.3}));
    labels.push_back("foot");
    parts.push_back(make_box({thick / 2, thick + gap + upright_h / 2, 0},
                             {thick / 2, upright_h / 2, 0.3}));
    labels.push_back("upright");
    if (n == 3) {
        parts.push_back(make_box({foot_len / 2, thick + gap + upright_h + gap + thick / 2, 0},
                                 {0.35, thick / 2, 0.3}));
        labels.push_back("cap");
    }
    return finish(std::move(parts), std::move(labels));
}

CanonicalAsset gen_tableau(int n, Rng& rng) {
    std::vector<TriMesh> parts;
    std::vector<std::string> labels;
    std::vector<Aabb> placed;
    for (int i = 0; i < n; ++i) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 200) fail(ErrorKind::domain, "tableau placement did not converge");
            const double size = rng.uniform(0.15, 0.35);
            const Vec3 center{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), size};
            Aabb box;
            box.grow(center - Vec3{size, size, size});
            box.grow(center + Vec3{size, size, size});
            bool clear = true;
            for (const Aabb& other : placed) {
                const bool overlap = box.lo[0] < other.hi[0] && other.lo[0] < box.hi[0] &&
                                     box.lo[1] < other.hi[1] && other.lo[1] < box.hi[1] &&
                                     box.lo[2] < other.hi[2] && other.lo[2] < box.hi[2];
                if (overlap) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;
            placed.push_back(box);
            const int kind = static_cast<int>(rng.below(3));
            if (kind == 0) {
                parts.push_back(make_box(center, {size * rng.uniform(0.6, 1.0),
                                                  size * rng.uniform(0.6, 1.0), size}));
                labels.push_back("box_" + std::to_string(i));
            } else if (kind == 1) {
                parts.push_back(make_uv_sphere(center, size * rng.uniform(0.7, 1.0)));
                labels.push_back("sphere_" + std::to_string(i));
            } else {
                parts.push_back(
                    make_cylinder(center, size * rng.uniform(0.6, 0.9), size * 0.95));
                labels.push_back("cylinder_" + std::to_string(i));
            }
            break;
        }
    }
    return finish(std::move(parts), std::move(labels));
}

} // namespace

CanonicalAsset generate_toy(const ToySpec& spec) {
    if (spec.parts < 1) fail(ErrorKind::config, "toy spec needs at least one part");
    Rng rng(spec.seed);
    switch (spec.kind) {
        case ToyKind::stacked_boxes: return gen_stacked_boxes(spec.parts, rng);
        case ToyKind::spheres_on_rod: return gen_spheres_on_rod(spec.parts, rng);
        case ToyKind::l_bracket: return gen_l_bracket(spec.parts, rng);
        case ToyKind::tableau: return gen_tableau(spec.parts, rng);
    }
    fail(ErrorKind::config, "unreachable toy kind");
}

} // namespace partforge
