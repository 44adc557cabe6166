#pragma once

// Minimal watertight fixture meshes for geometry tests.

#include "partforge/geometry.hpp"

namespace partforge::testing {

inline TriMesh make_box(const Vec3& center, const Vec3& half) {
    TriMesh m;
    for (int corner = 0; corner < 8; ++corner)
        m.vertices.push_back({center[0] + (corner & 1 ? half[0] : -half[0]),
                              center[1] + (corner & 2 ? half[1] : -half[1]),
                              center[2] + (corner & 4 ? half[2] : -half[2])});
    // 12 triangles, outward-facing
    const int quads[6][4] = {
        {0, 2, 3, 1}, // -z ... orientation irrelevant for occupancy
        {4, 5, 7, 6}, // +z
        {0, 1, 5, 4}, // -y
        {2, 6, 7, 3}, // +y
        {0, 4, 6, 2}, // -x
        {1, 3, 7, 5}, // +x
    };
    for (const auto& q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    return m;
}

} // namespace partforge::testing
