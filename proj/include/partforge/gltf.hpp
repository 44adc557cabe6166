#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "partforge/geometry.hpp"

namespace partforge {

struct ExtractOptions {
    // true: any primitive mode other than TRIANGLES rejects the asset.
    // false: strips and fans are triangulated; points and lines reject.
    bool strict_triangles = false;
    // split each part into connected components (off: a part is a mesh-bearing node)
    bool split_components = false;
};

struct NamedPart {
    std::string name;
    TriMesh mesh;
};

struct GltfContents {
    std::vector<NamedPart> parts;
    bool has_texture = false; // any material with a base-color texture
};

// Parse a GLB container or bare glTF 2.0 JSON from memory. base_dir resolves
// relative buffer URIs for .gltf files. One part per mesh-bearing node, with
// the node-to-world transform applied and primitives merged.
GltfContents extract_parts(const std::vector<std::uint8_t>& bytes,
                           const ExtractOptions& options = {}, const std::string& base_dir = "");

GltfContents load_gltf(const std::string& path, const ExtractOptions& options = {});

} // namespace partforge
