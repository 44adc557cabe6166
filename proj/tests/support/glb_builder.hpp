#pragma once

// Assembles GLB/glTF fixture bytes for parser tests. Writing is intentionally
// separate code from the production reader.

#include <cstring>
#include <string>
#include <vector>

#include "json.hpp"

namespace partforge::testing {

class GlbBuilder {
public:
    GlbBuilder() {
        doc_["asset"] = {{"version", "2.0"}};
        doc_["scenes"] = nlohmann::json::array();
        doc_["scenes"].push_back({{"nodes", nlohmann::json::array()}});
        doc_["scene"] = 0;
        doc_["nodes"] = nlohmann::json::array();
        doc_["meshes"] = nlohmann::json::array();
        doc_["accessors"] = nlohmann::json::array();
        doc_["bufferViews"] = nlohmann::json::array();
    }

    // positions xyz-interleaved; indices triangle list (may be empty for
    // non-indexed). Returns the mesh index.
    int add_mesh(const std::string& name, const std::vector<float>& positions,
                 const std::vector<std::uint32_t>& indices, int mode = 4,
                 bool short_indices = true) {
        nlohmann::json prim;
        prim["attributes"]["POSITION"] = add_position_accessor(positions);
        if (!indices.empty()) prim["indices"] = add_index_accessor(indices, short_indices);
        prim["mode"] = mode;
        nlohmann::json mesh;
        if (!name.empty()) mesh["name"] = name;
        mesh["primitives"] = nlohmann::json::array({prim});
        doc_["meshes"].push_back(mesh);
        return static_cast<int>(doc_["meshes"].size()) - 1;
    }

    // mesh < 0 adds a pure grouping node. Returns the node index (not yet a root).
    int add_node(const std::string& name, int mesh) {
        nlohmann::json node;
        if (!name.empty()) node["name"] = name;
        if (mesh >= 0) node["mesh"] = mesh;
        doc_["nodes"].push_back(node);
        return static_cast<int>(doc_["nodes"].size()) - 1;
    }

    void set_trs(int node, const std::vector<double>& translation,
                 const std::vector<double>& rotation = {}, const std::vector<double>& scale = {}) {
        if (!translation.empty()) doc_["nodes"][static_cast<std::size_t>(node)]["translation"] = translation;
        if (!rotation.empty()) doc_["nodes"][static_cast<std::size_t>(node)]["rotation"] = rotation;
        if (!scale.empty()) doc_["nodes"][static_cast<std::size_t>(node)]["scale"] = scale;
    }

    void set_matrix(int node, const std::vector<double>& matrix16) {
        doc_["nodes"][static_cast<std::size_t>(node)]["matrix"] = matrix16;
    }

    void add_child(int parent, int child) {
        doc_["nodes"][static_cast<std::size_t>(parent)]["children"].push_back(child);
    }

    void add_root(int node) { doc_["scenes"][0]["nodes"].push_back(node); }

    void add_textured_material() {
        doc_["materials"].push_back(
            {{"pbrMetallicRoughness", {{"baseColorTexture", {{"index", 0}}}}}});
    }

    void require_extension(const std::string& name) { doc_["extensionsRequired"].push_back(name); }

    std::vector<std::uint8_t> build_glb() {
        nlohmann::json doc = doc_;
        if (!bin_.empty())
            doc["buffers"] = nlohmann::json::array({{{"byteLength", bin_.size()}}});
        std::string json_text = doc.dump();
        while (json_text.size() % 4) json_text.push_back(' ');
        std::vector<std::uint8_t> bin = bin_;
        while (bin.size() % 4) bin.push_back(0);

        std::vector<std::uint8_t> out;
        auto push_u32 = [&](std::uint32_t v) {
            const std::size_t at = out.size();
            out.resize(at + 4);
            std::memcpy(out.data() + at, &v, 4);
        };
        push_u32(0x46546C67u); // glTF
        push_u32(2);
        push_u32(static_cast<std::uint32_t>(12 + 8 + json_text.size() + (bin.empty() ? 0 : 8 + bin.size())));
        push_u32(static_cast<std::uint32_t>(json_text.size()));
        push_u32(0x4E4F534Au); // JSON
        out.insert(out.end(), json_text.begin(), json_text.end());
        if (!bin.empty()) {
            push_u32(static_cast<std::uint32_t>(bin.size()));
            push_u32(0x004E4942u); // BIN
            out.insert(out.end(), bin.begin(), bin.end());
        }
        return out;
    }

    // standalone .gltf JSON with the buffer embedded as a base64 data URI
    std::string build_gltf_json() {
        static const char* table =
            "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        std::string b64;
        for (std::size_t i = 0; i < bin_.size(); i += 3) {
            std::uint32_t chunk = bin_[i] << 16;
            if (i + 1 < bin_.size()) chunk |= bin_[i + 1] << 8;
            if (i + 2 < bin_.size()) chunk |= bin_[i + 2];
            b64.push_back(table[(chunk >> 18) & 63]);
            b64.push_back(table[(chunk >> 12) & 63]);
            b64.push_back(i + 1 < bin_.size() ? table[(chunk >> 6) & 63] : '=');
            b64.push_back(i + 2 < bin_.size() ? table[chunk & 63] : '=');
        }
        nlohmann::json doc = doc_;
        if (!bin_.empty())
            doc["buffers"] = nlohmann::json::array(
                {{{"byteLength", bin_.size()},
                  {"uri", "data:application/octet-stream;base64," + b64}}});
        return doc.dump();
    }

private:
    int add_position_accessor(const std::vector<float>& positions) {
        const std::size_t offset = append_bytes(positions.data(), positions.size() * 4);
        doc_["bufferViews"].push_back(
            {{"buffer", 0}, {"byteOffset", offset}, {"byteLength", positions.size() * 4}});
        doc_["accessors"].push_back({{"bufferView", doc_["bufferViews"].size() - 1},
                                     {"componentType", 5126},
                                     {"count", positions.size() / 3},
                                     {"type", "VEC3"}});
        return static_cast<int>(doc_["accessors"].size()) - 1;
    }

    int add_index_accessor(const std::vector<std::uint32_t>& indices, bool short_indices) {
        std::size_t offset;
        if (short_indices) {
            std::vector<std::uint16_t> idx(indices.begin(), indices.end());
            offset = append_bytes(idx.data(), idx.size() * 2);
        } else {
            offset = append_bytes(indices.data(), indices.size() * 4);
        }
        doc_["bufferViews"].push_back({{"buffer", 0},
                                       {"byteOffset", offset},
                                       {"byteLength", indices.size() * (short_indices ? 2 : 4)}});
        doc_["accessors"].push_back({{"bufferView", doc_["bufferViews"].size() - 1},
                                     {"componentType", short_indices ? 5123 : 5125},
                                     {"count", indices.size()},
                                     {"type", "SCALAR"}});
        return static_cast<int>(doc_["accessors"].size()) - 1;
    }

    std::size_t append_bytes(const void* data, std::size_t size) {
        while (bin_.size() % 4) bin_.push_back(0);
        const std::size_t offset = bin_.size();
        bin_.resize(offset + size);
        std::memcpy(bin_.data() + offset, data, size);
        return offset;
    }

    nlohmann::json doc_;
    std::vector<std::uint8_t> bin_;
};

// float positions of a cube with the given center/half extent, 12 triangles
inline void cube_geometry(float cx, float cy, float cz, float h, std::vector<float>& positions,
                          std::vector<std::uint32_t>& indices) {
    positions.clear();
    indices.clear();
    for (int corner = 0; corner < 8; ++corner) {
        positions.push_back(cx + (corner & 1 ? h : -h));
        positions.push_back(cy + (corner & 2 ? h : -h));
        positions.push_back(cz + (corner & 4 ? h : -h));
    }
    const int quads[6][4] = {
        {0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5},
    };
    for (const auto& q : quads) {
        indices.insert(indices.end(), {static_cast<std::uint32_t>(q[0]),
                                       static_cast<std::uint32_t>(q[1]),
                                       static_cast<std::uint32_t>(q[2])});
        indices.insert(indices.end(), {static_cast<std::uint32_t>(q[0]),
                                       static_cast<std::uint32_t>(q[2]),
                                       static_cast<std::uint32_t>(q[3])});
    }
}

} // namespace partforge::testing
