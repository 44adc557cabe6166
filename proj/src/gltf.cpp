#include "partforge/gltf.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace partforge {

namespace {

using json = nlohmann::json;

using Mat4 = std::array<double, 16>; // column-major, glTF convention

Mat4 identity4() {
    Mat4 m{};
    m[0] = m[5] = m[10] = m[15] = 1.0;
    return m;
}

Mat4 matmul4(const Mat4& a, const Mat4& b) {
    Mat4 out{};
    for (int c = 0; c < 4; ++c)
        for (int r = 0; r < 4; ++r) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += a[k * 4 + r] * b[c * 4 + k];
            out[c * 4 + r] = acc;
        }
    return out;
}

Vec3 transform_point(const Mat4& m, const Vec3& p) {
    return {m[0] * p[0] + m[4] * p[1] + m[8] * p[2] + m[12],
            m[1] * p[0] + m[5] * p[1] + m[9] * p[2] + m[13],
            m[2] * p[0] + m[6] * p[1] + m[10] * p[2] + m[14]};
}

Mat4 trs_matrix(const json& node) {
    Vec3 t{0, 0, 0};
    std::array<double, 4> q{0, 0, 0, 1}; // x y z w
    Vec3 s{1, 1, 1};
    if (node.contains("translation"))
        for (int i = 0; i < 3; ++i) t[static_cast<std::size_t>(i)] = node["translation"][static_cast<std::size_t>(i)].get<double>();
    if (node.contains("rotation"))
        for (int i = 0; i < 4; ++i) q[static_cast<std::size_t>(i)] = node["rotation"][static_cast<std::size_t>(i)].get<double>();
    if (node.contains("scale"))
        for (int i = 0; i < 3; ++i) s[static_cast<std::size_t>(i)] = node["scale"][static_cast<std::size_t>(i)].get<double>();

    const double x = q[0], y = q[1], z = q[2], w = q[3];
    // rotation matrix from unit quaternion, column-major
    Mat4 m = identity4();
    m[0] = 1 - 2 * (y * y + z * z);
    m[1] = 2 * (x * y + z * w);
    m[2] = 2 * (x * z - y * w);
    m[4] = 2 * (x * y - z * w);
    m[5] = 1 - 2 * (x * x + z * z);
    m[6] = 2 * (y * z + x * w);
    m[8] = 2 * (x * z + y * w);
    m[9] = 2 * (y * z - x * w);
    m[10] = 1 - 2 * (x * x + y * y);
    // scale columns, then translate
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) m[c * 4 + r] *= s[static_cast<std::size_t>(c)];
    m[12] = t[0];
    m[13] = t[1];
    m[14] = t[2];
    return m;
}

int base64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::vector<std::uint8_t> decode_base64(const std::string& text) {
    std::vector<std::uint8_t> out;
    out.reserve(text.size() * 3 / 4);
    int acc = 0, bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = base64_value(c);
        if (v < 0) fail(ErrorKind::parse, "invalid base64 in data URI");
        acc = (acc << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
        }
    }
    return out;
}

struct BufferStore {
    std::vector<std::vector<std::uint8_t>> buffers;
};

struct Parsed {
    json doc;
    BufferStore store;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open: " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, b.data() + off, 4);
    return v;
}

Parsed parse_container(const std::vector<std::uint8_t>& bytes, const std::string& base_dir) {
    Parsed parsed;
    std::vector<std::uint8_t> glb_bin;
    bool has_glb_bin = false;

    if (bytes.size() >= 12 && read_u32(bytes, 0) == 0x46546C67u) { // "glTF"
        const std::uint32_t version = read_u32(bytes, 4);
        if (version != 2)
            fail(ErrorKind::unsupported, "GLB version " + std::to_string(version) + " (need 2)");
        const std::uint32_t total = read_u32(bytes, 8);
        if (total > bytes.size())
            fail(ErrorKind::parse, "GLB length field exceeds file size at byte offset 8");
        std::size_t off = 12;
        std::string json_text;
        while (off + 8 <= total) {
            const std::uint32_t chunk_len = read_u32(bytes, off);
            const std::uint32_t chunk_type = read_u32(bytes, off + 4);
            if (off + 8 + chunk_len > total)
                fail(ErrorKind::parse,
                     "GLB chunk overruns file at byte offset " + std::to_string(off));
            if (chunk_type == 0x4E4F534Au) // JSON
                json_text.assign(reinterpret_cast<const char*>(bytes.data() + off + 8), chunk_len);
            else if (chunk_type == 0x004E4942u) { // BIN
                glb_bin.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off + 8),
                               bytes.begin() + static_cast<std::ptrdiff_t>(off + 8 + chunk_len));
                has_glb_bin = true;
            }
            off += 8 + chunk_len + (chunk_len % 4 ? 4 - chunk_len % 4 : 0);
        }
        if (json_text.empty()) fail(ErrorKind::parse, "GLB has no JSON chunk");
        try {
            parsed.doc = json::parse(json_text);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::parse, std::string("GLB JSON chunk: ") + e.what());
        }
    } else {
        try {
            parsed.doc = json::parse(bytes.begin(), bytes.end());
        } catch (const json::parse_error& e) {
            fail(ErrorKind::parse, std::string("glTF JSON: ") + e.what());
        }
    }

    if (parsed.doc.contains("extensionsRequired") && !parsed.doc["extensionsRequired"].empty()) {
        std::string names;
        for (const auto& e : parsed.doc["extensionsRequired"])
            names += (names.empty() ? "" : ", ") + e.get<std::string>();
        fail(ErrorKind::unsupported, "asset requires unsupported glTF extensions: " + names);
    }

    if (parsed.doc.contains("buffers")) {
        for (const auto& buf : parsed.doc["buffers"]) {
            if (buf.contains("uri")) {
                const std::string uri = buf["uri"].get<std::string>();
                const std::string data_prefix = "data:";
                if (uri.rfind(data_prefix, 0) == 0) {
                    const std::size_t comma = uri.find(',');
                    if (comma == std::string::npos)
                        fail(ErrorKind::parse, "malformed data URI in buffer");
                    parsed.store.buffers.push_back(decode_base64(uri.substr(comma + 1)));
                } else {
                    const std::string path = base_dir.empty() ? uri : base_dir + "/" + uri;
                    parsed.store.buffers.push_back(read_file_bytes(path));
                }
            } else if (has_glb_bin && parsed.store.buffers.empty()) {
                parsed.store.buffers.push_back(glb_bin);
            } else {
                fail(ErrorKind::parse, "buffer without uri outside a GLB container");
            }
        }
    }
    return parsed;
}

class AccessorReader {
public:
    AccessorReader(const json& doc, const BufferStore& store) : doc_(doc), store_(store) {}

    std::vector<Vec3> read_vec3(int accessor_index) const {
        const json& acc = accessor(accessor_index);
        if (acc.value("type", "") != "VEC3" || acc.value("componentType", 0) != 5126)
            fail(ErrorKind::unsupported, "accessor " + std::to_string(accessor_index) +
                                             ": POSITION must be float VEC3");
        const std::size_t count = acc.value("count", std::size_t{0});
        std::vector<Vec3> out(count);
        walk(acc, 12, [&](std::size_t i, const std::uint8_t* p) {
            float v[3];
            std::memcpy(v, p, 12);
            out[i] = {v[0], v[1], v[2]};
        });
        return out;
    }

    std::vector<int> read_indices(int accessor_index) const {
        const json& acc = accessor(accessor_index);
        if (acc.value("type", "") != "SCALAR")
            fail(ErrorKind::unsupported, "index accessor must be SCALAR");
        const int ct = acc.value("componentType", 0);
        const std::size_t count = acc.value("count", std::size_t{0});
        std::vector<int> out(count);
        if (ct == 5121) {
            walk(acc, 1, [&](std::size_t i, const std::uint8_t* p) { out[i] = *p; });
        } else if (ct == 5123) {
            walk(acc, 2, [&](std::size_t i, const std::uint8_t* p) {
                std::uint16_t v;
                std::memcpy(&v, p, 2);
                out[i] = v;
            });
        } else if (ct == 5125) {
            walk(acc, 4, [&](std::size_t i, const std::uint8_t* p) {
                std::uint32_t v;
                std::memcpy(&v, p, 4);
                out[i] = static_cast<int>(v);
            });
        } else {
            fail(ErrorKind::unsupported, "index componentType " + std::to_string(ct));
        }
        return out;
    }

private:
    const json& accessor(int index) const {
        if (!doc_.contains("accessors") || index < 0 ||
            index >= static_cast<int>(doc_["accessors"].size()))
            fail(ErrorKind::parse, "accessor index out of range");
        const json& acc = doc_["accessors"][static_cast<std::size_t>(index)];
        if (acc.contains("sparse")) fail(ErrorKind::unsupported, "sparse accessors");
        return acc;
    }

    template <typename Fn>
    void walk(const json& acc, std::size_t element_size, Fn&& fn) const {
        const std::size_t count = acc.value("count", std::size_t{0});
        if (!acc.contains("bufferView")) fail(ErrorKind::unsupported, "accessor without bufferView");
        const json& view = doc_["bufferViews"][acc["bufferView"].get<std::size_t>()];
        const std::size_t buf_index = view.value("buffer", std::size_t{0});
        if (buf_index >= store_.buffers.size()) fail(ErrorKind::parse, "buffer index out of range");
        const auto& buf = store_.buffers[buf_index];
        const std::size_t base = view.value("byteOffset", std::size_t{0}) +
                                 acc.value("byteOffset", std::size_t{0});
        const std::size_t stride = view.value("byteStride", std::size_t{0});
        const std::size_t step = stride ? stride : element_size;
        if (count && base + (count - 1) * step + element_size > buf.size())
            fail(ErrorKind::parse, "accessor overruns buffer at byte offset " + std::to_string(base));
        for (std::size_t i = 0; i < count; ++i) fn(i, buf.data() + base + i * step);
    }

    const json& doc_;
    const BufferStore& store_;
};

TriMesh mesh_from_primitives(const json& doc, const AccessorReader& reader, const json& mesh,
                             const Mat4& world, const ExtractOptions& options) {
    TriMesh out;
    for (const auto& prim : mesh.value("primitives", json::array())) {
        const int mode = prim.value("mode", 4);
        if (mode != 4 && options.strict_triangles)
            fail(ErrorKind::unsupported, "primitive mode " + std::to_string(mode) +
                                             " rejected (strict triangles)");
        if (mode != 4 && mode != 5 && mode != 6)
            fail(ErrorKind::unsupported, "primitive mode " + std::to_string(mode) +
                                             " has no triangle interpretation");
        if (!prim.contains("attributes") || !prim["attributes"].contains("POSITION"))
            fail(ErrorKind::parse, "primitive lacks POSITION");
        std::vector<Vec3> pos = reader.read_vec3(prim["attributes"]["POSITION"].get<int>());
        std::vector<int> idx;
        if (prim.contains("indices")) {
            idx = reader.read_indices(prim["indices"].get<int>());
        } else {
            idx.resize(pos.size());
            for (std::size_t i = 0; i < pos.size(); ++i) idx[i] = static_cast<int>(i);
        }

        const int offset = static_cast<int>(out.vertices.size());
        for (const Vec3& p : pos) out.vertices.push_back(transform_point(world, p));
        auto push_tri = [&](int a, int b, int c) {
            out.faces.push_back({a + offset, b + offset, c + offset});
        };
        if (mode == 4) {
            for (std::size_t i = 0; i + 2 < idx.size(); i += 3)
                push_tri(idx[i], idx[i + 1], idx[i + 2]);
        } else if (mode == 5) { // strip
            for (std::size_t i = 0; i + 2 < idx.size(); ++i) {
                if (i % 2 == 0) push_tri(idx[i], idx[i + 1], idx[i + 2]);
                else push_tri(idx[i + 1], idx[i], idx[i + 2]);
            }
        } else { // fan
            for (std::size_t i = 1; i + 1 < idx.size(); ++i) push_tri(idx[0], idx[i], idx[i + 1]);
        }
    }
    (void)doc;
    return out;
}

} // namespace

GltfContents extract_parts(const std::vector<std::uint8_t>& bytes, const ExtractOptions& options,
                           const std::string& base_dir) {
    Parsed parsed = parse_container(bytes, base_dir);
    const json& doc = parsed.doc;
    AccessorReader reader(doc, parsed.store);

    GltfContents out;
    if (doc.contains("materials"))
        for (const auto& mat : doc["materials"])
            if (mat.contains("pbrMetallicRoughness") &&
                mat["pbrMetallicRoughness"].contains("baseColorTexture"))
                out.has_texture = true;

    if (!doc.contains("nodes")) return out;
    const json& nodes = doc["nodes"];

    // roots: the default scene's nodes, else every node nobody references
    std::vector<int> roots;
    if (doc.contains("scenes") && !doc["scenes"].empty()) {
        const std::size_t scene = doc.value("scene", std::size_t{0});
        for (const auto& n : doc["scenes"][scene].value("nodes", json::array()))
            roots.push_back(n.get<int>());
    } else {
        std::vector<char> has_parent(nodes.size(), 0);
        for (const auto& node : nodes)
            for (const auto& child : node.value("children", json::array()))
                has_parent[child.get<std::size_t>()] = 1;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (!has_parent[i]) roots.push_back(static_cast<int>(i));
    }

    // depth-first traversal with composed transforms
    struct Item {
        int node;
        Mat4 world;
    };
    std::vector<Item> stack;
    for (auto it = roots.rbegin(); it != roots.rend(); ++it)
        stack.push_back({*it, identity4()});
    while (!stack.empty()) {
        Item item = stack.back();
        stack.pop_back();
        if (item.node < 0 || item.node >= static_cast<int>(nodes.size()))
            fail(ErrorKind::parse, "node index out of range");
        const json& node = nodes[static_cast<std::size_t>(item.node)];
        Mat4 local = identity4();
        if (node.contains("matrix")) {
            for (int i = 0; i < 16; ++i)
                local[static_cast<std::size_t>(i)] = node["matrix"][static_cast<std::size_t>(i)].get<double>();
        } else {
            local = trs_matrix(node);
        }
        const Mat4 world = matmul4(item.world, local);

        if (node.contains("mesh")) {
            const std::size_t mesh_index = node["mesh"].get<std::size_t>();
            if (!doc.contains("meshes") || mesh_index >= doc["meshes"].size())
                fail(ErrorKind::parse, "mesh index out of range");
            const json& mesh = doc["meshes"][mesh_index];
            std::string name = node.value("name", "");
            if (name.empty()) name = mesh.value("name", "");
            if (name.empty()) name = "part_" + std::to_string(out.parts.size());
            TriMesh tri = mesh_from_primitives(doc, reader, mesh, world, options);
            tri.cleanup();
            if (!tri.faces.empty()) out.parts.push_back({std::move(name), std::move(tri)});
        }
        const auto children = node.value("children", json::array());
        for (auto it = children.rbegin(); it != children.rend(); ++it)
            stack.push_back({it->get<int>(), world});
    }

    if (options.split_components) {
        std::vector<NamedPart> split;
        for (NamedPart& part : out.parts) {
            // union-find over shared vertices
            std::vector<int> parent(part.mesh.vertices.size());
            for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
            std::function<int(int)> find = [&](int x) {
                while (parent[static_cast<std::size_t>(x)] != x) {
                    parent[static_cast<std::size_t>(x)] =
                        parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
                    x = parent[static_cast<std::size_t>(x)];
                }
                return x;
            };
            for (const auto& f : part.mesh.faces) {
                parent[static_cast<std::size_t>(find(f[1]))] = find(f[0]);
                parent[static_cast<std::size_t>(find(f[2]))] = find(f[0]);
            }
            std::map<int, TriMesh> comps;
            std::map<int, std::vector<int>> remap;
            for (const auto& f : part.mesh.faces) {
                const int root = find(f[0]);
                TriMesh& m = comps[root];
                std::vector<int>& r = remap[root];
                if (r.empty()) r.assign(part.mesh.vertices.size(), -1);
                std::array<int, 3> nf{};
                for (int e = 0; e < 3; ++e) {
                    const int v = f[static_cast<std::size_t>(e)];
                    if (r[static_cast<std::size_t>(v)] < 0) {
                        r[static_cast<std::size_t>(v)] = static_cast<int>(m.vertices.size());
                        m.vertices.push_back(part.mesh.vertices[static_cast<std::size_t>(v)]);
                    }
                    nf[static_cast<std::size_t>(e)] = r[static_cast<std::size_t>(v)];
                }
                m.faces.push_back(nf);
            }
            int piece = 0;
            for (auto& [root, mesh] : comps) {
                split.push_back({part.name + (comps.size() > 1 ? "." + std::to_string(piece) : ""),
                                 std::move(mesh)});
                ++piece;
            }
        }
        out.parts = std::move(split);
    }
    return out;
}

GltfContents load_gltf(const std::string& path, const ExtractOptions& options) {
    std::string base_dir;
    const std::size_t slash = path.find_last_of("/\\");
    if (slash != std::string::npos) base_dir = path.substr(0, slash);
    return extract_parts(read_file_bytes(path), options, base_dir);
}

} // namespace partforge
