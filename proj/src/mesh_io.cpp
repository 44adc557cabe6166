#include "partforge/mesh_io.hpp"

#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "binary PLY writer assumes a little-endian host");

namespace partforge {

namespace {

std::string lower_ext(const std::string& path) {
    const std::size_t dot = path.rfind('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

} // namespace

TriMesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open OBJ: " + path);
    TriMesh mesh;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p[0] >> p[1] >> p[2]))
                fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": bad vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // "f v", "f v/vt", "f v/vt/vn", "f v//vn"
                const std::size_t slash = tok.find('/');
                const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                int v = 0;
                try {
                    v = std::stoi(head);
                } catch (const std::exception&) {
                    fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": bad face index");
                }
                if (v <= 0)
                    fail(ErrorKind::unsupported,
                         path + ":" + std::to_string(line_no) + ": negative OBJ indices");
                idx.push_back(v - 1);
            }
            if (idx.size() < 3)
                fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": face needs 3+ indices");
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)
                mesh.faces.push_back({idx[0], idx[i], idx[i + 1]});
        }
    }
    mesh.cleanup();
    return mesh;
}

void write_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open OBJ for writing: " + path);
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v[0], v[1], v[2]);
        out << buf;
    }
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out) fail(ErrorKind::io, "failed writing OBJ: " + path);
}

namespace {

struct PlyProperty {
    std::string type; // scalar type, or list index type
    std::string name;
    bool is_list = false;
    std::string count_type;
};

std::size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    fail(ErrorKind::unsupported, "unsupported PLY property type '" + t + "'");
}

double read_scalar(std::ifstream& in, const std::string& type) {
    unsigned char raw[8];
    in.read(reinterpret_cast<char*>(raw), static_cast<std::streamsize>(ply_type_size(type)));
    if (type == "float" || type == "float32") {
        float f;
        std::memcpy(&f, raw, 4);
        return f;
    }
    if (type == "double" || type == "float64") {
        double d;
        std::memcpy(&d, raw, 8);
        return d;
    }
    if (type == "char" || type == "int8") return static_cast<signed char>(raw[0]);
    if (type == "uchar" || type == "uint8") return raw[0];
    if (type == "short" || type == "int16") {
        std::int16_t v;
        std::memcpy(&v, raw, 2);
        return v;
    }
    if (type == "ushort" || type == "uint16") {
        std::uint16_t v;
        std::memcpy(&v, raw, 2);
        return v;
    }
    if (type == "int" || type == "int32") {
        std::int32_t v;
        std::memcpy(&v, raw, 4);
        return v;
    }
    std::uint32_t v;
    std::memcpy(&v, raw, 4);
    return v;
}

} // namespace

TriMesh read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open PLY: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "ply") fail(ErrorKind::parse, path + ": not a PLY file");

    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<PlyProperty> props;
    };
    std::vector<Element> elements;
    bool binary_le = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "comment") continue;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian")
                fail(ErrorKind::unsupported, path + ": only binary little-endian PLY is supported");
            binary_le = true;
        } else if (tag == "element") {
            Element e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) fail(ErrorKind::parse, path + ": property before element");
            PlyProperty p;
            std::string kind;
            ls >> kind;
            if (kind == "list") {
                p.is_list = true;
                ls >> p.count_type >> p.type >> p.name;
            } else {
                p.type = kind;
                ls >> p.name;
            }
            elements.back().props.push_back(p);
        } else if (tag == "end_header") {
            break;
        }
    }
    if (!binary_le) fail(ErrorKind::parse, path + ": missing format line");

    TriMesh mesh;
    for (const auto& elem : elements) {
        if (elem.name == "vertex") {
            int ix = -1, iy = -1, iz = -1;
            for (std::size_t p = 0; p < elem.props.size(); ++p) {
                if (elem.props[p].name == "x") ix = static_cast<int>(p);
                if (elem.props[p].name == "y") iy = static_cast<int>(p);
                if (elem.props[p].name == "z") iz = static_cast<int>(p);
            }
            if (ix < 0 || iy < 0 || iz < 0)
                fail(ErrorKind::parse, path + ": vertex element lacks x/y/z");
            mesh.vertices.reserve(elem.count);
            for (std::size_t v = 0; v < elem.count; ++v) {
                Vec3 pos{0, 0, 0};
                for (std::size_t p = 0; p < elem.props.size(); ++p) {
                    if (elem.props[p].is_list)
                        fail(ErrorKind::unsupported, path + ": list property on vertices");
                    const double value = read_scalar(in, elem.props[p].type);
                    if (static_cast<int>(p) == ix) pos[0] = value;
                    if (static_cast<int>(p) == iy) pos[1] = value;
                    if (static_cast<int>(p) == iz) pos[2] = value;
                }
                mesh.vertices.push_back(pos);
            }
        } else if (elem.name == "face") {
            for (std::size_t f = 0; f < elem.count; ++f) {
                for (const PlyProperty& p : elem.props) {
                    if (!p.is_list) {
                        read_scalar(in, p.type);
                        continue;
                    }
                    const int n = static_cast<int>(read_scalar(in, p.count_type));
                    std::vector<int> idx(static_cast<std::size_t>(n));
                    for (int i = 0; i < n; ++i)
                        idx[static_cast<std::size_t>(i)] = static_cast<int>(read_scalar(in, p.type));
                    if (p.name == "vertex_indices" || p.name == "vertex_index") {
                        if (n < 3) fail(ErrorKind::parse, path + ": face with fewer than 3 indices");
                        for (int i = 1; i + 1 < n; ++i)
                            mesh.faces.push_back({idx[0], idx[static_cast<std::size_t>(i)],
                                                  idx[static_cast<std::size_t>(i + 1)]});
                    }
                }
            }
        } else {
            // skip unknown fixed-size elements
            std::size_t row = 0;
            bool fixed = true;
            for (const PlyProperty& p : elem.props) {
                if (p.is_list) fixed = false;
                else row += ply_type_size(p.type);
            }
            if (!fixed) fail(ErrorKind::unsupported, path + ": unknown list element '" + elem.name + "'");
            in.seekg(static_cast<std::streamoff>(row * elem.count), std::ios::cur);
        }
    }
    if (!in) fail(ErrorKind::parse, path + ": truncated PLY payload");
    mesh.cleanup();
    return mesh;
}

void write_ply(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open PLY for writing: " + path);
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    for (const Vec3& v : mesh.vertices)
        out.write(reinterpret_cast<const char*>(v.data()), 24);
    for (const auto& f : mesh.faces) {
        const unsigned char n = 3;
        out.write(reinterpret_cast<const char*>(&n), 1);
        std::int32_t idx[3] = {f[0], f[1], f[2]};
        out.write(reinterpret_cast<const char*>(idx), 12);
    }
    if (!out) fail(ErrorKind::io, "failed writing PLY: " + path);
}

TriMesh read_mesh(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "obj") return read_obj(path);
    if (ext == "ply") return read_ply(path);
    fail(ErrorKind::unsupported, "unknown mesh format: " + path);
}

void write_mesh(const std::string& path, const TriMesh& mesh) {
    const std::string ext = lower_ext(path);
    if (ext == "obj") return write_obj(path, mesh);
    if (ext == "ply") return write_ply(path, mesh);
    fail(ErrorKind::unsupported, "unknown mesh format: " + path);
}

void write_point_cloud_ply(const std::string& path, const PointSample& points) {
    TriMesh cloud;
    cloud.vertices = points.points;
    write_ply(path, cloud);
}

PointSample read_point_cloud_ply(const std::string& path) {
    TriMesh cloud = read_ply(path);
    PointSample out;
    out.points = std::move(cloud.vertices);
    return out;
}

} // namespace partforge
