// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "cosect/error.hpp"
#include "mc_tables.hpp"

namespace cosect {

namespace {

// Cell corner offsets and the corner pair of each of the 12 cell edges,
// in the table convention.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorner[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                    {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Canonical key of a cell edge: linear index of the lower corner voxel and
// the axis along which the edge runs. Shared edges of adjacent cells map to
// the same key, which dedups vertices deterministically.
uint64_t edge_key(const GridSpec& s, int x0, int y0, int z0, int c0, int c1) {
    int ax = kCorner[c0][0] + x0, ay = kCorner[c0][1] + y0, az = kCorner[c0][2] + z0;
    int bx = kCorner[c1][0] + x0, by = kCorner[c1][1] + y0, bz = kCorner[c1][2] + z0;
    if (std::tie(bx, by, bz) < std::tie(ax, ay, az)) {
        std::swap(ax, bx);
        std::swap(ay, by);
        std::swap(az, bz);
    }
    int axis = (bx != ax) ? 0 : (by != ay) ? 1 : 2;
    return uint64_t(s.linear_index(ax, ay, az)) * 3u + uint64_t(axis);
}

}  // namespace

TriMesh marching_cubes(const ScalarGrid& u, float iso, const BitGrid* valid) {
    const GridSpec& s = u.spec;
    if (s.dims.x < 2 || s.dims.y < 2 || s.dims.z < 2)
        throw Error(ErrorCode::InvalidArgument, "marching cubes needs dims >= 2");
    if (valid && !(valid->spec == s))
        throw Error(ErrorCode::ShapeMismatch, "validity mask spec differs from volume");

    TriMesh mesh;
    std::unordered_map<uint64_t, uint32_t> edge_vertices;

    float corner_val[8];
    Vec3i corner_vox[8];
    for (int z = 0; z + 1 < s.dims.z; ++z) {
        for (int y = 0; y + 1 < s.dims.y; ++y) {
            for (int x = 0; x + 1 < s.dims.x; ++x) {
                bool cell_valid = true;
                int cube_index = 0;
                for (int c = 0; c < 8; ++c) {
                    corner_vox[c] =
                        Vec3i(x + kCorner[c][0], y + kCorner[c][1], z + kCorner[c][2]);
                    if (valid &&
                        !valid->get(corner_vox[c].x, corner_vox[c].y, corner_vox[c].z)) {
                        cell_valid = false;
                        break;
                    }
                    corner_val[c] = u.at(corner_vox[c].x, corner_vox[c].y, corner_vox[c].z);
                    if (corner_val[c] < iso) cube_index |= 1 << c;
                }
                if (!cell_valid) continue;
                const int edges = detail::kMcEdgeTable[cube_index];
                if (edges == 0) continue;

                uint32_t edge_vtx[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(edges & (1 << e))) continue;
                    const int c0 = kEdgeCorner[e][0], c1 = kEdgeCorner[e][1];
                    const uint64_t key = edge_key(s, x, y, z, c0, c1);
                    auto it = edge_vertices.find(key);
                    if (it != edge_vertices.end()) {
                        edge_vtx[e] = it->second;
                        continue;
                    }
                    const float v0 = corner_val[c0], v1 = corner_val[c1];
                    float t = (v1 != v0) ? (iso - v0) / (v1 - v0) : 0.5f;
                    t = std::clamp(t, 0.0f, 1.0f);
                    Vec3f p0 = s.voxel_to_world(corner_vox[c0]);
                    Vec3f p1 = s.voxel_to_world(corner_vox[c1]);
                    uint32_t idx = uint32_t(mesh.vertices.size());
                    mesh.vertices.push_back(p0 + (p1 - p0) * t);
                    edge_vertices.emplace(key, idx);
                    edge_vtx[e] = idx;
                }

                // The table winds triangles toward the negative side; swap
                // two vertices so normals face the positive values.
                const int* tri = detail::kMcTriTable[cube_index];
                for (int k = 0; tri[k] != -1; k += 3) {
                    uint32_t a = edge_vtx[tri[k]];
                    uint32_t b = edge_vtx[tri[k + 1]];
                    uint32_t c = edge_vtx[tri[k + 2]];
                    if (a == b || b == c || a == c) continue;
                    mesh.triangles.push_back({a, c, b});
                }
            }
        }
    }
    return mesh;
}

bool mesh_is_closed(const TriMesh& m) {
    if (m.empty()) return false;
    std::unordered_map<uint64_t, int> edge_count;
    edge_count.reserve(m.triangles.size() * 3);
    for (const auto& t : m.triangles) {
        for (int e = 0; e < 3; ++e) {
            uint32_t a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_count[(uint64_t(a) << 32) | b];
        }
    }
    for (const auto& [k, n] : edge_count)
        if (n != 2) return false;
    return true;
}

double mesh_signed_volume(const TriMesh& m) {
    double vol = 0.0;
    for (const auto& t : m.triangles) {
        Vec3d a = m.vertices[t[0]].cast<double>();
        Vec3d b = m.vertices[t[1]].cast<double>();
        Vec3d c = m.vertices[t[2]].cast<double>();
        vol += a.dot(b.cross(c));
    }
    return vol / 6.0;
}

double mesh_area(const TriMesh& m) {
    double area = 0.0;
    for (const auto& t : m.triangles) {
        Vec3d a = m.vertices[t[0]].cast<double>();
        Vec3d b = m.vertices[t[1]].cast<double>();
        Vec3d c = m.vertices[t[2]].cast<double>();
        area += (b - a).cross(c - a).norm();
    }
    return 0.5 * area;
}

namespace {

bool ends_with(const std::string& s, const char* suffix) {
    const size_t n = std::strlen(suffix);
    return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

void save_obj(const std::string& path, const TriMesh& m) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    char buf[128];
    for (const Vec3f& v : m.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", double(v.x), double(v.y),
                      double(v.z));
        f << buf;
    }
    for (const auto& t : m.triangles)
        f << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!f) throw Error(ErrorCode::IoError, "short write to " + path);
}

TriMesh load_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::MalformedMeshFile, path + ": cannot open");
    TriMesh m;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string rec;
        ss >> rec;
        if (rec == "v") {
            Vec3f v;
            if (!(ss >> v.x >> v.y >> v.z))
                throw Error(ErrorCode::MalformedMeshFile, path + ": bad vertex record");
            m.vertices.push_back(v);
        } else if (rec == "f") {
            std::array<uint32_t, 3> t;
            for (int i = 0; i < 3; ++i) {
                std::string tok;
                if (!(ss >> tok))
                    throw Error(ErrorCode::MalformedMeshFile, path + ": bad face record");
                long idx = std::strtol(tok.c_str(), nullptr, 10);
                if (idx < 1 || size_t(idx) > m.vertices.size())
                    throw Error(ErrorCode::MalformedMeshFile,
                                path + ": face index out of range");
                t[i] = uint32_t(idx - 1);
            }
            m.triangles.push_back(t);
        }
    }
    return m;
}

void save_ply(const std::string& path, const TriMesh& m) {
    const bool with_quality = !m.quality.empty();
    if (with_quality && m.quality.size() != m.vertices.size())
        throw Error(ErrorCode::InvalidArgument, "quality attribute size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    f << "ply\nformat binary_little_endian 1.0\n";
    f << "element vertex " << m.vertices.size() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    if (with_quality) f << "property float quality\n";
    f << "element face " << m.triangles.size() << "\n";
    f << "property list uchar uint vertex_indices\n";
    f << "end_header\n";
    for (size_t i = 0; i < m.vertices.size(); ++i) {
        f.write(reinterpret_cast<const char*>(&m.vertices[i]), 12);
        if (with_quality) f.write(reinterpret_cast<const char*>(&m.quality[i]), 4);
    }
    const uint8_t three = 3;
    for (const auto& t : m.triangles) {
        f.write(reinterpret_cast<const char*>(&three), 1);
        f.write(reinterpret_cast<const char*>(t.data()), 12);
    }
    if (!f) throw Error(ErrorCode::IoError, "short write to " + path);
}

TriMesh load_ply(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::MalformedMeshFile, path + ": cannot open");
    std::string line;
    if (!std::getline(f, line) || line != "ply")
        throw Error(ErrorCode::MalformedMeshFile, path + ": not a PLY file");

    size_t vertex_count = 0, face_count = 0;
    bool with_quality = false, binary_le = false;
    std::vector<std::string> vertex_props;
    std::string element;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string rec;
        ss >> rec;
        if (rec == "format") {
            std::string fmt;
            ss >> fmt;
            binary_le = (fmt == "binary_little_endian");
        } else if (rec == "element") {
            std::string name;
            size_t n;
            ss >> name >> n;
            element = name;
            if (name == "vertex") vertex_count = n;
            else if (name == "face") face_count = n;
            else throw Error(ErrorCode::MalformedMeshFile, path + ": unsupported element " + name);
        } else if (rec == "property" && element == "vertex") {
            std::string type, name;
            ss >> type >> name;
            if (type != "float")
                throw Error(ErrorCode::MalformedMeshFile,
                            path + ": unsupported vertex property type " + type);
            vertex_props.push_back(name);
            if (name == "quality") with_quality = true;
        } else if (rec == "end_header") {
            break;
        }
    }
    if (!binary_le)
        throw Error(ErrorCode::MalformedMeshFile, path + ": expected binary_little_endian");
    const std::vector<std::string> want =
        with_quality ? std::vector<std::string>{"x", "y", "z", "quality"}
                     : std::vector<std::string>{"x", "y", "z"};
    if (vertex_props != want)
        throw Error(ErrorCode::MalformedMeshFile, path + ": unsupported vertex layout");

    TriMesh m;
    m.vertices.resize(vertex_count);
    if (with_quality) m.quality.resize(vertex_count);
    for (size_t i = 0; i < vertex_count; ++i) {
        f.read(reinterpret_cast<char*>(&m.vertices[i]), 12);
        if (with_quality) f.read(reinterpret_cast<char*>(&m.quality[i]), 4);
    }
    m.triangles.resize(face_count);
    for (size_t i = 0; i < face_count; ++i) {
        uint8_t n = 0;
        f.read(reinterpret_cast<char*>(&n), 1);
        if (n != 3)
            throw Error(ErrorCode::MalformedMeshFile, path + ": non-triangle face");
        f.read(reinterpret_cast<char*>(m.triangles[i].data()), 12);
    }
    if (!f) throw Error(ErrorCode::MalformedMeshFile, path + ": truncated data");
    for (const auto& t : m.triangles)
        for (uint32_t idx : t)
            if (idx >= m.vertices.size())
                throw Error(ErrorCode::MalformedMeshFile, path + ": face index out of range");
    return m;
}

}  // namespace

void save_mesh(const std::string& path, const TriMesh& m) {
    if (ends_with(path, ".obj")) save_obj(path, m);
    else if (ends_with(path, ".ply")) save_ply(path, m);
    else throw Error(ErrorCode::InvalidArgument, path + ": unknown mesh extension");
}

TriMesh load_mesh(const std::string& path) {
    if (ends_with(path, ".obj")) return load_obj(path);
    if (ends_with(path, ".ply")) return load_ply(path);
    throw Error(ErrorCode::InvalidArgument, path + ": unknown mesh extension");
}

}  // namespace cosect
