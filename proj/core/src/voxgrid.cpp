// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/voxgrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "cosect/error.hpp"

namespace cosect {

GridSpec::GridSpec(Vec3i dims_, float voxel_size_, Vec3f origin_)
    : dims(dims_), voxel_size(voxel_size_), origin(origin_) {
    if (dims.x < 2 || dims.y < 2 || dims.z < 2)
        throw Error(ErrorCode::InvalidArgument, "grid dims must be >= 2 per axis");
    if (!(voxel_size > 0.0f))
        throw Error(ErrorCode::InvalidArgument, "voxel_size must be positive");
}

bool GridSpec::covers_world_point(const Vec3f& p) const {
    Vec3f lo = world_min(), hi = world_max();
    return p.x >= lo.x && p.y >= lo.y && p.z >= lo.z && p.x <= hi.x && p.y <= hi.y &&
           p.z <= hi.z;
}

float ScalarGrid::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

float ScalarGrid::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

bool ScalarGrid::all_finite() const {
    for (float v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

int64_t BitGrid::count_set() const {
    int64_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
}

std::optional<float> trilinear_sample(const ScalarGrid& g, const Vec3f& x) {
    const GridSpec& s = g.spec;
    const Vec3f c = s.world_to_voxel(x);

    int bx = int(std::floor(c.x)), by = int(std::floor(c.y)), bz = int(std::floor(c.z));
    float fx = c.x - float(bx), fy = c.y - float(by), fz = c.z - float(bz);

    // Points exactly on the far face still have a valid cell on the inside.
    auto snap = [](int& b, float& f, int dim) {
        if (b == dim - 1 && f == 0.0f) {
            b -= 1;
            f = 1.0f;
        }
    };
    snap(bx, fx, s.dims.x);
    snap(by, fy, s.dims.y);
    snap(bz, fz, s.dims.z);

    if (bx < 0 || by < 0 || bz < 0 || bx + 1 >= s.dims.x || by + 1 >= s.dims.y ||
        bz + 1 >= s.dims.z)
        return std::nullopt;

    const int64_t i000 = s.linear_index(bx, by, bz);
    const int64_t dx = 1, dy = s.dims.x, dz = int64_t(s.dims.x) * s.dims.y;
    const float* v = g.values.data();

    float v00 = v[i000] * (1 - fx) + v[i000 + dx] * fx;
    float v10 = v[i000 + dy] * (1 - fx) + v[i000 + dy + dx] * fx;
    float v01 = v[i000 + dz] * (1 - fx) + v[i000 + dz + dx] * fx;
    float v11 = v[i000 + dz + dy] * (1 - fx) + v[i000 + dz + dy + dx] * fx;
    float v0 = v00 * (1 - fy) + v10 * fy;
    float v1 = v01 * (1 - fy) + v11 * fy;
    return v0 * (1 - fz) + v1 * fz;
}

ScalarGrid upsample_split(const ScalarGrid& g) {
    const GridSpec& s = g.spec;
    GridSpec out_spec(Vec3i(s.dims.x * 2, s.dims.y * 2, s.dims.z * 2), s.voxel_size * 0.5f,
                      s.origin - Vec3f(1, 1, 1) * (0.25f * s.voxel_size));
    ScalarGrid out(out_spec);
    for (int z = 0; z < s.dims.z; ++z)
        for (int y = 0; y < s.dims.y; ++y) {
            const float* src = &g.values[size_t(s.linear_index(0, y, z))];
            for (int cz = 0; cz < 2; ++cz)
                for (int cy = 0; cy < 2; ++cy) {
                    float* dst =
                        &out.values[size_t(out_spec.linear_index(0, 2 * y + cy, 2 * z + cz))];
                    for (int x = 0; x < s.dims.x; ++x) {
                        dst[2 * x] = src[x];
                        dst[2 * x + 1] = src[x];
                    }
                }
        }
    return out;
}

namespace {

void write_header(std::ofstream& f, const char* tag, const GridSpec& s) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s %d %d %d %.9g %.9g %.9g %.9g\n", tag, s.dims.x,
                  s.dims.y, s.dims.z, double(s.voxel_size), double(s.origin.x),
                  double(s.origin.y), double(s.origin.z));
    f << buf;
}

GridSpec read_header(std::ifstream& f, const char* tag, const std::string& path) {
    std::string line;
    if (!std::getline(f, line))
        throw Error(ErrorCode::IoError, "cannot read header of " + path);
    char got_tag[8] = {0};
    Vec3i dims;
    double h, ox, oy, oz;
    if (std::sscanf(line.c_str(), "%4s %d %d %d %lf %lf %lf %lf", got_tag, &dims.x, &dims.y,
                    &dims.z, &h, &ox, &oy, &oz) != 8 ||
        std::string(got_tag) != tag)
        throw Error(ErrorCode::IoError, "bad volume header in " + path);
    return GridSpec(dims, float(h), Vec3f(float(ox), float(oy), float(oz)));
}

}  // namespace

void save_csvf(const std::string& path, const ScalarGrid& g) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    write_header(f, "csvf", g.spec);
    static_assert(sizeof(float) == 4);
    f.write(reinterpret_cast<const char*>(g.values.data()),
            std::streamsize(g.values.size() * 4));
    if (!f) throw Error(ErrorCode::IoError, "short write to " + path);
}

ScalarGrid load_csvf(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
    ScalarGrid g(read_header(f, "csvf", path));
    f.read(reinterpret_cast<char*>(g.values.data()), std::streamsize(g.values.size() * 4));
    if (f.gcount() != std::streamsize(g.values.size() * 4))
        throw Error(ErrorCode::IoError, "truncated volume data in " + path);
    return g;
}

void save_csvb(const std::string& path, const BitGrid& g) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    write_header(f, "csvb", g.spec);
    f.write(reinterpret_cast<const char*>(g.bits.data()), std::streamsize(g.bits.size()));
    if (!f) throw Error(ErrorCode::IoError, "short write to " + path);
}

BitGrid load_csvb(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
    BitGrid g(read_header(f, "csvb", path));
    f.read(reinterpret_cast<char*>(g.bits.data()), std::streamsize(g.bits.size()));
    if (f.gcount() != std::streamsize(g.bits.size()))
        throw Error(ErrorCode::IoError, "truncated volume data in " + path);
    for (uint8_t& b : g.bits) b = b ? 1 : 0;
    return g;
}

}  // namespace cosect
