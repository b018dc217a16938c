// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cosect/math.hpp"

namespace cosect {

// Placement of a dense isotropic voxel grid: dims voxels per axis,
// origin = world position of the center of voxel (0,0,0).
struct GridSpec {
    Vec3i dims{2, 2, 2};
    float voxel_size = 0.0f;
    Vec3f origin{0.0f, 0.0f, 0.0f};

    GridSpec() = default;
    GridSpec(Vec3i dims_, float voxel_size_, Vec3f origin_);

    int64_t voxel_count() const {
        return int64_t(dims.x) * int64_t(dims.y) * int64_t(dims.z);
    }
    int64_t linear_index(int x, int y, int z) const {
        return (int64_t(z) * dims.y + y) * dims.x + x;
    }
    bool contains(const Vec3i& v) const {
        return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims.x && v.y < dims.y &&
               v.z < dims.z;
    }

    Vec3f voxel_to_world(const Vec3i& v) const {
        return origin + Vec3f(float(v.x), float(v.y), float(v.z)) * voxel_size;
    }
    // Continuous voxel coordinates; voxel centers land on integers.
    Vec3f world_to_voxel(const Vec3f& p) const {
        return (p - origin) / voxel_size;
    }
    Vec3i nearest_voxel(const Vec3f& p) const {
        Vec3f c = world_to_voxel(p);
        return {int(std::lround(c.x)), int(std::lround(c.y)), int(std::lround(c.z))};
    }

    // World-space box covered by the voxels (centers padded by half a voxel).
    Vec3f world_min() const { return origin - Vec3f(1, 1, 1) * (0.5f * voxel_size); }
    Vec3f world_max() const {
        return origin + Vec3f(float(dims.x) - 0.5f, float(dims.y) - 0.5f,
                              float(dims.z) - 0.5f) *
                            voxel_size;
    }
    bool covers_world_point(const Vec3f& p) const;

    bool operator==(const GridSpec& o) const {
        return dims == o.dims && voxel_size == o.voxel_size && origin == o.origin;
    }
};

// Dense raster of 32-bit reals, x-fastest linear order.
struct ScalarGrid {
    GridSpec spec;
    std::vector<float> values;

    ScalarGrid() = default;
    explicit ScalarGrid(const GridSpec& s, float fill = 0.0f)
        : spec(s), values(size_t(s.voxel_count()), fill) {}

    float& at(int x, int y, int z) { return values[size_t(spec.linear_index(x, y, z))]; }
    float at(int x, int y, int z) const {
        return values[size_t(spec.linear_index(x, y, z))];
    }
    float& operator[](int64_t i) { return values[size_t(i)]; }
    float operator[](int64_t i) const { return values[size_t(i)]; }

    void fill(float v) { values.assign(values.size(), v); }
    float min_value() const;
    float max_value() const;
    bool all_finite() const;
};

// Dense boolean raster sharing the GridSpec layout.
struct BitGrid {
    GridSpec spec;
    std::vector<uint8_t> bits;

    BitGrid() = default;
    explicit BitGrid(const GridSpec& s, bool fill = false)
        : spec(s), bits(size_t(s.voxel_count()), fill ? 1 : 0) {}

    bool get(int x, int y, int z) const {
        return bits[size_t(spec.linear_index(x, y, z))] != 0;
    }
    void set(int x, int y, int z, bool v) {
        bits[size_t(spec.linear_index(x, y, z))] = v ? 1 : 0;
    }
    int64_t count_set() const;
};

// Trilinear interpolation of the 8 voxel values around x. Returns nullopt
// when the interpolation cell is not fully inside the grid (OUTSIDE).
std::optional<float> trilinear_sample(const ScalarGrid& g, const Vec3f& x);

// Splits every voxel into 8 children carrying the parent value. The output
// covers the same world volume at half the voxel size.
ScalarGrid upsample_split(const ScalarGrid& g);

// CSVF volume format: ASCII header `csvf <dx> <dy> <dz> <voxel_size> <ox> <oy> <oz>`
// followed by little-endian 32-bit floats in x-fastest order. BitGrid uses
// tag `csvb` and one byte (0/1) per voxel.
void save_csvf(const std::string& path, const ScalarGrid& g);
ScalarGrid load_csvf(const std::string& path);
void save_csvb(const std::string& path, const BitGrid& g);
BitGrid load_csvb(const std::string& path);

}  // namespace cosect
