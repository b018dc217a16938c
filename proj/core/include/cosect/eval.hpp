// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "cosect/mesh.hpp"

namespace cosect {

struct EvalResult {
    double accuracy = 0.0;      // mean reconstructed-to-GT distance, meters
    double completeness = 0.0;  // mean GT-to-reconstructed distance, meters
    int sample_count = 0;
};

// Uniform area-weighted surface samples; bit-identical for a fixed seed.
std::vector<Vec3f> sample_surface(const TriMesh& m, int n, uint32_t seed);

// Axis-aligned bounding-box tree over mesh triangles for nearest queries.
class MeshDistanceIndex {
public:
    explicit MeshDistanceIndex(const TriMesh& m);

    float distance(const Vec3f& x) const;

private:
    struct Node {
        Vec3f lo, hi;
        int32_t left = -1, right = -1;   // children; -1 for leaves
        int32_t first = 0, count = 0;    // triangle range for leaves
    };
    int32_t build(int32_t first, int32_t count);

    std::vector<Vec3f> va_, vb_, vc_;  // triangle corners by leaf order
    std::vector<Node> nodes_;
    int32_t root_ = -1;
};

// Exact unsigned distance from x to the nearest triangle of m.
float point_to_mesh_distance(const Vec3f& x, const TriMesh& m);

// Closest distance from a point to one triangle (face, edge and vertex cases).
float point_triangle_distance(const Vec3f& x, const Vec3f& a, const Vec3f& b, const Vec3f& c);

// Mean sampled distances in both directions; the same seed drives both
// sample sets.
EvalResult evaluate(const TriMesh& recon, const TriMesh& gt, int n = 10000, uint32_t seed = 7);

// Per-vertex distance of `m` to `reference`, for distance-colored exports.
std::vector<float> per_vertex_distance(const TriMesh& m, const TriMesh& reference);

}  // namespace cosect
