// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "cosect/math.hpp"
#include "cosect/voxgrid.hpp"

namespace cosect {

// Indexed triangle surface. `quality` is an optional per-vertex scalar
// (empty or one value per vertex), used for distance coloring.
struct TriMesh {
    std::vector<Vec3f> vertices;
    std::vector<std::array<uint32_t, 3>> triangles;
    std::vector<float> quality;

    bool empty() const { return triangles.empty(); }
};

// Standard 256-case marching cubes at the given iso level. Vertices are in
// world coordinates; triangles are oriented with normals pointing toward
// positive values. `valid` (optional) masks voxels that carry data: cells
// with any invalid corner produce no geometry.
TriMesh marching_cubes(const ScalarGrid& u, float iso = 0.0f, const BitGrid* valid = nullptr);

// True when every edge is shared by exactly two triangles.
bool mesh_is_closed(const TriMesh& m);

// Signed volume via the divergence theorem; meaningful for closed meshes.
double mesh_signed_volume(const TriMesh& m);
double mesh_area(const TriMesh& m);

// ASCII OBJ (v/f records) or binary little-endian PLY with an optional
// per-vertex `quality` property; chosen by file extension.
void save_mesh(const std::string& path, const TriMesh& m);
TriMesh load_mesh(const std::string& path);

}  // namespace cosect
