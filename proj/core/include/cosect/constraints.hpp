// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "cosect/scene.hpp"
#include "cosect/voxgrid.hpp"

namespace cosect {

// Voxelized indicator of the unseen part of a volume. A voxel leaves the
// hull once it is observed free; it never re-enters.
struct HullGrid {
    GridSpec spec;
    BitGrid unseen;

    HullGrid() = default;
    explicit HullGrid(const GridSpec& s) : spec(s), unseen(s, true) {}

    bool in_hull(int x, int y, int z) const { return unseen.get(x, y, z); }
};

// Per-voxel interpenetration distances (meters, >= 0) of one object into
// every other model over the observed timesteps.
struct InterGrid {
    GridSpec spec;
    ScalarGrid d;

    InterGrid() = default;
    explicit InterGrid(const GridSpec& s) : spec(s), d(s, 0.0f) {}
};

// Marks voxels observed free by this keyframe: voxel center projects into
// the image with valid depth and lies in front of the measured surface by
// more than one voxel size.
void carve_free_space(HullGrid& hull, const Keyframe& kf, const Pose& volume_pose_at_t);

// Uniform spatial hash over an immutable point set for radius queries.
class PointIndex {
public:
    PointIndex() = default;
    PointIndex(std::vector<OrientedPoint> points, float cell_size);

    bool empty() const { return points_.empty(); }
    const std::vector<OrientedPoint>& points() const { return points_; }

    // Calls fn(point) for every point within `radius` of x.
    template <typename Fn>
    void for_each_in_radius(const Vec3f& x, float radius, Fn&& fn) const;

private:
    int64_t cell_key(int cx, int cy, int cz) const;

    std::vector<OrientedPoint> points_;
    std::vector<int32_t> cell_start_;
    std::vector<int32_t> point_order_;
    float cell_size_ = 0;
    Vec3f grid_min_;
    Vec3i grid_dims_;
};

// Weighted point-based signed distance estimate at x (the IMLS blend of
// per-point signed distances). Returns nullopt when no point lies within
// the support radius (NO_SUPPORT). `normalized` divides by the weight sum;
// the unnormalized variant divides by the point count.
std::optional<float> approx_point_sdf(const PointIndex& index, const Vec3f& x, float sigma,
                                      bool normalized = true);

struct InterConfig {
    bool normalized_point_sdf = true;
    float sigma = 0.0f;  // 0 = use the target volume's voxel size
};

// Interpenetration distance field of `target` against all other models over
// the given keyframe timesteps. Background models are evaluated by trilinear
// sampling of their optimized SDF, object models by approx_point_sdf; missing
// evidence (outside volume / no support) contributes zero.
InterGrid compute_d_inter(const ObjectModel& target, const std::vector<const ObjectModel*>& others,
                          const std::vector<int>& timesteps, const InterConfig& cfg = {});

}  // namespace cosect

#include "cosect/constraints_inl.hpp"
