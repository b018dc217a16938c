// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

namespace cosect {

inline int64_t PointIndex::cell_key(int cx, int cy, int cz) const {
    return (int64_t(cz) * grid_dims_.y + cy) * grid_dims_.x + cx;
}

template <typename Fn>
void PointIndex::for_each_in_radius(const Vec3f& x, float radius, Fn&& fn) const {
    if (points_.empty()) return;
    const float r2 = radius * radius;
    const Vec3f rel = (x - grid_min_) / cell_size_;
    const float rc = radius / cell_size_;
    int x0 = int(std::floor(rel.x - rc)), x1 = int(std::floor(rel.x + rc));
    int y0 = int(std::floor(rel.y - rc)), y1 = int(std::floor(rel.y + rc));
    int z0 = int(std::floor(rel.z - rc)), z1 = int(std::floor(rel.z + rc));
    x0 = std::max(x0, 0); y0 = std::max(y0, 0); z0 = std::max(z0, 0);
    x1 = std::min(x1, grid_dims_.x - 1);
    y1 = std::min(y1, grid_dims_.y - 1);
    z1 = std::min(z1, grid_dims_.z - 1);
    for (int cz = z0; cz <= z1; ++cz)
        for (int cy = y0; cy <= y1; ++cy)
            for (int cx = x0; cx <= x1; ++cx) {
                const int64_t key = cell_key(cx, cy, cz);
                for (int32_t i = cell_start_[size_t(key)]; i < cell_start_[size_t(key) + 1];
                     ++i) {
                    const OrientedPoint& pt = points_[size_t(point_order_[size_t(i)])];
                    if ((pt.p - x).squared_norm() <= r2) fn(pt);
                }
            }
}

}  // namespace cosect
