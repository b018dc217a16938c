// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/constraints.hpp"

#include <algorithm>
#include <cmath>

#include "cosect/energy.hpp"
#include "cosect/error.hpp"
#include "cosect/parallel.hpp"

namespace cosect {

void carve_free_space(HullGrid& hull, const Keyframe& kf, const Pose& volume_pose_at_t) {
    const GridSpec& s = hull.spec;
    const Pose vol_to_cam = kf.camera_pose.inverse() * volume_pose_at_t;
    const Intrinsics& intr = kf.intrinsics;
    const float margin = s.voxel_size;

    parallel_for(0, s.dims.z, [&](int64_t z) {
        for (int y = 0; y < s.dims.y; ++y) {
            int64_t idx = s.linear_index(0, y, int(z));
            for (int x = 0; x < s.dims.x; ++x, ++idx) {
                if (!hull.unseen.bits[size_t(idx)]) continue;
                Vec3f pc = vol_to_cam.apply(s.voxel_to_world(Vec3i(x, y, int(z))));
                if (pc.z <= 0.0f) continue;
                int col = int(std::lround(pc.x / pc.z * intr.fx + intr.cx));
                int row = int(std::lround(pc.y / pc.z * intr.fy + intr.cy));
                if (!kf.depth.in_bounds(col, row)) continue;
                float d = kf.depth.at(col, row);
                if (d <= 0.0f) continue;
                if (pc.z < d - margin) hull.unseen.bits[size_t(idx)] = 0;
            }
        }
    });
}

PointIndex::PointIndex(std::vector<OrientedPoint> points, float cell_size)
    : points_(std::move(points)), cell_size_(cell_size) {
    if (points_.empty()) return;
    Vec3f lo = points_.front().p, hi = points_.front().p;
    for (const auto& pt : points_) {
        lo = lo.cwise_min(pt.p);
        hi = hi.cwise_max(pt.p);
    }
    grid_min_ = lo;
    Vec3f extent = hi - lo;
    grid_dims_ = Vec3i(int(extent.x / cell_size_) + 1, int(extent.y / cell_size_) + 1,
                       int(extent.z / cell_size_) + 1);

    const int64_t cell_count =
        int64_t(grid_dims_.x) * grid_dims_.y * grid_dims_.z;
    std::vector<int32_t> counts(size_t(cell_count) + 1, 0);
    auto cell_of = [&](const Vec3f& p) {
        Vec3f rel = (p - grid_min_) / cell_size_;
        int cx = std::clamp(int(rel.x), 0, grid_dims_.x - 1);
        int cy = std::clamp(int(rel.y), 0, grid_dims_.y - 1);
        int cz = std::clamp(int(rel.z), 0, grid_dims_.z - 1);
        return cell_key(cx, cy, cz);
    };
    for (const auto& pt : points_) ++counts[size_t(cell_of(pt.p)) + 1];
    for (size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
    cell_start_ = counts;
    point_order_.resize(points_.size());
    std::vector<int32_t> cursor(counts.begin(), counts.end() - 1);
    for (int32_t i = 0; i < int32_t(points_.size()); ++i)
        point_order_[size_t(cursor[size_t(cell_of(points_[size_t(i)].p))]++)] = i;
}

std::optional<float> approx_point_sdf(const PointIndex& index, const Vec3f& x, float sigma,
                                      bool normalized) {
    const float support = 3.0f * sigma;
    double w_sum = 0.0, wf_sum = 0.0;
    int count = 0;
    index.for_each_in_radius(x, support, [&](const OrientedPoint& pt) {
        const Vec3f delta = x - pt.p;
        const double w = gaussian_weight(delta.norm(), sigma) * pt.a;
        w_sum += w;
        wf_sum += w * double(delta.dot(pt.n));
        ++count;
    });
    if (count == 0) return std::nullopt;
    if (normalized) {
        if (w_sum <= 0.0) return std::nullopt;
        return float(wf_sum / w_sum);
    }
    return float(wf_sum / double(count));
}

InterGrid compute_d_inter(const ObjectModel& target, const std::vector<const ObjectModel*>& others,
                          const std::vector<int>& timesteps, const InterConfig& cfg) {
    InterGrid inter(target.spec);

    struct Evaluator {
        const ObjectModel* model;
        PointIndex index;  // empty for background models with an SDF
        float sigma;
        bool use_sdf;
    };
    std::vector<Evaluator> evals;
    for (const ObjectModel* p : others) {
        if (p->id == target.id) continue;
        Evaluator e;
        e.model = p;
        e.use_sdf = p->id == 0;
        if (e.use_sdf && !p->has_sdf)
            throw Error(ErrorCode::InvalidArgument,
                        "background model has no optimized SDF for d_inter");
        if (!e.use_sdf) {
            e.sigma = cfg.sigma > 0.0f ? cfg.sigma : p->spec.voxel_size;
            e.index = PointIndex(p->all_points(), 3.0f * e.sigma);
            if (e.index.empty()) continue;
        }
        evals.push_back(std::move(e));
    }
    if (evals.empty()) return inter;

    // Validate trajectories up front so the error does not depend on voxel
    // traversal order.
    std::vector<std::vector<Pose>> target_to_other(evals.size());
    for (size_t e = 0; e < evals.size(); ++e) {
        target_to_other[e].reserve(timesteps.size());
        for (int t : timesteps)
            target_to_other[e].push_back(evals[e].model->pose_at(t).inverse() *
                                         target.pose_at(t));
    }

    const GridSpec& s = target.spec;
    parallel_for(0, s.dims.z, [&](int64_t z) {
        for (int y = 0; y < s.dims.y; ++y) {
            int64_t idx = s.linear_index(0, y, int(z));
            for (int x = 0; x < s.dims.x; ++x, ++idx) {
                const Vec3f xv = s.voxel_to_world(Vec3i(x, y, int(z)));
                float max_pen = 0.0f;
                for (size_t e = 0; e < evals.size(); ++e) {
                    for (size_t ti = 0; ti < timesteps.size(); ++ti) {
                        const Vec3f xt = target_to_other[e][ti].apply(xv);
                        std::optional<float> u;
                        if (evals[e].use_sdf)
                            u = trilinear_sample(evals[e].model->sdf, xt);
                        else
                            u = approx_point_sdf(evals[e].index, xt, evals[e].sigma,
                                                 cfg.normalized_point_sdf);
                        if (u && -*u > max_pen) max_pen = -*u;
                    }
                }
                inter.d.values[size_t(idx)] = max_pen;
            }
        }
    });
    return inter;
}

}  // namespace cosect
