// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "cosect/math.hpp"
#include "cosect/voxgrid.hpp"

namespace cosect {

// Rigid transform mapping local coordinates to world coordinates.
struct Pose {
    Mat3 rotation = Mat3::identity();
    Vec3d translation{0, 0, 0};

    static Pose identity() { return Pose{}; }

    Vec3d apply(const Vec3d& p) const { return rotation * p + translation; }
    Vec3d apply_vector(const Vec3d& v) const { return rotation * v; }
    Vec3f apply(const Vec3f& p) const { return apply(p.cast<double>()).cast<float>(); }
    Vec3f apply_vector(const Vec3f& v) const {
        return apply_vector(v.cast<double>()).cast<float>();
    }

    Pose inverse() const {
        Pose inv;
        inv.rotation = rotation.transposed();
        inv.translation = -(inv.rotation * translation);
        return inv;
    }

    Pose operator*(const Pose& o) const {
        Pose r;
        r.rotation = rotation * o.rotation;
        r.translation = rotation * o.translation + translation;
        return r;
    }

    // Max deviation of R^T R from identity plus |det - 1|.
    double orthonormality_error() const;
};

// Surface sample in object-local coordinates: position, outward unit normal
// and the association weight of the measurement to the owning object.
struct OrientedPoint {
    Vec3f p;
    Vec3f n;
    float a = 1.0f;
};

struct Intrinsics {
    float fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
};

// Raster of per-pixel values, row-major, indexed (col, row).
template <typename T>
struct Image {
    int width = 0, height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), data(size_t(w) * h, fill) {}

    T& at(int col, int row) { return data[size_t(row) * width + col]; }
    const T& at(int col, int row) const { return data[size_t(row) * width + col]; }
    bool in_bounds(int col, int row) const {
        return col >= 0 && row >= 0 && col < width && row < height;
    }
};

// One stored measurement frame: depth map (meters, 0 = invalid), per-pixel
// object ids (0 = background) and association weights, plus the camera pose.
struct Keyframe {
    int timestep = 0;
    Pose camera_pose;
    Intrinsics intrinsics;
    Image<float> depth;
    Image<uint8_t> object_mask;
    Image<float> assoc;
};

// One rigid object: grid placement, trajectory, accumulated per-keyframe
// point sets in object-local coordinates, and the optimized SDF.
struct ObjectModel {
    int id = 0;  // 0 is the background
    GridSpec spec;
    std::map<int, Pose> trajectory;
    std::map<int, std::vector<OrientedPoint>> points;  // keyframe timestep -> points
    ScalarGrid sdf;        // empty until optimized
    bool has_sdf = false;

    const Pose& pose_at(int timestep) const;

    std::vector<OrientedPoint> all_points() const;
    size_t point_count() const;
};

// Pinhole backprojection of a pixel with measured depth into camera space.
// Throws INVALID_DEPTH when the depth value is zero.
Vec3f backproject(const Image<float>& depth, const Intrinsics& intr, int col, int row);

// Camera-space unit normals from central differences of the backprojected
// surface, oriented toward the camera. Invalid pixels carry a zero vector.
Image<Vec3f> depth_normals(const Image<float>& depth, const Intrinsics& intr);

// Collects oriented points of one object from a keyframe, transformed into
// object-local coordinates. Points outside the model volume are dropped.
std::vector<OrientedPoint> extract_object_points(const Keyframe& kf, const ObjectModel& model);

struct SequenceConfig {
    int keyframe_stride = 10;
    // Background volume placement (the dataset itself carries no volume).
    Vec3f bg_center{0, 0, 0};
    float bg_size = 5.0f;
    int bg_resolution = 256;
    int object_resolution = 64;
};

struct Sequence {
    std::vector<Keyframe> keyframes;
    std::vector<ObjectModel> models;  // models[0] is the background
    int frame_count = 0;
};

// Assembles models (background volume plus per-object volumes placed from
// the first keyframe seeing each object) around the given keyframes.
Sequence build_sequence(std::vector<Keyframe> keyframes, int frame_count,
                        const std::map<int, std::map<int, Pose>>& object_trajectories,
                        const SequenceConfig& cfg);

// On-disk layout: intrinsics.txt, frames/NNNNNN.{depth,mask,assoc},
// poses/obj<ID>.txt and poses/obj0cam.txt for the camera trajectory.
Sequence load_sequence(const std::string& dir, const SequenceConfig& cfg = {});
void save_sequence_frame(const std::string& dir, const Keyframe& frame);
void save_sequence_intrinsics(const std::string& dir, const Intrinsics& intr);
void save_sequence_poses(const std::string& dir, int object_id,
                         const std::map<int, Pose>& trajectory, bool camera = false);

}  // namespace cosect
