// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cosect/mesh.hpp"
#include "cosect/scene.hpp"

namespace cosect {

// Analytic signed-distance primitives in object-local coordinates.
struct AnalyticShape {
    enum class Kind { Plane, Sphere, Box, Union };

    Kind kind = Kind::Sphere;
    Vec3f plane_normal{0, 0, 1};
    float plane_offset = 0.0f;
    float radius = 1.0f;
    Vec3f half_extents{1, 1, 1};
    std::vector<AnalyticShape> children;

    static AnalyticShape plane(const Vec3f& normal, float offset);
    static AnalyticShape sphere(float radius);
    static AnalyticShape box(const Vec3f& half_extents);
    static AnalyticShape union_of(std::vector<AnalyticShape> children);
};

// Exact signed distance for plane/sphere/box; union takes the child minimum
// (exact outside, a lower bound inside).
float analytic_sdf(const AnalyticShape& shape, const Vec3f& x);

// Local bounding box of the bounded primitives; planes get a fixed box so
// ground planes can still be meshed for inspection.
void shape_bounds(const AnalyticShape& shape, Vec3f& lo, Vec3f& hi);

// Pose track from sparse keys: positions interpolate linearly, rotations by
// normalized quaternion interpolation; clamped outside the key range.
struct TrajectoryKey {
    int timestep = 0;
    Vec3d position{0, 0, 0};
    Quat rotation;
};

struct KeyedTrajectory {
    std::vector<TrajectoryKey> keys;  // sorted by timestep

    Pose pose_at(double t) const;
    std::map<int, Pose> sample(int frame_count) const;
};

// Camera rotation with columns (right, image-down, forward): +z looks from
// eye toward target, image rows grow downward in world.
Quat camera_lookat(const Vec3d& eye, const Vec3d& target, const Vec3d& up = {0, 0, 1});

struct SceneObject {
    int id = 0;
    AnalyticShape shape;
    KeyedTrajectory trajectory;
};

// A scripted rigid scene: analytic shapes on keyframed trajectories plus a
// camera track. Object id 0 is the static background.
struct ScriptedScene {
    std::vector<SceneObject> objects;
    KeyedTrajectory camera;
    Intrinsics intrinsics;
    int frame_count = 0;

    float depth_noise_sigma = 0.0f;  // meters; 0 disables
    uint32_t noise_seed = 0;
    bool soft_assoc = false;  // association decays to 0.5 near mask borders

    const SceneObject* object_by_id(int id) const;
};

// Sphere-traces all posed shapes and fills depth, object mask, and
// association weights for frame t.
Keyframe render_frame(const ScriptedScene& scene, int t);

// Ground-truth mesh of a shape: marching cubes over the analytic SDF on a
// padded grid of `resolution` voxels per axis.
TriMesh gt_mesh(const AnalyticShape& shape, int resolution);

// Structured text scene description (key-value blocks).
ScriptedScene load_scene_config(const std::string& path);

// Renders every frame of the scene into the on-disk sequence layout.
void write_sequence(const ScriptedScene& scene, const std::string& out_dir);

// In-memory equivalent of write_sequence followed by load_sequence.
Sequence make_sequence(const ScriptedScene& scene, const SequenceConfig& cfg);

// The reference fixture: a box sliding one meter across a ground plane
// while the camera orbits 30 degrees.
ScriptedScene box_slide_scene(int frame_count = 100);

}  // namespace cosect
