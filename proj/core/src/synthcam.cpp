// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/synthcam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "cosect/error.hpp"
#include "cosect/parallel.hpp"

namespace cosect {

AnalyticShape AnalyticShape::plane(const Vec3f& normal, float offset) {
    AnalyticShape s;
    s.kind = Kind::Plane;
    s.plane_normal = normal.normalized();
    s.plane_offset = offset;
    return s;
}

AnalyticShape AnalyticShape::sphere(float radius) {
    if (radius <= 0.0f) throw Error(ErrorCode::InvalidArgument, "sphere radius must be > 0");
    AnalyticShape s;
    s.kind = Kind::Sphere;
    s.radius = radius;
    return s;
}

AnalyticShape AnalyticShape::box(const Vec3f& half_extents) {
    if (half_extents.min_coeff() <= 0.0f)
        throw Error(ErrorCode::InvalidArgument, "box half extents must be > 0");
    AnalyticShape s;
    s.kind = Kind::Box;
    s.half_extents = half_extents;
    return s;
}

AnalyticShape AnalyticShape::union_of(std::vector<AnalyticShape> children) {
    if (children.empty())
        throw Error(ErrorCode::InvalidArgument, "union needs at least one child");
    AnalyticShape s;
    s.kind = Kind::Union;
    s.children = std::move(children);
    return s;
}

float analytic_sdf(const AnalyticShape& shape, const Vec3f& x) {
    switch (shape.kind) {
        case AnalyticShape::Kind::Plane:
            return shape.plane_normal.dot(x) - shape.plane_offset;
        case AnalyticShape::Kind::Sphere:
            return x.norm() - shape.radius;
        case AnalyticShape::Kind::Box: {
            const Vec3f q = x.cwise_abs() - shape.half_extents;
            const Vec3f q_out = q.cwise_max(Vec3f(0, 0, 0));
            return q_out.norm() + std::min(q.max_coeff(), 0.0f);
        }
        case AnalyticShape::Kind::Union: {
            float d = analytic_sdf(shape.children.front(), x);
            for (size_t i = 1; i < shape.children.size(); ++i)
                d = std::min(d, analytic_sdf(shape.children[i], x));
            return d;
        }
    }
    return 0.0f;
}

void shape_bounds(const AnalyticShape& shape, Vec3f& lo, Vec3f& hi) {
    switch (shape.kind) {
        case AnalyticShape::Kind::Plane:
            lo = Vec3f(-2.5f, -2.5f, -2.5f);
            hi = Vec3f(2.5f, 2.5f, 2.5f);
            return;
        case AnalyticShape::Kind::Sphere:
            lo = Vec3f(-shape.radius, -shape.radius, -shape.radius);
            hi = -lo;
            return;
        case AnalyticShape::Kind::Box:
            lo = -shape.half_extents;
            hi = shape.half_extents;
            return;
        case AnalyticShape::Kind::Union: {
            shape_bounds(shape.children.front(), lo, hi);
            for (size_t i = 1; i < shape.children.size(); ++i) {
                Vec3f l, h;
                shape_bounds(shape.children[i], l, h);
                lo = lo.cwise_min(l);
                hi = hi.cwise_max(h);
            }
            return;
        }
    }
}

Pose KeyedTrajectory::pose_at(double t) const {
    if (keys.empty()) return Pose::identity();
    auto make_pose = [](const TrajectoryKey& k) {
        Pose p;
        p.rotation = k.rotation.to_matrix();
        p.translation = k.position;
        return p;
    };
    if (t <= keys.front().timestep) return make_pose(keys.front());
    if (t >= keys.back().timestep) return make_pose(keys.back());
    size_t hi = 1;
    while (keys[hi].timestep < t) ++hi;
    const TrajectoryKey& a = keys[hi - 1];
    const TrajectoryKey& b = keys[hi];
    const double f = (t - a.timestep) / double(b.timestep - a.timestep);
    Pose p;
    p.translation = a.position + (b.position - a.position) * f;
    p.rotation = Quat::nlerp(a.rotation, b.rotation, f).to_matrix();
    return p;
}

std::map<int, Pose> KeyedTrajectory::sample(int frame_count) const {
    std::map<int, Pose> out;
    for (int t = 0; t < frame_count; ++t) out[t] = pose_at(t);
    return out;
}

const SceneObject* ScriptedScene::object_by_id(int id) const {
    for (const SceneObject& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

Quat camera_lookat(const Vec3d& eye, const Vec3d& target, const Vec3d& up) {
    const Vec3d fwd = (target - eye).normalized();
    Vec3d right = fwd.cross(up);
    if (right.norm() < 1e-9) right = fwd.cross(Vec3d(0, 1, 0));
    right = right.normalized();
    const Vec3d img_down = fwd.cross(right);
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        r.m[i][0] = right[i];
        r.m[i][1] = img_down[i];
        r.m[i][2] = fwd[i];
    }
    return Quat::from_matrix(r);
}

namespace {

constexpr float kMaxRange = 10.0f;
constexpr float kHitTolerance = 1e-4f;
constexpr int kMaxSteps = 256;

struct PosedShape {
    const AnalyticShape* shape;
    int id;
    Pose world_to_local;
};

float scene_sdf(const std::vector<PosedShape>& shapes, const Vec3f& x_world, int* nearest) {
    float best = std::numeric_limits<float>::max();
    int best_id = 0;
    for (const PosedShape& ps : shapes) {
        const float d = analytic_sdf(*ps.shape, ps.world_to_local.apply(x_world));
        if (d < best) {
            best = d;
            best_id = ps.id;
        }
    }
    if (nearest) *nearest = best_id;
    return best;
}

}  // namespace

Keyframe render_frame(const ScriptedScene& scene, int t) {
    if (t < 0 || t >= scene.frame_count)
        throw Error(ErrorCode::InvalidArgument, "frame index out of range");

    Keyframe kf;
    kf.timestep = t;
    kf.intrinsics = scene.intrinsics;
    kf.camera_pose = scene.camera.pose_at(t);
    const int w = scene.intrinsics.width, h = scene.intrinsics.height;
    kf.depth = Image<float>(w, h, 0.0f);
    kf.object_mask = Image<uint8_t>(w, h, 0);
    kf.assoc = Image<float>(w, h, 0.0f);

    std::vector<PosedShape> shapes;
    shapes.reserve(scene.objects.size());
    for (const SceneObject& o : scene.objects)
        shapes.push_back({&o.shape, o.id, o.trajectory.pose_at(t).inverse()});

    const Vec3f cam_origin = kf.camera_pose.translation.cast<float>();
    parallel_for(0, h, [&](int64_t row) {
        for (int col = 0; col < w; ++col) {
            const Vec3f dir_cam((float(col) - scene.intrinsics.cx) / scene.intrinsics.fx,
                                (float(row) - scene.intrinsics.cy) / scene.intrinsics.fy, 1.0f);
            const float dir_len = dir_cam.norm();
            const Vec3f dir_world = kf.camera_pose.apply_vector(dir_cam / dir_len);

            float dist = 0.0f;
            for (int step = 0; step < kMaxSteps && dist < kMaxRange; ++step) {
                int nearest = 0;
                const Vec3f x = cam_origin + dir_world * dist;
                const float d = scene_sdf(shapes, x, &nearest);
                if (std::abs(d) < kHitTolerance) {
                    kf.depth.at(col, int(row)) = dist * (dir_cam.z / dir_len);
                    kf.object_mask.at(col, int(row)) = uint8_t(nearest);
                    kf.assoc.at(col, int(row)) = 1.0f;
                    break;
                }
                dist += d;
            }
        }
    });

    if (scene.depth_noise_sigma > 0.0f) {
        std::mt19937 rng(scene.noise_seed ^ (uint32_t(t) * 2654435761u));
        std::normal_distribution<float> noise(0.0f, scene.depth_noise_sigma);
        for (float& d : kf.depth.data)
            if (d > 0.0f) d = std::max(1e-4f, d + noise(rng));
    }

    if (scene.soft_assoc) {
        // Association decays to 0.5 within 2 px of mask id changes.
        Image<float> soft = kf.assoc;
        for (int row = 0; row < h; ++row)
            for (int col = 0; col < w; ++col) {
                if (kf.assoc.at(col, row) <= 0.0f) continue;
                const uint8_t id = kf.object_mask.at(col, row);
                int border = 3;
                for (int dr = -2; dr <= 2 && border > 2; ++dr)
                    for (int dc = -2; dc <= 2; ++dc) {
                        if (!kf.object_mask.in_bounds(col + dc, row + dr)) continue;
                        if (kf.object_mask.at(col + dc, row + dr) != id) {
                            border = std::min(border, std::max(std::abs(dr), std::abs(dc)));
                        }
                    }
                if (border <= 2) soft.at(col, row) = 0.5f + 0.25f * float(border - 1);
            }
        kf.assoc = soft;
    }
    return kf;
}

TriMesh gt_mesh(const AnalyticShape& shape, int resolution) {
    if (resolution < 32)
        throw Error(ErrorCode::InvalidArgument, "gt_mesh resolution must be >= 32");
    Vec3f lo, hi;
    shape_bounds(shape, lo, hi);
    const Vec3f center = (lo + hi) * 0.5f;
    float side = (hi - lo).max_coeff() * 1.25f;
    const float h = side / float(resolution);
    const Vec3f origin = center - Vec3f(1, 1, 1) * (h * float(resolution - 1) * 0.5f);
    const GridSpec spec(Vec3i(resolution, resolution, resolution), h, origin);

    ScalarGrid u(spec);
    parallel_for(0, spec.dims.z, [&](int64_t z) {
        for (int y = 0; y < spec.dims.y; ++y) {
            int64_t i = spec.linear_index(0, y, int(z));
            for (int x = 0; x < spec.dims.x; ++x, ++i)
                u.values[size_t(i)] = analytic_sdf(shape, spec.voxel_to_world(Vec3i(x, y, int(z))));
        }
    });
    return marching_cubes(u, 0.0f);
}

namespace {

// Tokenizer for the scene description: whitespace-separated words, braces
// as their own tokens, `#` comments to end of line.
std::vector<std::string> tokenize(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string cur;
        for (char c : line) {
            if (c == '{' || c == '}') {
                if (!cur.empty()) tokens.push_back(cur), cur.clear();
                tokens.push_back(std::string(1, c));
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (!cur.empty()) tokens.push_back(cur), cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) tokens.push_back(cur);
    }
    return tokens;
}

class TokenCursor {
public:
    TokenCursor(std::vector<std::string> tokens, std::string path)
        : tokens_(std::move(tokens)), path_(std::move(path)) {}

    bool done() const { return pos_ >= tokens_.size(); }
    const std::string& peek() const {
        if (done()) fail("unexpected end of file");
        return tokens_[pos_];
    }
    std::string next() {
        if (done()) fail("unexpected end of file");
        return tokens_[pos_++];
    }
    void expect(const std::string& tok) {
        if (next() != tok) fail("expected '" + tok + "'");
    }
    double number() {
        const std::string tok = next();
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') fail("expected a number, got '" + tok + "'");
        return v;
    }
    int integer() { return int(std::llround(number())); }
    Vec3f vec3() {
        float x = float(number()), y = float(number()), z = float(number());
        return Vec3f(x, y, z);
    }
    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorCode::MalformedDataset, path_ + ": " + why);
    }

private:
    std::vector<std::string> tokens_;
    std::string path_;
    size_t pos_ = 0;
};

AnalyticShape parse_shape(TokenCursor& cur) {
    cur.expect("{");
    const std::string kind = cur.next();
    AnalyticShape shape;
    if (kind == "plane") {
        Vec3f normal(0, 0, 1);
        float offset = 0.0f;
        while (cur.peek() != "}") {
            const std::string key = cur.next();
            if (key == "normal") normal = cur.vec3();
            else if (key == "offset") offset = float(cur.number());
            else cur.fail("unknown plane key '" + key + "'");
        }
        shape = AnalyticShape::plane(normal, offset);
    } else if (kind == "sphere") {
        float radius = 1.0f;
        while (cur.peek() != "}") {
            const std::string key = cur.next();
            if (key == "radius") radius = float(cur.number());
            else cur.fail("unknown sphere key '" + key + "'");
        }
        shape = AnalyticShape::sphere(radius);
    } else if (kind == "box") {
        Vec3f half(1, 1, 1);
        while (cur.peek() != "}") {
            const std::string key = cur.next();
            if (key == "half") half = cur.vec3();
            else cur.fail("unknown box key '" + key + "'");
        }
        shape = AnalyticShape::box(half);
    } else if (kind == "union") {
        std::vector<AnalyticShape> children;
        while (cur.peek() != "}") children.push_back(parse_shape(cur));
        shape = AnalyticShape::union_of(std::move(children));
    } else {
        cur.fail("unknown shape kind '" + kind + "'");
    }
    cur.expect("}");
    return shape;
}

TrajectoryKey parse_key(TokenCursor& cur) {
    cur.expect("{");
    TrajectoryKey key;
    bool have_rot = false;
    Vec3d lookat_target;
    Vec3d up(0, 0, 1);
    bool have_lookat = false;
    while (cur.peek() != "}") {
        const std::string k = cur.next();
        if (k == "t") key.timestep = cur.integer();
        else if (k == "pos") key.position = cur.vec3().cast<double>();
        else if (k == "quat") {
            double w = cur.number(), x = cur.number(), y = cur.number(), z = cur.number();
            key.rotation = Quat(w, x, y, z).normalized();
            have_rot = true;
        } else if (k == "lookat") {
            lookat_target = cur.vec3().cast<double>();
            have_lookat = true;
        } else if (k == "up") {
            up = cur.vec3().cast<double>();
        } else {
            cur.fail("unknown key field '" + k + "'");
        }
    }
    cur.expect("}");
    if (have_lookat && !have_rot) key.rotation = camera_lookat(key.position, lookat_target, up);
    return key;
}

}  // namespace

ScriptedScene load_scene_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::MalformedDataset, path + ": cannot open");
    TokenCursor cur(tokenize(f), path);

    ScriptedScene scene;
    bool have_camera = false;
    while (!cur.done()) {
        const std::string section = cur.next();
        if (section == "frames") {
            scene.frame_count = cur.integer();
        } else if (section == "intrinsics") {
            cur.expect("{");
            while (cur.peek() != "}") {
                const std::string k = cur.next();
                if (k == "width") scene.intrinsics.width = cur.integer();
                else if (k == "height") scene.intrinsics.height = cur.integer();
                else if (k == "fx") scene.intrinsics.fx = float(cur.number());
                else if (k == "fy") scene.intrinsics.fy = float(cur.number());
                else if (k == "cx") scene.intrinsics.cx = float(cur.number());
                else if (k == "cy") scene.intrinsics.cy = float(cur.number());
                else cur.fail("unknown intrinsics key '" + k + "'");
            }
            cur.expect("}");
        } else if (section == "camera") {
            cur.expect("{");
            while (cur.peek() != "}") {
                cur.expect("key");
                scene.camera.keys.push_back(parse_key(cur));
            }
            cur.expect("}");
            have_camera = true;
        } else if (section == "object") {
            cur.expect("{");
            SceneObject obj;
            bool have_shape = false;
            while (cur.peek() != "}") {
                const std::string k = cur.next();
                if (k == "id") obj.id = cur.integer();
                else if (k == "shape") {
                    obj.shape = parse_shape(cur);
                    have_shape = true;
                } else if (k == "key") {
                    obj.trajectory.keys.push_back(parse_key(cur));
                } else {
                    cur.fail("unknown object key '" + k + "'");
                }
            }
            cur.expect("}");
            if (!have_shape) cur.fail("object " + std::to_string(obj.id) + " has no shape");
            scene.objects.push_back(std::move(obj));
        } else if (section == "noise") {
            cur.expect("{");
            while (cur.peek() != "}") {
                const std::string k = cur.next();
                if (k == "depth_sigma") scene.depth_noise_sigma = float(cur.number());
                else if (k == "seed") scene.noise_seed = uint32_t(cur.integer());
                else if (k == "soft_assoc") scene.soft_assoc = cur.integer() != 0;
                else cur.fail("unknown noise key '" + k + "'");
            }
            cur.expect("}");
        } else {
            cur.fail("unknown section '" + section + "'");
        }
    }

    if (scene.frame_count <= 0)
        throw Error(ErrorCode::MalformedDataset, path + ": frames must be positive");
    if (!have_camera) throw Error(ErrorCode::MalformedDataset, path + ": no camera track");
    std::sort(scene.camera.keys.begin(), scene.camera.keys.end(),
              [](const TrajectoryKey& a, const TrajectoryKey& b) {
                  return a.timestep < b.timestep;
              });
    std::vector<int> seen_ids;
    for (SceneObject& o : scene.objects) {
        if (std::find(seen_ids.begin(), seen_ids.end(), o.id) != seen_ids.end())
            throw Error(ErrorCode::MalformedDataset,
                        path + ": duplicate object id " + std::to_string(o.id));
        seen_ids.push_back(o.id);
        std::sort(o.trajectory.keys.begin(), o.trajectory.keys.end(),
                  [](const TrajectoryKey& a, const TrajectoryKey& b) {
                      return a.timestep < b.timestep;
                  });
        if (o.id == 0) {
            for (const TrajectoryKey& k : o.trajectory.keys)
                if (k.position.norm() > 1e-9 ||
                    std::abs(k.rotation.normalized().w) < 1.0 - 1e-9)
                    throw Error(ErrorCode::MalformedDataset,
                                path + ": background trajectory must stay identity");
        }
    }
    return scene;
}

void write_sequence(const ScriptedScene& scene, const std::string& out_dir) {
    save_sequence_intrinsics(out_dir, scene.intrinsics);
    save_sequence_poses(out_dir, 0, scene.camera.sample(scene.frame_count), true);
    for (const SceneObject& o : scene.objects)
        save_sequence_poses(out_dir, o.id, o.trajectory.sample(scene.frame_count), false);
    if (!scene.object_by_id(0)) {
        KeyedTrajectory identity;
        identity.keys.push_back(TrajectoryKey{});
        save_sequence_poses(out_dir, 0, identity.sample(scene.frame_count), false);
    }
    for (int t = 0; t < scene.frame_count; ++t)
        save_sequence_frame(out_dir, render_frame(scene, t));
}

Sequence make_sequence(const ScriptedScene& scene, const SequenceConfig& cfg) {
    std::vector<Keyframe> keyframes;
    for (int t = 0; t < scene.frame_count; t += cfg.keyframe_stride)
        keyframes.push_back(render_frame(scene, t));
    std::map<int, std::map<int, Pose>> trajectories;
    for (const SceneObject& o : scene.objects)
        trajectories[o.id] = o.trajectory.sample(scene.frame_count);
    return build_sequence(std::move(keyframes), scene.frame_count, trajectories, cfg);
}

ScriptedScene box_slide_scene(int frame_count) {
    ScriptedScene scene;
    scene.frame_count = frame_count;
    scene.intrinsics = Intrinsics{130.0f, 130.0f, 79.5f, 59.5f, 160, 120};

    SceneObject ground;
    ground.id = 0;
    ground.shape = AnalyticShape::plane(Vec3f(0, 0, 1), 0.0f);
    ground.trajectory.keys.push_back(TrajectoryKey{});
    scene.objects.push_back(ground);

    SceneObject box;
    box.id = 1;
    box.shape = AnalyticShape::box(Vec3f(0.15f, 0.1f, 0.1f));
    const int last = frame_count - 1;
    box.trajectory.keys.push_back({0, Vec3d(-0.5, 0.0, 0.1), Quat()});
    box.trajectory.keys.push_back({last, Vec3d(0.5, 0.0, 0.1), Quat()});
    scene.objects.push_back(box);

    // Steep view so rays clear the box top and carve the space behind it;
    // the 30 degree orbit runs against the slide direction.
    const Vec3d target(0.0, 0.0, 0.05);
    const double dist = 1.65, elev = 58.0 * M_PI / 180.0;
    auto cam_key = [&](int t, double azimuth_deg) {
        const double az = azimuth_deg * M_PI / 180.0;
        TrajectoryKey key;
        key.timestep = t;
        key.position = Vec3d(dist * std::cos(elev) * std::cos(az),
                             dist * std::cos(elev) * std::sin(az), dist * std::sin(elev));
        key.rotation = camera_lookat(key.position, target);
        return key;
    };
    scene.camera.keys.push_back(cam_key(0, -75.0));
    scene.camera.keys.push_back(cam_key(last / 2, -90.0));
    scene.camera.keys.push_back(cam_key(last, -105.0));
    return scene;
}

}  // namespace cosect
