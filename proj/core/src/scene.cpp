// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "cosect/error.hpp"

namespace fs = std::filesystem;

namespace cosect {

double Pose::orthonormality_error() const {
    Mat3 rtr = rotation.transposed() * rotation;
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            err = std::max(err, std::abs(rtr.m[i][j] - (i == j ? 1.0 : 0.0)));
    return std::max(err, std::abs(rotation.det() - 1.0));
}

const Pose& ObjectModel::pose_at(int timestep) const {
    auto it = trajectory.find(timestep);
    if (it == trajectory.end())
        throw Error(ErrorCode::MissingPose, "object " + std::to_string(id) +
                                                " has no pose at timestep " +
                                                std::to_string(timestep));
    return it->second;
}

std::vector<OrientedPoint> ObjectModel::all_points() const {
    std::vector<OrientedPoint> out;
    out.reserve(point_count());
    for (const auto& [t, pts] : points) out.insert(out.end(), pts.begin(), pts.end());
    return out;
}

size_t ObjectModel::point_count() const {
    size_t n = 0;
    for (const auto& [t, pts] : points) n += pts.size();
    return n;
}

Vec3f backproject(const Image<float>& depth, const Intrinsics& intr, int col, int row) {
    float d = depth.at(col, row);
    if (d <= 0.0f)
        throw Error(ErrorCode::InvalidDepth, "pixel (" + std::to_string(col) + "," +
                                                 std::to_string(row) + ") has no depth");
    return Vec3f((float(col) - intr.cx) / intr.fx * d, (float(row) - intr.cy) / intr.fy * d,
                 d);
}

Image<Vec3f> depth_normals(const Image<float>& depth, const Intrinsics& intr) {
    Image<Vec3f> normals(depth.width, depth.height, Vec3f(0, 0, 0));
    auto valid = [&](int c, int r) {
        return depth.in_bounds(c, r) && depth.at(c, r) > 0.0f;
    };
    for (int r = 0; r < depth.height; ++r) {
        for (int c = 0; c < depth.width; ++c) {
            if (!valid(c, r) || !valid(c - 1, r) || !valid(c + 1, r) || !valid(c, r - 1) ||
                !valid(c, r + 1))
                continue;
            Vec3f tx = backproject(depth, intr, c + 1, r) - backproject(depth, intr, c - 1, r);
            Vec3f ty = backproject(depth, intr, c, r + 1) - backproject(depth, intr, c, r - 1);
            Vec3f n = tx.cross(ty);
            float len = n.norm();
            if (len <= 0.0f) continue;
            n = n / len;
            if (n.dot(backproject(depth, intr, c, r)) > 0.0f) n = -n;
            normals.at(c, r) = n;
        }
    }
    return normals;
}

std::vector<OrientedPoint> extract_object_points(const Keyframe& kf, const ObjectModel& model) {
    const Pose& obj_pose = model.pose_at(kf.timestep);
    const Pose cam_to_obj = obj_pose.inverse() * kf.camera_pose;

    Image<Vec3f> normals = depth_normals(kf.depth, kf.intrinsics);
    std::vector<OrientedPoint> out;
    for (int r = 0; r < kf.depth.height; ++r) {
        for (int c = 0; c < kf.depth.width; ++c) {
            if (kf.object_mask.at(c, r) != model.id) continue;
            if (kf.depth.at(c, r) <= 0.0f) continue;
            Vec3f n_cam = normals.at(c, r);
            if (n_cam.squared_norm() == 0.0f) continue;
            Vec3f p_local = cam_to_obj.apply(backproject(kf.depth, kf.intrinsics, c, r));
            if (!model.spec.covers_world_point(p_local)) continue;
            OrientedPoint pt;
            pt.p = p_local;
            pt.n = cam_to_obj.apply_vector(n_cam);
            pt.a = kf.assoc.at(c, r);
            out.push_back(pt);
        }
    }
    return out;
}

namespace {

std::string frame_name(int t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", t);
    return buf;
}

template <typename T>
Image<T> read_raster(const std::string& path, const char* tag) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::MalformedDataset, path + ": cannot open");
    std::string line;
    if (!std::getline(f, line))
        throw Error(ErrorCode::MalformedDataset, path + ": missing header");
    char got[8] = {0};
    int w = 0, h = 0;
    if (std::sscanf(line.c_str(), "%4s %d %d", got, &w, &h) != 3 ||
        std::string(got) != tag || w <= 0 || h <= 0)
        throw Error(ErrorCode::MalformedDataset, path + ": bad raster header");
    Image<T> img(w, h);
    f.read(reinterpret_cast<char*>(img.data.data()),
           std::streamsize(img.data.size() * sizeof(T)));
    if (f.gcount() != std::streamsize(img.data.size() * sizeof(T)))
        throw Error(ErrorCode::MalformedDataset, path + ": truncated raster data");
    return img;
}

template <typename T>
void write_raster(const std::string& path, const char* tag, const Image<T>& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    f << tag << " " << img.width << " " << img.height << "\n";
    f.write(reinterpret_cast<const char*>(img.data.data()),
            std::streamsize(img.data.size() * sizeof(T)));
    if (!f) throw Error(ErrorCode::IoError, "short write to " + path);
}

std::map<int, Pose> read_pose_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::MalformedDataset, path + ": cannot open");
    std::map<int, Pose> traj;
    int t;
    while (f >> t) {
        Pose p;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j)
                if (!(f >> p.rotation.m[i][j]))
                    throw Error(ErrorCode::MalformedDataset, path + ": truncated pose row");
            if (!(f >> p.translation[i]))
                throw Error(ErrorCode::MalformedDataset, path + ": truncated pose row");
        }
        traj[t] = p;
    }
    if (traj.empty()) throw Error(ErrorCode::MalformedDataset, path + ": no pose entries");
    return traj;
}

void write_pose_file(const std::string& path, const std::map<int, Pose>& traj) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    char buf[64];
    // %.17g round-trips doubles exactly; reloaded poses match in-memory ones.
    for (const auto& [t, p] : traj) {
        f << t;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                std::snprintf(buf, sizeof(buf), " %.17g", p.rotation.m[i][j]);
                f << buf;
            }
            std::snprintf(buf, sizeof(buf), " %.17g", p.translation[i]);
            f << buf;
        }
        f << "\n";
    }
}

// Object volume from the first keyframe seeing it: bounding box of the
// object-local points, padded 25% per side, rounded up to a cube.
GridSpec object_spec_from_points(const std::vector<Vec3f>& pts, int resolution) {
    Vec3f lo = pts.front(), hi = pts.front();
    for (const Vec3f& p : pts) {
        lo = lo.cwise_min(p);
        hi = hi.cwise_max(p);
    }
    Vec3f extent = hi - lo;
    Vec3f center = (lo + hi) * 0.5f;
    float side = 0.0f;
    for (int a = 0; a < 3; ++a) side = std::max(side, extent[a] * 1.5f);
    if (side <= 0.0f) side = 0.1f;
    float h = side / float(resolution);
    Vec3f origin = center - Vec3f(1, 1, 1) * (h * float(resolution - 1) * 0.5f);
    return GridSpec(Vec3i(resolution, resolution, resolution), h, origin);
}

}  // namespace

Sequence build_sequence(std::vector<Keyframe> keyframes, int frame_count,
                        const std::map<int, std::map<int, Pose>>& object_trajectories,
                        const SequenceConfig& cfg) {
    Sequence seq;
    seq.frame_count = frame_count;
    seq.keyframes = std::move(keyframes);

    std::set<int> mask_ids;
    for (const Keyframe& kf : seq.keyframes)
        for (uint8_t id : kf.object_mask.data)
            if (id != 0) mask_ids.insert(id);

    // Background model: configured world box, identity trajectory everywhere.
    ObjectModel bg;
    bg.id = 0;
    const float h_bg = cfg.bg_size / float(cfg.bg_resolution);
    bg.spec = GridSpec(Vec3i(cfg.bg_resolution, cfg.bg_resolution, cfg.bg_resolution), h_bg,
                       cfg.bg_center -
                           Vec3f(1, 1, 1) * (h_bg * float(cfg.bg_resolution - 1) * 0.5f));
    for (int t = 0; t < frame_count; ++t) bg.trajectory[t] = Pose::identity();
    seq.models.push_back(std::move(bg));

    for (int id : mask_ids) {
        ObjectModel obj;
        obj.id = id;
        auto traj_it = object_trajectories.find(id);
        if (traj_it == object_trajectories.end())
            throw Error(ErrorCode::MalformedDataset,
                        "missing pose data for object id " + std::to_string(id));
        obj.trajectory = traj_it->second;

        // Place the volume from the first keyframe that sees the object.
        std::vector<Vec3f> local_pts;
        for (const Keyframe& kf : seq.keyframes) {
            auto it = obj.trajectory.find(kf.timestep);
            if (it == obj.trajectory.end()) continue;
            const Pose cam_to_obj = it->second.inverse() * kf.camera_pose;
            for (int r = 0; r < kf.depth.height; ++r)
                for (int c = 0; c < kf.depth.width; ++c)
                    if (kf.object_mask.at(c, r) == id && kf.depth.at(c, r) > 0.0f)
                        local_pts.push_back(
                            cam_to_obj.apply(backproject(kf.depth, kf.intrinsics, c, r)));
            if (!local_pts.empty()) break;
        }
        if (local_pts.empty())
            throw Error(ErrorCode::MalformedDataset,
                        "object " + std::to_string(id) + " never visible with valid depth");
        obj.spec = object_spec_from_points(local_pts, cfg.object_resolution);
        seq.models.push_back(std::move(obj));
    }
    return seq;
}

Sequence load_sequence(const std::string& dir, const SequenceConfig& cfg) {
    if (cfg.keyframe_stride < 1)
        throw Error(ErrorCode::InvalidArgument, "keyframe stride must be >= 1");
    const fs::path root(dir);
    if (!fs::is_directory(root))
        throw Error(ErrorCode::MalformedDataset, dir + ": not a directory");

    Intrinsics intr;
    {
        std::ifstream f((root / "intrinsics.txt").string());
        if (!(f >> intr.fx >> intr.fy >> intr.cx >> intr.cy >> intr.width >> intr.height))
            throw Error(ErrorCode::MalformedDataset,
                        (root / "intrinsics.txt").string() + ": expected fx fy cx cy W H");
    }

    // Frame count = contiguous run of depth files starting at 000000.
    const fs::path frames_dir = root / "frames";
    int frame_count = 0;
    while (fs::exists(frames_dir / (frame_name(frame_count) + ".depth"))) ++frame_count;
    if (frame_count == 0)
        throw Error(ErrorCode::MalformedDataset, frames_dir.string() + ": no frames");

    std::map<int, Pose> camera_traj = read_pose_file((root / "poses" / "obj0cam.txt").string());

    std::vector<Keyframe> keyframes;
    std::set<int> mask_ids;
    for (int t = 0; t < frame_count; t += cfg.keyframe_stride) {
        Keyframe kf;
        kf.timestep = t;
        kf.intrinsics = intr;
        auto cam_it = camera_traj.find(t);
        if (cam_it == camera_traj.end())
            throw Error(ErrorCode::MalformedDataset,
                        "camera trajectory missing timestep " + std::to_string(t));
        kf.camera_pose = cam_it->second;
        const std::string base = (frames_dir / frame_name(t)).string();
        kf.depth = read_raster<float>(base + ".depth", "fdep");
        kf.object_mask = read_raster<uint8_t>(base + ".mask", "fmsk");
        kf.assoc = read_raster<float>(base + ".assoc", "fasc");
        if (kf.object_mask.width != kf.depth.width || kf.assoc.width != kf.depth.width ||
            kf.object_mask.height != kf.depth.height || kf.assoc.height != kf.depth.height)
            throw Error(ErrorCode::MalformedDataset, base + ": raster dimensions disagree");
        for (uint8_t id : kf.object_mask.data)
            if (id != 0) mask_ids.insert(id);
        keyframes.push_back(std::move(kf));
    }

    std::map<int, std::map<int, Pose>> trajectories;
    for (int id : mask_ids) {
        const fs::path pose_file = root / "poses" / ("obj" + std::to_string(id) + ".txt");
        if (!fs::exists(pose_file))
            throw Error(ErrorCode::MalformedDataset,
                        pose_file.string() + ": missing pose file for object id " +
                            std::to_string(id));
        trajectories[id] = read_pose_file(pose_file.string());
    }
    return build_sequence(std::move(keyframes), frame_count, trajectories, cfg);
}

void save_sequence_intrinsics(const std::string& dir, const Intrinsics& intr) {
    fs::create_directories(fs::path(dir));
    std::ofstream f((fs::path(dir) / "intrinsics.txt").string());
    if (!f) throw Error(ErrorCode::IoError, "cannot write intrinsics.txt in " + dir);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g\n%d %d\n", double(intr.fx),
                  double(intr.fy), double(intr.cx), double(intr.cy), intr.width, intr.height);
    f << buf;
}

void save_sequence_frame(const std::string& dir, const Keyframe& frame) {
    const fs::path frames_dir = fs::path(dir) / "frames";
    fs::create_directories(frames_dir);
    const std::string base = (frames_dir / frame_name(frame.timestep)).string();
    write_raster(base + ".depth", "fdep", frame.depth);
    write_raster(base + ".mask", "fmsk", frame.object_mask);
    write_raster(base + ".assoc", "fasc", frame.assoc);
}

void save_sequence_poses(const std::string& dir, int object_id,
                         const std::map<int, Pose>& trajectory, bool camera) {
    const fs::path poses_dir = fs::path(dir) / "poses";
    fs::create_directories(poses_dir);
    const std::string name = camera ? "obj0cam.txt" : ("obj" + std::to_string(object_id) + ".txt");
    write_pose_file((poses_dir / name).string(), trajectory);
}

}  // namespace cosect
