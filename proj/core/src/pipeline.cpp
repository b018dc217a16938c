// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "cosect/error.hpp"
#include "cosect/parallel.hpp"

namespace fs = std::filesystem;

namespace cosect {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Tsdf: return "tsdf";
        case Variant::Baseline: return "baseline";
        case Variant::Hull: return "baseline+hull";
        case Variant::Inter: return "baseline+inter";
        case Variant::Full: return "full";
    }
    return "?";
}

bool variant_uses_hull(Variant v) { return v == Variant::Hull || v == Variant::Full; }
bool variant_uses_inter(Variant v) { return v == Variant::Inter || v == Variant::Full; }

const AblationRow* AblationReport::find(int object_id, Variant v) const {
    for (const AblationRow& row : rows)
        if (row.object_id == object_id && row.variant == v) return &row;
    return nullptr;
}

BitGrid TsdfVolume::observed() const {
    BitGrid mask(weight.spec, false);
    for (size_t i = 0; i < weight.values.size(); ++i)
        mask.bits[i] = weight.values[i] > 0.0f ? 1 : 0;
    return mask;
}

std::map<int, TsdfVolume> tsdf_baseline(const std::vector<ObjectModel>& models,
                                        const std::vector<Keyframe>& keyframes) {
    std::map<int, TsdfVolume> out;
    for (const ObjectModel& model : models) {
        TsdfVolume vol{ScalarGrid(model.spec, 0.0f), ScalarGrid(model.spec, 0.0f)};
        const GridSpec& s = model.spec;
        const float trunc = 4.0f * s.voxel_size;
        constexpr float kWeightCap = 64.0f;

        for (const Keyframe& kf : keyframes) {
            const Pose vol_to_cam = kf.camera_pose.inverse() * model.pose_at(kf.timestep);
            const Intrinsics& intr = kf.intrinsics;
            parallel_for(0, s.dims.z, [&](int64_t z) {
                for (int y = 0; y < s.dims.y; ++y) {
                    int64_t i = s.linear_index(0, y, int(z));
                    for (int x = 0; x < s.dims.x; ++x, ++i) {
                        const Vec3f pc = vol_to_cam.apply(s.voxel_to_world(Vec3i(x, y, int(z))));
                        if (pc.z <= 0.0f) continue;
                        const int col = int(std::lround(pc.x / pc.z * intr.fx + intr.cx));
                        const int row = int(std::lround(pc.y / pc.z * intr.fy + intr.cy));
                        if (!kf.depth.in_bounds(col, row)) continue;
                        if (kf.object_mask.at(col, row) != model.id) continue;
                        const float d = kf.depth.at(col, row);
                        if (d <= 0.0f) continue;
                        const float sdf = d - pc.z;
                        if (sdf < -trunc) continue;  // hidden beyond truncation
                        const float value = std::min(sdf, trunc);
                        float& w = vol.weight.values[size_t(i)];
                        float& t = vol.tsdf.values[size_t(i)];
                        t = (t * w + value) / (w + 1.0f);
                        w = std::min(w + 1.0f, kWeightCap);
                    }
                }
            });
        }
        out.emplace(model.id, std::move(vol));
    }
    return out;
}

namespace {

std::string object_label(int id) { return "obj" + std::to_string(id); }

struct SharedState {
    Sequence seq;
    std::vector<HullGrid> hulls;
    std::vector<DataField> data;
    std::vector<int> timesteps;
};

// Measurement preparation shared by all variants: point extraction, hull
// carving, foreground removal, accumulation, and free-space freezing.
SharedState prepare(const PipelineConfig& config, Sequence seq) {
    SharedState st;
    st.seq = std::move(seq);
    for (const Keyframe& kf : st.seq.keyframes) st.timesteps.push_back(kf.timestep);

    for (ObjectModel& model : st.seq.models) {
        HullGrid hull(model.spec);
        for (const Keyframe& kf : st.seq.keyframes) {
            auto pts = extract_object_points(kf, model);
            if (!pts.empty()) {
                auto& slot = model.points[kf.timestep];
                slot.insert(slot.end(), pts.begin(), pts.end());
            }
            carve_free_space(hull, kf, model.pose_at(kf.timestep));
        }
        st.hulls.push_back(std::move(hull));
    }

    remove_foreground_points(st.seq.models);

    for (size_t m = 0; m < st.seq.models.size(); ++m) {
        DataField df = accumulate_data(st.seq.models[m].all_points(),
                                       st.seq.models[m].spec, config.params);
        freeze_free_space(df, st.hulls[m]);
        st.data.push_back(std::move(df));
    }
    return st;
}

}  // namespace

AblationReport run_pipeline(const PipelineConfig& config) {
    if (config.output_dir.empty())
        throw Error(ErrorCode::InvalidArgument, "pipeline needs an output directory");
    fs::create_directories(config.output_dir);
    const fs::path out(config.output_dir);

    // Stage 1: the measurement sequence, rendered unless one was supplied.
    ScriptedScene scene;
    bool have_scene = false;
    if (!config.scene_config.empty()) {
        scene = load_scene_config(config.scene_config);
        have_scene = true;
    }
    std::string seq_dir = config.sequence_dir;
    if (seq_dir.empty()) {
        if (!have_scene)
            throw Error(ErrorCode::InvalidArgument,
                        "pipeline needs a scene config or a sequence directory");
        seq_dir = (out / "sequence").string();
        if (!fs::exists(fs::path(seq_dir) / "intrinsics.txt")) write_sequence(scene, seq_dir);
    }

    SequenceConfig seq_cfg = config.sequence;
    seq_cfg.keyframe_stride = config.keyframe_stride;
    SharedState st = prepare(config, load_sequence(seq_dir, seq_cfg));
    const std::vector<ObjectModel>& models = st.seq.models;

    // Ground-truth meshes from the scripted shapes.
    std::map<int, TriMesh> gt;
    if (have_scene) {
        for (const ObjectModel& model : models) {
            if (model.id == 0) continue;
            const SceneObject* so = scene.object_by_id(model.id);
            if (!so)
                throw Error(ErrorCode::InvalidArgument,
                            "scene config lacks object " + std::to_string(model.id));
            gt[model.id] = gt_mesh(so->shape, config.gt_resolution);
            save_mesh((out / ("gt_" + object_label(model.id) + ".ply")).string(),
                      gt[model.id]);
        }
    }

    AblationReport report;
    const bool want_optim =
        std::any_of(config.variants.begin(), config.variants.end(),
                    [](Variant v) { return v != Variant::Tsdf; });

    // Stage 2: background solves, one per hull setting in use.
    const int bg_index = [&] {
        for (size_t i = 0; i < models.size(); ++i)
            if (models[i].id == 0) return int(i);
        throw Error(ErrorCode::InvalidArgument, "sequence has no background model");
    }();
    std::map<bool, ObjectModel> bg_solved;
    if (want_optim) {
        std::vector<bool> hull_settings;
        for (Variant v : config.variants)
            if (v != Variant::Tsdf &&
                std::find(hull_settings.begin(), hull_settings.end(), variant_uses_hull(v)) ==
                    hull_settings.end())
                hull_settings.push_back(variant_uses_hull(v));
        for (bool use_hull : hull_settings) {
            ObjectModel bg = models[size_t(bg_index)];
            ScalarGrid u0 =
                coarse_to_fine_init(bg.all_points(), bg.spec, config.params, config.schedule);
            auto [u, solve] = optimize_volume(u0, st.data[size_t(bg_index)],
                                              use_hull ? &st.hulls[size_t(bg_index)] : nullptr,
                                              nullptr, config.params, config.schedule);
            bg.sdf = std::move(u);
            bg.has_sdf = true;
            report.solves.emplace_back(
                std::string("bg/") + (use_hull ? "hull" : "nohull"), solve);
            bg_solved.emplace(use_hull, std::move(bg));
        }
    }

    // Stage 3: per-variant object solves, meshes, and metrics.
    std::map<int, TsdfVolume> tsdf;
    if (std::find(config.variants.begin(), config.variants.end(), Variant::Tsdf) !=
        config.variants.end())
        tsdf = tsdf_baseline(models, st.seq.keyframes);

    struct VariantOutput {
        std::vector<AblationRow> rows;
        std::vector<std::pair<std::string, SolveReport>> solves;
    };
    std::map<Variant, VariantOutput> outputs;

    auto run_variant = [&](Variant v, VariantOutput& vo) {
        const fs::path vol_dir = out / "volumes" / variant_name(v);
        fs::create_directories(vol_dir);

        for (size_t m = 0; m < models.size(); ++m) {
            const ObjectModel& model = models[m];
            if (model.id == 0) continue;

            TriMesh mesh;
            if (v == Variant::Tsdf) {
                const TsdfVolume& tv = tsdf.at(model.id);
                const BitGrid observed = tv.observed();
                mesh = marching_cubes(tv.tsdf, 0.0f, &observed);
                save_csvf((vol_dir / (object_label(model.id) + ".csvf")).string(), tv.tsdf);
            } else {
                const ObjectModel& bg = bg_solved.at(variant_uses_hull(v));
                std::optional<InterGrid> inter;
                if (variant_uses_inter(v)) {
                    std::vector<const ObjectModel*> others;
                    others.push_back(&bg);
                    for (const ObjectModel& other : models)
                        if (other.id != 0 && other.id != model.id) others.push_back(&other);
                    InterConfig icfg;
                    icfg.sigma = config.params.sigma;
                    inter = compute_d_inter(model, others, st.timesteps, icfg);
                }
                ScalarGrid u0 = coarse_to_fine_init(model.all_points(), model.spec,
                                                    config.params, config.schedule);
                auto [u, solve] = optimize_volume(
                    u0, st.data[m], variant_uses_hull(v) ? &st.hulls[m] : nullptr,
                    inter ? &*inter : nullptr, config.params, config.schedule);
                vo.solves.emplace_back(object_label(model.id) + "/" + variant_name(v), solve);
                save_csvf((vol_dir / (object_label(model.id) + ".csvf")).string(), u);
                mesh = marching_cubes(u, 0.0f);
            }

            const std::string mesh_name =
                object_label(model.id) + "_" + variant_name(v) + ".ply";
            if (!mesh.empty()) save_mesh((out / mesh_name).string(), mesh);

            auto gt_it = gt.find(model.id);
            if (gt_it != gt.end() && !mesh.empty()) {
                EvalResult er =
                    evaluate(mesh, gt_it->second, config.eval_samples, config.eval_seed);
                vo.rows.push_back({model.id, v, er.accuracy, er.completeness});
            }
        }
    };

    for (Variant v : config.variants) outputs.emplace(v, VariantOutput{});
    if (config.parallel_variants) {
        std::vector<std::thread> threads;
        for (Variant v : config.variants)
            threads.emplace_back([&, v] { run_variant(v, outputs.at(v)); });
        for (auto& t : threads) t.join();
    } else {
        for (Variant v : config.variants) run_variant(v, outputs.at(v));
    }

    for (Variant v : config.variants) {
        auto& vo = outputs.at(v);
        report.rows.insert(report.rows.end(), vo.rows.begin(), vo.rows.end());
        report.solves.insert(report.solves.end(), vo.solves.begin(), vo.solves.end());
    }

    // Hulls are variant-independent; write them once for inspection.
    for (size_t m = 0; m < models.size(); ++m)
        save_csvb((out / "volumes" / (object_label(models[m].id) + ".hull.csvb")).string(),
                  st.hulls[m].unseen);

    write_ablation_table((out / "ablation.txt").string(), report);

    std::ofstream rf((out / "report.txt").string());
    for (const auto& [label, solve] : report.solves) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "volume %s cycles %d initial %.9g final %.9g converged %d wall %.3f\n",
                      label.c_str(), solve.cycles_run, solve.initial_energy,
                      solve.final_energy, int(solve.converged), solve.wall_time);
        rf << buf;
    }
    return report;
}

void write_ablation_table(const std::string& path, const AblationReport& report) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    f << "object\tmethod\taccuracy\tcompleteness\n";
    char buf[160];
    for (const AblationRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%d\t%s\t%.9g\t%.9g\n", row.object_id,
                      variant_name(row.variant), row.accuracy, row.completeness);
        f << buf;
    }
}

}  // namespace cosect
