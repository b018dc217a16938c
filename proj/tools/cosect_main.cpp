// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>

#include "CLI11.hpp"
#include "cosect/error.hpp"
#include "cosect/pipeline.hpp"

using namespace cosect;
namespace fs = std::filesystem;

namespace {

void add_energy_flags(CLI::App* cmd, EnergyParams& params) {
    cmd->add_option("--alpha", params.alpha, "regularizer weight");
    cmd->add_option("--beta-hull", params.beta_hull, "hull penalty weight");
    cmd->add_option("--beta-inter", params.beta_inter, "intersection penalty weight");
    cmd->add_option("--sigma", params.sigma, "Gaussian width in meters (0 = voxel size)");
    cmd->add_option("--cycle-len", params.cycle_len, "sweeps per relaxation cycle");
    cmd->add_option("--max-cycles", params.max_cycles, "cycle cap per volume");
    cmd->add_option("--rel-tol", params.rel_tol, "relative energy decrease to stop");
}

void add_sequence_flags(CLI::App* cmd, SequenceConfig& cfg) {
    cmd->add_option("--bg-center", [&cfg](const std::vector<std::string>& vals) {
        if (vals.size() != 3) return false;
        cfg.bg_center = Vec3f(std::stof(vals[0]), std::stof(vals[1]), std::stof(vals[2]));
        return true;
    }, "background volume center (3 values)")->expected(3);
    cmd->add_option("--bg-size", cfg.bg_size, "background volume edge length, meters");
    cmd->add_option("--bg-res", cfg.bg_resolution, "background resolution per axis");
    cmd->add_option("--obj-res", cfg.object_resolution, "object resolution per axis");
}

void write_reports(const std::string& path,
                   const std::vector<std::pair<std::string, SolveReport>>& reports) {
    std::ofstream f(path);
    for (const auto& [label, r] : reports) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "volume %s cycles %d initial %.9g final %.9g converged %d wall %.3f\n",
                      label.c_str(), r.cycles_run, r.initial_energy, r.final_energy,
                      int(r.converged), r.wall_time);
        f << buf;
    }
}

int run_synth(const std::string& scene_path, const std::string& out_dir, float noise,
              bool soft_assoc, unsigned seed) {
    ScriptedScene scene = load_scene_config(scene_path);
    if (noise > 0.0f) scene.depth_noise_sigma = noise;
    if (soft_assoc) scene.soft_assoc = true;
    if (seed) scene.noise_seed = seed;
    write_sequence(scene, out_dir);
    std::printf("wrote %d frames to %s\n", scene.frame_count, out_dir.c_str());
    return 0;
}

int run_optimize(const std::string& seq_dir, const std::string& out_dir,
                 const SequenceConfig& seq_cfg, const EnergyParams& params, bool no_hull,
                 bool no_inter, bool incremental) {
    Sequence seq = load_sequence(seq_dir, seq_cfg);
    SceneSolveOptions options;
    options.use_hull = !no_hull;
    options.use_inter = !no_inter;

    SceneOptimizer optimizer(seq.models, params, options);
    std::vector<std::pair<std::string, SolveReport>> reports;
    auto record = [&](const std::vector<SolveReport>& rs) {
        for (size_t m = 0; m < rs.size(); ++m)
            reports.emplace_back("obj" + std::to_string(optimizer.models()[m].id), rs[m]);
    };

    if (incremental) {
        for (const Keyframe& kf : seq.keyframes) {
            optimizer.add_keyframes(std::span(&kf, 1));
            record(optimizer.optimize());
        }
    } else {
        optimizer.add_keyframes(seq.keyframes);
        record(optimizer.optimize());
    }

    fs::create_directories(out_dir);
    for (const ObjectModel& model : optimizer.models()) {
        const std::string base = out_dir + "/obj" + std::to_string(model.id);
        save_csvf(base + ".csvf", model.sdf);
        save_csvb(base + ".hull.csvb", optimizer.hull(model.id).unseen);
    }
    write_reports(out_dir + "/report.txt", reports);
    std::printf("optimized %zu volumes into %s\n", optimizer.models().size(),
                out_dir.c_str());
    return 0;
}

int run_extract(const std::string& volume, const std::string& out, double iso) {
    ScalarGrid u = load_csvf(volume);
    TriMesh mesh = marching_cubes(u, float(iso));
    save_mesh(out, mesh);
    std::printf("extracted %zu vertices, %zu triangles to %s\n", mesh.vertices.size(),
                mesh.triangles.size(), out.c_str());
    return 0;
}

int run_evaluate(const std::string& recon_path, const std::string& gt_path, int samples,
                 unsigned seed, const std::string& color_out) {
    TriMesh recon = load_mesh(recon_path);
    TriMesh gt = load_mesh(gt_path);
    EvalResult r = evaluate(recon, gt, samples, seed);
    std::printf("accuracy %.9g completeness %.9g\n", r.accuracy, r.completeness);
    if (!color_out.empty()) {
        TriMesh colored = recon;
        colored.quality = per_vertex_distance(recon, gt);
        save_mesh(color_out, colored);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"volumetric shape completion with hull and intersection constraints",
                 "cosect"};
    app.require_subcommand(1);

    // synth
    std::string scene_path, out_dir;
    float noise = 0.0f;
    bool soft_assoc = false;
    unsigned seed = 0;
    auto* synth = app.add_subcommand("synth", "render a scripted scene into a sequence");
    synth->add_option("--scene", scene_path, "scene description file")->required();
    synth->add_option("--out", out_dir, "output sequence directory")->required();
    synth->add_option("--depth-noise", noise, "Gaussian depth noise sigma, meters");
    synth->add_flag("--soft-assoc", soft_assoc, "soften association near mask borders");
    synth->add_option("--noise-seed", seed, "noise seed");

    // optimize
    std::string seq_dir, opt_out;
    bool no_hull = false, no_inter = false, incremental = false;
    EnergyParams opt_params;
    SequenceConfig opt_seq_cfg;
    auto* optimize = app.add_subcommand("optimize", "globally optimize per-object SDFs");
    optimize->add_option("--sequence", seq_dir, "sequence directory")->required();
    optimize->add_option("--out", opt_out, "output directory")->required();
    optimize->add_flag("--no-hull", no_hull, "drop the hull penalty");
    optimize->add_flag("--no-inter", no_inter, "drop the intersection penalty");
    optimize->add_flag("--incremental", incremental, "optimize after every keyframe");
    optimize->add_option("--keyframe-stride", opt_seq_cfg.keyframe_stride,
                         "use every Nth frame");
    add_energy_flags(optimize, opt_params);
    add_sequence_flags(optimize, opt_seq_cfg);

    // extract
    std::string volume_path, mesh_out;
    double iso = 0.0;
    auto* extract = app.add_subcommand("extract", "isosurface of a csvf volume");
    extract->add_option("--volume", volume_path, "csvf volume file")->required();
    extract->add_option("--out", mesh_out, "output mesh (.ply or .obj)")->required();
    extract->add_option("--iso", iso, "iso level");

    // evaluate
    std::string recon_path, gt_path, color_out;
    int samples = 10000;
    unsigned eval_seed = 7;
    auto* eval_cmd = app.add_subcommand("evaluate", "accuracy/completeness of a mesh pair");
    eval_cmd->add_option("--recon", recon_path, "reconstructed mesh")->required();
    eval_cmd->add_option("--gt", gt_path, "ground-truth mesh")->required();
    eval_cmd->add_option("--samples", samples, "surface samples per mesh");
    eval_cmd->add_option("--seed", eval_seed, "sampling seed");
    eval_cmd->add_option("--color-out", color_out, "write distance-colored recon mesh");

    // pipeline
    PipelineConfig pipe;
    bool parallel_variants = false;
    std::vector<std::string> variant_names;
    auto* pipeline = app.add_subcommand("pipeline", "full ablation study over a scene");
    pipeline->add_option("--scene", pipe.scene_config, "scene description file");
    pipeline->add_option("--sequence", pipe.sequence_dir, "reuse an existing sequence");
    pipeline->add_option("--out", pipe.output_dir, "output directory")->required();
    pipeline->add_option("--keyframe-stride", pipe.keyframe_stride, "use every Nth frame");
    pipeline->add_option("--samples", pipe.eval_samples, "evaluation samples");
    pipeline->add_option("--seed", pipe.eval_seed, "evaluation seed");
    pipeline->add_option("--gt-res", pipe.gt_resolution, "ground-truth mesh resolution");
    pipeline->add_option("--variants", variant_names,
                         "subset of {tsdf,baseline,hull,inter,full}");
    pipeline->add_flag("--parallel-variants", parallel_variants, "run variants concurrently");
    add_energy_flags(pipeline, pipe.params);
    add_sequence_flags(pipeline, pipe.sequence);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(scene_path, out_dir, noise, soft_assoc, seed);
        if (optimize->parsed())
            return run_optimize(seq_dir, opt_out, opt_seq_cfg, opt_params, no_hull, no_inter,
                                incremental);
        if (extract->parsed()) return run_extract(volume_path, mesh_out, iso);
        if (eval_cmd->parsed())
            return run_evaluate(recon_path, gt_path, samples, eval_seed, color_out);
        if (pipeline->parsed()) {
            pipe.parallel_variants = parallel_variants;
            if (!variant_names.empty()) {
                pipe.variants.clear();
                for (const std::string& name : variant_names) {
                    if (name == "tsdf") pipe.variants.push_back(Variant::Tsdf);
                    else if (name == "baseline") pipe.variants.push_back(Variant::Baseline);
                    else if (name == "hull") pipe.variants.push_back(Variant::Hull);
                    else if (name == "inter") pipe.variants.push_back(Variant::Inter);
                    else if (name == "full") pipe.variants.push_back(Variant::Full);
                    else
                        throw cosect::Error(cosect::ErrorCode::InvalidArgument,
                                            "unknown variant " + name);
                }
            }
            AblationReport report = run_pipeline(pipe);
            for (const AblationRow& row : report.rows)
                std::printf("obj%d\t%s\taccuracy %.9g\tcompleteness %.9g\n", row.object_id,
                            variant_name(row.variant), row.accuracy, row.completeness);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
