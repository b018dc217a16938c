// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "cosect/eval.hpp"
#include "cosect/solver.hpp"
#include "cosect/synthcam.hpp"

namespace cosect {

// Table rows: the weighted-average TSDF fusion comparison plus the four
// optimization variants distinguished by their hull/intersection flags.
enum class Variant { Tsdf, Baseline, Hull, Inter, Full };

const char* variant_name(Variant v);
bool variant_uses_hull(Variant v);
bool variant_uses_inter(Variant v);

struct PipelineConfig {
    std::string scene_config;  // scene description; source of ground truth
    std::string sequence_dir;  // reuse an existing rendering when set
    std::string output_dir;

    EnergyParams params;
    JacobiSchedule schedule;
    std::vector<Variant> variants = {Variant::Tsdf, Variant::Baseline, Variant::Hull,
                                     Variant::Inter, Variant::Full};
    int keyframe_stride = 10;
    int eval_samples = 10000;
    uint32_t eval_seed = 7;
    int gt_resolution = 128;
    SequenceConfig sequence;  // background volume placement etc.
    bool parallel_variants = false;
};

struct AblationRow {
    int object_id = 0;
    Variant variant = Variant::Full;
    double accuracy = 0.0;
    double completeness = 0.0;
};

struct AblationReport {
    std::vector<AblationRow> rows;
    std::vector<std::pair<std::string, SolveReport>> solves;  // volume label -> report

    const AblationRow* find(int object_id, Variant v) const;
};

// Runs every enabled variant over the sequence, writes per-variant meshes,
// volumes, and the tab-separated ablation table into output_dir.
AblationReport run_pipeline(const PipelineConfig& config);

// Projective weighted-average TSDF fusion of the keyframes, restricted to
// each model's mask pixels. Truncation 4 voxel sizes, weight cap 64.
struct TsdfVolume {
    ScalarGrid tsdf;
    ScalarGrid weight;

    // Voxels that received at least one observation.
    BitGrid observed() const;
};
std::map<int, TsdfVolume> tsdf_baseline(const std::vector<ObjectModel>& models,
                                        const std::vector<Keyframe>& keyframes);

void write_ablation_table(const std::string& path, const AblationReport& report);

}  // namespace cosect
