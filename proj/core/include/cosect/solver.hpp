// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cosect/constraints.hpp"
#include "cosect/energy.hpp"
#include "cosect/scene.hpp"

namespace cosect {

struct SolveReport {
    int cycles_run = 0;
    double initial_energy = 0.0;
    double final_energy = 0.0;
    bool converged = false;
    double wall_time = 0.0;  // seconds
};

// Relaxation weight schedule for the damped Jacobi sweeps. The cyclic
// schedule runs ascending Chebyshev-root over-relaxation weights
// omega_base / cos^2(pi (2k+1) / (4n+2)); the constant schedule uses
// omega_base for every sweep. Both reach the same fixed point.
//
// Stability: the cycle's roots cover the interval [0, 1/omega_base] of
// diagonally preconditioned eigenvalues. The Hessian-regularizer operator
// reaches lambda~2.63, so the cyclic default is 0.35 (coverage up to 2.86);
// a constant sweep only needs omega*lambda < 2, hence 0.66.
struct JacobiSchedule {
    enum class Kind { Cyclic, Constant };
    Kind kind = Kind::Cyclic;
    double omega_base = 0.0;  // 0 = schedule default (0.35 cyclic, 0.66 constant)

    double omega(int sweep, int cycle_len) const;
};

// One relaxation cycle of cycle_len simultaneous-update sweeps. Returns the
// energy after the cycle; throws DIVERGENCE if the energy rose by more than
// 1e-6 relative across the cycle. `energy_before` skips the initial energy
// evaluation when the caller already knows it.
double jacobi_cycle(ScalarGrid& u, const DataField& df, const HullGrid* hull,
                    const InterGrid* inter, const EnergyParams& params,
                    const JacobiSchedule& schedule = {},
                    std::optional<double> energy_before = std::nullopt);

// Runs cycles until the relative energy decrease drops below rel_tol or
// max_cycles is reached.
std::pair<ScalarGrid, SolveReport> optimize_volume(const ScalarGrid& u0, const DataField& df,
                                                   const HullGrid* hull, const InterGrid* inter,
                                                   const EnergyParams& params,
                                                   const JacobiSchedule& schedule = {});

// Coarse-to-fine initialization: optimizes the data and regularizer terms
// on a 32^3 start level (or the target, if smaller), then repeatedly splits
// voxels and re-optimizes up to half the target resolution. Hull and
// intersection terms stay out until the finest level, which the caller
// optimizes. Throws BAD_RESOLUTION if the target is not a power-of-two
// multiple of the start level.
ScalarGrid coarse_to_fine_init(const std::vector<OrientedPoint>& points,
                               const GridSpec& target_spec, const EnergyParams& params,
                               const JacobiSchedule& schedule = {});

struct SceneSolveOptions {
    bool use_hull = true;
    bool use_inter = true;
    JacobiSchedule schedule{};
    bool normalized_point_sdf = true;
};

// Holds per-volume accumulation state across keyframe batches so new
// measurements warm-start from the previous optimization result.
class SceneOptimizer {
public:
    SceneOptimizer(std::vector<ObjectModel> models, const EnergyParams& params,
                   const SceneSolveOptions& options = {});

    // Extracts per-object points and carves free space for each keyframe.
    void add_keyframes(std::span<const Keyframe> keyframes);

    // Background first, then every object with the full energy.
    std::vector<SolveReport> optimize();

    const std::vector<ObjectModel>& models() const { return models_; }
    std::vector<ObjectModel>& models() { return models_; }
    const HullGrid& hull(int object_id) const;
    const InterGrid* inter(int object_id) const;
    const DataField& data_field(int object_id) const;
    const std::vector<int>& keyframe_timesteps() const { return timesteps_; }

private:
    ObjectModel& model_by_id(int id);
    int index_of(int id) const;

    std::vector<ObjectModel> models_;
    std::vector<HullGrid> hulls_;
    std::vector<DataField> data_;
    std::vector<std::optional<InterGrid>> inters_;
    std::vector<int> timesteps_;
    EnergyParams params_;
    SceneSolveOptions options_;
};

// One-shot orchestration over a fixed keyframe set.
std::vector<SolveReport> optimize_scene(std::vector<ObjectModel>& models,
                                        const std::vector<Keyframe>& keyframes,
                                        const EnergyParams& params,
                                        const SceneSolveOptions& options = {});

}  // namespace cosect
