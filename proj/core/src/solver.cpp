// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/solver.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <cmath>

#include "cosect/error.hpp"
#include "cosect/parallel.hpp"
#include "energy_detail.hpp"

namespace cosect {

double JacobiSchedule::omega(int sweep, int cycle_len) const {
    if (kind == Kind::Constant) return omega_base > 0.0 ? omega_base : 0.66;
    // Interleaved ordering: consecutive ascending weights let round-off
    // injected late in the cycle pass through the large final steps
    // unattenuated, which breaks the per-cycle contraction in float
    // arithmetic. Striding the root index by a coprime kappa mixes large
    // and small weights so later sweeps damp earlier injections.
    int kappa = std::max(1, cycle_len / 2);
    while (kappa > 1 && std::gcd(kappa, cycle_len) != 1) --kappa;
    const int k = (sweep * kappa) % cycle_len;
    const double base = omega_base > 0.0 ? omega_base : 0.35;
    const double angle = M_PI * double(2 * k + 1) / double(4 * cycle_len + 2);
    const double c = std::cos(angle);
    return base / (c * c);
}

namespace {

constexpr double kCycleRiseTolerance = 1e-6;

class VolumeSolver {
public:
    VolumeSolver(const DataField& df, const HullGrid* hull, const InterGrid* inter,
                 const EnergyParams& params, const JacobiSchedule& schedule)
        : df_(df), hull_(hull), inter_(inter), params_(params), schedule_(schedule) {
        const GridSpec& spec = df.spec();
        detail::reg_diagonal(spec, reg_diag_);
        next_.resize(size_t(spec.voxel_count()));
        const float max_w = df.W.max_value();
        diag_floor_ = 1e-12f * std::max(max_w, 1.0f);
    }

    double energy(const ScalarGrid& u) {
        return energy_value(u, df_, hull_, inter_, params_);
    }

    // cycle_len simultaneous sweeps; throws DIVERGENCE on a relative energy
    // rise beyond tolerance. The one-sided penalty active sets are frozen at
    // the cycle start: within the cycle the energy is then a fixed quadratic
    // and the Chebyshev weight cycle is a guaranteed contraction on it, while
    // the active sets update between cycles. Voxels crossing a penalty
    // threshold during an accelerated cycle can still raise the true energy
    // slightly; such cycles are retaken as plain damped sweeps, which
    // descend unconditionally (omega * lambda_max < 2).
    double cycle(ScalarGrid& u, double energy_before) {
        const double scale = std::max(std::abs(energy_before), 1e-12);
        const bool accelerated = schedule_.kind == JacobiSchedule::Kind::Cyclic;
        if (accelerated) backup_ = u.values;

        freeze_active_sets(u);
        for (int k = 0; k < params_.cycle_len; ++k)
            sweep(u, schedule_.omega(k, params_.cycle_len));
        double energy_after = energy(u);
        if (energy_after - energy_before <= kCycleRiseTolerance * scale) return energy_after;

        if (accelerated && energy_after - energy_before <= 1e-2 * scale) {
            u.values = backup_;
            for (int k = 0; k < params_.cycle_len; ++k) {
                freeze_active_sets(u);
                sweep(u, 0.66);
            }
            energy_after = energy(u);
            if (energy_after - energy_before <= kCycleRiseTolerance * scale)
                return energy_after;
        }
        throw Error(ErrorCode::Divergence, "energy rose across a relaxation cycle (" +
                                               std::to_string(energy_before) + " -> " +
                                               std::to_string(energy_after) + ")");
    }

private:
    void freeze_active_sets(const ScalarGrid& u) {
        if (!hull_ && !inter_) return;
        const GridSpec& spec = u.spec;
        const float h = spec.voxel_size;
        if (active_.size() != u.values.size()) active_.resize(u.values.size());
        const float* uv = u.values.data();
        const uint8_t* unseen = hull_ ? hull_->unseen.bits.data() : nullptr;
        const float* dints = inter_ ? inter_->d.values.data() : nullptr;
        uint8_t* act = active_.data();
        parallel_chunks(0, spec.voxel_count(), [&](int64_t lo, int64_t hi) {
            for (int64_t i = lo; i < hi; ++i) {
                uint8_t bits = 0;
                if (unseen && !unseen[i] && uv[i] < h) bits |= 1;
                if (dints && dints[i] > 0.0f && uv[i] < dints[i]) bits |= 2;
                act[i] = bits;
            }
        });
    }

    void sweep(ScalarGrid& u, double omega) {
        const GridSpec& spec = u.spec;
        const float h = spec.voxel_size;
        const float alpha = params_.alpha;
        const float bh = params_.beta_hull;
        const float bi = params_.beta_inter;
        const float w_relax = float(omega);
        const bool with_reg = alpha > 0.0f;
        const bool with_pen = (hull_ || inter_) && !active_.empty();

        if (with_reg) detail::reg_operator_apply(u, ws_, reg_buf_);

        const float* uv = u.values.data();
        const float* W = df_.W.values.data();
        const float* B = df_.B.values.data();
        const float* reg = with_reg ? reg_buf_.data() : nullptr;
        const float* diag_reg = reg_diag_.data();
        const uint8_t* act = with_pen ? active_.data() : nullptr;
        const float* dints = inter_ ? inter_->d.values.data() : nullptr;
        float* out = next_.data();
        const float floor = diag_floor_;

        parallel_chunks(0, spec.voxel_count(), [&](int64_t lo, int64_t hi) {
            for (int64_t i = lo; i < hi; ++i) {
                const float ui = uv[i];
                float g = W[i] * ui - B[i];
                float H = W[i];
                if (reg) {
                    g += alpha * reg[i];
                    H += alpha * diag_reg[i];
                }
                if (act) {
                    if (act[i] & 1) {
                        g -= bh * (h - ui);
                        H += bh;
                    }
                    if (act[i] & 2) {
                        g -= bi * (dints[i] - ui);
                        H += bi;
                    }
                }
                out[i] = ui - w_relax * g / std::max(H, floor);
            }
        });
        u.values.swap(next_);
    }

    const DataField& df_;
    const HullGrid* hull_;
    const InterGrid* inter_;
    EnergyParams params_;
    JacobiSchedule schedule_;
    std::vector<float> reg_diag_;
    std::vector<uint8_t> active_;
    std::vector<float> backup_;
    std::vector<float> reg_buf_;
    std::vector<float> next_;
    detail::RegWorkspace ws_;
    float diag_floor_ = 0.0f;
};

void check_spec(const ScalarGrid& u, const DataField& df) {
    if (!(u.spec == df.spec()))
        throw Error(ErrorCode::ShapeMismatch, "u spec differs from data field");
}

}  // namespace

double jacobi_cycle(ScalarGrid& u, const DataField& df, const HullGrid* hull,
                    const InterGrid* inter, const EnergyParams& params,
                    const JacobiSchedule& schedule, std::optional<double> energy_before) {
    check_spec(u, df);
    VolumeSolver solver(df, hull, inter, params, schedule);
    const double e0 = energy_before ? *energy_before : solver.energy(u);
    return solver.cycle(u, e0);
}

std::pair<ScalarGrid, SolveReport> optimize_volume(const ScalarGrid& u0, const DataField& df,
                                                   const HullGrid* hull, const InterGrid* inter,
                                                   const EnergyParams& params,
                                                   const JacobiSchedule& schedule) {
    check_spec(u0, df);
    const auto start = std::chrono::steady_clock::now();
    ScalarGrid u = u0;
    VolumeSolver solver(df, hull, inter, params, schedule);

    SolveReport report;
    double energy = solver.energy(u);
    report.initial_energy = energy;
    for (int c = 0; c < params.max_cycles; ++c) {
        const double next = solver.cycle(u, energy);
        ++report.cycles_run;
        const double decrease = energy - next;
        energy = next;
        if (decrease < params.rel_tol * std::max(std::abs(energy), 1e-12)) {
            report.converged = true;
            break;
        }
    }
    report.final_energy = energy;
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(u), report};
}

namespace {

// Signed-distance estimate from the nearest oriented point, propagated with
// forward/backward vector-distance-transform sweeps. Gives the coarsest
// level a far field that is already close to the minimizer; plain zeros
// leave large empty regions to crawl through the regularizer's slowest
// modes.
ScalarGrid nearest_point_init(const std::vector<OrientedPoint>& points,
                              const GridSpec& spec) {
    ScalarGrid u(spec, 0.0f);
    if (points.empty()) return u;

    const int64_t n = spec.voxel_count();
    std::vector<int32_t> nearest(size_t(n), -1);
    std::vector<float> dist2(size_t(n), std::numeric_limits<float>::max());

    for (int32_t i = 0; i < int32_t(points.size()); ++i) {
        const Vec3i v = spec.nearest_voxel(points[size_t(i)].p);
        if (!spec.contains(v)) continue;
        const int64_t idx = spec.linear_index(v.x, v.y, v.z);
        const float d2 = (points[size_t(i)].p - spec.voxel_to_world(v)).squared_norm();
        if (d2 < dist2[size_t(idx)]) {
            dist2[size_t(idx)] = d2;
            nearest[size_t(idx)] = i;
        }
    }

    const Vec3i d = spec.dims;
    auto relax = [&](int x, int y, int z, int nx, int ny, int nz) {
        if (nx < 0 || ny < 0 || nz < 0 || nx >= d.x || ny >= d.y || nz >= d.z) return;
        const int32_t cand = nearest[size_t(spec.linear_index(nx, ny, nz))];
        if (cand < 0) return;
        const int64_t idx = spec.linear_index(x, y, z);
        const float d2 =
            (points[size_t(cand)].p - spec.voxel_to_world(Vec3i(x, y, z))).squared_norm();
        if (d2 < dist2[size_t(idx)]) {
            dist2[size_t(idx)] = d2;
            nearest[size_t(idx)] = cand;
        }
    };
    for (int pass = 0; pass < 2; ++pass) {
        for (int z = 0; z < d.z; ++z)
            for (int y = 0; y < d.y; ++y)
                for (int x = 0; x < d.x; ++x)
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx)
                                relax(x, y, z, x + dx, y + dy, z + dz);
        for (int z = d.z - 1; z >= 0; --z)
            for (int y = d.y - 1; y >= 0; --y)
                for (int x = d.x - 1; x >= 0; --x)
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx)
                                relax(x, y, z, x + dx, y + dy, z + dz);
    }

    parallel_for(0, d.z, [&](int64_t z) {
        for (int y = 0; y < d.y; ++y) {
            int64_t i = spec.linear_index(0, y, int(z));
            for (int x = 0; x < d.x; ++x, ++i) {
                const int32_t j = nearest[size_t(i)];
                if (j < 0) continue;
                const OrientedPoint& pt = points[size_t(j)];
                u.values[size_t(i)] =
                    (spec.voxel_to_world(Vec3i(x, y, int(z))) - pt.p).dot(pt.n);
            }
        }
    });
    return u;
}

}  // namespace

ScalarGrid coarse_to_fine_init(const std::vector<OrientedPoint>& points,
                               const GridSpec& target_spec, const EnergyParams& params,
                               const JacobiSchedule& schedule) {
    // Validate: every axis is min(dims, 32) * 2^k with one shared k.
    int levels = -1;
    for (int a = 0; a < 3; ++a) {
        const int dim = target_spec.dims[a];
        const int start = std::min(dim, 32);
        int k = 0;
        int d = dim;
        while (d > start && d % 2 == 0) {
            d /= 2;
            ++k;
        }
        if (d != start || (levels >= 0 && k != levels))
            throw Error(ErrorCode::BadResolution,
                        "target dims are not a power-of-two multiple of the start level");
        levels = k;
    }

    if (levels == 0) return nearest_point_init(points, target_spec);

    // Derive the level pyramid top-down so every level covers the same
    // world volume that upsample_split reproduces.
    std::vector<GridSpec> pyramid(size_t(levels) + 1);
    pyramid[size_t(levels)] = target_spec;
    for (int l = levels - 1; l >= 0; --l) {
        const GridSpec& fine = pyramid[size_t(l) + 1];
        pyramid[size_t(l)] =
            GridSpec(Vec3i(fine.dims.x / 2, fine.dims.y / 2, fine.dims.z / 2),
                     fine.voxel_size * 2.0f,
                     fine.origin + Vec3f(1, 1, 1) * (fine.voxel_size * 0.5f));
    }

    ScalarGrid u = nearest_point_init(points, pyramid[0]);
    for (int l = 0; l < levels; ++l) {
        DataField df = accumulate_data(points, pyramid[size_t(l)], params);
        u = optimize_volume(u, df, nullptr, nullptr, params, schedule).first;
        u = upsample_split(u);
    }
    return u;
}

SceneOptimizer::SceneOptimizer(std::vector<ObjectModel> models, const EnergyParams& params,
                               const SceneSolveOptions& options)
    : models_(std::move(models)), params_(params), options_(options) {
    hulls_.reserve(models_.size());
    inters_.resize(models_.size());
    for (const ObjectModel& m : models_) {
        hulls_.emplace_back(m.spec);
        data_.emplace_back(m.spec);
    }
}

int SceneOptimizer::index_of(int id) const {
    for (size_t i = 0; i < models_.size(); ++i)
        if (models_[i].id == id) return int(i);
    throw Error(ErrorCode::InvalidArgument, "unknown object id " + std::to_string(id));
}

ObjectModel& SceneOptimizer::model_by_id(int id) { return models_[size_t(index_of(id))]; }

const HullGrid& SceneOptimizer::hull(int object_id) const {
    return hulls_[size_t(index_of(object_id))];
}

const InterGrid* SceneOptimizer::inter(int object_id) const {
    const auto& slot = inters_[size_t(index_of(object_id))];
    return slot ? &*slot : nullptr;
}

const DataField& SceneOptimizer::data_field(int object_id) const {
    return data_[size_t(index_of(object_id))];
}

void SceneOptimizer::add_keyframes(std::span<const Keyframe> keyframes) {
    for (const Keyframe& kf : keyframes) {
        timesteps_.push_back(kf.timestep);
        for (size_t m = 0; m < models_.size(); ++m) {
            ObjectModel& model = models_[m];
            auto pts = extract_object_points(kf, model);
            if (!pts.empty()) {
                auto& slot = model.points[kf.timestep];
                slot.insert(slot.end(), pts.begin(), pts.end());
            }
            carve_free_space(hulls_[m], kf, model.pose_at(kf.timestep));
        }
    }
}

std::vector<SolveReport> SceneOptimizer::optimize() {
    if (timesteps_.empty())
        throw Error(ErrorCode::InvalidArgument, "no keyframes added before optimize()");

    remove_foreground_points(models_);

    // Data coefficients are rebuilt from the surviving points every round;
    // free-space freezing applies in all ablation variants.
    for (size_t m = 0; m < models_.size(); ++m) {
        data_[m] = accumulate_data(models_[m].all_points(), models_[m].spec, params_);
        freeze_free_space(data_[m], hulls_[m]);
    }

    std::vector<SolveReport> reports(models_.size());

    // Background first: its optimized SDF feeds every object's
    // interpenetration distances.
    {
        const int bg = index_of(0);
        ObjectModel& model = models_[size_t(bg)];
        ScalarGrid u0 = model.has_sdf
                            ? model.sdf
                            : coarse_to_fine_init(model.all_points(), model.spec, params_,
                                                  options_.schedule);
        auto [u, report] =
            optimize_volume(u0, data_[size_t(bg)],
                            options_.use_hull ? &hulls_[size_t(bg)] : nullptr, nullptr,
                            params_, options_.schedule);
        model.sdf = std::move(u);
        model.has_sdf = true;
        reports[size_t(bg)] = report;
    }

    for (size_t m = 0; m < models_.size(); ++m) {
        ObjectModel& model = models_[m];
        if (model.id == 0) continue;

        if (options_.use_inter) {
            std::vector<const ObjectModel*> others;
            for (const ObjectModel& other : models_)
                if (other.id != model.id) others.push_back(&other);
            InterConfig cfg;
            cfg.normalized_point_sdf = options_.normalized_point_sdf;
            cfg.sigma = params_.sigma;
            inters_[m] = compute_d_inter(model, others, timesteps_, cfg);
        }

        ScalarGrid u0 = model.has_sdf
                            ? model.sdf
                            : coarse_to_fine_init(model.all_points(), model.spec, params_,
                                                  options_.schedule);
        auto [u, report] = optimize_volume(
            u0, data_[m], options_.use_hull ? &hulls_[m] : nullptr,
            options_.use_inter && inters_[m] ? &*inters_[m] : nullptr, params_,
            options_.schedule);
        model.sdf = std::move(u);
        model.has_sdf = true;
        reports[m] = report;
    }
    return reports;
}

std::vector<SolveReport> optimize_scene(std::vector<ObjectModel>& models,
                                        const std::vector<Keyframe>& keyframes,
                                        const EnergyParams& params,
                                        const SceneSolveOptions& options) {
    SceneOptimizer optimizer(std::move(models), params, options);
    optimizer.add_keyframes(keyframes);
    auto reports = optimizer.optimize();
    models = optimizer.models();
    return reports;
}

}  // namespace cosect
