// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "cosect/error.hpp"
#include "cosect/solver.hpp"
#include "cosect/synthcam.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cosect;

namespace {

double rms_diff(const ScalarGrid& a, const ScalarGrid& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        const double d = double(a.values[i]) - double(b.values[i]);
        acc += d * d;
    }
    return std::sqrt(acc / double(a.values.size()));
}

// Oriented plane samples covering the xy extent of a grid.
std::vector<OrientedPoint> plane_points(const GridSpec& s, float z0, float spacing) {
    std::vector<OrientedPoint> pts;
    const Vec3f lo = s.voxel_to_world(Vec3i(0, 0, 0));
    const Vec3f hi = s.voxel_to_world(s.dims - Vec3i(1, 1, 1));
    for (float x = lo.x; x <= hi.x; x += spacing)
        for (float y = lo.y; y <= hi.y; y += spacing)
            pts.push_back({Vec3f(x, y, z0), Vec3f(0, 0, 1), 1.0f});
    return pts;
}

}  // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("one undamped sweep solves a pure data problem exactly") {
    GridSpec s(Vec3i(6, 6, 6), 0.1f, Vec3f(0, 0, 0));
    EnergyParams params;
    params.alpha = 0.0f;
    params.beta_hull = 0.0f;
    params.beta_inter = 0.0f;
    params.cycle_len = 1;

    DataField df(s);
    std::mt19937 rng(13);
    auto uniform = [&](float lo, float hi) {
        return lo + (hi - lo) * float(rng() >> 8) / 16777216.0f;
    };
    for (size_t i = 0; i < df.W.values.size(); ++i) {
        df.W.values[i] = uniform(0.5f, 4.0f);
        df.B.values[i] = df.W.values[i] * uniform(-0.4f, 0.4f);
    }

    JacobiSchedule newton{JacobiSchedule::Kind::Constant, 1.0};
    ScalarGrid u(s, 0.0f);
    jacobi_cycle(u, df, nullptr, nullptr, params, newton);
    for (size_t i = 0; i < u.values.size(); ++i)
        CHECK(u.values[i] ==
              doctest::Approx(df.B.values[i] / df.W.values[i]).epsilon(1e-6));
}

TEST_CASE("a cycle keeps the dense-solve minimizer fixed") {
    GridSpec s(Vec3i(6, 6, 6), 0.1f, Vec3f(0, 0, 0));
    std::mt19937 rng(21);
    test::RandomProblem p = test::make_random_problem(s, rng);
    EnergyParams params;

    ScalarGrid init(s, 0.0f);
    ScalarGrid star = test::dense_active_set_solve(p.df, &p.hull, &p.inter, params, init);

    ScalarGrid u = star;
    jacobi_cycle(u, p.df, &p.hull, &p.inter, params);
    for (size_t i = 0; i < u.values.size(); ++i)
        CHECK(std::abs(u.values[i] - star.values[i]) < 1e-6f);
}

TEST_CASE("energy decreases monotonically across cycles") {
    GridSpec s(Vec3i(8, 8, 8), 0.1f, Vec3f(0, 0, 0));
    std::mt19937 rng(33);
    test::RandomProblem p = test::make_random_problem(s, rng);
    EnergyParams params;

    ScalarGrid u = p.u;
    double e = energy_value(u, p.df, &p.hull, &p.inter, params);
    for (int c = 0; c < 8; ++c) {
        const double next = jacobi_cycle(u, p.df, &p.hull, &p.inter, params, {}, e);
        CHECK(next <= e + 1e-9 * std::abs(e));
        e = next;
    }
}

TEST_CASE("optimize_volume matches the dense oracle on 6^3 problems") {
    GridSpec s(Vec3i(6, 6, 6), 0.1f, Vec3f(0, 0, 0));
    EnergyParams params;
    std::mt19937 rng(41);

    for (int trial = 0; trial < 3; ++trial) {
        test::RandomProblem p = test::make_random_problem(s, rng);
        ScalarGrid init(s, 0.0f);
        ScalarGrid star = test::dense_active_set_solve(p.df, &p.hull, &p.inter, params, init);

        auto [u_cyclic, rep] = optimize_volume(init, p.df, &p.hull, &p.inter, params);
        CHECK(rms_diff(u_cyclic, star) < 1e-4);
        CHECK(rep.final_energy <= rep.initial_energy + 1e-9);
        CHECK(u_cyclic.all_finite());

        JacobiSchedule plain{JacobiSchedule::Kind::Constant, 0.66};
        auto [u_plain, rep2] = optimize_volume(init, p.df, &p.hull, &p.inter, params, plain);
        CHECK(rms_diff(u_plain, star) < 1e-4);

        const float range = star.max_value() - star.min_value();
        CHECK(rms_diff(u_plain, u_cyclic) < 1e-4 * std::max(range, 1.0f));
    }
}

TEST_CASE("a broken schedule raises DIVERGENCE") {
    GridSpec s(Vec3i(8, 8, 8), 0.1f, Vec3f(0, 0, 0));
    std::mt19937 rng(47);
    test::RandomProblem p = test::make_random_problem(s, rng);
    EnergyParams params;
    JacobiSchedule broken{JacobiSchedule::Kind::Constant, 3.0};
    ScalarGrid u = p.u;
    CHECK_THROWS_AS(
        [&] {
            for (int c = 0; c < 50; ++c) jacobi_cycle(u, p.df, &p.hull, &p.inter, params, broken);
        }(),
        Error);
}

TEST_CASE("plane points recover the analytic signed distance") {
    GridSpec s(Vec3i(32, 32, 32), 0.05f, Vec3f(-0.775f, -0.775f, -0.775f));
    EnergyParams params;
    const float z0 = 0.012f;
    auto pts = plane_points(s, z0, 0.05f);

    DataField df = accumulate_data(pts, s, params);
    ScalarGrid u0 = coarse_to_fine_init(pts, s, params);
    auto [u, rep] = optimize_volume(u0, df, nullptr, nullptr, params);
    CHECK(rep.converged);

    float max_err = 0.0f;
    for (int z = 0; z < s.dims.z; ++z)
        for (int y = 0; y < s.dims.y; ++y)
            for (int x = 0; x < s.dims.x; ++x) {
                if (df.W.at(x, y, z) <= 0.0f) continue;
                const float expect = s.voxel_to_world(Vec3i(x, y, z)).z - z0;
                max_err = std::max(max_err, std::abs(u.at(x, y, z) - expect));
            }
    CHECK(max_err < s.voxel_size / 10.0f);
}

TEST_CASE("coarse_to_fine_init level arithmetic and equivalence") {
    EnergyParams params;
    params.max_cycles = 60;
    const float z0 = 0.01f;

    SUBCASE("resolutions that are not power-of-two multiples of 32 fail") {
        GridSpec bad(Vec3i(48, 48, 48), 0.02f, Vec3f(0, 0, 0));
        CHECK_THROWS_AS(coarse_to_fine_init({}, bad, params), Error);
        GridSpec bad2(Vec3i(96, 96, 96), 0.02f, Vec3f(0, 0, 0));
        CHECK_THROWS_AS(coarse_to_fine_init({}, bad2, params), Error);
    }

    SUBCASE("a 32^3 target has no coarse level") {
        GridSpec target(Vec3i(32, 32, 32), 0.02f, Vec3f(0, 0, 0));
        ScalarGrid u0 = coarse_to_fine_init({}, target, params);
        CHECK(u0.spec == target);
        CHECK(u0.max_value() == 0.0f);
    }

    SUBCASE("64^3 initialization lands near the direct solution") {
        GridSpec target(Vec3i(64, 64, 64), 0.025f, Vec3f(-0.7875f, -0.7875f, -0.7875f));
        auto pts = plane_points(target, z0, 0.025f);
        EnergyParams deep = params;
        deep.max_cycles = 1000;  // the direct fine-only reference starts cold
        ScalarGrid u0 = coarse_to_fine_init(pts, target, deep);
        CHECK(u0.spec.dims == target.dims);
        CHECK((u0.spec.world_min() - target.world_min()).cwise_abs().max_coeff() < 1e-5f);

        DataField df = accumulate_data(pts, target, deep);
        auto [u_init, r1] = optimize_volume(u0, df, nullptr, nullptr, deep);
        auto [u_direct, r2] =
            optimize_volume(ScalarGrid(target, 0.0f), df, nullptr, nullptr, deep);

        // Zero level sets nearest the plane agree within one voxel.
        const int z_expect = target.nearest_voxel(Vec3f(0, 0, z0)).z;
        for (int y = 4; y < 60; y += 8)
            for (int x = 4; x < 60; x += 8) {
                auto crossing = [&](const ScalarGrid& u) {
                    int best = -1;
                    for (int z = 1; z < 64; ++z)
                        if (u.at(x, y, z - 1) < 0.0f && u.at(x, y, z) >= 0.0f &&
                            (best < 0 || std::abs(z - z_expect) < std::abs(best - z_expect)))
                            best = z;
                    return best;
                };
                const int za = crossing(u_init), zb = crossing(u_direct);
                REQUIRE(za > 0);
                REQUIRE(zb > 0);
                CHECK(std::abs(za - zb) <= 1);
            }
    }
}

TEST_CASE("optimize_volume flags convergence on an already-converged input") {
    GridSpec s(Vec3i(6, 6, 6), 0.1f, Vec3f(0, 0, 0));
    std::mt19937 rng(51);
    test::RandomProblem p = test::make_random_problem(s, rng);
    EnergyParams params;
    auto [u1, r1] = optimize_volume(ScalarGrid(s, 0.0f), p.df, &p.hull, &p.inter, params);
    CHECK(r1.converged);
    auto [u2, r2] = optimize_volume(u1, p.df, &p.hull, &p.inter, params);
    CHECK(r2.converged);
    CHECK(r2.cycles_run == 1);
    CHECK(r2.final_energy <= r2.initial_energy + 1e-9);
}

TEST_CASE("optimization is deterministic") {
    GridSpec s(Vec3i(16, 16, 16), 0.05f, Vec3f(0, 0, 0));
    std::mt19937 rng(61);
    test::RandomProblem p = test::make_random_problem(s, rng);
    EnergyParams params;
    auto [u1, r1] = optimize_volume(p.u, p.df, &p.hull, &p.inter, params);
    auto [u2, r2] = optimize_volume(p.u, p.df, &p.hull, &p.inter, params);
    CHECK(u1.values == u2.values);
}

TEST_CASE("optimize_scene on a background-only scene equals optimize_volume") {
    ScriptedScene scene;
    scene.frame_count = 10;
    scene.intrinsics = Intrinsics{60.0f, 60.0f, 31.5f, 31.5f, 64, 64};
    SceneObject ground;
    ground.id = 0;
    ground.shape = AnalyticShape::plane(Vec3f(0, 0, 1), 0.0f);
    ground.trajectory.keys.push_back(TrajectoryKey{});
    scene.objects.push_back(ground);
    TrajectoryKey cam;
    cam.position = Vec3d(0, -1.2, 1.2);
    cam.rotation = Quat::axis_angle(Vec3d(1, 0, 0), -M_PI * 0.25);
    scene.camera.keys.push_back(cam);

    SequenceConfig cfg;
    cfg.keyframe_stride = 5;
    cfg.bg_size = 3.0f;
    cfg.bg_resolution = 64;
    Sequence seq = make_sequence(scene, cfg);
    REQUIRE(seq.models.size() == 1);

    EnergyParams params;
    std::vector<ObjectModel> models = seq.models;
    auto reports = optimize_scene(models, seq.keyframes, params);
    REQUIRE(reports.size() == 1);

    // Manual pipeline: same accumulation, hull carving, and solves.
    ObjectModel bg = seq.models[0];
    HullGrid hull(bg.spec);
    for (const Keyframe& kf : seq.keyframes) {
        auto pts = extract_object_points(kf, bg);
        auto& slot = bg.points[kf.timestep];
        slot.insert(slot.end(), pts.begin(), pts.end());
        carve_free_space(hull, kf, bg.pose_at(kf.timestep));
    }
    DataField df = accumulate_data(bg.all_points(), bg.spec, params);
    freeze_free_space(df, hull);
    ScalarGrid u0 = coarse_to_fine_init(bg.all_points(), bg.spec, params);
    auto [u, rep] = optimize_volume(u0, df, &hull, nullptr, params);

    CHECK(models[0].sdf.values == u.values);
}

TEST_CASE("object intersection grids use the freshly optimized background") {
    ScriptedScene scene = box_slide_scene(30);
    SequenceConfig cfg;
    cfg.keyframe_stride = 10;
    cfg.bg_size = 3.2f;
    cfg.bg_resolution = 64;
    cfg.object_resolution = 32;
    Sequence seq = make_sequence(scene, cfg);
    REQUIRE(seq.models.size() == 2);

    EnergyParams params;
    params.max_cycles = 40;
    SceneOptimizer opt(seq.models, params);
    opt.add_keyframes(seq.keyframes);
    opt.optimize();

    const InterGrid* inter = opt.inter(1);
    REQUIRE(inter != nullptr);
    CHECK(inter->d.max_value() > 0.0f);  // the box rests on the ground

    // Recompute with the final background; the stored grid must match,
    // proving the background was optimized before d_inter was formed.
    const ObjectModel* bg = nullptr;
    const ObjectModel* box = nullptr;
    for (const ObjectModel& m : opt.models()) (m.id == 0 ? bg : box) = &m;
    InterGrid again = compute_d_inter(*box, {bg}, opt.keyframe_timesteps());
    CHECK(again.d.values == inter->d.values);
}

TEST_CASE("incremental optimization ends near the from-scratch energy") {
    ScriptedScene scene = box_slide_scene(30);
    SequenceConfig cfg;
    cfg.keyframe_stride = 10;
    cfg.bg_size = 3.2f;
    cfg.bg_resolution = 64;
    cfg.object_resolution = 32;
    Sequence seq = make_sequence(scene, cfg);
    EnergyParams params;
    params.max_cycles = 80;

    // From scratch over all keyframes.
    SceneOptimizer scratch(seq.models, params);
    scratch.add_keyframes(seq.keyframes);
    auto scratch_reports = scratch.optimize();

    // One keyframe batch at a time, warm starting in between.
    SceneOptimizer inc(seq.models, params);
    std::vector<SolveReport> inc_reports;
    for (const Keyframe& kf : seq.keyframes) {
        inc.add_keyframes(std::span(&kf, 1));
        inc_reports = inc.optimize();
    }

    for (size_t m = 0; m < scratch_reports.size(); ++m) {
        const double a = scratch_reports[m].final_energy;
        const double b = inc_reports[m].final_energy;
        CHECK(std::abs(a - b) <= 0.01 * std::max(std::abs(a), std::abs(b)));
        // Warm starts never end above their own initialization.
        CHECK(inc_reports[m].final_energy <= inc_reports[m].initial_energy + 1e-9);
    }
}

TEST_SUITE_END();
