// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "cosect/eval.hpp"
#include "cosect/solver.hpp"
#include "cosect/synthcam.hpp"

using namespace cosect;

namespace {

GridSpec cube_spec(int n, float h) {
    return GridSpec(Vec3i(n, n, n), h, Vec3f(-1, -1, -1) * (h * float(n - 1) * 0.5f));
}

std::vector<OrientedPoint> sphere_points(float radius, int count, uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<OrientedPoint> pts;
    pts.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        Vec3f dir(float(rng() >> 8) / 8388608.0f - 1.0f, float(rng() >> 8) / 8388608.0f - 1.0f,
                  float(rng() >> 8) / 8388608.0f - 1.0f);
        if (dir.squared_norm() < 1e-6f) dir = Vec3f(1, 0, 0);
        dir = dir.normalized();
        pts.push_back({dir * radius, dir, 1.0f});
    }
    return pts;
}

void BM_JacobiCycle(benchmark::State& state) {
    const int n = int(state.range(0));
    GridSpec spec = cube_spec(n, 0.02f);
    EnergyParams params;
    auto pts = sphere_points(0.3f, 4000, 11);
    DataField df = accumulate_data(pts, spec, params);
    ScalarGrid u(spec, 0.0f);
    double e = energy_value(u, df, nullptr, nullptr, params);
    for (auto _ : state) {
        e = jacobi_cycle(u, df, nullptr, nullptr, params, {}, e);
        benchmark::DoNotOptimize(u.values.data());
    }
    state.SetItemsProcessed(state.iterations() * spec.voxel_count() * params.cycle_len);
}
BENCHMARK(BM_JacobiCycle)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_AccumulateData(benchmark::State& state) {
    GridSpec spec = cube_spec(64, 0.02f);
    EnergyParams params;
    auto pts = sphere_points(0.3f, int(state.range(0)), 7);
    for (auto _ : state) {
        DataField df = accumulate_data(pts, spec, params);
        benchmark::DoNotOptimize(df.W.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AccumulateData)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_TrilinearSample(benchmark::State& state) {
    GridSpec spec = cube_spec(64, 0.02f);
    ScalarGrid g(spec);
    std::mt19937 rng(3);
    for (float& v : g.values) v = float(rng() >> 8) / 16777216.0f;
    std::vector<Vec3f> queries;
    for (int i = 0; i < 1024; ++i)
        queries.push_back(Vec3f(float(rng() >> 8) / 16777216.0f - 0.5f,
                                float(rng() >> 8) / 16777216.0f - 0.5f,
                                float(rng() >> 8) / 16777216.0f - 0.5f));
    for (auto _ : state) {
        float acc = 0.0f;
        for (const Vec3f& q : queries) acc += trilinear_sample(g, q).value_or(0.0f);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * int64_t(queries.size()));
}
BENCHMARK(BM_TrilinearSample);

void BM_MarchingCubes(benchmark::State& state) {
    const int n = int(state.range(0));
    GridSpec spec = cube_spec(n, 2.6f / float(n));
    ScalarGrid g(spec);
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                g.at(x, y, z) = spec.voxel_to_world(Vec3i(x, y, z)).norm() - 1.0f;
    for (auto _ : state) {
        TriMesh m = marching_cubes(g);
        benchmark::DoNotOptimize(m.vertices.data());
    }
    state.SetItemsProcessed(state.iterations() * spec.voxel_count());
}
BENCHMARK(BM_MarchingCubes)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_PointToMeshDistance(benchmark::State& state) {
    TriMesh sphere = gt_mesh(AnalyticShape::sphere(1.0f), 96);
    MeshDistanceIndex index(sphere);
    std::mt19937 rng(5);
    std::vector<Vec3f> queries;
    for (int i = 0; i < 1024; ++i)
        queries.push_back(Vec3f(float(rng() >> 8) / 8388608.0f - 1.0f,
                                float(rng() >> 8) / 8388608.0f - 1.0f,
                                float(rng() >> 8) / 8388608.0f - 1.0f));
    for (auto _ : state) {
        float acc = 0.0f;
        for (const Vec3f& q : queries) acc += index.distance(q);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * int64_t(queries.size()));
}
BENCHMARK(BM_PointToMeshDistance);

void BM_RenderFrame(benchmark::State& state) {
    ScriptedScene scene = box_slide_scene(100);
    for (auto _ : state) {
        Keyframe kf = render_frame(scene, 50);
        benchmark::DoNotOptimize(kf.depth.data.data());
    }
}
BENCHMARK(BM_RenderFrame)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
