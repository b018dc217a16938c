// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "cosect/energy.hpp"
#include "cosect/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cosect;

namespace {

GridSpec small_spec(int n = 8, float h = 0.1f) {
    return GridSpec(Vec3i(n, n, n), h, Vec3f(0, 0, 0));
}

ScalarGrid affine_grid(const GridSpec& s, const Vec3f& coef, float offset) {
    ScalarGrid g(s);
    for (int z = 0; z < s.dims.z; ++z)
        for (int y = 0; y < s.dims.y; ++y)
            for (int x = 0; x < s.dims.x; ++x)
                g.at(x, y, z) = coef.dot(s.voxel_to_world(Vec3i(x, y, z))) + offset;
    return g;
}

}  // namespace

TEST_SUITE_BEGIN("energy");

TEST_CASE("accumulate_data splats Gaussian-weighted signed distances") {
    GridSpec s = small_spec();
    EnergyParams params;

    OrientedPoint pt;
    pt.p = s.voxel_to_world(Vec3i(4, 4, 4));
    pt.n = Vec3f(1, 0, 0);
    pt.a = 1.0f;
    DataField df = accumulate_data({pt}, s, params);

    CHECK(df.W.at(4, 4, 4) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(df.B.at(4, 4, 4) == doctest::Approx(0.0));

    // One voxel along the normal: the blended estimate equals the voxel size.
    CHECK(df.B.at(5, 4, 4) / df.W.at(5, 4, 4) ==
          doctest::Approx(s.voxel_size).epsilon(1e-6));

    // Beyond three sigma the weights are capped to zero.
    CHECK(df.W.at(0, 4, 4) == 0.0f);  // 4 voxels = 4 sigma away
    CHECK(df.B.at(0, 4, 4) == 0.0f);
}

TEST_CASE("association weight scales contributions linearly") {
    GridSpec s = small_spec();
    EnergyParams params;
    OrientedPoint pt;
    pt.p = s.voxel_to_world(Vec3i(3, 3, 3)) + Vec3f(0.02f, 0.01f, -0.03f);
    pt.n = Vec3f(0, 0, 1);
    pt.a = 0.35f;
    DataField df1 = accumulate_data({pt}, s, params);
    pt.a = 0.70f;
    DataField df2 = accumulate_data({pt}, s, params);
    for (size_t i = 0; i < df1.W.values.size(); ++i) {
        CHECK(df2.W.values[i] == doctest::Approx(2.0 * df1.W.values[i]).epsilon(1e-6));
        CHECK(df2.B.values[i] == doctest::Approx(2.0 * df1.B.values[i]).epsilon(1e-6));
    }
}

TEST_CASE("freeze_free_space zeroes exactly the observed-free voxels") {
    GridSpec s = small_spec(4);
    DataField df(s);
    for (size_t i = 0; i < df.W.values.size(); ++i) {
        df.W.values[i] = 1.0f + float(i);
        df.B.values[i] = 0.5f * float(i);
    }

    SUBCASE("all-unseen hull leaves the field unchanged") {
        HullGrid hull(s);
        DataField copy = df;
        freeze_free_space(copy, hull);
        CHECK(copy.W.values == df.W.values);
        CHECK(copy.B.values == df.B.values);
    }
    SUBCASE("all-seen hull zeroes everything") {
        HullGrid hull(s);
        hull.unseen.bits.assign(hull.unseen.bits.size(), 0);
        DataField copy = df;
        freeze_free_space(copy, hull);
        for (float w : copy.W.values) CHECK(w == 0.0f);
        for (float b : copy.B.values) CHECK(b == 0.0f);
    }
    SUBCASE("mixed hull zeroes exactly the seen voxels") {
        HullGrid hull(s);
        std::mt19937 rng(7);
        for (auto& b : hull.unseen.bits) b = (rng() & 1u) ? 1 : 0;
        DataField copy = df;
        freeze_free_space(copy, hull);
        for (size_t i = 0; i < copy.W.values.size(); ++i) {
            if (hull.unseen.bits[i]) {
                CHECK(copy.W.values[i] == df.W.values[i]);
            } else {
                CHECK(copy.W.values[i] == 0.0f);
                CHECK(copy.B.values[i] == 0.0f);
            }
        }
    }
}

TEST_CASE("remove_foreground_points deletes points inside other objects") {
    auto make_model = [](int id, Vec3d world_pos) {
        ObjectModel m;
        m.id = id;
        m.spec = GridSpec(Vec3i(16, 16, 16), 0.05f, Vec3f(-1, -1, -1) * (0.05f * 7.5f));
        m.trajectory[0] = Pose::identity();
        m.trajectory[0].translation = world_pos;
        return m;
    };

    // Object 1 with a cluster of its own points around its center.
    std::vector<ObjectModel> models;
    models.push_back(make_model(0, Vec3d(0, 0, 0)));
    models.push_back(make_model(1, Vec3d(0, 0, 0)));
    models.push_back(make_model(2, Vec3d(5, 5, 5)));  // disjoint in world space

    for (int i = -2; i <= 2; ++i)
        models[1].points[0].push_back({Vec3f(0.05f * float(i), 0, 0), Vec3f(0, 0, 1), 1.0f});

    // A background point inside object 1's foreground and one far away.
    models[0].points[0].push_back({Vec3f(0.02f, 0.01f, 0.0f), Vec3f(0, 0, 1), 1.0f});
    models[0].points[0].push_back({Vec3f(2.0f, 2.0f, 2.0f), Vec3f(0, 0, 1), 1.0f});
    // Object 2's points are nowhere near object 1.
    models[2].points[0].push_back({Vec3f(0, 0, 0), Vec3f(0, 0, 1), 1.0f});

    const size_t own_before = models[1].points[0].size();
    remove_foreground_points(models);

    CHECK(models[0].points[0].size() == 1);  // the far point survives
    CHECK(models[0].points[0][0].p.x == 2.0f);
    CHECK(models[1].points[0].size() == own_before);  // own points untouched
    CHECK(models[2].points[0].size() == 1);           // disjoint object untouched
}

TEST_CASE("energy matches hand-computed values") {
    GridSpec s = small_spec();
    const float h = s.voxel_size;

    SUBCASE("affine fields have zero regularizer energy") {
        EnergyParams params;
        params.alpha = 0.005f;
        DataField df(s);
        ScalarGrid u = affine_grid(s, Vec3f(1.0f, -0.5f, 0.25f), 0.1f);
        EnergyTerms t = energy_terms(u, df, nullptr, nullptr, params);
        CHECK(std::abs(t.reg) < 1e-8);
        CHECK(t.total() == doctest::Approx(0.0));
    }

    SUBCASE("single-voxel data term is the bare quadratic") {
        EnergyParams params;
        params.alpha = 0.0f;
        DataField df(s);
        df.W.at(2, 2, 2) = 1.0f;
        df.B.at(2, 2, 2) = 0.3f;
        ScalarGrid u(s, 0.0f);
        u.at(2, 2, 2) = 0.3f;
        const double expect = -0.09 * double(h) * h * h;
        CHECK(energy_value(u, df, nullptr, nullptr, params) ==
              doctest::Approx(expect).epsilon(1e-9));
    }

    SUBCASE("inactive one-sided penalties contribute nothing") {
        EnergyParams params;
        params.alpha = 0.0f;
        params.beta_hull = 0.0f;
        DataField df(s);
        InterGrid inter(s);
        inter.d.fill(0.05f);
        ScalarGrid u(s, 0.1f);  // u >= d everywhere
        CHECK(energy_value(u, df, nullptr, &inter, params) == doctest::Approx(0.0));
    }
}

TEST_CASE("energy is translation covariant") {
    GridSpec s = small_spec();
    EnergyParams params;
    std::vector<OrientedPoint> pts;
    std::mt19937 rng(31);
    auto uniform = [&](float lo, float hi) {
        return lo + (hi - lo) * float(rng() >> 8) / 16777216.0f;
    };
    for (int i = 0; i < 40; ++i)
        pts.push_back({Vec3f(uniform(0.1f, 0.6f), uniform(0.1f, 0.6f), uniform(0.1f, 0.6f)),
                       Vec3f(0, 0, 1), 1.0f});

    ScalarGrid u(s);
    for (float& v : u.values) v = uniform(-0.2f, 0.2f);

    DataField df = accumulate_data(pts, s, params);
    const double e0 = energy_value(u, df, nullptr, nullptr, params);

    const Vec3f shift(1.0f, -2.0f, 0.5f);
    GridSpec shifted(s.dims, s.voxel_size, s.origin + shift);
    std::vector<OrientedPoint> moved = pts;
    for (auto& pt : moved) pt.p += shift;
    ScalarGrid u2(shifted);
    u2.values = u.values;
    DataField df2 = accumulate_data(moved, shifted, params);
    const double e1 = energy_value(u2, df2, nullptr, nullptr, params);
    CHECK(std::abs(e0 - e1) < 1e-6);
}

TEST_CASE("energy is convex along random segments") {
    GridSpec s = small_spec(6);
    std::mt19937 rng(101);
    test::RandomProblem p = test::make_random_problem(s, rng);
    EnergyParams params;

    ScalarGrid u2(s);
    auto uniform = [&](float lo, float hi) {
        return lo + (hi - lo) * float(rng() >> 8) / 16777216.0f;
    };
    for (int trial = 0; trial < 20; ++trial) {
        for (float& v : u2.values) v = uniform(-0.4f, 0.4f);
        const float lambda = uniform(0.05f, 0.95f);
        ScalarGrid mix(s);
        for (size_t i = 0; i < mix.values.size(); ++i)
            mix.values[i] = lambda * p.u.values[i] + (1 - lambda) * u2.values[i];
        const double lhs = energy_value(mix, p.df, &p.hull, &p.inter, params);
        const double rhs =
            lambda * energy_value(p.u, p.df, &p.hull, &p.inter, params) +
            (1 - lambda) * energy_value(u2, p.df, &p.hull, &p.inter, params);
        CHECK(lhs <= rhs + 1e-9);
    }
}

TEST_CASE("analytic gradient matches finite differences") {
    GridSpec s = small_spec(8);
    std::mt19937 rng(55);
    EnergyParams params;

    for (int trial = 0; trial < 2; ++trial) {
        test::RandomProblem p = test::make_random_problem(s, rng);
        ScalarGrid analytic = energy_gradient(p.u, p.df, &p.hull, &p.inter, params);
        ScalarGrid fd = test::fd_gradient(p.u, p.df, &p.hull, &p.inter, params);

        float gmax = 0.0f;
        for (float g : fd.values) gmax = std::max(gmax, std::abs(g));
        REQUIRE(gmax > 0.0f);
        for (size_t i = 0; i < fd.values.size(); ++i) {
            const float err = std::abs(analytic.values[i] - fd.values[i]);
            CHECK(err / std::max(std::abs(fd.values[i]), 1e-3f * gmax) < 1e-5f);
        }
    }
}

TEST_CASE("gradient vanishes at the unconstrained data optimum") {
    GridSpec s = small_spec();
    EnergyParams params;
    params.alpha = 0.0f;
    params.beta_hull = 0.0f;
    params.beta_inter = 0.0f;
    DataField df(s);
    std::mt19937 rng(77);
    auto uniform = [&](float lo, float hi) {
        return lo + (hi - lo) * float(rng() >> 8) / 16777216.0f;
    };
    ScalarGrid u(s);
    for (size_t i = 0; i < df.W.values.size(); ++i) {
        df.W.values[i] = uniform(0.5f, 3.0f);
        df.B.values[i] = df.W.values[i] * uniform(-0.3f, 0.3f);
        u.values[i] = df.B.values[i] / df.W.values[i];
    }
    ScalarGrid g = energy_gradient(u, df, nullptr, nullptr, params);
    for (float v : g.values) CHECK(std::abs(v) < 1e-7f);
}

TEST_CASE("penalty gradient is exactly zero where inactive") {
    GridSpec s = small_spec(4);
    EnergyParams params;
    params.alpha = 0.0f;
    DataField df(s);
    HullGrid hull(s);
    hull.unseen.bits.assign(hull.unseen.bits.size(), 0);  // everything observed free
    InterGrid inter(s);
    inter.d.fill(0.02f);
    ScalarGrid u(s, 0.5f);  // u > h and u > d everywhere
    ScalarGrid g = energy_gradient(u, df, &hull, &inter, params);
    for (float v : g.values) CHECK(v == 0.0f);
}

TEST_CASE("energy ops reject mismatched shapes") {
    GridSpec a = small_spec(4), b = small_spec(6);
    DataField df(a);
    ScalarGrid u(b);
    EnergyParams params;
    CHECK_THROWS_AS(energy_value(u, df, nullptr, nullptr, params), Error);
    HullGrid hull(b);
    DataField df_b(b);
    CHECK_THROWS_AS(freeze_free_space(df, hull), Error);
}

TEST_SUITE_END();
