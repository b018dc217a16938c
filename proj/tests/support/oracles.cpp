// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <Eigen/Dense>

namespace cosect::test {

ScalarGrid fd_gradient(const ScalarGrid& u, const DataField& df, const HullGrid* hull,
                       const InterGrid* inter, const EnergyParams& params, double step) {
    ScalarGrid grad(u.spec);
    ScalarGrid probe = u;
    for (size_t i = 0; i < u.values.size(); ++i) {
        const float orig = probe.values[i];
        // Use the perturbation the float storage actually realizes.
        const float up = float(orig + step);
        const float dn = float(orig - step);
        probe.values[i] = up;
        const double e_plus = energy_value(probe, df, hull, inter, params);
        probe.values[i] = dn;
        const double e_minus = energy_value(probe, df, hull, inter, params);
        probe.values[i] = orig;
        grad.values[i] = float((e_plus - e_minus) / (double(up) - double(dn)));
    }
    return grad;
}

ScalarGrid dense_active_set_solve(const DataField& df, const HullGrid* hull,
                                  const InterGrid* inter, const EnergyParams& params,
                                  const ScalarGrid& u_init, int max_outer) {
    const GridSpec& spec = df.spec();
    const int n = int(spec.voxel_count());
    const double h = spec.voxel_size;
    const double cell2 = 2.0 * h * h * h;

    // Regularizer matrix from gradient probes of an alpha-only configuration.
    Eigen::MatrixXd reg = Eigen::MatrixXd::Zero(n, n);
    if (params.alpha > 0.0f) {
        EnergyParams alpha_only = params;
        alpha_only.beta_hull = 0.0f;
        alpha_only.beta_inter = 0.0f;
        DataField empty(spec);
        ScalarGrid basis(spec, 0.0f);
        for (int j = 0; j < n; ++j) {
            basis.values[size_t(j)] = 1.0f;
            ScalarGrid g = energy_gradient(basis, empty, nullptr, nullptr, alpha_only);
            basis.values[size_t(j)] = 0.0f;
            for (int i = 0; i < n; ++i)
                reg(i, j) = double(g.values[size_t(i)]) / cell2;  // alpha * R
        }
    }

    ScalarGrid u = u_init;
    std::vector<uint8_t> mh(size_t(n), 0), mi(size_t(n), 0);
    for (int outer = 0; outer < max_outer; ++outer) {
        bool changed = outer == 0;
        for (int i = 0; i < n; ++i) {
            const uint8_t want_h =
                (hull && params.beta_hull > 0.0f && !hull->unseen.bits[size_t(i)] &&
                 u.values[size_t(i)] < float(h))
                    ? 1
                    : 0;
            const uint8_t want_i =
                (inter && params.beta_inter > 0.0f && inter->d.values[size_t(i)] > 0.0f &&
                 u.values[size_t(i)] < inter->d.values[size_t(i)])
                    ? 1
                    : 0;
            if (want_h != mh[size_t(i)] || want_i != mi[size_t(i)]) changed = true;
            mh[size_t(i)] = want_h;
            mi[size_t(i)] = want_i;
        }
        if (!changed) break;

        Eigen::MatrixXd A = reg;
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) {
            A(i, i) += double(df.W.values[size_t(i)]) +
                       double(params.beta_hull) * mh[size_t(i)] +
                       double(params.beta_inter) * mi[size_t(i)];
            b(i) = double(df.B.values[size_t(i)]) +
                   double(params.beta_hull) * mh[size_t(i)] * h +
                   double(params.beta_inter) * mi[size_t(i)] *
                       double(inter ? inter->d.values[size_t(i)] : 0.0f);
        }
        Eigen::VectorXd x = A.ldlt().solve(b);
        for (int i = 0; i < n; ++i) u.values[size_t(i)] = float(x(i));
    }
    return u;
}

RandomProblem make_random_problem(const GridSpec& spec, std::mt19937& rng) {
    auto uniform = [&rng](float lo, float hi) {
        return lo + (hi - lo) * float(rng() >> 8) * (1.0f / 16777216.0f);
    };
    RandomProblem p{DataField(spec), HullGrid(spec), InterGrid(spec), ScalarGrid(spec)};
    const int64_t n = spec.voxel_count();
    for (int64_t i = 0; i < n; ++i) {
        if (uniform(0, 1) < 0.5f) {
            p.df.W.values[size_t(i)] = uniform(0.1f, 4.0f);
            p.df.B.values[size_t(i)] = p.df.W.values[size_t(i)] * uniform(-0.2f, 0.2f);
        }
        if (uniform(0, 1) < 0.3f) p.hull.unseen.bits[size_t(i)] = 0;  // observed free
        if (uniform(0, 1) < 0.3f) p.inter.d.values[size_t(i)] = uniform(0.01f, 0.3f);
        p.u.values[size_t(i)] = uniform(-0.3f, 0.3f);
    }
    return p;
}

}  // namespace cosect::test
