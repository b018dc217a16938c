// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
//
// Fused Hessian-regularizer stencils. The operator is the sum of the six
// second-derivative quadratic forms in lattice units: pure terms D2^T D2
// per axis (weight 1) and mixed terms (D1a D1b)^T (D1a D1b) per axis pair
// (weight 2). D2 rows vanish at the grid faces and D1 is one-sided there,
// which realizes a linear extension across the boundary: second derivatives
// of affine fields are zero everywhere.
//
// Everything is expressed through per-coordinate 3-point coefficient rows
// c[m][j], j in {-1,0,1} (zero outside the grid), so one pass evaluates all
// six stencils and a second pass gathers the transposed sum.
#pragma once

#include <array>
#include <vector>

#include "cosect/voxgrid.hpp"

namespace cosect::detail {

struct AxisTables {
    // coefficient rows indexed by coordinate; [0]=offset -1, [1]=0, [2]=+1
    std::vector<std::array<float, 3>> d1, d2, d1t, d2t;
};

inline AxisTables make_axis_tables(int n) {
    AxisTables t;
    t.d1.resize(size_t(n));
    t.d2.resize(size_t(n));
    for (int m = 0; m < n; ++m) {
        if (m == 0)
            t.d1[size_t(m)] = {0.0f, -1.0f, 1.0f};
        else if (m == n - 1)
            t.d1[size_t(m)] = {-1.0f, 1.0f, 0.0f};
        else
            t.d1[size_t(m)] = {-0.5f, 0.0f, 0.5f};
        t.d2[size_t(m)] = (m >= 1 && m <= n - 2) ? std::array<float, 3>{1.0f, -2.0f, 1.0f}
                                                 : std::array<float, 3>{0.0f, 0.0f, 0.0f};
    }
    auto transpose = [n](const std::vector<std::array<float, 3>>& c) {
        std::vector<std::array<float, 3>> ct(static_cast<size_t>(n));
        for (int m = 0; m < n; ++m)
            for (int j = -1; j <= 1; ++j) {
                const int src = m + j;
                ct[size_t(m)][size_t(j + 1)] =
                    (src >= 0 && src < n) ? c[size_t(src)][size_t(1 - j)] : 0.0f;
            }
        return ct;
    };
    t.d1t = transpose(t.d1);
    t.d2t = transpose(t.d2);
    return t;
}

}  // namespace cosect::detail
