// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
//
// Hessian-regularizer machinery shared by the energy module and the solver.
#pragma once

#include <vector>

#include "cosect/voxgrid.hpp"
#include "reg_stencil.hpp"

namespace cosect::detail {

struct RegWorkspace {
    ScalarGrid sxx, syy, szz, sxy, sxz, syz;
    AxisTables tx, ty, tz;
    GridSpec prepared;

    void prepare(const GridSpec& spec);
};

// grad_out = (D2x^T D2x + D2y^T D2y + D2z^T D2z
//             + 2 Dxy^T Dxy + 2 Dxz^T Dxz + 2 Dyz^T Dyz) u.
void reg_operator_apply(const ScalarGrid& u, RegWorkspace& ws, std::vector<float>& grad_out);

// Sum over stencil outputs of squares: Sum (D2 u)^2 + 2 Sum (D1 D1 u)^2,
// accumulated in double for finite-difference-grade accuracy.
double reg_energy_sum(const ScalarGrid& u);

// Diagonal of the regularizer operator, separable per axis.
void reg_diagonal(const GridSpec& spec, std::vector<float>& diag_out);

}  // namespace cosect::detail
