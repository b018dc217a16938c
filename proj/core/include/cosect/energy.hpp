// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "cosect/constraints.hpp"
#include "cosect/scene.hpp"
#include "cosect/voxgrid.hpp"

namespace cosect {

struct EnergyParams {
    float alpha = 0.005f;       // Hessian regularizer weight
    float beta_hull = 0.001f;   // observed-free-space penalty weight
    float beta_inter = 0.001f;  // interpenetration penalty weight
    float sigma = 0.0f;         // Gaussian width in meters; 0 = voxel size
    float support_radius = 0.0f;  // weight cutoff; 0 = 3 * sigma
    int cycle_len = 20;           // sweeps per relaxation cycle
    int max_cycles = 200;
    double rel_tol = 1e-6;  // relative energy decrease per cycle to stop

    float sigma_for(const GridSpec& spec) const {
        return sigma > 0.0f ? sigma : spec.voxel_size;
    }
    float support_for(const GridSpec& spec) const {
        return support_radius > 0.0f ? support_radius : 3.0f * sigma_for(spec);
    }
};

// Distance weight of a measurement at distance s, zero beyond 3 sigma.
inline double gaussian_weight(float s, float sigma) {
    if (s > 3.0f * sigma) return 0.0;
    const double q = double(s) / double(sigma);
    return std::exp(-q * q);
}

// Per-voxel sufficient statistics of the point data term:
// sum_i w_i (u - f_i)^2 = W u^2 - 2 B u + const.
struct DataField {
    ScalarGrid W;  // sum of weights
    ScalarGrid B;  // sum of weighted signed distances

    DataField() = default;
    explicit DataField(const GridSpec& s) : W(s, 0.0f), B(s, 0.0f) {}
    const GridSpec& spec() const { return W.spec; }
};

// Splats every point's Gaussian-weighted signed-distance measurement onto
// the voxels within the support radius.
DataField accumulate_data(const std::vector<OrientedPoint>& points, const GridSpec& spec,
                          const EnergyParams& params);

// Zeroes the data coefficients in observed free space (outside the hull).
void freeze_free_space(DataField& df, const HullGrid& hull);

// Deletes points of every model that fall into the foreground region of
// another object model. The foreground region of an object is its grid
// volume restricted to voxels within 2 voxel sizes of its own points.
void remove_foreground_points(std::vector<ObjectModel>& models);

struct EnergyTerms {
    double data = 0.0;
    double reg = 0.0;
    double hull = 0.0;
    double inter = 0.0;
    double total() const { return data + reg + hull + inter; }
};

// Discrete energy over the grid; hull/inter may be null to drop the term.
// The data part omits the constant sum_i w_i f_i^2, which the coefficients
// do not retain.
EnergyTerms energy_terms(const ScalarGrid& u, const DataField& df, const HullGrid* hull,
                         const InterGrid* inter, const EnergyParams& params);
double energy_value(const ScalarGrid& u, const DataField& df, const HullGrid* hull,
                    const InterGrid* inter, const EnergyParams& params);

// Exact gradient of energy_value with respect to each voxel value.
ScalarGrid energy_gradient(const ScalarGrid& u, const DataField& df, const HullGrid* hull,
                           const InterGrid* inter, const EnergyParams& params);

}  // namespace cosect
