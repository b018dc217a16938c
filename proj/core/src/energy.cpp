// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/energy.hpp"

#include <algorithm>
#include <cmath>

#include "cosect/error.hpp"
#include "cosect/parallel.hpp"
#include "energy_detail.hpp"

namespace cosect {

namespace detail {

void RegWorkspace::prepare(const GridSpec& spec) {
    if (prepared == spec) return;
    sxx = ScalarGrid(spec);
    syy = ScalarGrid(spec);
    szz = ScalarGrid(spec);
    sxy = ScalarGrid(spec);
    sxz = ScalarGrid(spec);
    syz = ScalarGrid(spec);
    tx = make_axis_tables(spec.dims.x);
    ty = make_axis_tables(spec.dims.y);
    tz = make_axis_tables(spec.dims.z);
    prepared = spec;
}

namespace {

inline int clampi(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

}  // namespace

// Pass A: evaluate all six second-derivative stencils at every voxel.
// Pass B: gather the transposed weighted sum into grad_out.
void reg_operator_apply(const ScalarGrid& u, RegWorkspace& ws, std::vector<float>& grad_out) {
    const GridSpec& spec = u.spec;
    ws.prepare(spec);
    grad_out.resize(u.values.size());

    const Vec3i d = spec.dims;
    const int64_t sy = d.x;
    const int64_t sz = int64_t(d.x) * d.y;
    const float* uv = u.values.data();

    parallel_for(0, d.z, [&](int64_t z) {
        const int zm = clampi(int(z) - 1, d.z - 1), zp = clampi(int(z) + 1, d.z - 1);
        const auto& c1z = ws.tz.d1[size_t(z)];
        const auto& c2z = ws.tz.d2[size_t(z)];
        for (int y = 0; y < d.y; ++y) {
            const int ym = clampi(y - 1, d.y - 1), yp = clampi(y + 1, d.y - 1);
            const auto& c1y = ws.ty.d1[size_t(y)];
            const auto& c2y = ws.ty.d2[size_t(y)];
            // Input rows around (y, z).
            const float* r_mm = uv + zm * sz + ym * sy;
            const float* r_m0 = uv + zm * sz + y * sy;
            const float* r_mp = uv + zm * sz + yp * sy;
            const float* r_0m = uv + z * sz + ym * sy;
            const float* r_00 = uv + z * sz + y * sy;
            const float* r_0p = uv + z * sz + yp * sy;
            const float* r_pm = uv + zp * sz + ym * sy;
            const float* r_p0 = uv + zp * sz + y * sy;
            const float* r_pp = uv + zp * sz + yp * sy;
            const int64_t row = z * sz + y * sy;
            for (int x = 0; x < d.x; ++x) {
                const int xm = clampi(x - 1, d.x - 1), xp = clampi(x + 1, d.x - 1);
                const auto& c1x = ws.tx.d1[size_t(x)];
                const auto& c2x = ws.tx.d2[size_t(x)];
                const int64_t i = row + x;

                ws.sxx.values[size_t(i)] =
                    c2x[0] * r_00[xm] + c2x[1] * r_00[x] + c2x[2] * r_00[xp];
                ws.syy.values[size_t(i)] =
                    c2y[0] * r_0m[x] + c2y[1] * r_00[x] + c2y[2] * r_0p[x];
                ws.szz.values[size_t(i)] =
                    c2z[0] * r_m0[x] + c2z[1] * r_00[x] + c2z[2] * r_p0[x];

                const float gy_m = c1y[0] * r_0m[xm] + c1y[1] * r_00[xm] + c1y[2] * r_0p[xm];
                const float gy_0 = c1y[0] * r_0m[x] + c1y[1] * r_00[x] + c1y[2] * r_0p[x];
                const float gy_p = c1y[0] * r_0m[xp] + c1y[1] * r_00[xp] + c1y[2] * r_0p[xp];
                ws.sxy.values[size_t(i)] = c1x[0] * gy_m + c1x[1] * gy_0 + c1x[2] * gy_p;

                const float gz_m = c1z[0] * r_m0[xm] + c1z[1] * r_00[xm] + c1z[2] * r_p0[xm];
                const float gz_0 = c1z[0] * r_m0[x] + c1z[1] * r_00[x] + c1z[2] * r_p0[x];
                const float gz_p = c1z[0] * r_m0[xp] + c1z[1] * r_00[xp] + c1z[2] * r_p0[xp];
                ws.sxz.values[size_t(i)] = c1x[0] * gz_m + c1x[1] * gz_0 + c1x[2] * gz_p;

                ws.syz.values[size_t(i)] = c1y[0] * (c1z[0] * r_mm[x] + c1z[1] * r_0m[x] +
                                                     c1z[2] * r_pm[x]) +
                                           c1y[1] * gz_0 +
                                           c1y[2] * (c1z[0] * r_mp[x] + c1z[1] * r_0p[x] +
                                                     c1z[2] * r_pp[x]);
            }
        }
    });

    const float* sxx = ws.sxx.values.data();
    const float* syy = ws.syy.values.data();
    const float* szz = ws.szz.values.data();
    const float* sxy = ws.sxy.values.data();
    const float* sxz = ws.sxz.values.data();
    const float* syz = ws.syz.values.data();
    float* out = grad_out.data();

    parallel_for(0, d.z, [&](int64_t z) {
        const int zm = clampi(int(z) - 1, d.z - 1), zp = clampi(int(z) + 1, d.z - 1);
        const auto& tz1 = ws.tz.d1t[size_t(z)];
        const auto& tz2 = ws.tz.d2t[size_t(z)];
        for (int y = 0; y < d.y; ++y) {
            const int ym = clampi(y - 1, d.y - 1), yp = clampi(y + 1, d.y - 1);
            const auto& ty1 = ws.ty.d1t[size_t(y)];
            const auto& ty2 = ws.ty.d2t[size_t(y)];
            const int64_t row = z * sz + y * sy;
            const int64_t r_m0 = int64_t(zm) * sz + y * sy;
            const int64_t r_p0 = int64_t(zp) * sz + y * sy;
            const int64_t r_0m = z * sz + int64_t(ym) * sy;
            const int64_t r_0p = z * sz + int64_t(yp) * sy;
            const int64_t r_mm = int64_t(zm) * sz + int64_t(ym) * sy;
            const int64_t r_mp = int64_t(zm) * sz + int64_t(yp) * sy;
            const int64_t r_pm = int64_t(zp) * sz + int64_t(ym) * sy;
            const int64_t r_pp = int64_t(zp) * sz + int64_t(yp) * sy;
            for (int x = 0; x < d.x; ++x) {
                const int xm = clampi(x - 1, d.x - 1), xp = clampi(x + 1, d.x - 1);
                const auto& tx1 = ws.tx.d1t[size_t(x)];
                const auto& tx2 = ws.tx.d2t[size_t(x)];

                float g = tx2[0] * sxx[row + xm] + tx2[1] * sxx[row + x] +
                          tx2[2] * sxx[row + xp];
                g += ty2[0] * syy[r_0m + x] + ty2[1] * syy[row + x] + ty2[2] * syy[r_0p + x];
                g += tz2[0] * szz[r_m0 + x] + tz2[1] * szz[row + x] + tz2[2] * szz[r_p0 + x];

                // 2 * D1t composition gathers for the mixed terms.
                const float hxy =
                    ty1[0] * (tx1[0] * sxy[r_0m + xm] + tx1[1] * sxy[r_0m + x] +
                              tx1[2] * sxy[r_0m + xp]) +
                    ty1[1] * (tx1[0] * sxy[row + xm] + tx1[1] * sxy[row + x] +
                              tx1[2] * sxy[row + xp]) +
                    ty1[2] * (tx1[0] * sxy[r_0p + xm] + tx1[1] * sxy[r_0p + x] +
                              tx1[2] * sxy[r_0p + xp]);
                const float hxz =
                    tz1[0] * (tx1[0] * sxz[r_m0 + xm] + tx1[1] * sxz[r_m0 + x] +
                              tx1[2] * sxz[r_m0 + xp]) +
                    tz1[1] * (tx1[0] * sxz[row + xm] + tx1[1] * sxz[row + x] +
                              tx1[2] * sxz[row + xp]) +
                    tz1[2] * (tx1[0] * sxz[r_p0 + xm] + tx1[1] * sxz[r_p0 + x] +
                              tx1[2] * sxz[r_p0 + xp]);
                const float hyz =
                    tz1[0] * (ty1[0] * syz[r_mm + x] + ty1[1] * syz[r_m0 + x] +
                              ty1[2] * syz[r_mp + x]) +
                    tz1[1] * (ty1[0] * syz[r_0m + x] + ty1[1] * syz[row + x] +
                              ty1[2] * syz[r_0p + x]) +
                    tz1[2] * (ty1[0] * syz[r_pm + x] + ty1[1] * syz[r_p0 + x] +
                              ty1[2] * syz[r_pp + x]);

                out[row + x] = g + 2.0f * (hxy + hxz + hyz);
            }
        }
    });
}

double reg_energy_sum(const ScalarGrid& u) {
    // One fused pass in double precision; the value backs finite-difference
    // gradient checks where float temporaries would drown the signal.
    const GridSpec& spec = u.spec;
    const Vec3i d = spec.dims;
    const int64_t sy = d.x;
    const int64_t sz = int64_t(d.x) * d.y;
    const AxisTables tx = make_axis_tables(d.x);
    const AxisTables ty = make_axis_tables(d.y);
    const AxisTables tz = make_axis_tables(d.z);
    const float* uv = u.values.data();

    std::vector<double> plane_sums(size_t(d.z), 0.0);
    parallel_for(0, d.z, [&](int64_t z) {
        const int zm = clampi(int(z) - 1, d.z - 1), zp = clampi(int(z) + 1, d.z - 1);
        const auto& c1z = tz.d1[size_t(z)];
        const auto& c2z = tz.d2[size_t(z)];
        double acc = 0.0;
        for (int y = 0; y < d.y; ++y) {
            const int ym = clampi(y - 1, d.y - 1), yp = clampi(y + 1, d.y - 1);
            const auto& c1y = ty.d1[size_t(y)];
            const auto& c2y = ty.d2[size_t(y)];
            const float* r_mm = uv + zm * sz + ym * sy;
            const float* r_m0 = uv + zm * sz + y * sy;
            const float* r_mp = uv + zm * sz + yp * sy;
            const float* r_0m = uv + z * sz + ym * sy;
            const float* r_00 = uv + z * sz + y * sy;
            const float* r_0p = uv + z * sz + yp * sy;
            const float* r_pm = uv + zp * sz + ym * sy;
            const float* r_p0 = uv + zp * sz + y * sy;
            const float* r_pp = uv + zp * sz + yp * sy;
            for (int x = 0; x < d.x; ++x) {
                const int xm = clampi(x - 1, d.x - 1), xp = clampi(x + 1, d.x - 1);
                const auto& c1x = tx.d1[size_t(x)];
                const auto& c2x = tx.d2[size_t(x)];

                const double vxx = double(c2x[0]) * r_00[xm] + double(c2x[1]) * r_00[x] +
                                   double(c2x[2]) * r_00[xp];
                const double vyy = double(c2y[0]) * r_0m[x] + double(c2y[1]) * r_00[x] +
                                   double(c2y[2]) * r_0p[x];
                const double vzz = double(c2z[0]) * r_m0[x] + double(c2z[1]) * r_00[x] +
                                   double(c2z[2]) * r_p0[x];

                const double gy_m = double(c1y[0]) * r_0m[xm] + double(c1y[1]) * r_00[xm] +
                                    double(c1y[2]) * r_0p[xm];
                const double gy_0 = double(c1y[0]) * r_0m[x] + double(c1y[1]) * r_00[x] +
                                    double(c1y[2]) * r_0p[x];
                const double gy_p = double(c1y[0]) * r_0m[xp] + double(c1y[1]) * r_00[xp] +
                                    double(c1y[2]) * r_0p[xp];
                const double vxy =
                    double(c1x[0]) * gy_m + double(c1x[1]) * gy_0 + double(c1x[2]) * gy_p;

                const double gz_m = double(c1z[0]) * r_m0[xm] + double(c1z[1]) * r_00[xm] +
                                    double(c1z[2]) * r_p0[xm];
                const double gz_0 = double(c1z[0]) * r_m0[x] + double(c1z[1]) * r_00[x] +
                                    double(c1z[2]) * r_p0[x];
                const double gz_p = double(c1z[0]) * r_m0[xp] + double(c1z[1]) * r_00[xp] +
                                    double(c1z[2]) * r_p0[xp];
                const double vxz =
                    double(c1x[0]) * gz_m + double(c1x[1]) * gz_0 + double(c1x[2]) * gz_p;

                const double vyz =
                    double(c1y[0]) * (double(c1z[0]) * r_mm[x] + double(c1z[1]) * r_0m[x] +
                                      double(c1z[2]) * r_pm[x]) +
                    double(c1y[1]) * gz_0 +
                    double(c1y[2]) * (double(c1z[0]) * r_mp[x] + double(c1z[1]) * r_0p[x] +
                                      double(c1z[2]) * r_pp[x]);

                acc += vxx * vxx + vyy * vyy + vzz * vzz +
                       2.0 * (vxy * vxy + vxz * vxz + vyz * vyz);
            }
        }
        plane_sums[size_t(z)] = acc;
    });
    double total = 0.0;
    for (double s : plane_sums) total += s;
    return total;
}

void reg_diagonal(const GridSpec& spec, std::vector<float>& diag_out) {
    auto interior = [](int m, int n) { return m >= 1 && m <= n - 2; };
    auto d2_colsq = [&](int m, int n) {
        float t = 0.0f;
        if (interior(m - 1, n)) t += 1.0f;
        if (interior(m, n)) t += 4.0f;
        if (interior(m + 1, n)) t += 1.0f;
        return t;
    };
    auto d1_colsq = [&](int m, int n) {
        float t = 0.0f;
        if (interior(m - 1, n)) t += 0.25f;
        if (interior(m + 1, n)) t += 0.25f;
        if (m <= 1) t += 1.0f;
        if (m >= n - 2) t += 1.0f;
        return t;
    };
    const Vec3i d = spec.dims;
    std::vector<float> d2x(size_t(d.x)), d2y(size_t(d.y)), d2z(size_t(d.z));
    std::vector<float> d1x(size_t(d.x)), d1y(size_t(d.y)), d1z(size_t(d.z));
    for (int x = 0; x < d.x; ++x) d2x[size_t(x)] = d2_colsq(x, d.x), d1x[size_t(x)] = d1_colsq(x, d.x);
    for (int y = 0; y < d.y; ++y) d2y[size_t(y)] = d2_colsq(y, d.y), d1y[size_t(y)] = d1_colsq(y, d.y);
    for (int z = 0; z < d.z; ++z) d2z[size_t(z)] = d2_colsq(z, d.z), d1z[size_t(z)] = d1_colsq(z, d.z);

    diag_out.resize(size_t(spec.voxel_count()));
    parallel_for(0, d.z, [&](int64_t z) {
        for (int y = 0; y < d.y; ++y) {
            int64_t i = spec.linear_index(0, y, int(z));
            const float yz = d2y[size_t(y)] + d2z[size_t(z)];
            const float cross_yz = 2.0f * d1y[size_t(y)] * d1z[size_t(z)];
            for (int x = 0; x < d.x; ++x, ++i)
                diag_out[size_t(i)] = d2x[size_t(x)] + yz + cross_yz +
                                      2.0f * d1x[size_t(x)] * (d1y[size_t(y)] + d1z[size_t(z)]);
        }
    });
}

}  // namespace detail

DataField accumulate_data(const std::vector<OrientedPoint>& points, const GridSpec& spec,
                          const EnergyParams& params) {
    DataField df(spec);
    const float sigma = params.sigma_for(spec);
    const float support = params.support_for(spec);
    const float support2 = support * support;
    const float inv_sigma2 = 1.0f / (sigma * sigma);
    const float h = spec.voxel_size;

    // Disjoint z-slabs per worker; every worker scans all points and writes
    // only voxels inside its slab, which keeps the sums order-deterministic.
    parallel_chunks(0, spec.dims.z, [&](int64_t z_lo, int64_t z_hi) {
        for (const OrientedPoint& pt : points) {
            const Vec3f c = spec.world_to_voxel(pt.p);
            const float r = support / h;
            int x0 = std::max(0, int(std::ceil(c.x - r)));
            int x1 = std::min(spec.dims.x - 1, int(std::floor(c.x + r)));
            int y0 = std::max(0, int(std::ceil(c.y - r)));
            int y1 = std::min(spec.dims.y - 1, int(std::floor(c.y + r)));
            int z0 = std::max(int(z_lo), int(std::ceil(c.z - r)));
            int z1 = std::min(int(z_hi) - 1, int(std::floor(c.z + r)));
            for (int z = z0; z <= z1; ++z)
                for (int y = y0; y <= y1; ++y) {
                    int64_t i = spec.linear_index(x0, y, z);
                    for (int x = x0; x <= x1; ++x, ++i) {
                        const Vec3f delta = spec.voxel_to_world(Vec3i(x, y, z)) - pt.p;
                        const float s2 = delta.squared_norm();
                        if (s2 > support2) continue;
                        const float w = std::exp(-s2 * inv_sigma2) * pt.a;
                        df.W.values[size_t(i)] += w;
                        df.B.values[size_t(i)] += w * delta.dot(pt.n);
                    }
                }
        }
    });
    return df;
}

void freeze_free_space(DataField& df, const HullGrid& hull) {
    if (!(df.spec() == hull.spec))
        throw Error(ErrorCode::ShapeMismatch, "hull spec differs from data field");
    const size_t n = df.W.values.size();
    for (size_t i = 0; i < n; ++i) {
        if (!hull.unseen.bits[i]) {
            df.W.values[i] = 0.0f;
            df.B.values[i] = 0.0f;
        }
    }
}

void remove_foreground_points(std::vector<ObjectModel>& models) {
    for (ObjectModel& fg_model : models) {
        if (fg_model.id == 0 || fg_model.point_count() == 0) continue;
        const GridSpec& s = fg_model.spec;
        const float rad = 2.0f * s.voxel_size;
        PointIndex index(fg_model.all_points(), rad);

        BitGrid fg(s, false);
        parallel_for(0, s.dims.z, [&](int64_t z) {
            for (int y = 0; y < s.dims.y; ++y) {
                int64_t i = s.linear_index(0, y, int(z));
                for (int x = 0; x < s.dims.x; ++x, ++i) {
                    bool near = false;
                    index.for_each_in_radius(s.voxel_to_world(Vec3i(x, y, int(z))), rad,
                                             [&](const OrientedPoint&) { near = true; });
                    fg.bits[size_t(i)] = near ? 1 : 0;
                }
            }
        });

        for (ObjectModel& victim : models) {
            if (victim.id == fg_model.id) continue;
            for (auto& [t, pts] : victim.points) {
                const Pose to_fg = fg_model.pose_at(t).inverse() * victim.pose_at(t);
                std::erase_if(pts, [&](const OrientedPoint& pt) {
                    const Vec3f x = to_fg.apply(pt.p);
                    if (!s.covers_world_point(x)) return false;
                    const Vec3i v = s.nearest_voxel(x);
                    return s.contains(v) && fg.get(v.x, v.y, v.z);
                });
            }
        }
    }
}

namespace {

void check_shapes(const ScalarGrid& u, const DataField& df, const HullGrid* hull,
                  const InterGrid* inter) {
    if (!(df.spec() == u.spec))
        throw Error(ErrorCode::ShapeMismatch, "data field spec differs from u");
    if (hull && !(hull->spec == u.spec))
        throw Error(ErrorCode::ShapeMismatch, "hull spec differs from u");
    if (inter && !(inter->spec == u.spec))
        throw Error(ErrorCode::ShapeMismatch, "intersection spec differs from u");
}

}  // namespace

EnergyTerms energy_terms(const ScalarGrid& u, const DataField& df, const HullGrid* hull,
                         const InterGrid* inter, const EnergyParams& params) {
    check_shapes(u, df, hull, inter);
    const GridSpec& spec = u.spec;
    const float h = spec.voxel_size;
    const double cell = double(h) * h * h;
    const int64_t plane = int64_t(spec.dims.x) * spec.dims.y;

    struct PlaneSums {
        double data = 0.0, hull = 0.0, inter = 0.0;
    };
    std::vector<PlaneSums> sums(size_t(spec.dims.z));
    parallel_for(0, spec.dims.z, [&](int64_t z) {
        PlaneSums ps;
        const int64_t base = z * plane;
        for (int64_t i = base; i < base + plane; ++i) {
            const double uv = u.values[size_t(i)];
            const double W = df.W.values[size_t(i)];
            const double B = df.B.values[size_t(i)];
            ps.data += W * uv * uv - 2.0 * B * uv;
            if (hull && !hull->unseen.bits[size_t(i)]) {
                const double gap = double(h) - uv;
                if (gap > 0.0) ps.hull += gap * gap;
            }
            if (inter) {
                const double d = inter->d.values[size_t(i)];
                if (d > 0.0) {
                    const double gap = d - uv;
                    if (gap > 0.0) ps.inter += gap * gap;
                }
            }
        }
        sums[size_t(z)] = ps;
    });

    EnergyTerms terms;
    for (const PlaneSums& ps : sums) {
        terms.data += ps.data;
        terms.hull += ps.hull;
        terms.inter += ps.inter;
    }
    terms.data *= cell;
    terms.hull *= cell * double(params.beta_hull);
    terms.inter *= cell * double(params.beta_inter);

    if (params.alpha > 0.0f)
        terms.reg = cell * double(params.alpha) * detail::reg_energy_sum(u);
    return terms;
}

double energy_value(const ScalarGrid& u, const DataField& df, const HullGrid* hull,
                    const InterGrid* inter, const EnergyParams& params) {
    return energy_terms(u, df, hull, inter, params).total();
}

ScalarGrid energy_gradient(const ScalarGrid& u, const DataField& df, const HullGrid* hull,
                           const InterGrid* inter, const EnergyParams& params) {
    check_shapes(u, df, hull, inter);
    const GridSpec& spec = u.spec;
    const float h = spec.voxel_size;
    const float two_cell = 2.0f * h * h * h;

    std::vector<float> reg;
    detail::RegWorkspace ws;
    if (params.alpha > 0.0f)
        detail::reg_operator_apply(u, ws, reg);

    ScalarGrid grad(spec);
    const int64_t n = spec.voxel_count();
    parallel_chunks(0, n, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            const float uv = u.values[size_t(i)];
            float g = df.W.values[size_t(i)] * uv - df.B.values[size_t(i)];
            if (params.alpha > 0.0f) g += params.alpha * reg[size_t(i)];
            if (hull && !hull->unseen.bits[size_t(i)]) {
                const float gap = h - uv;
                if (gap > 0.0f) g -= params.beta_hull * gap;
            }
            if (inter) {
                const float d = inter->d.values[size_t(i)];
                if (d > 0.0f) {
                    const float gap = d - uv;
                    if (gap > 0.0f) g -= params.beta_inter * gap;
                }
            }
            grad.values[size_t(i)] = two_cell * g;
        }
    });
    return grad;
}

}  // namespace cosect
