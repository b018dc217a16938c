// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cosect/error.hpp"
#include "cosect/parallel.hpp"

namespace cosect {

namespace {

// Canonical uniform floats from the raw generator word; avoids the
// implementation-defined distribution adapters so samples are portable.
inline float canonical(std::mt19937& rng) {
    return float(rng() >> 8) * (1.0f / 16777216.0f);
}

}  // namespace

std::vector<Vec3f> sample_surface(const TriMesh& m, int n, uint32_t seed) {
    if (m.empty()) throw Error(ErrorCode::EmptyMesh, "cannot sample an empty mesh");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");

    std::vector<double> cumulative(m.triangles.size());
    double total = 0.0;
    for (size_t i = 0; i < m.triangles.size(); ++i) {
        const auto& t = m.triangles[i];
        const Vec3d a = m.vertices[t[0]].cast<double>();
        const Vec3d b = m.vertices[t[1]].cast<double>();
        const Vec3d c = m.vertices[t[2]].cast<double>();
        total += 0.5 * (b - a).cross(c - a).norm();
        cumulative[i] = total;
    }
    if (total <= 0.0) throw Error(ErrorCode::EmptyMesh, "mesh has zero surface area");

    std::mt19937 rng(seed);
    std::vector<Vec3f> samples;
    samples.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        const double pick = double(canonical(rng)) * total;
        const size_t tri =
            size_t(std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
                   cumulative.begin());
        const auto& t = m.triangles[std::min(tri, m.triangles.size() - 1)];
        float r1 = canonical(rng), r2 = canonical(rng);
        if (r1 + r2 > 1.0f) {
            r1 = 1.0f - r1;
            r2 = 1.0f - r2;
        }
        const Vec3f a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
        samples.push_back(a + (b - a) * r1 + (c - a) * r2);
    }
    return samples;
}

float point_triangle_distance(const Vec3f& x, const Vec3f& a, const Vec3f& b, const Vec3f& c) {
    // Closest point via barycentric region tests.
    const Vec3f ab = b - a, ac = c - a, ax = x - a;
    const float d1 = ab.dot(ax), d2 = ac.dot(ax);
    if (d1 <= 0.0f && d2 <= 0.0f) return (x - a).norm();

    const Vec3f bx = x - b;
    const float d3 = ab.dot(bx), d4 = ac.dot(bx);
    if (d3 >= 0.0f && d4 <= d3) return (x - b).norm();

    const float vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0f && d1 >= 0.0f && d3 <= 0.0f) {
        const float v = d1 / (d1 - d3);
        return (x - (a + ab * v)).norm();
    }

    const Vec3f cx = x - c;
    const float d5 = ab.dot(cx), d6 = ac.dot(cx);
    if (d6 >= 0.0f && d5 <= d6) return (x - c).norm();

    const float vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0f && d2 >= 0.0f && d6 <= 0.0f) {
        const float w = d2 / (d2 - d6);
        return (x - (a + ac * w)).norm();
    }

    const float va = d3 * d6 - d5 * d4;
    if (va <= 0.0f && (d4 - d3) >= 0.0f && (d5 - d6) >= 0.0f) {
        const float w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (x - (b + (c - b) * w)).norm();
    }

    const float denom = 1.0f / (va + vb + vc);
    const float v = vb * denom, w = vc * denom;
    return (x - (a + ab * v + ac * w)).norm();
}

MeshDistanceIndex::MeshDistanceIndex(const TriMesh& m) {
    if (m.empty()) throw Error(ErrorCode::EmptyMesh, "cannot index an empty mesh");
    va_.reserve(m.triangles.size());
    vb_.reserve(m.triangles.size());
    vc_.reserve(m.triangles.size());
    for (const auto& t : m.triangles) {
        va_.push_back(m.vertices[t[0]]);
        vb_.push_back(m.vertices[t[1]]);
        vc_.push_back(m.vertices[t[2]]);
    }
    nodes_.reserve(m.triangles.size() * 2);
    root_ = build(0, int32_t(m.triangles.size()));
}

int32_t MeshDistanceIndex::build(int32_t first, int32_t count) {
    Node node;
    node.lo = va_[size_t(first)];
    node.hi = va_[size_t(first)];
    for (int32_t i = first; i < first + count; ++i) {
        for (const Vec3f* v : {&va_[size_t(i)], &vb_[size_t(i)], &vc_[size_t(i)]}) {
            node.lo = node.lo.cwise_min(*v);
            node.hi = node.hi.cwise_max(*v);
        }
    }
    if (count <= 4) {
        node.first = first;
        node.count = count;
        nodes_.push_back(node);
        return int32_t(nodes_.size()) - 1;
    }

    const Vec3f extent = node.hi - node.lo;
    int axis = 0;
    if (extent.y > extent.x) axis = 1;
    if (extent.z > extent[axis]) axis = 2;

    std::vector<int32_t> order(static_cast<size_t>(count));
    std::iota(order.begin(), order.end(), first);
    std::nth_element(order.begin(), order.begin() + count / 2, order.end(),
                     [&](int32_t l, int32_t r) {
                         const float cl = va_[size_t(l)][axis] + vb_[size_t(l)][axis] +
                                          vc_[size_t(l)][axis];
                         const float cr = va_[size_t(r)][axis] + vb_[size_t(r)][axis] +
                                          vc_[size_t(r)][axis];
                         return cl < cr;
                     });
    std::vector<Vec3f> ta(static_cast<size_t>(count));
    std::vector<Vec3f> tb(static_cast<size_t>(count));
    std::vector<Vec3f> tc(static_cast<size_t>(count));
    for (int32_t i = 0; i < count; ++i) {
        ta[size_t(i)] = va_[size_t(order[size_t(i)])];
        tb[size_t(i)] = vb_[size_t(order[size_t(i)])];
        tc[size_t(i)] = vc_[size_t(order[size_t(i)])];
    }
    std::copy(ta.begin(), ta.end(), va_.begin() + first);
    std::copy(tb.begin(), tb.end(), vb_.begin() + first);
    std::copy(tc.begin(), tc.end(), vc_.begin() + first);

    const int32_t mid = count / 2;
    const int32_t left = build(first, mid);
    const int32_t right = build(first + mid, count - mid);
    node.left = left;
    node.right = right;
    nodes_.push_back(node);
    return int32_t(nodes_.size()) - 1;
}

float MeshDistanceIndex::distance(const Vec3f& x) const {
    auto box_dist2 = [&](const Node& n) {
        float d2 = 0.0f;
        for (int a = 0; a < 3; ++a) {
            const float v = x[a];
            if (v < n.lo[a]) d2 += (n.lo[a] - v) * (n.lo[a] - v);
            else if (v > n.hi[a]) d2 += (v - n.hi[a]) * (v - n.hi[a]);
        }
        return d2;
    };

    float best = std::numeric_limits<float>::max();
    // Explicit stack, nearer child first. The median split keeps the tree
    // balanced, so depth stays far below the stack capacity.
    int32_t stack[128];
    int sp = 0;
    stack[sp++] = root_;
    while (sp > 0) {
        const Node& node = nodes_[size_t(stack[--sp])];
        if (box_dist2(node) >= best * best) continue;
        if (node.left < 0) {
            for (int32_t i = node.first; i < node.first + node.count; ++i)
                best = std::min(best, point_triangle_distance(x, va_[size_t(i)], vb_[size_t(i)],
                                                              vc_[size_t(i)]));
            continue;
        }
        const float dl = box_dist2(nodes_[size_t(node.left)]);
        const float dr = box_dist2(nodes_[size_t(node.right)]);
        if (dl <= dr) {
            stack[sp++] = node.right;
            stack[sp++] = node.left;
        } else {
            stack[sp++] = node.left;
            stack[sp++] = node.right;
        }
    }
    return best;
}

float point_to_mesh_distance(const Vec3f& x, const TriMesh& m) {
    if (m.empty()) throw Error(ErrorCode::EmptyMesh, "cannot measure against an empty mesh");
    MeshDistanceIndex index(m);
    return index.distance(x);
}

namespace {

double mean_distance(const std::vector<Vec3f>& samples, const MeshDistanceIndex& index) {
    std::vector<double> partial;
    const int64_t n = int64_t(samples.size());
    const int chunks = 64;  // fixed so the summation order never changes
    const int64_t chunk = (n + chunks - 1) / chunks;
    partial.assign(size_t(chunks), 0.0);
    parallel_for(0, chunks, [&](int64_t ci) {
        double acc = 0.0;
        const int64_t lo = ci * chunk, hi = std::min(n, lo + chunk);
        for (int64_t i = lo; i < hi; ++i) acc += double(index.distance(samples[size_t(i)]));
        partial[size_t(ci)] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total / double(n);
}

}  // namespace

EvalResult evaluate(const TriMesh& recon, const TriMesh& gt, int n, uint32_t seed) {
    if (recon.empty()) throw Error(ErrorCode::EmptyMesh, "recon mesh is empty");
    if (gt.empty()) throw Error(ErrorCode::EmptyMesh, "gt mesh is empty");

    const MeshDistanceIndex recon_index(recon);
    const MeshDistanceIndex gt_index(gt);
    const auto recon_samples = sample_surface(recon, n, seed);
    const auto gt_samples = sample_surface(gt, n, seed);

    EvalResult result;
    result.sample_count = n;
    result.accuracy = mean_distance(recon_samples, gt_index);
    result.completeness = mean_distance(gt_samples, recon_index);
    return result;
}

std::vector<float> per_vertex_distance(const TriMesh& m, const TriMesh& reference) {
    if (reference.empty()) throw Error(ErrorCode::EmptyMesh, "reference mesh is empty");
    const MeshDistanceIndex index(reference);
    std::vector<float> out(m.vertices.size());
    parallel_for(0, int64_t(m.vertices.size()),
                 [&](int64_t i) { out[size_t(i)] = index.distance(m.vertices[size_t(i)]); });
    return out;
}

}  // namespace cosect
