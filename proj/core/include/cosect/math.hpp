// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace cosect {

template <typename T>
struct Vec3 {
    T x{}, y{}, z{};

    Vec3() = default;
    Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    template <typename U>
    Vec3<U> cast() const {
        return Vec3<U>(static_cast<U>(x), static_cast<U>(y), static_cast<U>(z));
    }

    T& operator[](int i) { return (&x)[i]; }
    const T& operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(T s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(T s) { x *= s; y *= s; z *= s; return *this; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    T squared_norm() const { return dot(*this); }
    T norm() const { return std::sqrt(squared_norm()); }
    Vec3 normalized() const {
        T n = norm();
        return n > T(0) ? *this / n : Vec3{};
    }
    Vec3 cwise_min(const Vec3& o) const {
        return {std::min(x, o.x), std::min(y, o.y), std::min(z, o.z)};
    }
    Vec3 cwise_max(const Vec3& o) const {
        return {std::max(x, o.x), std::max(y, o.y), std::max(z, o.z)};
    }
    Vec3 cwise_abs() const { return {std::abs(x), std::abs(y), std::abs(z)}; }
    T max_coeff() const { return std::max(x, std::max(y, z)); }
    T min_coeff() const { return std::min(x, std::min(y, z)); }
};

template <typename T>
inline Vec3<T> operator*(T s, const Vec3<T>& v) {
    return v * s;
}

using Vec3f = Vec3<float>;
using Vec3d = Vec3<double>;
using Vec3i = Vec3<int>;

// Row-major 3x3 matrix, double precision. Rigid transforms keep rotations
// orthonormal so double is used throughout pose math.
struct Mat3 {
    double m[3][3]{};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }

    double* operator[](int r) { return m[r]; }
    const double* operator[](int r) const { return m[r]; }

    Vec3d row(int r) const { return {m[r][0], m[r][1], m[r][2]}; }
    Vec3d col(int c) const { return {m[0][c], m[1][c], m[2][c]}; }

    Vec3d operator*(const Vec3d& v) const {
        return {row(0).dot(v), row(1).dot(v), row(2).dot(v)};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[j][i];
        return r;
    }

    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
};

// Unit quaternion (w, x, y, z) for keyframed rotation interpolation.
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    Quat() = default;
    Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

    Quat normalized() const {
        double n = std::sqrt(w * w + x * x + y * y + z * z);
        if (n <= 0.0) return Quat();
        return {w / n, x / n, y / n, z / n};
    }

    Mat3 to_matrix() const {
        Quat q = normalized();
        Mat3 r;
        const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
        r.m[0][0] = ww + xx - yy - zz;
        r.m[0][1] = 2.0 * (q.x * q.y - q.w * q.z);
        r.m[0][2] = 2.0 * (q.x * q.z + q.w * q.y);
        r.m[1][0] = 2.0 * (q.x * q.y + q.w * q.z);
        r.m[1][1] = ww - xx + yy - zz;
        r.m[1][2] = 2.0 * (q.y * q.z - q.w * q.x);
        r.m[2][0] = 2.0 * (q.x * q.z - q.w * q.y);
        r.m[2][1] = 2.0 * (q.y * q.z + q.w * q.x);
        r.m[2][2] = ww - xx - yy + zz;
        return r;
    }

    static Quat from_matrix(const Mat3& m) {
        Quat q;
        double tr = m.m[0][0] + m.m[1][1] + m.m[2][2];
        if (tr > 0.0) {
            double s = std::sqrt(tr + 1.0) * 2.0;
            q.w = 0.25 * s;
            q.x = (m.m[2][1] - m.m[1][2]) / s;
            q.y = (m.m[0][2] - m.m[2][0]) / s;
            q.z = (m.m[1][0] - m.m[0][1]) / s;
        } else if (m.m[0][0] > m.m[1][1] && m.m[0][0] > m.m[2][2]) {
            double s = std::sqrt(1.0 + m.m[0][0] - m.m[1][1] - m.m[2][2]) * 2.0;
            q.w = (m.m[2][1] - m.m[1][2]) / s;
            q.x = 0.25 * s;
            q.y = (m.m[0][1] + m.m[1][0]) / s;
            q.z = (m.m[0][2] + m.m[2][0]) / s;
        } else if (m.m[1][1] > m.m[2][2]) {
            double s = std::sqrt(1.0 + m.m[1][1] - m.m[0][0] - m.m[2][2]) * 2.0;
            q.w = (m.m[0][2] - m.m[2][0]) / s;
            q.x = (m.m[0][1] + m.m[1][0]) / s;
            q.y = 0.25 * s;
            q.z = (m.m[1][2] + m.m[2][1]) / s;
        } else {
            double s = std::sqrt(1.0 + m.m[2][2] - m.m[0][0] - m.m[1][1]) * 2.0;
            q.w = (m.m[1][0] - m.m[0][1]) / s;
            q.x = (m.m[0][2] + m.m[2][0]) / s;
            q.y = (m.m[1][2] + m.m[2][1]) / s;
            q.z = 0.25 * s;
        }
        return q;
    }

    // Normalized linear interpolation, shortest arc.
    static Quat nlerp(const Quat& a, const Quat& b, double t) {
        double d = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
        double s = d < 0.0 ? -1.0 : 1.0;
        Quat r(a.w + t * (s * b.w - a.w), a.x + t * (s * b.x - a.x),
               a.y + t * (s * b.y - a.y), a.z + t * (s * b.z - a.z));
        return r.normalized();
    }

    static Quat axis_angle(const Vec3d& axis, double angle) {
        Vec3d u = axis.normalized();
        double s = std::sin(0.5 * angle);
        return Quat(std::cos(0.5 * angle), u.x * s, u.y * s, u.z * s);
    }
};

}  // namespace cosect
