#pragma once

#include <cmath>
#include <stdexcept>

namespace gpile {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 cwise(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
};

// Quaternion storage order is (w, x, y, z), scalar first.
struct Vec4 {
    double w = 0.0, x = 0.0, y = 0.0, z = 0.0;

    Vec4 operator+(const Vec4& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
    Vec4 operator-(const Vec4& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
    Vec4 operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
    double operator[](int i) const { return i == 0 ? w : (i == 1 ? x : (i == 2 ? y : z)); }
    double& operator[](int i) { return i == 0 ? w : (i == 1 ? x : (i == 2 ? y : z)); }
    double dot(const Vec4& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

struct Mat2 {
    // row-major
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;  // [[a, b], [c, d]]

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    double det() const { return a * d - b * c; }
    Mat2 inverse() const {
        const double dt = det();
        return {d / dt, -b / dt, -c / dt, a / dt};
    }
    Vec2 mul(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 mul(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
    Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }

    // Eigenvalues of a symmetric 2x2, largest first.
    void sym_eigenvalues(double& lo, double& hi) const {
        const double m = 0.5 * (a + d);
        const double r = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
        hi = m + r;
        lo = m - r;
    }
};

struct Mat3 {
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }
    static Mat3 diag(double a, double b, double c) {
        Mat3 r;
        r.m[0][0] = a;
        r.m[1][1] = b;
        r.m[2][2] = c;
        return r;
    }
    static Mat3 outer(const Vec3& u, const Vec3& v) {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = u[i] * v[j];
        return r;
    }

    Mat3 transpose() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }
    Mat3 mul(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }
    Vec3 mul(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
        return r;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
        return r;
    }
    Mat3 operator*(double s) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] * s;
        return r;
    }

    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
    double trace() const { return m[0][0] + m[1][1] + m[2][2]; }

    Mat3 inverse() const {
        const double dt = det();
        Mat3 r;
        r.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / dt;
        r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / dt;
        r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / dt;
        r.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / dt;
        r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / dt;
        r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / dt;
        r.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / dt;
        r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / dt;
        r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / dt;
        return r;
    }

    // Eigenvalues of a symmetric 3x3 via the trigonometric closed form,
    // ascending order. Only used for conditioning checks and oracles.
    void sym_eigenvalues(double out[3]) const {
        const double p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
        if (p1 == 0.0) {
            double d[3] = {m[0][0], m[1][1], m[2][2]};
            if (d[0] > d[1]) std::swap(d[0], d[1]);
            if (d[1] > d[2]) std::swap(d[1], d[2]);
            if (d[0] > d[1]) std::swap(d[0], d[1]);
            out[0] = d[0];
            out[1] = d[1];
            out[2] = d[2];
            return;
        }
        const double q = trace() / 3.0;
        const double p2 = (m[0][0] - q) * (m[0][0] - q) + (m[1][1] - q) * (m[1][1] - q) +
                          (m[2][2] - q) * (m[2][2] - q) + 2.0 * p1;
        const double p = std::sqrt(p2 / 6.0);
        Mat3 B = (*this - identity() * q) * (1.0 / p);
        double r = B.det() / 2.0;
        r = std::fmax(-1.0, std::fmin(1.0, r));
        const double phi = std::acos(r) / 3.0;
        const double e_hi = q + 2.0 * p * std::cos(phi);
        const double e_lo = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
        out[0] = e_lo;
        out[2] = e_hi;
        out[1] = 3.0 * q - e_lo - e_hi;
    }
};

// Rotation matrix of q/|q|. Scalar-first (w, x, y, z) convention.
inline Mat3 quat_to_rotation(const Vec4& q) {
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::invalid_argument("quat_to_rotation: zero-norm quaternion");
    const double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
    Mat3 r;
    r.m[0][0] = 1.0 - 2.0 * (y * y + z * z);
    r.m[0][1] = 2.0 * (x * y - w * z);
    r.m[0][2] = 2.0 * (x * z + w * y);
    r.m[1][0] = 2.0 * (x * y + w * z);
    r.m[1][1] = 1.0 - 2.0 * (x * x + z * z);
    r.m[1][2] = 2.0 * (y * z - w * x);
    r.m[2][0] = 2.0 * (x * z - w * y);
    r.m[2][1] = 2.0 * (y * z + w * x);
    r.m[2][2] = 1.0 - 2.0 * (x * x + y * y);
    return r;
}

}  // namespace gpile
