#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace vrs {

struct Vec3 {
    std::array<double, 3> c{0.0, 0.0, 0.0};

    constexpr Vec3() = default;
    constexpr Vec3(double x, double y, double z) : c{x, y, z} {}

    constexpr double& operator[](std::size_t i) { return c[i]; }
    constexpr double operator[](std::size_t i) const { return c[i]; }

    constexpr Vec3& operator+=(const Vec3& o) {
        c[0] += o.c[0]; c[1] += o.c[1]; c[2] += o.c[2];
        return *this;
    }
    constexpr Vec3& operator-=(const Vec3& o) {
        c[0] -= o.c[0]; c[1] -= o.c[1]; c[2] -= o.c[2];
        return *this;
    }
    constexpr Vec3& operator*=(double s) {
        c[0] *= s; c[1] *= s; c[2] *= s;
        return *this;
    }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a[0] / s, a[1] / s, a[2] / s}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
constexpr double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }
inline double max_abs(const Vec3& a) { return std::fmax(std::fabs(a[0]), std::fmax(std::fabs(a[1]), std::fabs(a[2]))); }

// Japanese bracket <v> = sqrt(1 + |v|^2).
inline double bracket(const Vec3& a) { return std::sqrt(1.0 + norm2(a)); }

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> a{};

    static constexpr Mat3 identity() {
        Mat3 m;
        m.a[0] = m.a[4] = m.a[8] = 1.0;
        return m;
    }
    constexpr double& operator()(std::size_t i, std::size_t j) { return a[3 * i + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const { return a[3 * i + j]; }

    constexpr Mat3& operator+=(const Mat3& o) {
        for (std::size_t k = 0; k < 9; ++k) a[k] += o.a[k];
        return *this;
    }
    constexpr Mat3& operator-=(const Mat3& o) {
        for (std::size_t k = 0; k < 9; ++k) a[k] -= o.a[k];
        return *this;
    }
    constexpr Mat3& operator*=(double s) {
        for (auto& v : a) v *= s;
        return *this;
    }
};

constexpr Mat3 operator+(Mat3 x, const Mat3& y) { return x += y; }
constexpr Mat3 operator-(Mat3 x, const Mat3& y) { return x -= y; }
constexpr Mat3 operator*(Mat3 x, double s) { return x *= s; }
constexpr Mat3 operator*(double s, Mat3 x) { return x *= s; }

constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
    return {m(0, 0) * v[0] + m(0, 1) * v[1] + m(0, 2) * v[2],
            m(1, 0) * v[0] + m(1, 1) * v[1] + m(1, 2) * v[2],
            m(2, 0) * v[0] + m(2, 1) * v[1] + m(2, 2) * v[2]};
}

constexpr Mat3 operator*(const Mat3& x, const Mat3& y) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 3; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

constexpr Mat3 transpose(const Mat3& m) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) r(i, j) = m(j, i);
    return r;
}

constexpr Mat3 outer(const Vec3& u, const Vec3& v) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) r(i, j) = u[i] * v[j];
    return r;
}

inline double frobenius(const Mat3& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

constexpr double determinant(const Mat3& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// Third-order tensor T[k](i, j) = d_k d_i d_j of a scalar; symmetric in all slots.
using Tensor3 = std::array<Mat3, 3>;

inline double frobenius(const Tensor3& t) {
    double s = 0.0;
    for (const auto& m : t)
        for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

// Contraction sum_k v_k T[k].
inline Mat3 contract(const Tensor3& t, const Vec3& v) {
    return t[0] * v[0] + t[1] * v[1] + t[2] * v[2];
}

}  // namespace vrs
