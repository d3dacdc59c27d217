#pragma once

#include <array>
#include <cmath>

namespace sdpot {

// Fixed-capacity point for chart and ambient coordinates (dimension <= 3).
// Components beyond the active dimension stay zero, so full-width dot
// products and norms are safe regardless of the logical dimension.
struct Vec {
    std::array<double, 3> c{0.0, 0.0, 0.0};

    Vec() = default;
    Vec(double a, double b, double d) : c{a, b, d} {}

    double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    Vec& operator+=(const Vec& o) {
        c[0] += o.c[0];
        c[1] += o.c[1];
        c[2] += o.c[2];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        c[0] -= o.c[0];
        c[1] -= o.c[1];
        c[2] -= o.c[2];
        return *this;
    }
    Vec& operator*=(double a) {
        c[0] *= a;
        c[1] *= a;
        c[2] *= a;
        return *this;
    }
};

inline Vec vec1(double a) { return Vec{a, 0.0, 0.0}; }
inline Vec vec2(double a, double b) { return Vec{a, b, 0.0}; }
inline Vec vec3(double a, double b, double d) { return Vec{a, b, d}; }

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double a, Vec v) { return v *= a; }
inline Vec operator*(Vec v, double a) { return v *= a; }
inline Vec operator-(const Vec& v) { return Vec{-v.c[0], -v.c[1], -v.c[2]}; }

inline double dot(const Vec& a, const Vec& b) {
    return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2];
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }
inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }

// Squared-norm over the first n components only.
inline double norm2_n(const Vec& a, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

// Square matrix up to 3x3, zero padded like Vec.
struct Mat {
    std::array<std::array<double, 3>, 3> m{};

    double& operator()(int i, int j) { return m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    double operator()(int i, int j) const { return m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
};

inline Mat identity(int n, double scale = 1.0) {
    Mat out;
    for (int i = 0; i < n; ++i) out(i, i) = scale;
    return out;
}

inline Mat outer(const Vec& a, const Vec& b) {
    Mat out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = a[i] * b[j];
    return out;
}

inline Mat operator+(const Mat& a, const Mat& b) {
    Mat out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = a(i, j) + b(i, j);
    return out;
}

inline Mat operator-(const Mat& a, const Mat& b) {
    Mat out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = a(i, j) - b(i, j);
    return out;
}

inline Mat operator*(double s, const Mat& a) {
    Mat out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = s * a(i, j);
    return out;
}

// Determinant of the leading n x n block, n <= 3.
inline double det(const Mat& a, int n) {
    if (n == 1) return a(0, 0);
    if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

}  // namespace sdpot
