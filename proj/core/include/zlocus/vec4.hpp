#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace zlocus {

using Vec4 = std::array<double, 4>;

inline Vec4 operator+(const Vec4& a, const Vec4& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
inline Vec4 operator-(const Vec4& a, const Vec4& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}
inline Vec4 operator*(double s, const Vec4& a) {
    return {s * a[0], s * a[1], s * a[2], s * a[3]};
}
inline double dot(const Vec4& a, const Vec4& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}
inline double norm_sq(const Vec4& a) { return dot(a, a); }
inline double norm(const Vec4& a) { return std::sqrt(norm_sq(a)); }
inline double dist(const Vec4& a, const Vec4& b) { return norm(a - b); }

inline Vec4 normalized(const Vec4& a) {
    double n = norm(a);
    return {a[0] / n, a[1] / n, a[2] / n, a[3] / n};
}

// Affine subspace of R^4 spanned by `dim` orthonormal basis vectors.
struct AffineSubspace {
    Vec4 origin{};
    std::array<Vec4, 3> basis{};  // only the first `dim` entries are meaningful
    int dim = 0;

    Vec4 project(const Vec4& x) const {
        Vec4 p = origin;
        Vec4 d = x - origin;
        for (int i = 0; i < dim; ++i) {
            double c = dot(d, basis[i]);
            p = p + c * basis[i];
        }
        return p;
    }
    double distance(const Vec4& x) const { return dist(x, project(x)); }
};

}  // namespace zlocus
