#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace dissect {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return s * a; }
    friend Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

/// Column-major 3x3: `col[j]` is the j-th column.
struct Mat3 {
    std::array<Vec3, 3> col{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

    static Mat3 identity() { return {}; }
    static Mat3 from_columns(Vec3 c0, Vec3 c1, Vec3 c2) { return Mat3{{c0, c1, c2}}; }

    double at(int row, int column) const { return col[column][row]; }
    Vec3 row(int r) const { return {col[0][r], col[1][r], col[2][r]}; }

    friend Vec3 operator*(const Mat3& m, Vec3 v) { return v.x * m.col[0] + v.y * m.col[1] + v.z * m.col[2]; }
    friend Mat3 operator*(const Mat3& a, const Mat3& b) {
        return from_columns(a * b.col[0], a * b.col[1], a * b.col[2]);
    }
    Mat3 transposed() const { return from_columns(row(0), row(1), row(2)); }
    double determinant() const { return dot(col[0], cross(col[1], col[2])); }
    friend bool operator==(const Mat3&, const Mat3&) = default;
};

/// Rotation by `radians` about the world x axis.
inline Mat3 rotation_x(double radians) {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    return Mat3::from_columns({1, 0, 0}, {0, c, s}, {0, -s, c});
}

/// Largest deviation of M^T M from the identity.
inline double orthonormality_error(const Mat3& m) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double target = i == j ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(dot(m.col[i], m.col[j]) - target));
        }
    }
    return worst;
}

}  // namespace dissect
