#pragma once

#include <cmath>
#include <Eigen/Core>

namespace flat4 {

// Quaternion w + x i + y j + z k, also used as a point of R^4.
struct Quaternion {
    double w = 0, x = 0, y = 0, z = 0;

    constexpr Quaternion() = default;
    constexpr Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

    static constexpr Quaternion one() { return {1, 0, 0, 0}; }
    static constexpr Quaternion i() { return {0, 1, 0, 0}; }
    static constexpr Quaternion j() { return {0, 0, 1, 0}; }
    static constexpr Quaternion k() { return {0, 0, 0, 1}; }
    static Quaternion pure(const Eigen::Vector3d& v) { return {0, v.x(), v.y(), v.z()}; }

    double operator[](int c) const { return c == 0 ? w : c == 1 ? x : c == 2 ? y : z; }
    double& operator[](int c) { return c == 0 ? w : c == 1 ? x : c == 2 ? y : z; }

    Eigen::Vector3d vec() const { return {x, y, z}; }
    double norm2() const { return w * w + x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    Quaternion conj() const { return {w, -x, -y, -z}; }

    Quaternion& operator+=(const Quaternion& o) { w += o.w; x += o.x; y += o.y; z += o.z; return *this; }
    Quaternion& operator-=(const Quaternion& o) { w -= o.w; x -= o.x; y -= o.y; z -= o.z; return *this; }
    Quaternion& operator*=(double s) { w *= s; x *= s; y *= s; z *= s; return *this; }
};

inline Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
inline Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
inline Quaternion operator-(const Quaternion& a) { return {-a.w, -a.x, -a.y, -a.z}; }
inline Quaternion operator*(double s, Quaternion a) { return a *= s; }
inline Quaternion operator*(Quaternion a, double s) { return a *= s; }
inline Quaternion operator/(Quaternion a, double s) { return a *= 1.0 / s; }

// Hamilton product, ij = k.
inline Quaternion qmul(const Quaternion& a, const Quaternion& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}
inline Quaternion operator*(const Quaternion& a, const Quaternion& b) { return qmul(a, b); }

// Euclidean inner product of R^4.
inline double dot(const Quaternion& a, const Quaternion& b) {
    return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double dist(const Quaternion& a, const Quaternion& b) { return (a - b).norm(); }

// A quaternion of norm one; construction checks the norm to 1e-12.
class UnitQuaternion : public Quaternion {
public:
    UnitQuaternion() : Quaternion(1, 0, 0, 0) {}
    explicit UnitQuaternion(const Quaternion& q);
    static UnitQuaternion normalized(const Quaternion& q);
};

using S2Point = Eigen::Vector3d;

// x y x^-1 for unit x.
inline Quaternion ad(const UnitQuaternion& x, const Quaternion& y) { return x * y * x.conj(); }

// h(x) = x i x^-1.
S2Point hopf(const Quaternion& x);

inline UnitQuaternion fiber_circle(double v) {
    return UnitQuaternion::normalized({std::cos(v), std::sin(v), 0, 0});
}

// exp of a pure quaternion.
Quaternion qexp(const Quaternion& pure);

// Renormalize when the norm drifted past tol.
inline Quaternion renormalize(const Quaternion& q, double tol = 1e-9) {
    double n = q.norm();
    return std::abs(n - 1.0) > tol ? q / n : q;
}

}  // namespace flat4
