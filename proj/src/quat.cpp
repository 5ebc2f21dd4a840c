#include "flat4/quat.hpp"

#include <stdexcept>

#include "flat4/errors.hpp"

namespace flat4 {

UnitQuaternion::UnitQuaternion(const Quaternion& q) : Quaternion(q) {
    if (std::abs(q.norm() - 1.0) > 1e-12)
        throw Error("NotUnit", "quaternion norm differs from 1 by more than 1e-12");
}

UnitQuaternion UnitQuaternion::normalized(const Quaternion& q) {
    double n = q.norm();
    if (!(n > 0)) throw Error("NotUnit", "cannot normalize a zero quaternion");
    return UnitQuaternion(q / n);
}

S2Point hopf(const Quaternion& x) {
    Quaternion p = x * Quaternion::i() * x.conj();
    return p.vec();
}

Quaternion qexp(const Quaternion& p) {
    double t = p.vec().norm();
    if (t < 1e-300) return Quaternion::one();
    double s = std::sin(t) / t;
    return {std::cos(t), p.x * s, p.y * s, p.z * s};
}

}  // namespace flat4
