// Small random generators for the property tests. Seeds are fixed so failures replay.
#pragma once

#include <cmath>
#include <random>

#include "flat4/curve.hpp"
#include "flat4/quat.hpp"

namespace gen {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

    flat4::Quaternion quaternion(double scale = 2.0) {
        return {uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)};
    }
    flat4::UnitQuaternion unit() {
        flat4::Quaternion q{normal(), normal(), normal(), normal()};
        return flat4::UnitQuaternion::normalized(q);
    }
    flat4::Quaternion pure(double scale = 2.0) { return {0, uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)}; }

    // k0 + a few small harmonics with period T.
    flat4::CurvatureProfile profile(double T = 3.14159265358979323846, int harmonics = 2, double amp = 0.3) {
        flat4::CurvatureProfile k = flat4::CurvatureProfile::circle(uniform(-1, 1), T);
        for (int n = 0; n < harmonics; ++n) {
            k.cos.push_back(uniform(-amp, amp) / (n + 1));
            k.sin.push_back(uniform(-amp, amp) / (n + 1));
        }
        return k;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace gen
