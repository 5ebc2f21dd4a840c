#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace flat4 {

// Uniform rectangle [u0, u0+(nu-1)hu] x [v0, v0+(nv-1)hv], endpoints included.
struct GridGeom {
    double u0 = 0, v0 = 0, hu = 0, hv = 0;
    int nu = 0, nv = 0;

    double u(int i) const { return u0 + hu * i; }
    double v(int j) const { return v0 + hv * j; }
    std::size_t size() const { return static_cast<std::size_t>(nu) * nv; }
    bool same_as(const GridGeom& o, double tol = 1e-12) const;

    // Builds a grid whose last node lands exactly on u1 (resp. v1).
    static GridGeom spanning(double u0, double u1, int nu, double v0, double v1, int nv);
};

// Row-major (u index outer) two-dimensional array.
template <class T>
class Array2 {
public:
    Array2() = default;
    Array2(int nu, int nv, const T& fill = T{}) : nu_(nu), nv_(nv), d_(static_cast<std::size_t>(nu) * nv, fill) {}

    T& operator()(int i, int j) { return d_[static_cast<std::size_t>(i) * nv_ + j]; }
    const T& operator()(int i, int j) const { return d_[static_cast<std::size_t>(i) * nv_ + j]; }

    int nu() const { return nu_; }
    int nv() const { return nv_; }
    bool empty() const { return d_.empty(); }
    const std::vector<T>& data() const { return d_; }

private:
    int nu_ = 0, nv_ = 0;
    std::vector<T> d_;
};

// Thread count from THREADS, defaulting to the hardware concurrency.
int thread_count();

// Runs body(i) for i in [0, n) over contiguous blocks; each index is visited once.
void parallel_rows(int n, const std::function<void(int)>& body);

}  // namespace flat4
