#include "flat4/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "flat4/errors.hpp"

namespace flat4 {

bool GridGeom::same_as(const GridGeom& o, double tol) const {
    return nu == o.nu && nv == o.nv && std::abs(u0 - o.u0) <= tol && std::abs(v0 - o.v0) <= tol &&
           std::abs(hu - o.hu) <= tol && std::abs(hv - o.hv) <= tol;
}

GridGeom GridGeom::spanning(double u0, double u1, int nu, double v0, double v1, int nv) {
    if (nu < 2 || nv < 2) throw Error("InvalidGrid", "grid needs at least two nodes per direction");
    GridGeom g;
    g.u0 = u0;
    g.v0 = v0;
    g.nu = nu;
    g.nv = nv;
    g.hu = (u1 - u0) / (nu - 1);
    g.hv = (v1 - v0) / (nv - 1);
    return g;
}

int thread_count() {
    if (const char* s = std::getenv("THREADS")) {
        int t = std::atoi(s);
        if (t > 0) return t;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

void parallel_rows(int n, const std::function<void(int)>& body) {
    int t = std::min(thread_count(), std::max(n, 1));
    if (t <= 1 || n < 8) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t);
    int block = (n + t - 1) / t;
    for (int b = 0; b < t; ++b) {
        int lo = b * block, hi = std::min(n, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace flat4
