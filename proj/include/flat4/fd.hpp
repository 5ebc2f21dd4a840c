#pragma once

// Fourth-order central differences. Callers keep two nodes away from every edge.

namespace flat4::fd {

template <class T>
T d1(const T& m2, const T& m1, const T& p1, const T& p2, double h) {
    return (m2 - 8.0 * m1 + 8.0 * p1 - p2) * (1.0 / (12.0 * h));
}

template <class T>
T d2(const T& m2, const T& m1, const T& c, const T& p1, const T& p2, double h) {
    return (-1.0 * m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) * (1.0 / (12.0 * h * h));
}

// 7-point third derivative, fourth order.
template <class T>
T d3(const T& m3, const T& m2, const T& m1, const T& p1, const T& p2, const T& p3, double h) {
    return (m3 - 8.0 * m2 + 13.0 * m1 - 13.0 * p1 + 8.0 * p2 - 1.0 * p3) * (1.0 / (8.0 * h * h * h));
}

// Derivatives of a node accessor f(i, j) in u and v.
template <class F>
auto du(const F& f, int i, int j, double h) {
    return d1(f(i - 2, j), f(i - 1, j), f(i + 1, j), f(i + 2, j), h);
}
template <class F>
auto dv(const F& f, int i, int j, double h) {
    return d1(f(i, j - 2), f(i, j - 1), f(i, j + 1), f(i, j + 2), h);
}
template <class F>
auto duu(const F& f, int i, int j, double h) {
    return d2(f(i - 2, j), f(i - 1, j), f(i, j), f(i + 1, j), f(i + 2, j), h);
}
template <class F>
auto dvv(const F& f, int i, int j, double h) {
    return d2(f(i, j - 2), f(i, j - 1), f(i, j), f(i, j + 1), f(i, j + 2), h);
}
template <class F>
auto duv(const F& f, int i, int j, double hu, double hv) {
    auto g = [&](int a, int b) { return dv(f, a, b, hv); };
    return du(g, i, j, hu);
}

}  // namespace flat4::fd
