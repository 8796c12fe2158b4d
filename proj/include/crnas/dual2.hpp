// Second-order forward-mode dual numbers over a fixed, small variable set:
// each value carries its gradient and dense Hessian with respect to N
// independent variables. The case-study objectives are block-separable per
// subpopulation, so N stays at most 6 and assembly into the full parameter
// Hessian happens outside.
#pragma once

#include <Eigen/Core>

#include <cmath>

namespace crnas {

template <int N>
struct Dual2 {
    using Grad = Eigen::Matrix<double, N, 1>;
    using Hess = Eigen::Matrix<double, N, N>;

    double v = 0.0;
    Grad g = Grad::Zero();
    Hess h = Hess::Zero();

    Dual2() = default;
    explicit Dual2(double value) : v(value) {}

    static Dual2 variable(double value, int slot) {
        Dual2 d(value);
        d.g[slot] = 1.0;
        return d;
    }

    Dual2 operator-() const {
        Dual2 r;
        r.v = -v;
        r.g = -g;
        r.h = -h;
        return r;
    }
};

// elementwise chain rule: f(a) with first/second derivatives f1, f2 at a.v
template <int N>
Dual2<N> chain(const Dual2<N>& a, double f0, double f1, double f2) {
    Dual2<N> r;
    r.v = f0;
    r.g = f1 * a.g;
    r.h = f1 * a.h + f2 * (a.g * a.g.transpose());
    return r;
}

template <int N>
Dual2<N> operator+(const Dual2<N>& a, const Dual2<N>& b) {
    Dual2<N> r;
    r.v = a.v + b.v;
    r.g = a.g + b.g;
    r.h = a.h + b.h;
    return r;
}
template <int N>
Dual2<N> operator-(const Dual2<N>& a, const Dual2<N>& b) {
    Dual2<N> r;
    r.v = a.v - b.v;
    r.g = a.g - b.g;
    r.h = a.h - b.h;
    return r;
}
template <int N>
Dual2<N> operator*(const Dual2<N>& a, const Dual2<N>& b) {
    Dual2<N> r;
    r.v = a.v * b.v;
    r.g = a.v * b.g + b.v * a.g;
    r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
}
template <int N>
Dual2<N> inverse(const Dual2<N>& a) {
    return chain(a, 1.0 / a.v, -1.0 / (a.v * a.v), 2.0 / (a.v * a.v * a.v));
}
template <int N>
Dual2<N> operator/(const Dual2<N>& a, const Dual2<N>& b) {
    return a * inverse(b);
}

template <int N> Dual2<N> operator+(const Dual2<N>& a, double c) { Dual2<N> r = a; r.v += c; return r; }
template <int N> Dual2<N> operator+(double c, const Dual2<N>& a) { return a + c; }
template <int N> Dual2<N> operator-(const Dual2<N>& a, double c) { return a + (-c); }
template <int N> Dual2<N> operator-(double c, const Dual2<N>& a) { return (-a) + c; }
template <int N>
Dual2<N> operator*(const Dual2<N>& a, double c) {
    Dual2<N> r;
    r.v = a.v * c;
    r.g = a.g * c;
    r.h = a.h * c;
    return r;
}
template <int N> Dual2<N> operator*(double c, const Dual2<N>& a) { return a * c; }
template <int N> Dual2<N> operator/(const Dual2<N>& a, double c) { return a * (1.0 / c); }
template <int N> Dual2<N> operator/(double c, const Dual2<N>& a) { return inverse(a) * c; }

template <int N>
Dual2<N> exp(const Dual2<N>& a) {
    const double e = std::exp(a.v);
    return chain(a, e, e, e);
}
template <int N>
Dual2<N> log(const Dual2<N>& a) {
    return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}
template <int N>
Dual2<N> sqrt(const Dual2<N>& a) {
    const double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
// base^e for positive base
template <int N>
Dual2<N> pow(const Dual2<N>& base, const Dual2<N>& e) {
    return exp(e * log(base));
}
template <int N>
Dual2<N> pow(double base, const Dual2<N>& e) {
    return exp(e * std::log(base));
}
template <int N>
Dual2<N> pow(const Dual2<N>& base, double p) {
    const double f0 = std::pow(base.v, p);
    return chain(base, f0, p * f0 / base.v, p * (p - 1.0) * f0 / (base.v * base.v));
}

// scalar passthroughs so model code can be written once for double and duals
inline double value_of(double x) { return x; }
template <int N>
double value_of(const Dual2<N>& x) { return x.v; }

}  // namespace crnas
