#pragma once

#include "spinrs/types.hpp"

namespace spinrs {

// First-order forward-mode value: v + <g, d>. An empty gradient means zero.
struct Jet {
    cplx v = 0.0;
    CVec g;

    Jet() = default;
    Jet(cplx value) : v(value) {}  // NOLINT(google-explicit-constructor)
    Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
    Jet(cplx value, CVec grad) : v(value), g(std::move(grad)) {}

    static Jet variable(cplx value, int dim, int index) {
        CVec e = CVec::Zero(dim);
        e(index) = 1.0;
        return Jet(value, std::move(e));
    }
};

namespace jet_detail {
inline CVec add(const CVec& a, const CVec& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    return a + b;
}
inline CVec sub(const CVec& a, const CVec& b) {
    if (b.size() == 0) return a;
    if (a.size() == 0) return -b;
    return a - b;
}
inline CVec scale(const CVec& a, cplx c) {
    if (a.size() == 0) return a;
    return a * c;
}
inline CVec axpby(cplx p, const CVec& a, cplx r, const CVec& b) {
    if (a.size() == 0) return scale(b, r);
    if (b.size() == 0) return scale(a, p);
    return p * a + r * b;
}
}  // namespace jet_detail

inline Jet operator+(const Jet& a, const Jet& b) { return Jet(a.v + b.v, jet_detail::add(a.g, b.g)); }
inline Jet operator-(const Jet& a, const Jet& b) { return Jet(a.v - b.v, jet_detail::sub(a.g, b.g)); }
inline Jet operator-(const Jet& a) { return Jet(-a.v, jet_detail::scale(a.g, -1.0)); }
inline Jet operator*(const Jet& a, const Jet& b) {
    return Jet(a.v * b.v, jet_detail::axpby(b.v, a.g, a.v, b.g));
}
inline Jet operator/(const Jet& a, const Jet& b) {
    cplx inv = 1.0 / b.v;
    return Jet(a.v * inv, jet_detail::axpby(inv, a.g, -a.v * inv * inv, b.g));
}
inline Jet& operator+=(Jet& a, const Jet& b) { return a = a + b; }
inline Jet& operator-=(Jet& a, const Jet& b) { return a = a - b; }

inline cplx value_of(const cplx& c) { return c; }
inline cplx value_of(const Jet& j) { return j.v; }

}  // namespace spinrs
