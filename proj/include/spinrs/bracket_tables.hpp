#pragma once

// Closed-form pair brackets, templated on a data provider so the same
// transcription serves plain evaluation and forward-mode differentiation.

#include <tuple>

#include "spinrs/types.hpp"

namespace spinrs {

enum class Gen : int { X = 0, Z = 1, V = 2, W = 3 };

// X/Z entries use (i, j); V(alpha) uses j as its column; W(alpha) uses i as its row.
struct GenId {
    Gen gen = Gen::X;
    int alpha = 0;
    int i = 0;
    int j = 0;

    static GenId x(int i, int j) { return {Gen::X, 0, i, j}; }
    static GenId z(int i, int j) { return {Gen::Z, 0, i, j}; }
    static GenId v(int alpha, int j) { return {Gen::V, alpha, 0, j}; }
    static GenId w(int alpha, int i) { return {Gen::W, alpha, i, 0}; }

    auto key() const { return std::make_tuple(static_cast<int>(gen), alpha, i, j); }
    bool operator<(const GenId& o) const { return key() < o.key(); }
    bool operator==(const GenId& o) const { return key() == o.key(); }
};

enum class Coord : int { X = 0, A = 1, B = 2 };

struct LocalId {
    Coord kind = Coord::X;
    int i = 0;
    int alpha = 0;

    static LocalId x(int i) { return {Coord::X, i, 0}; }
    static LocalId a(int i, int alpha) { return {Coord::A, i, alpha}; }
    static LocalId b(int i, int alpha) { return {Coord::B, i, alpha}; }

    auto key() const { return std::make_tuple(static_cast<int>(kind), i, alpha); }
    bool operator<(const LocalId& o) const { return key() < o.key(); }
    bool operator==(const LocalId& o) const { return key() == o.key(); }
};

namespace tables {

// Ambient quasi-Poisson bivector on generator entries. D provides
// X, Z, V, W entries and the products XX, ZZ, XZ, ZX, VX, VZ, XW, ZW, VW.
template <class D>
typename D::Scalar ambient_ordered(const D& m, const GenId& u, const GenId& v) {
    using T = typename D::Scalar;
    const double h = 0.5;
    const int i = u.i, j = u.j;
    switch (u.gen) {
        case Gen::X:
            switch (v.gen) {
                case Gen::X: {
                    const int k = v.i, l = v.j;
                    return h * (kron(i, l) * m.XX(k, j) - kron(k, j) * m.XX(i, l));
                }
                case Gen::Z: {
                    const int k = v.i, l = v.j;
                    return h * (m.ZX(k, j) * kron(i, l) + kron(k, j) * m.XZ(i, l) + m.Z(k, j) * m.X(i, l) -
                                m.X(k, j) * m.Z(i, l));
                }
                case Gen::V: {
                    const int a = v.alpha, l = v.j;
                    return h * (m.VX(a, j) * kron(i, l) - m.V(a, j) * m.X(i, l));
                }
                case Gen::W: {
                    const int a = v.alpha, k = v.i;
                    return h * (kron(k, j) * m.XW(a, i) - m.X(k, j) * m.W(a, i));
                }
            }
            break;
        case Gen::Z:
            switch (v.gen) {
                case Gen::Z: {
                    const int k = v.i, l = v.j;
                    return h * (kron(k, j) * m.ZZ(i, l) - kron(i, l) * m.ZZ(k, j));
                }
                case Gen::V: {
                    const int a = v.alpha, l = v.j;
                    return h * (m.VZ(a, j) * kron(i, l) - m.V(a, j) * m.Z(i, l));
                }
                case Gen::W: {
                    const int a = v.alpha, k = v.i;
                    return h * (kron(k, j) * m.ZW(a, i) - m.Z(k, j) * m.W(a, i));
                }
                default: break;
            }
            break;
        case Gen::V:
            switch (v.gen) {
                case Gen::V: {
                    const int a = u.alpha, b = v.alpha, l = v.j;
                    return h * ord(b, a) * (m.V(b, j) * m.V(a, l) + m.V(a, j) * m.V(b, l));
                }
                case Gen::W: {
                    const int a = u.alpha, b = v.alpha, k = v.i;
                    T r = h * ord(a, b) * (kron(k, j) * m.VW(a, b) + m.W(b, k) * m.V(a, j));
                    if (a == b) r += kron(k, j) + h * m.W(a, k) * m.V(a, j) + h * kron(k, j) * m.VW(a, a);
                    return r;
                }
                default: break;
            }
            break;
        case Gen::W:
            if (v.gen == Gen::W) {
                const int a = u.alpha, b = v.alpha, k = v.i;
                return h * ord(b, a) * (m.W(b, k) * m.W(a, i) + m.W(a, k) * m.W(b, i));
            }
            break;
    }
    return T(0.0);
}

template <class D>
typename D::Scalar ambient_pair(const D& m, const GenId& u, const GenId& v) {
    using T = typename D::Scalar;
    if (u == v) return T(0.0);
    if (v < u) return -ambient_ordered(m, v, u);
    return ambient_ordered(m, u, v);
}

// Local Poisson brackets of (x, a, b). D provides x(i), a(i, al), b(i, al),
// z(i, j) and the coupling q(); d() is the spin count.
template <class D>
typename D::Scalar local_ordered(const D& p, const LocalId& u, const LocalId& v) {
    using T = typename D::Scalar;
    const double h = 0.5;
    const int d = p.d();
    const int i = u.i, j = v.i;
    const int al = u.alpha, be = v.alpha;
    auto c = [&](int r, int s) { return (p.x(r) + p.x(s)) / (p.x(r) - p.x(s)); };
    if (u.kind == Coord::X) {
        if (v.kind == Coord::B && i == j) return p.x(i) * p.b(j, be);
        return T(0.0);
    }
    if (u.kind == Coord::A && v.kind == Coord::A) {
        T r = h * ord(be, al) * (p.a(i, al) * p.a(j, be) + p.a(j, al) * p.a(i, be));
        if (i != j)
            r += h * c(i, j) *
                 (p.a(i, al) * p.a(j, be) + p.a(j, al) * p.a(i, be) - p.a(j, al) * p.a(j, be) -
                  p.a(i, al) * p.a(i, be));
        for (int ga = 0; ga < d; ++ga) {
            if (ord(al, ga) != 0)
                r += h * ord(al, ga) * p.a(j, be) * (p.a(i, al) * p.a(j, ga) + p.a(j, al) * p.a(i, ga));
            if (ord(be, ga) != 0)
                r -= h * ord(be, ga) * p.a(i, al) * (p.a(j, be) * p.a(i, ga) + p.a(i, be) * p.a(j, ga));
        }
        return r;
    }
    if (u.kind == Coord::A && v.kind == Coord::B) {
        T zij = p.z(i, j);
        T r = p.a(i, al) * zij;
        if (al == be) r -= zij;
        if (i != j) r -= h * c(i, j) * (p.a(i, al) - p.a(j, al)) * p.b(j, be);
        if (al < be) r += p.a(i, al) * p.b(j, be);
        for (int ga = 0; ga < be; ++ga) {
            r += p.a(i, al) * p.a(i, ga) * (p.b(j, ga) - p.b(j, be));
            if (al == be) r -= p.a(i, ga) * p.b(j, ga);
        }
        for (int ga = 0; ga < d; ++ga)
            if (ord(al, ga) != 0)
                r -= h * ord(al, ga) * p.b(j, be) * (p.a(i, al) * p.a(j, ga) + p.a(j, al) * p.a(i, ga));
        return r;
    }
    if (u.kind == Coord::B && v.kind == Coord::B) {
        T r = -p.b(i, al) * p.z(i, j) + p.b(j, be) * p.z(j, i) +
              h * ord(be, al) * (p.b(i, al) * p.b(j, be) - p.b(j, al) * p.b(i, be));
        if (i != j) r += h * c(i, j) * (p.b(i, al) * p.b(j, be) + p.b(j, al) * p.b(i, be));
        for (int ga = 0; ga < be; ++ga) r -= p.b(i, al) * p.a(i, ga) * (p.b(j, ga) - p.b(j, be));
        for (int ga = 0; ga < al; ++ga) r += p.b(j, be) * p.a(j, ga) * (p.b(i, ga) - p.b(i, al));
        return r;
    }
    return T(0.0);
}

template <class D>
typename D::Scalar local_pair(const D& p, const LocalId& u, const LocalId& v) {
    using T = typename D::Scalar;
    if (u == v) return T(0.0);
    if (v < u) return -local_ordered(p, v, u);
    return local_ordered(p, u, v);
}

}  // namespace tables
}  // namespace spinrs
