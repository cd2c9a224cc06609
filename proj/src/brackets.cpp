#include "spinrs/brackets.hpp"

#include <algorithm>
#include <cmath>

#include "spinrs/jet.hpp"
#include "spinrs/linalg.hpp"

namespace spinrs {

Residual make_residual(double abs, double scale) { return Residual{abs, abs / std::max(1.0, scale)}; }

namespace {

struct AmbientNumeric {
    using Scalar = cplx;
    const AmbientPoint& m;
    CMat xx, zz, xz, zx, vx, vz, xw, zw, vw;

    explicit AmbientNumeric(const AmbientPoint& pt) : m(pt) {
        const int n = pt.n(), d = pt.d();
        xx = pt.X * pt.X;
        zz = pt.Z * pt.Z;
        xz = pt.X * pt.Z;
        zx = pt.Z * pt.X;
        vx.resize(d, n);
        vz.resize(d, n);
        xw.resize(d, n);
        zw.resize(d, n);
        vw.resize(d, d);
        for (int a = 0; a < d; ++a) {
            vx.row(a) = pt.V[a] * pt.X;
            vz.row(a) = pt.V[a] * pt.Z;
            xw.row(a) = (pt.X * pt.W[a]).transpose();
            zw.row(a) = (pt.Z * pt.W[a]).transpose();
            for (int b = 0; b < d; ++b) vw(a, b) = (pt.V[a] * pt.W[b]).value();
        }
    }
    cplx X(int i, int j) const { return m.X(i, j); }
    cplx Z(int i, int j) const { return m.Z(i, j); }
    cplx V(int a, int j) const { return m.V[a](j); }
    cplx W(int a, int i) const { return m.W[a](i); }
    cplx XX(int i, int j) const { return xx(i, j); }
    cplx ZZ(int i, int j) const { return zz(i, j); }
    cplx XZ(int i, int j) const { return xz(i, j); }
    cplx ZX(int i, int j) const { return zx(i, j); }
    cplx VX(int a, int j) const { return vx(a, j); }
    cplx VZ(int a, int j) const { return vz(a, j); }
    cplx XW(int a, int i) const { return xw(a, i); }
    cplx ZW(int a, int i) const { return zw(a, i); }
    cplx VW(int a, int b) const { return vw(a, b); }
};

struct AmbientJets {
    using Scalar = Jet;
    int n = 0, d = 0;
    std::vector<Jet> x, z, v, w;  // row-major n x n, n x n, d x n, d x n

    Jet X(int i, int j) const { return x[i * n + j]; }
    Jet Z(int i, int j) const { return z[i * n + j]; }
    Jet V(int a, int j) const { return v[a * n + j]; }
    Jet W(int a, int i) const { return w[a * n + i]; }
    Jet mul(const std::vector<Jet>& p, const std::vector<Jet>& q, int i, int j) const {
        Jet s(0.0);
        for (int k = 0; k < n; ++k) s += p[i * n + k] * q[k * n + j];
        return s;
    }
    Jet XX(int i, int j) const { return mul(x, x, i, j); }
    Jet ZZ(int i, int j) const { return mul(z, z, i, j); }
    Jet XZ(int i, int j) const { return mul(x, z, i, j); }
    Jet ZX(int i, int j) const { return mul(z, x, i, j); }
    Jet VX(int a, int j) const {
        Jet s(0.0);
        for (int k = 0; k < n; ++k) s += V(a, k) * X(k, j);
        return s;
    }
    Jet VZ(int a, int j) const {
        Jet s(0.0);
        for (int k = 0; k < n; ++k) s += V(a, k) * Z(k, j);
        return s;
    }
    Jet XW(int a, int i) const {
        Jet s(0.0);
        for (int k = 0; k < n; ++k) s += X(i, k) * W(a, k);
        return s;
    }
    Jet ZW(int a, int i) const {
        Jet s(0.0);
        for (int k = 0; k < n; ++k) s += Z(i, k) * W(a, k);
        return s;
    }
    Jet VW(int a, int b) const {
        Jet s(0.0);
        for (int k = 0; k < n; ++k) s += V(a, k) * W(b, k);
        return s;
    }
};

int generator_index(const GenId& u, int n, int d) {
    switch (u.gen) {
        case Gen::X: return u.i * n + u.j;
        case Gen::Z: return n * n + u.i * n + u.j;
        case Gen::V: return 2 * n * n + u.alpha * n + u.j;
        case Gen::W: return 2 * n * n + d * n + u.alpha * n + u.i;
    }
    return 0;
}

AmbientJets ambient_jets(const AmbientPoint& m) {
    AmbientJets J;
    J.n = m.n();
    J.d = m.d();
    const int n = J.n, d = J.d;
    const int dim = 2 * n * n + 2 * n * d;
    for (const GenId& u : generator_ids(n, d)) {
        const int idx = generator_index(u, n, d);
        switch (u.gen) {
            case Gen::X: J.x.push_back(Jet::variable(m.X(u.i, u.j), dim, idx)); break;
            case Gen::Z: J.z.push_back(Jet::variable(m.Z(u.i, u.j), dim, idx)); break;
            case Gen::V: J.v.push_back(Jet::variable(m.V[u.alpha](u.j), dim, idx)); break;
            case Gen::W: J.w.push_back(Jet::variable(m.W[u.alpha](u.i), dim, idx)); break;
        }
    }
    return J;
}

struct LocalNumeric {
    using Scalar = cplx;
    const LocalPoint& pt;
    cplx qq;
    CMat zm;
    LocalNumeric(const LocalPoint& p, cplx q) : pt(p), qq(q), zm(slice_z(p, q)) {}
    int d() const { return pt.d(); }
    cplx x(int i) const { return pt.x(i); }
    cplx a(int i, int al) const { return pt.a(i, al); }
    cplx b(int i, int al) const { return pt.b(i, al); }
    cplx z(int i, int j) const { return zm(i, j); }
};

struct LocalJets {
    using Scalar = Jet;
    int n = 0, dd = 0;
    cplx qq;
    std::vector<Jet> xs, as, bs;  // as, bs row-major n x d
    int d() const { return dd; }
    Jet x(int i) const { return xs[i]; }
    Jet a(int i, int al) const { return as[i * dd + al]; }
    Jet b(int i, int al) const { return bs[i * dd + al]; }
    Jet z(int i, int j) const {
        Jet f(0.0);
        for (int al = 0; al < dd; ++al) f += a(i, al) * b(j, al);
        return Jet(qq) * x(j) * f / (x(i) - Jet(qq) * x(j));
    }
};

LocalJets local_jets(const LocalPoint& p, cplx q) {
    LocalJets J;
    J.n = p.n();
    J.dd = p.d();
    J.qq = q;
    FreeLayout L{p.n(), p.d()};
    const int dim = L.dim();
    for (int i = 0; i < p.n(); ++i) {
        J.xs.push_back(Jet::variable(p.x(i), dim, L.x(i)));
        Jet last(1.0);
        for (int al = 0; al + 1 < p.d(); ++al) {
            Jet ja = Jet::variable(p.a(i, al), dim, L.a(i, al));
            last -= ja;
            J.as.push_back(ja);
        }
        last.v = p.a(i, p.d() - 1);
        J.as.push_back(last);
        for (int al = 0; al < p.d(); ++al) J.bs.push_back(Jet::variable(p.b(i, al), dim, L.b(i, al)));
    }
    return J;
}

}  // namespace

std::vector<GenId> generator_ids(int n, int d) {
    std::vector<GenId> ids;
    ids.reserve(2 * n * n + 2 * n * d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ids.push_back(GenId::x(i, j));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ids.push_back(GenId::z(i, j));
    for (int a = 0; a < d; ++a)
        for (int j = 0; j < n; ++j) ids.push_back(GenId::v(a, j));
    for (int a = 0; a < d; ++a)
        for (int i = 0; i < n; ++i) ids.push_back(GenId::w(a, i));
    return ids;
}

cplx gradient_entry(const GradientBundle& g, const GenId& u) {
    switch (u.gen) {
        case Gen::X: return g.dX(u.j, u.i);
        case Gen::Z: return g.dZ(u.j, u.i);
        case Gen::V: return g.dV[u.alpha](u.j);
        case Gen::W: return g.dW[u.alpha](u.i);
    }
    return 0.0;
}

GradientBundle coordinate_gradient(const GenId& u, int n, int d) {
    GradientBundle g = GradientBundle::zeros(n, d);
    switch (u.gen) {
        case Gen::X: g.dX(u.j, u.i) = 1.0; break;
        case Gen::Z: g.dZ(u.j, u.i) = 1.0; break;
        case Gen::V: g.dV[u.alpha](u.j) = 1.0; break;
        case Gen::W: g.dW[u.alpha](u.i) = 1.0; break;
    }
    return g;
}

cplx ambient_pair_bracket(const GenId& u, const GenId& v, const AmbientPoint& m) {
    AmbientNumeric data(m);
    return tables::ambient_pair(data, u, v);
}

BracketValue ambient_bracket_slow(const GradientBundle& f, const GradientBundle& g, const AmbientPoint& m) {
    AmbientNumeric data(m);
    const std::vector<GenId> ids = generator_ids(m.n(), m.d());
    std::vector<cplx> gg(ids.size());
    for (size_t b = 0; b < ids.size(); ++b) gg[b] = gradient_entry(g, ids[b]);
    BracketValue out;
    for (size_t a = 0; a < ids.size(); ++a) {
        const cplx fa = gradient_entry(f, ids[a]);
        if (fa == 0.0) continue;
        for (size_t b = 0; b < ids.size(); ++b) {
            if (gg[b] == 0.0) continue;
            const cplx t = fa * tables::ambient_pair(data, ids[a], ids[b]) * gg[b];
            out.value += t;
            out.scale += std::abs(t);
        }
    }
    return out;
}

namespace {

// Contraction with all signs made positive when `mag` is set; inputs must
// already be entrywise absolute values in that case.
cplx contract(const GradientBundle& f, const GradientBundle& g, const AmbientPoint& m, bool mag) {
    const int d = m.d();
    const double s = mag ? 1.0 : -1.0;  // sign applied to subtracted terms
    auto osgn = [&](int a, int b) { return mag ? std::abs(ord(a, b)) : ord(a, b); };
    const CMat& X = m.X;
    const CMat& Z = m.Z;
    CMat X2 = X * X, Z2 = Z * Z, XZ = X * Z, ZX = Z * X;
    auto tr = [](const CMat& a, const CMat& b) { return a.cwiseProduct(b.transpose()).sum(); };
    cplx r = 0.0;
    // XX and ZZ
    r += 0.5 * (tr(f.dX * g.dX, X2) + s * tr(f.dX * X2, g.dX));
    r += 0.5 * (tr(f.dZ * Z2, g.dZ) + s * tr(f.dZ * g.dZ, Z2));
    // XZ for both orders
    auto xz = [&](const GradientBundle& p, const GradientBundle& q) {
        return 0.5 * (tr(p.dX * q.dZ, ZX) + tr(p.dX * XZ, q.dZ) + tr(p.dX * X, q.dZ * Z) +
                      s * tr(p.dX * Z, q.dZ * X));
    };
    r += xz(f, g) + s * xz(g, f);
    // X/Z against V/W
    auto mv = [&](const CMat& M, const CMat& pm, const GradientBundle& q, int a) {
        cplx v1 = (m.V[a] * M * pm * q.dV[a]).value();
        cplx v2 = (m.V[a] * pm * M * q.dV[a]).value();
        cplx w1 = (q.dW[a] * pm * M * m.W[a]).value();
        cplx w2 = (q.dW[a] * M * pm * m.W[a]).value();
        return 0.5 * (v1 + s * v2 + w1 + s * w2);
    };
    for (int a = 0; a < d; ++a) {
        r += mv(X, f.dX, g, a) + s * mv(X, g.dX, f, a);
        r += mv(Z, f.dZ, g, a) + s * mv(Z, g.dZ, f, a);
    }
    // VV, WW
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            const int o = osgn(b, a);
            if (o == 0) continue;
            cplx vv = (m.V[b] * f.dV[a]).value() * (m.V[a] * g.dV[b]).value() +
                      (m.V[a] * f.dV[a]).value() * (m.V[b] * g.dV[b]).value();
            cplx ww = (f.dW[a] * m.W[a]).value() * (g.dW[b] * m.W[b]).value() +
                      (f.dW[a] * m.W[b]).value() * (g.dW[b] * m.W[a]).value();
            r += 0.5 * static_cast<double>(o) * (vv + ww);
        }
    // VW for both orders
    auto vw = [&](const GradientBundle& p, const GradientBundle& q) {
        cplx acc = 0.0;
        for (int a = 0; a < d; ++a) {
            const cplx vfa = (m.V[a] * p.dV[a]).value();
            const cplx qa = (q.dW[a] * p.dV[a]).value();
            acc += qa + 0.5 * (q.dW[a] * m.W[a]).value() * vfa + 0.5 * qa * (m.V[a] * m.W[a]).value();
            for (int b = 0; b < d; ++b) {
                const int o = osgn(a, b);
                if (o == 0) continue;
                acc += 0.5 * static_cast<double>(o) *
                       ((q.dW[b] * p.dV[a]).value() * (m.V[a] * m.W[b]).value() +
                        (q.dW[b] * m.W[b]).value() * vfa);
            }
        }
        return acc;
    };
    r += vw(f, g) + s * vw(g, f);
    return r;
}

}  // namespace

GradientBundle abs_bundle(const GradientBundle& g) {
    GradientBundle r = g;
    r.dX = g.dX.cwiseAbs().cast<cplx>();
    r.dZ = g.dZ.cwiseAbs().cast<cplx>();
    for (size_t a = 0; a < g.dV.size(); ++a) {
        r.dV[a] = g.dV[a].cwiseAbs().cast<cplx>();
        r.dW[a] = g.dW[a].cwiseAbs().cast<cplx>();
    }
    return r;
}

AmbientPoint abs_point(const AmbientPoint& m) {
    AmbientPoint r = m;
    r.X = m.X.cwiseAbs().cast<cplx>();
    r.Z = m.Z.cwiseAbs().cast<cplx>();
    for (int a = 0; a < m.d(); ++a) {
        r.V[a] = m.V[a].cwiseAbs().cast<cplx>();
        r.W[a] = m.W[a].cwiseAbs().cast<cplx>();
    }
    return r;
}

BracketValue ambient_bracket(const GradientBundle& f, const GradientBundle& g, const AmbientPoint& m) {
    BracketValue out;
    out.value = contract(f, g, m, false);
    out.scale = std::abs(contract(abs_bundle(f), abs_bundle(g), abs_point(m), true));
    return out;
}

BracketValue ambient_bracket(const Observable& f, const Observable& g, const AmbientPoint& m) {
    EvalContext ctx(m);
    return ambient_bracket(grad(f, ctx), grad(g, ctx), m);
}

cplx ambient_jacobi(const GenId& u, const GenId& v, const GenId& w, const AmbientPoint& m) {
    AmbientJets J = ambient_jets(m);
    AmbientNumeric num(m);
    const int n = m.n(), d = m.d();
    const std::vector<GenId> ids = generator_ids(n, d);
    auto outer = [&](const GenId& a, const GenId& b, const GenId& c) {
        Jet inner = tables::ambient_pair(J, b, c);
        cplx s = 0.0;
        if (inner.g.size() == 0) return s;
        for (const GenId& e : ids) {
            const cplx de = inner.g(generator_index(e, n, d));
            if (de != 0.0) s += tables::ambient_pair(num, a, e) * de;
        }
        return s;
    };
    return outer(u, v, w) + outer(v, w, u) + outer(w, u, v);
}

cplx local_pair_bracket(const LocalId& u, const LocalId& v, const LocalPoint& p, const ModelParams& params) {
    LocalNumeric data(p, params.q);
    return tables::local_pair(data, u, v);
}

std::vector<LocalId> free_ids(int n, int d) {
    FreeLayout L{n, d};
    std::vector<LocalId> ids(L.dim());
    for (int i = 0; i < n; ++i) {
        ids[L.x(i)] = LocalId::x(i);
        for (int al = 0; al + 1 < d; ++al) ids[L.a(i, al)] = LocalId::a(i, al);
        for (int al = 0; al < d; ++al) ids[L.b(i, al)] = LocalId::b(i, al);
    }
    return ids;
}

CMat local_poisson_matrix(const LocalPoint& p, const ModelParams& params) {
    LocalNumeric data(p, params.q);
    const std::vector<LocalId> ids = free_ids(p.n(), p.d());
    const int N = static_cast<int>(ids.size());
    CMat P(N, N);
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) P(r, c) = tables::local_pair(data, ids[r], ids[c]);
    return P;
}

LocalFunction coordinate_function(const LocalId& u, const LocalPoint& p) {
    FreeLayout L{p.n(), p.d()};
    LocalFunction f;
    f.grad = CVec::Zero(L.dim());
    switch (u.kind) {
        case Coord::X:
            f.value = p.x(u.i);
            f.grad(L.x(u.i)) = 1.0;
            break;
        case Coord::A:
            f.value = p.a(u.i, u.alpha);
            if (u.alpha + 1 < p.d()) {
                f.grad(L.a(u.i, u.alpha)) = 1.0;
            } else {
                for (int al = 0; al + 1 < p.d(); ++al) f.grad(L.a(u.i, al)) = -1.0;
            }
            break;
        case Coord::B:
            f.value = p.b(u.i, u.alpha);
            f.grad(L.b(u.i, u.alpha)) = 1.0;
            break;
    }
    return f;
}

namespace {

// Adds c * grad(f_ij) to out.
void add_f_grad(int i, int j, cplx c, const LocalPoint& p, CVec& out) {
    FreeLayout L{p.n(), p.d()};
    const int d = p.d();
    for (int al = 0; al + 1 < d; ++al) out(L.a(i, al)) += c * (p.b(j, al) - p.b(j, d - 1));
    for (int al = 0; al < d; ++al) out(L.b(j, al)) += c * p.a(i, al);
}

}  // namespace

LocalFunction f_function(int i, int j, const LocalPoint& p) {
    LocalFunction f;
    f.value = p.f(i, j);
    f.grad = CVec::Zero(2 * p.n() * p.d());
    add_f_grad(i, j, 1.0, p, f.grad);
    return f;
}

LocalFunction lax_function(int i, int j, const LocalPoint& p, cplx q) {
    FreeLayout L{p.n(), p.d()};
    const cplx fij = p.f(i, j);
    const cplx den = p.x(i) - q * p.x(j);
    LocalFunction f;
    f.value = 2.0 * p.x(i) * fij / den;
    f.grad = CVec::Zero(L.dim());
    f.grad(L.x(i)) += 2.0 * fij / den - 2.0 * p.x(i) * fij / (den * den);
    f.grad(L.x(j)) += 2.0 * p.x(i) * fij * q / (den * den);
    add_f_grad(i, j, 2.0 * p.x(i) / den, p, f.grad);
    return f;
}

LocalFunction pullback(const Observable& f, const LiftJacobian& jac) {
    EvalContext ctx(jac.base);
    LocalFunction out;
    out.value = eval(f, ctx);
    GradientBundle g = grad(f, ctx);
    out.grad.resize(static_cast<int>(jac.tangents.size()));
    for (size_t c = 0; c < jac.tangents.size(); ++c) out.grad(static_cast<int>(c)) = pair(g, jac.tangents[c]);
    return out;
}

BracketValue local_bracket(const LocalFunction& f, const LocalFunction& g, const CMat& poisson) {
    BracketValue out;
    out.value = (f.grad.transpose() * poisson * g.grad).value();
    out.scale = (f.grad.cwiseAbs().transpose() * poisson.cwiseAbs() * g.grad.cwiseAbs()).value();
    return out;
}

cplx ff_bracket(int i, int j, int k, int l, const LocalPoint& p, const ModelParams& params) {
    const cplx q = params.q;
    auto x = [&](int r) { return p.x(r); };
    auto f = [&](int r, int s) { return p.f(r, s); };
    auto c = [&](int r, int s) { return r == s ? cplx(0.0) : (x(r) + x(s)) / (x(r) - x(s)); };
    auto e = [&](int r, int s) { return (x(r) + q * x(s)) / (x(r) - q * x(s)); };
    cplx v = 0.5 * f(i, j) * f(k, l) * (c(i, k) + c(j, l) + c(k, j) + c(l, i));
    v += 0.5 * f(i, l) * f(k, j) * (c(i, k) + c(j, l) + e(k, j) - e(i, l));
    v += 0.5 * f(i, j) * f(i, l) * (c(k, i) + e(i, l));
    v += 0.5 * f(i, j) * f(j, l) * (c(j, k) - e(j, l));
    v += 0.5 * f(k, j) * f(k, l) * (c(k, i) - e(k, j));
    v += 0.5 * f(l, j) * f(k, l) * (c(i, l) + e(l, j));
    return v;
}

namespace {

double row_abs_dot(const CMat& P, int row, const CVec& g) {
    return (P.row(row).cwiseAbs() * g.cwiseAbs()).value();
}

}  // namespace

cplx jacobi_residual(const LocalId& u, const LocalId& v, const LocalId& w, const LocalPoint& p,
                     const ModelParams& params) {
    LocalJets J = local_jets(p, params.q);
    LocalNumeric num(p, params.q);
    const std::vector<LocalId> ids = free_ids(p.n(), p.d());
    auto outer = [&](const LocalId& a, const LocalId& b, const LocalId& c) {
        Jet inner = tables::local_pair(J, b, c);
        cplx s = 0.0;
        if (inner.g.size() == 0) return s;
        for (size_t e = 0; e < ids.size(); ++e) s += tables::local_pair(num, a, ids[e]) * inner.g(static_cast<int>(e));
        return s;
    };
    return outer(u, v, w) + outer(v, w, u) + outer(w, u, v);
}

JacobiSweep jacobi_sweep(const LocalPoint& p, const ModelParams& params) {
    LocalJets J = local_jets(p, params.q);
    const std::vector<LocalId> ids = free_ids(p.n(), p.d());
    const int N = static_cast<int>(ids.size());
    CMat P = local_poisson_matrix(p, params);
    std::vector<CVec> inner(N * N);
    for (int b = 0; b < N; ++b)
        for (int c = b + 1; c < N; ++c) {
            Jet jt = tables::local_pair(J, ids[b], ids[c]);
            CVec g = jt.g.size() ? jt.g : CVec::Zero(N);
            inner[b * N + c] = g;
            inner[c * N + b] = -g;
        }
    JacobiSweep sw;
    for (int a = 0; a < N; ++a)
        for (int b = a + 1; b < N; ++b)
            for (int c = b + 1; c < N; ++c) {
                const CVec& bc = inner[b * N + c];
                const CVec& ca = inner[c * N + a];
                const CVec& ab = inner[a * N + b];
                cplx r = (P.row(a) * bc).value() + (P.row(b) * ca).value() + (P.row(c) * ab).value();
                double scale = row_abs_dot(P, a, bc) + row_abs_dot(P, b, ca) + row_abs_dot(P, c, ab);
                Residual res = make_residual(std::abs(r), scale);
                sw.max_abs = std::max(sw.max_abs, res.abs);
                sw.max_rel = std::max(sw.max_rel, res.rel);
                ++sw.triples;
            }
    return sw;
}

Residual pullback_residual(const Observable& f, const Observable& g, const LocalPoint& p,
                           const ModelParams& params) {
    LiftJacobian jac = lift_jacobian(p, params);
    CMat P = local_poisson_matrix(p, params);
    BracketValue loc = local_bracket(pullback(f, jac), pullback(g, jac), P);
    BracketValue amb = ambient_bracket(f, g, jac.base);
    return make_residual(std::abs(loc.value - amb.value), std::max(loc.scale, amb.scale));
}

void SweepResult::add(const Residual& r, const std::string& label) {
    ++count;
    max_abs = std::max(max_abs, r.abs);
    if (count == 1 || r.rel > max_rel) {
        max_rel = r.rel;
        worst = label;
    }
}

SweepResult pullback_sweep(const std::vector<Observable>& fs, const std::vector<std::string>& labels,
                           const LocalPoint& p, const ModelParams& params) {
    LiftJacobian jac = lift_jacobian(p, params);
    CMat P = local_poisson_matrix(p, params);
    EvalContext ctx(jac.base);
    std::vector<LocalFunction> loc;
    std::vector<GradientBundle> amb;
    for (const Observable& f : fs) {
        loc.push_back(pullback(f, jac));
        amb.push_back(grad(f, ctx));
    }
    SweepResult out;
    for (size_t i = 0; i < fs.size(); ++i)
        for (size_t j = i + 1; j < fs.size(); ++j) {
            BracketValue l = local_bracket(loc[i], loc[j], P);
            BracketValue a = ambient_bracket(amb[i], amb[j], jac.base);
            out.add(make_residual(std::abs(l.value - a.value), std::max(l.scale, a.scale)),
                    "{" + labels[i] + ", " + labels[j] + "}");
        }
    return out;
}

RMatrixTriple rmatrices(const LocalPoint& p) {
    const int n = p.n();
    const int N = n * n;
    RMatrixTriple t{CMat::Zero(N, N), CMat::Zero(N, N), CMat::Zero(N, N)};
    // coef * E_ab (x) E_cd lands at ((a,c),(b,d))
    auto add = [n](CMat& M, int a, int b, int c, int dd, cplx coef) { M(a * n + c, b * n + dd) += coef; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            add(t.r, i, j, j, i, 1.0);
            add(t.rhat, i, j, j, i, -1.0);
            if (i == j) continue;
            const cplx c = (p.x(i) + p.x(j)) / (p.x(i) - p.x(j));
            const cplx e = 2.0 * p.x(i) / (p.x(i) - p.x(j));
            add(t.r, i, i, j, j, c);
            add(t.r, i, j, j, i, c);
            add(t.r, i, j, j, j, -e);
            add(t.r, j, j, i, j, e);
            add(t.rbar, i, i, j, j, c);
            add(t.rbar, i, j, j, j, -e);
            add(t.rhat, i, i, j, j, c);
            add(t.rhat, i, j, j, i, -c);
        }
    for (int i = 0; i < n; ++i) add(t.rbar, i, i, i, i, -1.0);
    return t;
}

CMat swap_factors(const CMat& t, int n) {
    CMat s(t.rows(), t.cols());
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c)
            for (int b = 0; b < n; ++b)
                for (int d = 0; d < n; ++d) s(c * n + a, d * n + b) = t(a * n + c, b * n + d);
    return s;
}

CMat lax_matrix_local(const LocalPoint& p, cplx q) {
    const int n = p.n();
    CMat L(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) L(i, j) = 2.0 * p.x(i) * p.f(i, j) / (p.x(i) - q * p.x(j));
    return L;
}

double rmatrix_residual(const LocalPoint& p, const ModelParams& params, bool transposed) {
    check_spectrum(p, params.q);
    const int n = p.n();
    const int N = n * n;
    CMat P = local_poisson_matrix(p, params);
    CMat G(2 * n * p.d(), N);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G.col(i * n + j) = lax_function(i, j, p, params.q).grad;
    CMat LL = G.transpose() * P * G;  // {L_ij, L_kl} at (ij, kl)
    CMat L = lax_matrix_local(p, params.q);
    CMat id = CMat::Identity(n, n);
    CMat L1 = CMat::Zero(N, N), L2 = CMat::Zero(N, N), br(N, N);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    const int row = i * n + k, col = j * n + l;
                    L1(row, col) = transposed ? id(i, j) * L(k, l) : L(i, j) * id(k, l);
                    L2(row, col) = transposed ? L(i, j) * id(k, l) : id(i, j) * L(k, l);
                    br(row, col) = transposed ? LL(k * n + l, i * n + j) : LL(i * n + j, k * n + l);
                }
    RMatrixTriple t = rmatrices(p);
    CMat rbar21 = swap_factors(t.rbar, n);
    CMat rhs = 0.5 * (t.r * L1 * L2 + L1 * L2 * t.rhat + L1 * rbar21 * L2 - L2 * t.rbar * L1);
    return (br - rhs).cwiseAbs().maxCoeff();
}

double z12f_residual(const LocalPoint& p, const ModelParams& params) {
    const cplx q = params.q;
    CMat z = slice_z(p, q);
    double worst = 0.0;
    for (int i = 0; i < p.n(); ++i)
        for (int j = 0; j < p.n(); ++j) {
            const cplx f = p.f(i, j);
            const cplx rhs = 0.5 * f * (p.x(i) + q * p.x(j)) / (p.x(i) - q * p.x(j));
            worst = std::max(worst, std::abs(z(i, j) + 0.5 * f - rhs));
        }
    return worst;
}

}  // namespace spinrs
