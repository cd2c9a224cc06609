#include "spinrs/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "spinrs/linalg.hpp"

namespace spinrs {

namespace {

constexpr double kSampleCondition = 1e6;
constexpr double kMinRowSum = 0.3;
constexpr int kMaxSampleAttempts = 2000;

bool lex_less(cplx u, cplx v) {
    if (u.real() != v.real()) return u.real() < v.real();
    return u.imag() < v.imag();
}

std::vector<int> lex_order(const CVec& x) {
    std::vector<int> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return lex_less(x(i), x(j)); });
    return idx;
}

}  // namespace

LocalPoint LocalPoint::make(CVec x, CMat a, CMat b) {
    const int n = static_cast<int>(x.size());
    const int d = static_cast<int>(a.cols());
    if (a.rows() != n || b.rows() != n || b.cols() != d || d < 1)
        throw InvalidParams("LocalPoint shapes are inconsistent");
    for (int i = 0; i < n; ++i) {
        cplx s = a.row(i).sum();
        if (std::abs(s) == 0.0) throw GaugeFixFailure("spin row " + std::to_string(i) + " sums to zero");
        a.row(i) /= s;
        cplx rest = 0.0;
        for (int al = 0; al + 1 < d; ++al) rest += a(i, al);
        a(i, d - 1) = 1.0 - rest;
    }
    return LocalPoint{std::move(x), std::move(a), std::move(b)};
}

AmbientPoint AmbientPoint::zeros(int n, int d) {
    AmbientPoint m;
    m.X = CMat::Zero(n, n);
    m.Z = CMat::Zero(n, n);
    m.V.assign(d, CRow::Zero(n));
    m.W.assign(d, CVec::Zero(n));
    return m;
}

CMat slice_z(const LocalPoint& p, cplx q) {
    const int n = p.n();
    CMat f = p.fmat();
    CMat z(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) z(i, j) = q * p.x(j) * f(i, j) / (p.x(i) - q * p.x(j));
    return z;
}

void check_spectrum(const LocalPoint& p, cplx q) {
    const int n = p.n();
    for (int i = 0; i < n; ++i) {
        double si = std::max(1.0, std::abs(p.x(i)));
        if (std::abs(p.x(i)) < 1e-12) throw DegenerateSpectrum("x_" + std::to_string(i) + " vanishes");
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double s = std::max(si, std::abs(p.x(j)));
            if (std::abs(p.x(i) - p.x(j)) < 1e-12 * s)
                throw DegenerateSpectrum("x_" + std::to_string(i) + " = x_" + std::to_string(j));
            if (std::abs(p.x(i) - q * p.x(j)) < 1e-12 * s)
                throw DegenerateSpectrum("x_" + std::to_string(i) + " = q x_" + std::to_string(j));
        }
    }
}

AmbientPoint lift(const LocalPoint& p, const ModelParams& params) {
    check_spectrum(p, params.q);
    const int n = p.n();
    const int d = p.d();
    AmbientPoint m;
    m.X = p.x.asDiagonal();
    m.Z = slice_z(p, params.q);
    m.V.resize(d);
    m.W.resize(d);
    CMat id = CMat::Identity(n, n);
    // V_b S_{b-1} = B_b, solved by LU with one refinement step so that
    // B_b is reproduced to rounding even when S_{b-1} is poorly conditioned.
    guarded_inverse(m.Z, "Z");
    CMat s = m.Z;
    for (int be = 0; be < d; ++be) {
        m.W[be] = p.a.col(be);
        const CRow target = p.b.col(be).transpose();
        Eigen::PartialPivLU<CMat> lu(s.transpose());
        CRow v = lu.solve(target.transpose()).transpose();
        v += lu.solve((target - v * s).transpose()).transpose();
        m.V[be] = v;
        if (be + 1 < d) {
            guarded_inverse(id + m.W[be] * m.V[be], "Id + W V");
            s += m.W[be] * target;
        }
    }
    // The last factor only enters the invertibility requirement on S_d.
    guarded_inverse(id + m.W[d - 1] * m.V[d - 1], "Id + W V");
    return m;
}

std::vector<CMat> partial_products(const AmbientPoint& m) {
    std::vector<CMat> s;
    s.reserve(m.d() + 1);
    s.push_back(m.Z);
    for (int al = 0; al < m.d(); ++al) s.push_back(s.back() + m.W[al] * (m.V[al] * s.back()));
    return s;
}

SpinMatrices spin_matrices(const AmbientPoint& m) {
    SpinMatrices sm;
    guarded_inverse(m.Z, "Z");
    CMat s = m.Z;
    for (int al = 0; al < m.d(); ++al) {
        sm.A.push_back(m.W[al]);
        CRow b = m.V[al] * s;
        sm.B.push_back(b);
        s += m.W[al] * b;
    }
    return sm;
}

double moment_residual(const AmbientPoint& m, const ModelParams& params) {
    CMat xinv = guarded_inverse(m.X, "X");
    guarded_inverse(m.Z, "Z");
    CMat r = m.X * m.Z * xinv / params.q - m.Z;
    SpinMatrices sm = spin_matrices(m);
    for (int al = 0; al < m.d(); ++al) r -= sm.A[al] * sm.B[al];
    return r.norm() / m.Z.norm();
}

AmbientPoint act(const CMat& g, const AmbientPoint& m) {
    CMat gi = guarded_inverse(g, "g");
    AmbientPoint r;
    r.X = g * m.X * gi;
    r.Z = g * m.Z * gi;
    for (int al = 0; al < m.d(); ++al) {
        r.V.push_back(m.V[al] * gi);
        r.W.push_back(g * m.W[al]);
    }
    return r;
}

double lift_condition(const AmbientPoint& m) {
    double c = 0.0;
    for (const CMat& s : partial_products(m)) c = std::max(c, condition_number(s));
    return c;
}

std::pair<LocalPoint, GaugeFrame> project(const AmbientPoint& m, const ModelParams& params) {
    const int n = m.n();
    const int d = m.d();
    Eigen::ComplexEigenSolver<CMat> es(m.X, true);
    if (es.info() != Eigen::Success) throw DegenerateSpectrum("eigen decomposition of X failed");
    CVec lam = es.eigenvalues();
    double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(lam(i) - lam(j)) < 1e-10 * scale)
                throw DegenerateSpectrum("X has a repeated eigenvalue");
    std::vector<int> perm = lex_order(lam);
    CMat p(n, n);
    CVec x(n);
    for (int c = 0; c < n; ++c) {
        p.col(c) = es.eigenvectors().col(perm[c]);
        x(c) = lam(perm[c]);
    }
    CMat g = guarded_inverse(p, "eigenvector matrix of X");
    CVec rowsum = CVec::Zero(n);
    for (int al = 0; al < d; ++al) rowsum += g * m.W[al];
    double wscale = 0.0;
    for (int al = 0; al < d; ++al) wscale = std::max(wscale, (g * m.W[al]).cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        if (std::abs(rowsum(i)) <= 1e-12 * std::max(1.0, wscale))
            throw GaugeFixFailure("spin row " + std::to_string(i) + " sums to zero after diagonalization");
        g.row(i) /= rowsum(i);
    }
    AmbientPoint gm = act(g, m);
    SpinMatrices sm = spin_matrices(gm);
    CMat a(n, d), b(n, d);
    for (int al = 0; al < d; ++al) {
        a.col(al) = sm.A[al];
        b.col(al) = sm.B[al].transpose();
    }
    (void)params;
    return {LocalPoint::make(x, a, b), GaugeFrame{g, perm}};
}

cplx complex_gaussian(std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    double re = nd(rng);
    double im = nd(rng);
    return cplx(re, im) / std::sqrt(2.0);
}

CMat random_group_element(int n, std::mt19937_64& rng) {
    CMat g = CMat::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) += 0.5 * complex_gaussian(rng);
    return g;
}

LocalPoint sample_regular(const ModelParams& params, std::mt19937_64& rng) {
    params.validate();
    const int n = params.n;
    const int d = params.d;
    const cplx q = params.q;
    std::uniform_real_distribution<double> r2(0.25, 4.0);
    std::uniform_real_distribution<double> th(0.0, 2.0 * std::numbers::pi);
    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
        CVec x(n);
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            x(i) = std::polar(std::sqrt(r2(rng)), th(rng));
            for (int j = 0; j < i; ++j) {
                if (std::abs(x(i) - x(j)) < 1e-2 || std::abs(x(i) - q * x(j)) < 1e-2 ||
                    std::abs(x(j) - q * x(i)) < 1e-2)
                    ok = false;
            }
        }
        CMat a(n, d), b(n, d);
        for (int i = 0; i < n; ++i)
            for (int al = 0; al < d; ++al) {
                a(i, al) = complex_gaussian(rng);
                b(i, al) = complex_gaussian(rng);
            }
        if (!ok) continue;
        if (d > 1) {
            for (int i = 0; i < n; ++i)
                if (std::abs(a.row(i).sum()) < kMinRowSum) ok = false;
        } else {
            a.setOnes();
        }
        if (!ok) continue;
        LocalPoint p = LocalPoint::make(x, a, b);
        try {
            AmbientPoint m = lift(p, params);
            if (lift_condition(m) > kSampleCondition) continue;
        } catch (const SpinError&) {
            continue;
        }
        return p;
    }
    throw SamplingExhausted("no regular point after " + std::to_string(kMaxSampleAttempts) + " draws");
}

LocalPoint sample_regular(const ModelParams& params) {
    std::mt19937_64 rng(params.seed);
    return sample_regular(params, rng);
}

std::vector<LocalPoint> sample_points(const ModelParams& params, int count) {
    std::mt19937_64 rng(params.seed);
    std::vector<LocalPoint> pts;
    pts.reserve(count);
    for (int k = 0; k < count; ++k) pts.push_back(sample_regular(params, rng));
    return pts;
}

LocalPoint canonical_order(const LocalPoint& p) {
    std::vector<int> idx = lex_order(p.x);
    LocalPoint r = p;
    for (int c = 0; c < p.n(); ++c) {
        r.x(c) = p.x(idx[c]);
        r.a.row(c) = p.a.row(idx[c]);
        r.b.row(c) = p.b.row(idx[c]);
    }
    return r;
}

double max_abs_diff(const LocalPoint& p, const LocalPoint& r) {
    double e = (p.x - r.x).cwiseAbs().maxCoeff();
    e = std::max(e, (p.a - r.a).cwiseAbs().maxCoeff());
    e = std::max(e, (p.b - r.b).cwiseAbs().maxCoeff());
    return e;
}

double max_abs_diff(const AmbientPoint& m, const AmbientPoint& r) {
    double e = (m.X - r.X).cwiseAbs().maxCoeff();
    e = std::max(e, (m.Z - r.Z).cwiseAbs().maxCoeff());
    for (int al = 0; al < m.d(); ++al) {
        e = std::max(e, (m.V[al] - r.V[al]).cwiseAbs().maxCoeff());
        e = std::max(e, (m.W[al] - r.W[al]).cwiseAbs().maxCoeff());
    }
    return e;
}

CVec free_vector(const LocalPoint& p) {
    FreeLayout L{p.n(), p.d()};
    CVec v(L.dim());
    for (int i = 0; i < p.n(); ++i) {
        v(L.x(i)) = p.x(i);
        for (int al = 0; al + 1 < p.d(); ++al) v(L.a(i, al)) = p.a(i, al);
        for (int al = 0; al < p.d(); ++al) v(L.b(i, al)) = p.b(i, al);
    }
    return v;
}

LocalPoint from_free_vector(const CVec& v, int n, int d) {
    FreeLayout L{n, d};
    LocalPoint p;
    p.x.resize(n);
    p.a.resize(n, d);
    p.b.resize(n, d);
    for (int i = 0; i < n; ++i) {
        p.x(i) = v(L.x(i));
        cplx rest = 0.0;
        for (int al = 0; al + 1 < d; ++al) {
            p.a(i, al) = v(L.a(i, al));
            rest += p.a(i, al);
        }
        p.a(i, d - 1) = 1.0 - rest;
        for (int al = 0; al < d; ++al) p.b(i, al) = v(L.b(i, al));
    }
    return p;
}

namespace {

struct LiftCache {
    AmbientPoint m;
    std::vector<CMat> sinv;  // S_0^-1 .. S_{d-1}^-1
};

LiftCache make_cache(const LocalPoint& p, const ModelParams& params) {
    LiftCache c;
    c.m = lift(p, params);
    const int n = p.n();
    CMat id = CMat::Identity(n, n);
    CMat chain = guarded_inverse(c.m.Z, "Z");
    for (int be = 0; be < p.d(); ++be) {
        c.sinv.push_back(chain);
        if (be + 1 < p.d()) chain = chain * guarded_inverse(id + c.m.W[be] * c.m.V[be], "Id + W V");
    }
    return c;
}

AmbientPoint tangent_from_cache(const LiftCache& c, const LocalPoint& p, cplx q, const CVec& dx,
                                const CMat& da, const CMat& db) {
    const int n = p.n();
    const int d = p.d();
    AmbientPoint t;
    t.X = dx.asDiagonal();
    CMat f = p.fmat();
    CMat df = da * p.b.transpose() + p.a * db.transpose();
    t.Z.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx den = p.x(i) - q * p.x(j);
            t.Z(i, j) = q * (dx(j) * f(i, j) + p.x(j) * df(i, j)) / den -
                        q * p.x(j) * f(i, j) * (dx(i) - q * dx(j)) / (den * den);
        }
    CMat ds = t.Z;
    t.V.resize(d);
    t.W.resize(d);
    for (int be = 0; be < d; ++be) {
        t.W[be] = da.col(be);
        CRow dB = db.col(be).transpose();
        t.V[be] = (dB - c.m.V[be] * ds) * c.sinv[be];
        ds += da.col(be) * p.b.col(be).transpose() + p.a.col(be) * dB;
    }
    return t;
}

}  // namespace

AmbientPoint lift_tangent(const LocalPoint& p, const ModelParams& params, const CVec& dx,
                          const CMat& da, const CMat& db) {
    LiftCache c = make_cache(p, params);
    return tangent_from_cache(c, p, params.q, dx, da, db);
}

LiftJacobian lift_jacobian(const LocalPoint& p, const ModelParams& params) {
    LiftCache c = make_cache(p, params);
    const int n = p.n();
    const int d = p.d();
    FreeLayout L{n, d};
    LiftJacobian J;
    J.base = c.m;
    J.tangents.resize(L.dim());
    for (int i = 0; i < n; ++i) {
        CVec dx = CVec::Zero(n);
        CMat da = CMat::Zero(n, d), db = CMat::Zero(n, d);
        dx(i) = 1.0;
        J.tangents[L.x(i)] = tangent_from_cache(c, p, params.q, dx, da, db);
        dx(i) = 0.0;
        for (int al = 0; al + 1 < d; ++al) {
            da(i, al) = 1.0;
            da(i, d - 1) = -1.0;
            J.tangents[L.a(i, al)] = tangent_from_cache(c, p, params.q, dx, da, db);
            da.setZero();
        }
        for (int al = 0; al < d; ++al) {
            db(i, al) = 1.0;
            J.tangents[L.b(i, al)] = tangent_from_cache(c, p, params.q, dx, da, db);
            db.setZero();
        }
    }
    return J;
}

}  // namespace spinrs
