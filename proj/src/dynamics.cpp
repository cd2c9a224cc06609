#include "spinrs/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <regex>

#include "spinrs/linalg.hpp"

namespace spinrs {

Tangent Tangent::zeros(int n, int d) { return Tangent{CVec::Zero(n), CMat::Zero(n, d), CMat::Zero(n, d)}; }

double max_abs_diff(const Tangent& u, const Tangent& v) {
    double r = (u.dx - v.dx).cwiseAbs().maxCoeff();
    r = std::max(r, (u.da - v.da).cwiseAbs().maxCoeff());
    return std::max(r, (u.db - v.db).cwiseAbs().maxCoeff());
}

cplx potential(const LocalPoint& p, int i, int k, cplx q) {
    const cplx xi = p.x(i), xk = p.x(k);
    return (xi + xk) / (xi - xk) - (xi + q * xk) / (xi - q * xk);
}

namespace {

// Shared spin sums; ẋ uses coefficient 2c and the spin parts c.
Tangent spin_rhs(const LocalPoint& p, cplx q, cplx c) {
    check_spectrum(p, q);
    const int n = p.n(), d = p.d();
    Tangent t = Tangent::zeros(n, d);
    CMat f = p.fmat();
    CMat vf(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) vf(i, k) = i == k ? cplx(0.0) : potential(p, i, k, q) * f(i, k);
    for (int i = 0; i < n; ++i) {
        t.dx(i) = 2.0 * c * f(i, i) * p.x(i);
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            for (int al = 0; al < d; ++al) {
                t.da(i, al) += c * vf(i, k) * (p.a(k, al) - p.a(i, al));
                t.db(i, al) += c * (vf(i, k) * p.b(i, al) - vf(k, i) * p.b(k, al));
            }
        }
    }
    return t;
}

}  // namespace

Tangent rs_rhs(const LocalPoint& p, const ModelParams& params) { return spin_rhs(p, params.q, 1.0); }

Tangent modified_rhs(const LocalPoint& p, const ModelParams& params) {
    const cplx q = params.q;
    Tangent t = spin_rhs(p, q, q / (2.0 * (1.0 - q)));
    for (int j = 0; j < p.n(); ++j)
        for (int e = 0; e < p.d(); ++e) t.db(j, e) -= p.b(j, e) / p.x(j);
    return t;
}

cplx rs_energy(const LocalPoint& p) {
    cplx s = 0.0;
    for (int i = 0; i < p.n(); ++i) s += 2.0 * p.f(i, i);
    return s;
}

cplx modified_energy(const LocalPoint& p, cplx q) {
    cplx s = 0.0;
    for (int i = 0; i < p.n(); ++i) s += q * p.f(i, i) / (1.0 - q) - 1.0 / p.x(i);
    return s;
}

CMat lax_matrix(const LocalPoint& p, const ModelParams& params) {
    check_spectrum(p, params.q);
    return lax_matrix_local(p, params.q);
}

std::pair<CMat, CMat> s_matrix_pair(const AmbientPoint& m, const ModelParams& params) {
    SpinMatrices sp = spin_matrices(m);
    CMat s = m.Z;
    for (int al = 0; al < m.d(); ++al) s += sp.A[al] * sp.B[al];
    CMat s2 = m.X * m.Z * guarded_inverse(m.X, "X") / params.q;
    return {s, s2};
}

CMat spectral_lax(const LocalPoint& p, cplx eta, const ModelParams& params) {
    AmbientPoint m = lift(p, params);
    SpinMatrices sp = spin_matrices(m);
    CMat ab = CMat::Zero(p.n(), p.n());
    for (int al = 0; al < m.d(); ++al) ab += sp.A[al] * sp.B[al];
    return (1.0 + eta) * m.Z + eta * ab;
}

FlowSpec parse_flow_spec(const std::string& s) {
    FlowSpec spec;
    std::smatch mt;
    static const std::regex power(R"((trZ|trY):k=(\d+))");
    static const std::regex spow(R"(trS:(?:alpha|level)=(\d+),k=(\d+))");
    if (std::regex_match(s, mt, power)) {
        spec.kind = mt[1] == "trZ" ? HamKind::TrZPow : HamKind::TrYPow;
        spec.k = std::stoi(mt[2]);
    } else if (std::regex_match(s, mt, spow)) {
        spec.kind = HamKind::TrSPow;
        spec.level = std::stoi(mt[1]);
        spec.k = std::stoi(mt[2]);
    } else if (s == "rs") {
        spec.kind = HamKind::SpinRS;
    } else if (s == "modified") {
        spec.kind = HamKind::ModifiedRS;
    } else {
        throw InvalidParams("unknown Hamiltonian '" + s + "'");
    }
    if (spec.k < 1 || spec.level < 1) throw InvalidParams("Hamiltonian indices must be positive");
    return spec;
}

std::string describe(const FlowSpec& spec) {
    switch (spec.kind) {
        case HamKind::TrZPow: return "trZ:k=" + std::to_string(spec.k);
        case HamKind::TrYPow: return "trY:k=" + std::to_string(spec.k);
        case HamKind::TrSPow: return "trS:alpha=" + std::to_string(spec.level) + ",k=" + std::to_string(spec.k);
        case HamKind::SpinRS: return "rs";
        case HamKind::ModifiedRS: return "modified";
    }
    return "";
}

Observable hamiltonian_observable(const FlowSpec& spec, int d, cplx q) {
    const double inv_k = 1.0 / spec.k;
    switch (spec.kind) {
        case HamKind::TrZPow: return obs::tr_z(spec.k) * inv_k;
        case HamKind::TrYPow: return obs::tr_y(spec.k) * inv_k;
        case HamKind::TrSPow:
            if (spec.level > d) throw InvalidParams("S level exceeds d");
            return obs::tr_s(spec.level, spec.k) * inv_k;
        case HamKind::SpinRS: return obs::tr_z(1) * (2.0 * (1.0 / q - 1.0));
        case HamKind::ModifiedRS: return obs::tr_y(1);
    }
    return Observable{};
}

namespace {

CMat mpow(const CMat& a, int k) {
    CMat r = CMat::Identity(a.rows(), a.cols());
    for (int i = 0; i < k; ++i) r = r * a;
    return r;
}

AmbientPoint zflow(const AmbientPoint& m, int k, cplx t) {
    AmbientPoint r = m;
    r.X = m.X * expm(t * mpow(m.Z, k));
    return r;
}

AmbientPoint yflow(const AmbientPoint& m, int k, cplx t) {
    AmbientPoint r = m;
    CMat y = m.Z - guarded_inverse(m.X, "X");
    CMat yk = mpow(y, k);
    r.X = m.X * expm(t * yk) + t * mpow(y, k - 1) * phi1(t * yk);
    r.Z = y + guarded_inverse(r.X, "X(t)");
    return r;
}

AmbientPoint sflow(const AmbientPoint& m, int level, int k, cplx t) {
    if (level < 1 || level > m.d()) throw InvalidParams("S level out of range");
    CMat e = mpow(partial_products(m)[level], k);
    CMat g = expm(t * e), gi = expm(-t * e);
    AmbientPoint r = m;
    r.X = m.X * g;
    r.Z = gi * m.Z * g;
    for (int b = 0; b < level; ++b) {
        r.V[b] = m.V[b] * g;
        r.W[b] = gi * m.W[b];
    }
    return r;
}

}  // namespace

AmbientPoint exact_flow(const AmbientPoint& m, const FlowSpec& spec, const ModelParams& params) {
    switch (spec.kind) {
        case HamKind::TrZPow: return zflow(m, spec.k, spec.time);
        case HamKind::TrYPow: return yflow(m, spec.k, spec.time);
        case HamKind::TrSPow: return sflow(m, spec.level, spec.k, spec.time);
        case HamKind::SpinRS: return zflow(m, 1, 2.0 * (1.0 / params.q - 1.0) * spec.time);
        case HamKind::ModifiedRS: return yflow(m, 1, spec.time);
    }
    return m;
}

CMat flow_exponent(const AmbientPoint& m, const FlowSpec& spec, const ModelParams& params) {
    auto mpow = [](const CMat& a, int k) {
        CMat r = CMat::Identity(a.rows(), a.cols());
        for (int i = 0; i < k; ++i) r = r * a;
        return r;
    };
    switch (spec.kind) {
        case HamKind::TrZPow: return mpow(m.Z, spec.k);
        case HamKind::TrYPow: return mpow(m.Z - guarded_inverse(m.X, "X"), spec.k);
        case HamKind::TrSPow: return mpow(partial_products(m)[spec.level], spec.k);
        case HamKind::SpinRS: return 2.0 * (1.0 / params.q - 1.0) * m.Z;
        case HamKind::ModifiedRS: return m.Z - guarded_inverse(m.X, "X");
    }
    return m.Z;
}

double conditioned_time_limit(const AmbientPoint& m, const FlowSpec& spec, const ModelParams& params,
                              double budget) {
    const CVec ev = Eigen::ComplexEigenSolver<CMat>(flow_exponent(m, spec, params), false).eigenvalues();
    double spread = 0.0;
    for (int i = 0; i < ev.size(); ++i)
        for (int j = 0; j < ev.size(); ++j) spread = std::max(spread, std::abs(ev(i) - ev(j)));
    return spread > 0.0 ? budget / spread : std::numeric_limits<double>::infinity();
}

Tangent hamiltonian_vector_field(const LocalPoint& p, const LocalFunction& h, const ModelParams& params) {
    const int n = p.n(), d = p.d();
    FreeLayout L{n, d};
    CVec v = local_poisson_matrix(p, params) * h.grad;
    Tangent t = Tangent::zeros(n, d);
    for (int i = 0; i < n; ++i) {
        t.dx(i) = v(L.x(i));
        cplx rest = 0.0;
        for (int al = 0; al + 1 < d; ++al) {
            t.da(i, al) = v(L.a(i, al));
            rest += t.da(i, al);
        }
        t.da(i, d - 1) = -rest;
        for (int al = 0; al < d; ++al) t.db(i, al) = v(L.b(i, al));
    }
    return t;
}

Tangent hamiltonian_vector_field(const LocalPoint& p, const Observable& h, const ModelParams& params) {
    return hamiltonian_vector_field(p, pullback(h, lift_jacobian(p, params)), params);
}

namespace {

CVec pack(const LocalPoint& p) {
    const int n = p.n(), d = p.d();
    CVec y(n + 2 * n * d);
    y.head(n) = p.x;
    for (int i = 0; i < n; ++i)
        for (int al = 0; al < d; ++al) {
            y(n + i * d + al) = p.a(i, al);
            y(n + n * d + i * d + al) = p.b(i, al);
        }
    return y;
}

LocalPoint unpack(const CVec& y, int n, int d) {
    LocalPoint p{y.head(n), CMat(n, d), CMat(n, d)};
    for (int i = 0; i < n; ++i)
        for (int al = 0; al < d; ++al) {
            p.a(i, al) = y(n + i * d + al);
            p.b(i, al) = y(n + n * d + i * d + al);
        }
    return p;
}

CVec pack(const Tangent& t) { return pack(LocalPoint{t.dx, t.da, t.db}); }

// Distance to the nearest collision x_i = x_j, x_i = q x_j or x_i = 0.
double collision_margin(const CVec& x, cplx q) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < x.size(); ++i) {
        m = std::min(m, std::abs(x(i)));
        for (int j = 0; j < x.size(); ++j) {
            if (i == j) continue;
            m = std::min(m, std::abs(x(i) - x(j)));
            m = std::min(m, std::abs(x(i) - q * x(j)));
        }
    }
    return m;
}

constexpr double kRegularityGuard = 1e-8;

}  // namespace

LocalPoint rk_integrate(RhsKind kind, const LocalPoint& p, cplx t, double rel_tol, double abs_tol,
                        const ModelParams& params, RkStats* stats) {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidParams("integrator tolerances must be positive");
    if (t == 0.0) return p;
    const int n = p.n(), d = p.d();
    const cplx q = params.q;
    auto rhs = [&](const CVec& y) -> CVec {
        LocalPoint s = unpack(y, n, d);
        const double scale = std::max(1.0, s.x.cwiseAbs().maxCoeff());
        if (collision_margin(s.x, q) < kRegularityGuard * scale)
            throw RegularityLost("trajectory reached a collision x_i = x_j or x_i = q x_j");
        Tangent tg = kind == RhsKind::SpinRS ? rs_rhs(s, params) : modified_rhs(s, params);
        CVec v = t * pack(tg);
        if (!v.allFinite()) throw RegularityLost("vector field is not finite");
        return v;
    };

    // Dormand-Prince 5(4) tableau.
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2; (void)c3; (void)c4; (void)c5;

    CVec y = pack(p);
    CVec k1 = rhs(y);
    double s = 0.0;
    double h = 0.01;
    {
        const double yn = y.cwiseAbs().maxCoeff(), fn = k1.cwiseAbs().maxCoeff();
        if (fn > 0.0) h = std::min(0.1, 0.01 * std::max(yn, 1e-6) / fn);
        h = std::max(h, 1e-6);
    }
    RkStats st;
    while (s < 1.0) {
        if (s + h > 1.0) h = 1.0 - s;
        if (h < 1e-14) throw StepUnderflow("adaptive step collapsed below 1e-14");
        CVec k2, k3, k4, k5, k6, k7, y5;
        try {
            k2 = rhs(y + h * (a21 * k1));
            k3 = rhs(y + h * (a31 * k1 + a32 * k2));
            k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            k7 = rhs(y5);
        } catch (const RegularityLost&) {
            // A trial stage left the regular set; retry with a smaller step.
            h *= 0.25;
            ++st.rejected;
            continue;
        }
        CVec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double en = 0.0;
        for (int i = 0; i < y.size(); ++i) {
            const double sc = abs_tol + rel_tol * std::max(std::abs(y(i)), std::abs(y5(i)));
            en = std::max(en, std::abs(err(i)) / sc);
        }
        if (en <= 1.0) {
            s += h;
            LocalPoint acc = LocalPoint::make(unpack(y5, n, d).x, unpack(y5, n, d).a, unpack(y5, n, d).b);
            y = pack(acc);
            k1 = rhs(y);
            ++st.accepted;
        } else {
            ++st.rejected;
        }
        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h *= fac;
    }
    if (stats) *stats = st;
    return unpack(y, n, d);
}

double aligned_distance(const LocalPoint& p, const LocalPoint& r) {
    const int n = p.n();
    if (r.n() != n || r.d() != p.d()) throw InvalidParams("points have different shapes");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double dist = 0.0;
        for (int i = 0; i < n && dist < best; ++i) {
            const int j = perm[i];
            dist = std::max(dist, std::abs(p.x(i) - r.x(j)));
            dist = std::max(dist, (p.a.row(i) - r.a.row(j)).cwiseAbs().maxCoeff());
            dist = std::max(dist, (p.b.row(i) - r.b.row(j)).cwiseAbs().maxCoeff());
        }
        best = std::min(best, dist);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double flow_match_residual(const LocalPoint& p, cplx t, const ModelParams& params, double rk_tol) {
    FlowSpec spec;
    spec.kind = HamKind::SpinRS;
    spec.time = t;
    LocalPoint exact = project(exact_flow(lift(p, params), spec, params), params).first;
    LocalPoint num = rk_integrate(RhsKind::SpinRS, p, t, rk_tol, rk_tol, params);
    return aligned_distance(exact, num);
}

Residual flow_generator_residual(const AmbientPoint& m, const FlowSpec& spec, const Observable& f,
                                 const ModelParams& params, double step) {
    auto central = [&](double h) {
        FlowSpec fwd = spec, bwd = spec;
        fwd.time = h;
        bwd.time = -h;
        return (eval(f, exact_flow(m, fwd, params)) - eval(f, exact_flow(m, bwd, params))) / (2.0 * h);
    };
    // One Richardson step removes the h^2 term, which grows like |E|^3.
    const cplx fd = (4.0 * central(0.5 * step) - central(step)) / 3.0;
    const Observable h = hamiltonian_observable(spec, m.d(), params.q);
    BracketValue br = ambient_bracket(f, h, m);
    return make_residual(std::abs(fd - br.value), std::max(br.scale, std::abs(fd)));
}

}  // namespace spinrs
