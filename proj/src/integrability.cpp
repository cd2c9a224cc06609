#include "spinrs/integrability.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spinrs/linalg.hpp"

namespace spinrs {

namespace {

CMat mpow(const CMat& a, int k) {
    CMat r = CMat::Identity(a.rows(), a.cols());
    for (int i = 0; i < k; ++i) r = r * a;
    return r;
}

std::string idx(std::initializer_list<int> v) {
    std::string s;
    for (int x : v) {
        if (!s.empty()) s += ",";
        s += std::to_string(x);
    }
    return s;
}

}  // namespace

TValues::TValues(const AmbientPoint& m, int kmax) : d_(m.d()), kmax_(kmax), v_(d_ * d_ * (kmax + 1)) {
    for (int b = 0; b < d_; ++b) {
        CRow row = m.V[b];
        for (int k = 0; k <= kmax; ++k) {
            for (int a = 0; a < d_; ++a) v_[(a * d_ + b) * (kmax + 1) + k] = (row * m.W[a]).value();
            row = row * m.Z;
        }
    }
}

cplx TValues::operator()(int alpha, int beta, int k) const {
    if (k < 0 || k > kmax_) throw InvalidParams("t power out of the tabulated range");
    return v_[(alpha * d_ + beta) * (kmax_ + 1) + k];
}

IntegralTable integral_table(const AmbientPoint& m, int kmax) {
    if (kmax < 1) throw InvalidParams("kmax must be positive");
    IntegralTable tab;
    tab.kmax = kmax;
    const int d = m.d();
    EvalContext ctx(m);
    for (int k = 1; k <= kmax; ++k) tab.h[k] = eval(obs::tr_z(k), ctx);
    TValues t(m, kmax);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int k = 0; k <= kmax; ++k) tab.t[{a, b, k}] = t(a, b, k);
    const std::vector<CMat> s = partial_products(m);
    for (int level = 1; level <= d; ++level) {
        CMat pw = CMat::Identity(m.n(), m.n());
        for (int k = 1; k <= kmax; ++k) {
            pw = pw * s[level];
            tab.trs[{level, k}] = pw.trace();
            tab.gt[{level, k}] = pw.trace() - tab.h[k];
        }
    }
    // (Z + eta S_d)^k as a polynomial in eta with matrix coefficients.
    std::vector<CMat> coef{CMat::Identity(m.n(), m.n())};
    for (int k = 1; k <= kmax; ++k) {
        std::vector<CMat> next(k + 1, CMat::Zero(m.n(), m.n()));
        for (int i = 0; i < k; ++i) {
            next[i] += coef[i] * m.Z;
            next[i + 1] += coef[i] * s[d];
        }
        coef = std::move(next);
        for (int i = 0; i <= k; ++i) tab.kz[{k, i}] = coef[i].trace();
    }
    return tab;
}

IntegralTable integral_table(const LocalPoint& p, int kmax, const ModelParams& params) {
    return integral_table(lift(p, params), kmax);
}

std::string to_csv(const IntegralTable& table) {
    std::ostringstream os;
    os.precision(17);
    os << "family,indices,re,im\n";
    auto row = [&](const char* fam, const std::string& ix, cplx v) {
        os << fam << ",\"" << ix << "\"," << v.real() << "," << v.imag() << "\n";
    };
    for (const auto& [k, v] : table.h) row("h", idx({k}), v);
    for (const auto& [key, v] : table.t) {
        const auto& [a, b, k] = key;
        row("t", idx({a + 1, b + 1, k}), v);
    }
    for (const auto& [key, v] : table.gt) row("gt", idx({key.second, key.first}), v);
    for (const auto& [key, v] : table.kz) row("kz", idx({key.first, key.second}), v);
    for (const auto& [key, v] : table.trs) row("trS", idx({key.first, key.second}), v);
    return os.str();
}

double table_drift(const IntegralTable& a, const IntegralTable& b) {
    double worst = 0.0;
    auto cmp = [&](const auto& x, const auto& y) {
        for (const auto& [key, v] : x) {
            auto it = y.find(key);
            if (it == y.end()) continue;
            worst = std::max(worst, std::abs(v - it->second) / std::max(1.0, std::abs(v)));
        }
    };
    cmp(a.h, b.h);
    cmp(a.t, b.t);
    cmp(a.gt, b.gt);
    cmp(a.kz, b.kz);
    cmp(a.trs, b.trs);
    return worst;
}

namespace {

struct YTable {
    std::vector<cplx> tr;
    std::map<std::tuple<int, int, int>, cplx> vw;
};

// With magnitude = true every matrix is replaced by its entrywise modulus,
// which bounds the sum of absolute terms of each entry.
YTable y_table(const AmbientPoint& m, int kmax, bool magnitude) {
    CMat y = m.Z - guarded_inverse(m.X, "X");
    AmbientPoint a = magnitude ? abs_point(m) : m;
    if (magnitude) y = y.cwiseAbs().cast<cplx>();
    YTable out;
    CMat pw = CMat::Identity(m.n(), m.n());
    for (int k = 0; k <= kmax; ++k) {
        out.tr.push_back(pw.trace());
        for (int al = 0; al < m.d(); ++al)
            for (int be = 0; be < m.d(); ++be) out.vw[{al, be, k}] = (a.V[be] * pw * a.W[al])(0, 0);
        pw = pw * y;
    }
    return out;
}

void add_drift(SweepResult& out, cplx a, cplx b, double scale, const std::string& label) {
    out.add(make_residual(std::abs(a - b), std::max({std::abs(a), std::abs(b), scale})), label);
}

}  // namespace

std::map<std::string, SweepResult> conservation_by_family(const AmbientPoint& before, const AmbientPoint& after,
                                                          const FlowSpec& spec, int kmax) {
    std::map<std::string, SweepResult> out;
    auto idx = [](int al, int be, int k) {
        return "[" + std::to_string(al + 1) + "," + std::to_string(be + 1) + "]^" + std::to_string(k);
    };
    if (spec.kind == HamKind::TrYPow || spec.kind == HamKind::ModifiedRS) {
        YTable a = y_table(before, kmax, false), b = y_table(after, kmax, false);
        YTable ma = y_table(before, kmax, true), mb = y_table(after, kmax, true);
        for (int k = 1; k <= kmax; ++k)
            add_drift(out["trY"], a.tr[k], b.tr[k], std::max(ma.tr[k].real(), mb.tr[k].real()), "trY^" + std::to_string(k));
        for (const auto& [key, v] : a.vw) {
            auto [al, be, k] = key;
            add_drift(out["VYW"], v, b.vw.at(key), std::max(ma.vw.at(key).real(), mb.vw.at(key).real()),
                      "VY^kW" + idx(al, be, k));
        }
        return out;
    }
    const IntegralTable a = integral_table(before, kmax), b = integral_table(after, kmax);
    const IntegralTable ma = integral_table(abs_point(before), kmax), mb = integral_table(abs_point(after), kmax);
    auto mag = [](const auto& x, const auto& y, const auto& key) {
        return std::max(std::abs(x.at(key)), std::abs(y.at(key)));
    };
    const int d = before.d();
    const bool partial = spec.kind == HamKind::TrSPow && spec.level < d;
    for (const auto& [k, v] : a.h) add_drift(out["h"], v, b.h.at(k), mag(ma.h, mb.h, k), "h" + std::to_string(k));
    for (const auto& [key, v] : a.trs)
        add_drift(out["trS"], v, b.trs.at(key), mag(ma.trs, mb.trs, key),
                  "trS[" + std::to_string(key.first) + "]^" + std::to_string(key.second));
    for (const auto& [key, v] : a.gt) {
        const auto [level, k] = key;
        const double s = mag(ma.trs, mb.trs, std::make_pair(level, k)) + mag(ma.h, mb.h, k);
        add_drift(out["gt"], v, b.gt.at(key), s, "gt[" + std::to_string(level) + "]^" + std::to_string(k));
    }
    for (const auto& [key, v] : a.t) {
        auto [al, be, k] = key;
        if (partial && (al >= spec.level || be >= spec.level)) continue;
        add_drift(out["t"], v, b.t.at(key), mag(ma.t, mb.t, key), "t" + idx(al, be, k));
    }
    if (!partial)
        for (const auto& [key, v] : a.kz)
            add_drift(out["r"], v, b.kz.at(key), mag(ma.kz, mb.kz, key),
                      "r[" + std::to_string(key.first) + "," + std::to_string(key.second) + "]");
    return out;
}

SweepResult conservation_drift(const AmbientPoint& before, const AmbientPoint& after, const FlowSpec& spec,
                               int kmax) {
    SweepResult out;
    for (const auto& [family, s] : conservation_by_family(before, after, spec, kmax)) {
        out.count += s.count - 1;
        out.add(Residual{s.max_abs, s.max_rel}, s.worst);
    }
    return out;
}

cplx eqtt_rhs(const TValues& t, int k, int l, int al, int be, int ga, int ep) {
    const double o_gb = ord(ga, be), o_ea = ord(ep, al), o_eb = ord(ep, be), o_ga = ord(ga, al);
    const double d_gb = kron(ga, be), d_ae = kron(al, ep);
    cplx r = 0.5 * (o_gb + o_ea - o_eb - o_ga) * t(ga, ep, k) * t(al, be, l);
    r += 0.5 * o_gb * t(al, ep, k + l) * t(ga, be, 0);
    r += 0.5 * o_ea * t(al, ep, 0) * t(ga, be, k + l);
    r -= 0.5 * o_eb * t(al, ep, l) * t(ga, be, k);
    r -= 0.5 * o_ga * t(al, ep, k) * t(ga, be, l);
    r -= d_gb * (t(al, ep, k + l) + 0.5 * t(al, ep, k + l) * t(ga, be, 0) + 0.5 * t(ga, ep, k) * t(al, be, l));
    r += d_ae * (t(ga, be, k + l) + 0.5 * t(al, ep, 0) * t(ga, be, k + l) + 0.5 * t(ga, ep, k) * t(al, be, l));
    if (k >= 1 && l >= 1) {
        cplx s = 0.0;
        for (int tau = 1; tau <= k; ++tau) s += t(ga, be, k - tau) * t(al, ep, l + tau);
        for (int tau = 1; tau <= k - 1; ++tau) s -= t(ga, be, k + l - tau) * t(al, ep, tau);
        for (int sg = 1; sg <= l; ++sg) s -= t(ga, be, k + sg) * t(al, ep, l - sg);
        for (int sg = 1; sg <= l - 1; ++sg) s += t(ga, be, sg) * t(al, ep, k + l - sg);
        r += 0.5 * s;
    }
    return r;
}

cplx eqtt_rhs_zero(const TValues& t, int al, int be, int ga, int ep) {
    const double d_gb = kron(ga, be), d_ae = kron(al, ep);
    const double c = d_ae - d_gb + ord(ga, be) + ord(ep, al) - ord(ep, be) - ord(ga, al);
    return d_ae * t(ga, be, 0) - d_gb * t(al, ep, 0) +
           0.5 * c * (t(ga, ep, 0) * t(al, be, 0) + t(al, ep, 0) * t(ga, be, 0));
}

Residual eqtt_residual(const AmbientPoint& m, int k, int l, int al, int be, int ga, int ep) {
    TValues t(m, k + l);
    BracketValue lhs = ambient_bracket(obs::t(ga, ep, k), obs::t(al, be, l), m);
    const cplx rhs = eqtt_rhs(t, k, l, al, be, ga, ep);
    return make_residual(std::abs(lhs.value - rhs), std::max(lhs.scale, std::abs(rhs)));
}

SweepResult eqtt_sweep(const AmbientPoint& m, int kl_max) {
    const int d = m.d();
    TValues t(m, kl_max);
    EvalContext ctx(m);
    std::map<std::tuple<int, int, int>, GradientBundle> g;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int k = 0; k <= kl_max; ++k) g[{a, b, k}] = grad(obs::t(a, b, k), ctx);
    SweepResult sw;
    for (int k = 0; k <= kl_max; ++k)
        for (int l = 0; k + l <= kl_max; ++l)
            for (int al = 0; al < d; ++al)
                for (int be = 0; be < d; ++be)
                    for (int ga = 0; ga < d; ++ga)
                        for (int ep = 0; ep < d; ++ep) {
                            BracketValue lhs = ambient_bracket(g[{ga, ep, k}], g[{al, be, l}], m);
                            const std::string label =
                                "k=" + std::to_string(k) + " l=" + std::to_string(l) + " (" +
                                idx({al + 1, be + 1, ga + 1, ep + 1}) + ")";
                            cplx rhs = eqtt_rhs(t, k, l, al, be, ga, ep);
                            sw.add(make_residual(std::abs(lhs.value - rhs), std::max(lhs.scale, std::abs(rhs))), label);
                            if (k == 0 && l == 0) {
                                rhs = eqtt_rhs_zero(t, al, be, ga, ep);
                                sw.add(make_residual(std::abs(lhs.value - rhs), std::max(lhs.scale, std::abs(rhs))),
                                       label + " short");
                            }
                        }
    return sw;
}

double CommutationReport::max_rel() const {
    double r = 0.0;
    for (const auto& [name, s] : families) r = std::max(r, s.max_rel);
    return r;
}

CommutationReport commutation_suite(const AmbientPoint& m, const ModelParams& params, std::mt19937_64& rng) {
    const int n = m.n(), d = m.d();
    EvalContext ctx(m);
    CommutationReport rep;
    auto br = [&](const GradientBundle& f, const GradientBundle& g) {
        BracketValue b = ambient_bracket(f, g, m);
        return make_residual(std::abs(b.value), b.scale);
    };
    std::vector<GradientBundle> h(n + 1), y(n + 1);
    for (int k = 1; k <= n; ++k) {
        h[k] = grad(obs::tr_z(k), ctx);
        y[k] = grad(obs::tr_y(k), ctx);
    }
    std::map<std::tuple<int, int, int>, GradientBundle> t;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int k = 0; k <= n + 1; ++k) t[{a, b, k}] = grad(obs::t(a, b, k), ctx);
    std::map<std::pair<int, int>, GradientBundle> gt;
    for (int level = 1; level <= d; ++level)
        for (int k = 1; k <= n; ++k) gt[{level, k}] = grad(obs::gt(k, level), ctx);

    SweepResult& ht = rep.families["h_t"];
    for (int i = 1; i <= n; ++i)
        for (const auto& [key, g] : t) {
            const auto& [a, b, k] = key;
            ht.add(br(h[i], g), "h" + std::to_string(i) + " t" + idx({k, b + 1, a + 1}));
        }
    SweepResult& hh = rep.families["h_h"];
    SweepResult& yy = rep.families["trY"];
    for (int k = 1; k <= n; ++k)
        for (int l = k + 1; l <= n; ++l) {
            hh.add(br(h[k], h[l]), idx({k, l}));
            yy.add(br(y[k], y[l]), idx({k, l}));
        }
    SweepResult& g = rep.families["gt"];
    for (const auto& [ka, ga] : gt)
        for (const auto& [kb, gb] : gt)
            if (ka < kb) g.add(br(ga, gb), idx({ka.second, ka.first, kb.second, kb.first}));

    SweepResult& sp = rep.families["spectral"];
    std::vector<std::pair<cplx, cplx>> etas;
    for (int r = 0; r < 3; ++r) etas.emplace_back(complex_gaussian(rng), complex_gaussian(rng));
    const cplx same = complex_gaussian(rng);
    etas.emplace_back(same, same);
    for (const auto& [mu, eta] : etas)
        for (int k = 1; k <= n; ++k)
            for (int l = 1; l <= n; ++l) {
                if (mu == eta && l < k) continue;
                sp.add(br(grad(obs::tr_zeta(mu, k, d), ctx), grad(obs::tr_zeta(eta, l, d), ctx)), idx({k, l}));
            }

    SweepResult& kz = rep.families["kz"];
    std::map<std::pair<int, int>, GradientBundle> r;
    for (int k = 1; k <= 3; ++k)
        for (int i = 0; i <= k; ++i) r[{k, i}] = grad(obs::kz(k, i, d), ctx);
    for (const auto& [ka, ga] : r)
        for (const auto& [kb, gb] : r)
            if (ka < kb) kz.add(br(ga, gb), idx({ka.first, ka.second, kb.first, kb.second}));

    SweepResult& tg = rep.families["t0_gt"];
    for (int b = 0; b < d; ++b)
        for (const auto& [key, gg] : gt)
            tg.add(br(t[{b, b, 0}], gg), "t0_" + idx({b + 1, b + 1}) + " h" + idx({key.second, key.first}));

    SweepResult& central = rep.families["central"];
    for (int k = 1; k <= n; ++k)
        for (const auto& [key, tt] : t) {
            const auto& [a, b, i] = key;
            central.add(br(gt[{d, k}], tt), "h" + idx({k, d}) + " t" + idx({i, a + 1, b + 1}));
        }

    if (d >= 2) {
        for (int k = 1; k <= 3; ++k) {
            BracketValue b = ambient_bracket(grad(obs::t(0, 0, 1), ctx), r[{k, 1}], m);
            rep.witness = std::max(rep.witness, std::abs(b.value));
        }
    }
    (void)params;
    return rep;
}

const char* family_name(RankFamily f) {
    switch (f) {
        case RankFamily::AlgebraQ: return "AlgebraQ";
        case RankFamily::GelfandTsetlin: return "GelfandTsetlin";
        case RankFamily::SpectralKZ: return "SpectralKZ";
    }
    return "";
}

RankFamily parse_family(const std::string& s) {
    if (s == "AlgebraQ" || s == "Q" || s == "q") return RankFamily::AlgebraQ;
    if (s == "GelfandTsetlin" || s == "GT" || s == "gt") return RankFamily::GelfandTsetlin;
    if (s == "SpectralKZ" || s == "kz") return RankFamily::SpectralKZ;
    throw InvalidParams("unknown rank family '" + s + "'");
}

std::vector<Observable> family_observables(RankFamily f, int n, int d) {
    std::vector<Observable> out;
    switch (f) {
        case RankFamily::AlgebraQ:
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    for (int k = 0; k <= n; ++k) out.push_back(obs::t(a, b, k));
            break;
        case RankFamily::GelfandTsetlin:
            for (int level = 1; level <= d; ++level)
                for (int k = 1; k <= n; ++k) out.push_back(obs::gt(k, level));
            break;
        case RankFamily::SpectralKZ:
            for (int k = 1; k <= n; ++k)
                for (int i = 0; i <= k; ++i) out.push_back(obs::kz(k, i, d));
            break;
    }
    return out;
}

int expected_rank(RankFamily f, int n, int d) {
    switch (f) {
        case RankFamily::AlgebraQ: return 2 * n * d - n;
        case RankFamily::GelfandTsetlin: return n * d;
        case RankFamily::SpectralKZ: return -1;
    }
    return -1;
}

RankCertificate rank_certificate(const LocalPoint& p, RankFamily family, const ModelParams& params) {
    const std::vector<Observable> fs = family_observables(family, p.n(), p.d());
    LiftJacobian jac = lift_jacobian(p, params);
    const int cols = 2 * p.n() * p.d();
    CMat J(static_cast<int>(fs.size()), cols);
    std::vector<AmbientPoint> abs_tangents;
    for (const AmbientPoint& t : jac.tangents) abs_tangents.push_back(abs_point(t));
    EvalContext ctx(jac.base);
    for (size_t r = 0; r < fs.size(); ++r) {
        LocalFunction lf = pullback(fs[r], jac);
        // Rows are scaled by the function value or the size of its chain-rule
        // terms, whichever is larger, so a constant stays at rounding level.
        const GradientBundle ga = abs_bundle(grad(fs[r], ctx));
        double mag = std::abs(lf.value);
        for (const AmbientPoint& t : abs_tangents) mag = std::max(mag, std::abs(pair(ga, t)));
        CVec g = lf.grad;
        if (mag > 0.0) g /= mag;
        J.row(static_cast<int>(r)) = g.transpose();
    }
    Eigen::JacobiSVD<CMat> svd(J);
    RankCertificate cert;
    cert.family = family;
    cert.rows = static_cast<int>(J.rows());
    cert.cols = cols;
    const auto& sv = svd.singularValues();
    cert.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double smax = sv.size() ? sv(0) : 0.0;
    cert.threshold = params.tol_rank * smax;
    cert.rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) >= cert.threshold && smax > 0.0) ++cert.rank;
    if (cert.rank == 0 || cert.rank == sv.size()) {
        cert.gap = std::numeric_limits<double>::infinity();
    } else {
        cert.gap = sv(cert.rank) > 0.0 ? sv(cert.rank - 1) / sv(cert.rank) : std::numeric_limits<double>::infinity();
    }
    cert.expected = expected_rank(family, p.n(), p.d());
    if (cert.gap < kRankGap)
        throw RankAmbiguous("singular-value gap " + std::to_string(cert.gap) + " below certificate ratio");
    return cert;
}

RankCertificate certify_rank(RankFamily family, const ModelParams& params, std::mt19937_64& rng, int max_attempts) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        LocalPoint p = sample_regular(params, rng);
        try {
            return rank_certificate(p, family, params);
        } catch (const RankAmbiguous&) {
        }
    }
    throw RankAmbiguous("no unambiguous rank after " + std::to_string(max_attempts) + " points");
}

SweepResult salpha_identity_residuals(const AmbientPoint& m) {
    const int n = m.n(), d = m.d();
    EvalContext ctx(m);
    const std::vector<CMat> s = partial_products(m);
    // gs[level][i*n+j]: gradient of (S_level)_ij
    std::vector<std::vector<GradientBundle>> gs(d + 1);
    for (int level = 0; level <= d; ++level)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                GradientBundle g = GradientBundle::zeros(n, d);
                CMat e = CMat::Zero(n, n);
                e(j, i) = 1.0;
                add_partial_product_gradient(level, e, ctx, g);
                gs[level].push_back(std::move(g));
            }
    const CMat& X = m.X;
    const CMat& Z = m.Z;
    SweepResult sw;
    auto check = [&](const GradientBundle& f, const GradientBundle& g, cplx expect, const std::string& label) {
        BracketValue b = ambient_bracket(f, g, m);
        sw.add(make_residual(std::abs(b.value - expect), std::max(b.scale, std::abs(expect))), label);
    };
    for (int a = 0; a <= d; ++a) {
        const CMat& S = s[a];
        CMat zs = Z * S, sz = S * Z, xs = X * S, sx = S * X;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const GradientBundle& f = gs[a][i * n + j];
                const std::string lab = "S" + std::to_string(a) + "(" + idx({i + 1, j + 1}) + ")";
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        cplx ez = 0.5 * (S(k, j) * Z(i, l) - zs(k, j) * kron(i, l) + kron(k, j) * sz(i, l) -
                                         Z(k, j) * S(i, l));
                        check(f, coordinate_gradient(GenId::z(k, l), n, d), ez, lab + " Z");
                        cplx ex = 0.5 * (S(k, j) * X(i, l) - xs(k, j) * kron(i, l) - kron(k, j) * sx(i, l) -
                                         X(k, j) * S(i, l));
                        check(f, coordinate_gradient(GenId::x(k, l), n, d), ex, lab + " X");
                    }
                for (int b = 0; b < d; ++b) {
                    const bool inside = b < a;
                    CRow vs = m.V[b] * S;
                    CVec sw_ = S * m.W[b];
                    for (int l = 0; l < n; ++l) {
                        cplx ev = inside ? -0.5 * (vs(j) * kron(i, l) + m.V[b](j) * S(i, l))
                                         : 0.5 * (vs(j) * kron(i, l) - m.V[b](j) * S(i, l));
                        check(f, coordinate_gradient(GenId::v(b, l), n, d), ev, lab + " V" + std::to_string(b + 1));
                    }
                    for (int k = 0; k < n; ++k) {
                        cplx ew = inside ? 0.5 * (kron(k, j) * sw_(i) + S(k, j) * m.W[b](i))
                                         : 0.5 * (kron(k, j) * sw_(i) - S(k, j) * m.W[b](i));
                        check(f, coordinate_gradient(GenId::w(b, k), n, d), ew, lab + " W" + std::to_string(b + 1));
                    }
                }
                for (int b = 0; b <= d; ++b) {
                    const CMat& T = s[b];
                    CMat st = S * T, ts = T * S;
                    for (int k = 0; k < n; ++k)
                        for (int l = 0; l < n; ++l) {
                            cplx e = 0.5 * (kron(k, j) * st(i, l) - ts(k, j) * kron(i, l)) +
                                     0.5 * ord(a, b) * (T(k, j) * S(i, l) - S(k, j) * T(i, l));
                            check(f, gs[b][k * n + l], e, lab + " S" + std::to_string(b));
                        }
                }
            }
    }
    return sw;
}

namespace {

struct GValues {
    int d;
    std::vector<CMat> xpow;
    std::vector<CVec> A;
    std::vector<CRow> B;
    CMat Z;
    cplx g(int al, int be, int k) const { return (B[be] * xpow[k] * A[al]).value(); }
    cplx h(int ga, int ep, int k, int l) const { return (B[ep] * xpow[k] * Z * xpow[l] * A[ga]).value(); }
};

GValues gvalues(const AmbientPoint& m, int kmax) {
    GValues v;
    v.d = m.d();
    SpinMatrices sp = spin_matrices(m);
    v.A = sp.A;
    v.B = sp.B;
    v.Z = m.Z;
    v.xpow.push_back(CMat::Identity(m.n(), m.n()));
    for (int k = 1; k <= kmax; ++k) v.xpow.push_back(v.xpow.back() * m.X);
    return v;
}

cplx gg_rhs(const GValues& v, int k, int l, int al, int be, int ga, int ep) {
    auto g = [&](int a, int b, int p) { return v.g(a, b, p); };
    cplx r = 0.0;
    for (int q = 1; q <= k; ++q) r += 0.5 * (g(ga, be, q) * g(al, ep, k + l - q) + g(ga, be, k + l - q) * g(al, ep, q));
    for (int q = 1; q <= l; ++q) r -= 0.5 * (g(ga, be, q) * g(al, ep, k + l - q) + g(ga, be, k + l - q) * g(al, ep, q));
    r += 0.5 * ord(al, ga) * (g(ga, be, l) * g(al, ep, k) + g(ga, ep, k) * g(al, be, l));
    r += 0.5 * ord(ep, be) * (g(ga, be, k) * g(al, ep, l) - g(ga, ep, k) * g(al, be, l));
    r += 0.5 * (ord(ep, al) + kron(al, ep) - ord(be, ga) - kron(be, ga)) * g(ga, ep, k) * g(al, be, l);
    if (al == ep) {
        r += v.h(ga, be, l, k);
        for (int lam = 0; lam < ep; ++lam) r += g(ga, lam, k) * g(lam, be, l);
    }
    if (be == ga) {
        r -= v.h(al, ep, k, l);
        for (int mu = 0; mu < be; ++mu) r -= g(al, mu, l) * g(mu, ep, k);
    }
    return r;
}

}  // namespace

cplx lempoisson_gg(const AmbientPoint& m, int k, int l, int al, int be, int ga, int ep) {
    return gg_rhs(gvalues(m, 2 * std::max(k, l) + 1), k, l, al, be, ga, ep);
}

SweepResult lempoisson_residuals(const AmbientPoint& m, int kmax) {
    const int d = m.d();
    EvalContext ctx(m);
    GValues v = gvalues(m, 2 * kmax + 1);
    std::vector<GradientBundle> f(kmax + 1);
    for (int k = 1; k <= kmax; ++k) f[k] = grad(obs::tr_x(k), ctx);
    std::map<std::tuple<int, int, int>, GradientBundle> g;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int k = 1; k <= kmax; ++k) g[{a, b, k}] = grad(obs::g(a, b, k), ctx);
    SweepResult sw;
    auto check = [&](const GradientBundle& x, const GradientBundle& y, cplx expect, const std::string& label) {
        BracketValue b = ambient_bracket(x, y, m);
        sw.add(make_residual(std::abs(b.value - expect), std::max(b.scale, std::abs(expect))), label);
    };
    for (int k = 1; k <= kmax; ++k)
        for (int l = 1; l <= kmax; ++l) {
            check(f[k], f[l], 0.0, "ff " + idx({k, l}));
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    check(f[k], g[{a, b, l}], double(k) * v.g(a, b, k + l), "fg " + idx({k, l, a + 1, b + 1}));
                    for (int c = 0; c < d; ++c)
                        for (int e = 0; e < d; ++e)
                            check(g[{c, e, k}], g[{a, b, l}], gg_rhs(v, k, l, a, b, c, e),
                                  "gg " + idx({k, l, a + 1, b + 1, c + 1, e + 1}));
                }
        }
    return sw;
}

Residual hk_in_q_residual(const AmbientPoint& m, int k, const ModelParams& params) {
    const int d = m.d();
    TPolynomial poly = to_t_polynomial(obs::tr_s(d, k) - obs::tr_z(k));
    int kneed = 0;
    for (const auto& [mono, c] : poly.terms)
        for (const TIndex& ti : mono) kneed = std::max(kneed, ti.k);
    TValues t(m, kneed);
    const cplx rhs = poly.evaluate([&](const TIndex& ti) { return t(ti.alpha, ti.beta, ti.k); });
    const cplx lhs = (std::pow(params.q, -k) - 1.0) * mpow(m.Z, k).trace();
    return make_residual(std::abs(lhs - rhs), std::max(std::abs(lhs), std::abs(rhs)));
}

Residual trs_moment_residual(const AmbientPoint& m, int k, const ModelParams& params) {
    const cplx lhs = mpow(partial_products(m)[m.d()], k).trace();
    const cplx rhs = std::pow(params.q, -k) * mpow(m.Z, k).trace();
    return make_residual(std::abs(lhs - rhs), std::max(std::abs(lhs), std::abs(rhs)));
}

}  // namespace spinrs
