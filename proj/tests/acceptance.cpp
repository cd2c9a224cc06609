#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "spinrs/suite.hpp"

using namespace spinrs;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string summary;
};

// Worst value seen against an upper or lower bound.
struct Gauge {
    double worst = 0.0;
    long count = 0;
    long failures = 0;
    std::string where;

    void upper(double v, double tol, const std::string& label) {
        ++count;
        if (!(v <= tol)) ++failures;
        if (std::isnan(worst)) return;
        if (!(v <= worst) || count == 1) {
            worst = v;
            where = label;
        }
    }
};

std::string sci(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    return buf;
}

std::string tag(int n, int d) { return "n=" + std::to_string(n) + " d=" + std::to_string(d); }

std::vector<LocalPoint> points_for(int n, int d, int count, std::uint64_t salt) {
    return sample_points(ModelParams::make(n, d, default_q(), salt * 1000 + 10 * n + d), count);
}

ModelParams params_for(int n, int d) { return ModelParams::make(n, d, default_q()); }

double max_entry(const LocalPoint& p) {
    return std::max({p.x.cwiseAbs().maxCoeff(), p.a.cwiseAbs().maxCoeff(), p.b.cwiseAbs().maxCoeff()});
}

double max_entry(const Tangent& t) {
    return std::max({t.dx.cwiseAbs().maxCoeff(), t.da.cwiseAbs().maxCoeff(), t.db.cwiseAbs().maxCoeff()});
}

double max_entry(const AmbientPoint& m) {
    double s = std::max(m.X.cwiseAbs().maxCoeff(), m.Z.cwiseAbs().maxCoeff());
    for (const CRow& v : m.V) s = std::max(s, v.cwiseAbs().maxCoeff());
    for (const CVec& w : m.W) s = std::max(s, w.cwiseAbs().maxCoeff());
    return s;
}

std::string describe(const std::string& label, const Gauge& g, double tol) {
    return label + " " + sci(g.worst) + " (<= " + sci(tol) + ", " + std::to_string(g.count) + " evals" +
           (g.failures ? ", " + std::to_string(g.failures) + " over at " + g.where : "") + ")";
}

Outcome criterion1() {
    Gauge mom, rt;
    int points = 0;
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = params_for(n, d);
            for (const LocalPoint& p : points_for(n, d, 9, 1)) {
                ++points;
                const AmbientPoint m = lift(p, P);
                mom.upper(moment_residual(m, P), 1e-11, tag(n, d));
                rt.upper(max_abs_diff(project(m, P).first, canonical_order(p)), 1e-9, tag(n, d));
            }
        }
    return {mom.failures == 0 && rt.failures == 0 && points >= 100,
            std::to_string(points) + " points; " + describe("moment", mom, 1e-11) + "; " +
                describe("round trip max-abs", rt, 1e-9)};
}

Outcome criterion2() {
    Gauge pb, jac;
    int pb_points = 0;
    for (int n = 1; n <= 3; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = params_for(n, d);
            std::vector<Observable> fs;
            std::vector<std::string> labels;
            for (int k = 1; k <= n + 1; ++k) {
                fs.push_back(obs::tr_x(k));
                labels.push_back("f" + std::to_string(k));
            }
            for (int k = 0; k <= n + 1; ++k)
                for (int al = 0; al < d; ++al)
                    for (int be = 0; be < d; ++be) {
                        fs.push_back(obs::g(al, be, k));
                        labels.push_back("g" + std::to_string(k));
                    }
            for (const LocalPoint& p : points_for(n, d, 6, 2)) {
                ++pb_points;
                const SweepResult s = pullback_sweep(fs, labels, p, P);
                pb.upper(s.max_rel, 1e-8, tag(n, d) + " " + s.worst);
            }
            for (const LocalPoint& p : points_for(n, d, 2, 3)) jac.upper(jacobi_sweep(p, P).max_rel, 1e-8, tag(n, d));
        }
    // quasi-Poisson witness: exhaustive generator triples at one n = 2 point
    const ModelParams P = params_for(2, 2);
    const AmbientPoint m = lift(points_for(2, 2, 1, 4)[0], P);
    const std::vector<GenId> ids = generator_ids(2, 2);
    double witness = 0.0;
    for (const GenId& u : ids)
        for (const GenId& v : ids)
            for (const GenId& w : ids) witness = std::max(witness, std::abs(ambient_jacobi(u, v, w, m)));
    return {pb.failures == 0 && jac.failures == 0 && pb_points >= 50 && witness > 1e-3,
            std::to_string(pb_points) + " points; " + describe("pullback", pb, 1e-8) + "; " +
                describe("local Jacobi", jac, 1e-8) + "; ambient Jacobi witness " + sci(witness) + " (> 1e-3)"};
}

Outcome criterion3() {
    Gauge ff, rm;
    for (int n = 1; n <= 3; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = params_for(n, d);
            for (const LocalPoint& p : points_for(n, d, 2, 5)) {
                const CMat poisson = local_poisson_matrix(p, P);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k)
                            for (int l = 0; l < n; ++l) {
                                const BracketValue chain =
                                    local_bracket(f_function(i, j, p), f_function(k, l, p), poisson);
                                const cplx closed = ff_bracket(i, j, k, l, p, P);
                                ff.upper(make_residual(std::abs(chain.value - closed),
                                                       std::max(chain.scale, std::abs(closed)))
                                             .rel,
                                         1e-9, tag(n, d));
                            }
                rm.upper(rmatrix_residual(p, P), 1e-8, tag(n, d));
            }
        }
    return {ff.failures == 0 && rm.failures == 0,
            describe("ff vs chain rule", ff, 1e-9) + "; " + describe("r-matrix max-abs", rm, 1e-8)};
}

Outcome criterion4() {
    Gauge eom, mod;
    int points = 0;
    FlowSpec rs, md;
    rs.kind = HamKind::SpinRS;
    md.kind = HamKind::ModifiedRS;
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = params_for(n, d);
            for (const LocalPoint& p : points_for(n, d, 5, 6)) {
                ++points;
                const Tangent a = rs_rhs(p, P);
                const Tangent b = hamiltonian_vector_field(p, hamiltonian_observable(rs, d, P.q), P);
                eom.upper(make_residual(max_abs_diff(a, b), max_entry(a)).rel, 1e-9, tag(n, d));
                const Tangent c = modified_rhs(p, P);
                const Tangent e = hamiltonian_vector_field(p, hamiltonian_observable(md, d, P.q), P);
                mod.upper(make_residual(max_abs_diff(c, e), max_entry(c)).rel, 1e-9, tag(n, d));
            }
        }
    return {eom.failures == 0 && mod.failures == 0 && points >= 50,
            std::to_string(points) + " points; " + describe("spin RS", eom, 1e-9) + "; " +
                describe("modified", mod, 1e-9)};
}

Outcome criterion5() {
    // Unclipped: every flow at every time with |t| <= 1.
    std::vector<std::string> names = {"trZ:k=1", "trZ:k=2", "trZ:k=3", "trY:k=1", "trY:k=2"};
    for (int al = 1; al <= 3; ++al)
        for (int k = 1; k <= 2; ++k) names.push_back("trS:alpha=" + std::to_string(al) + ",k=" + std::to_string(k));
    const std::vector<cplx> times = SuiteConfig{}.effective_flow_times();
    Gauge add, mom, cons, match;
    // the same evaluations restricted to |t| * spread(E) <= 8, for the record only
    Gauge conditioned;
    long errors = 0;
    std::string first_error;
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = params_for(n, d);
            for (const LocalPoint& p : points_for(n, d, 3, 7)) {
                const AmbientPoint m = lift(p, P);
                for (const std::string& name : names) {
                    FlowSpec spec = parse_flow_spec(name);
                    if (spec.kind == HamKind::TrSPow && spec.level > d) continue;
                    for (cplx t : times) {
                        const std::string label = tag(n, d) + " " + name;
                        const bool inside = std::abs(t) <= conditioned_time_limit(m, spec, P);
                        try {
                            spec.time = t;
                            const AmbientPoint whole = exact_flow(m, spec, P);
                            FlowSpec a = spec, b = spec;
                            a.time = 0.4 * t;
                            b.time = 0.6 * t;
                            const AmbientPoint split = exact_flow(exact_flow(m, a, P), b, P);
                            const double ra = make_residual(max_abs_diff(whole, split), max_entry(whole)).rel;
                            const double rm = moment_residual(whole, P);
                            const double rc = conservation_drift(m, whole, spec, n + 2).max_rel;
                            add.upper(ra, 1e-9, label);
                            mom.upper(rm, 1e-9, label);
                            cons.upper(rc, 1e-9, label);
                            if (inside) conditioned.upper(std::max({ra, rm, rc}), 1e-9, label);
                        } catch (const SpinError& e) {
                            if (!errors++) first_error = label + ": " + e.what();
                        }
                    }
                }
                if (n <= 3) {
                    std::mt19937_64 rng(p.x.size() * 31 + d);
                    const double theta = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
                    match.upper(flow_match_residual(p, 0.1 * std::polar(1.0, theta), P, 1e-10), 1e-6, tag(n, d));
                }
            }
        }

    // n = 1: x(t) = x e^{t Z11} exactly, and the opposite sign is far off.
    const cplx q = default_q();
    const ModelParams P1 = params_for(1, 2);
    double scalar = 0.0, flipped = 1e300;
    for (const LocalPoint& s : points_for(1, 2, 5, 8)) {
        const cplx z11 = q * s.f(0, 0) / (1.0 - q);
        for (cplx t : times) {
            FlowSpec z = parse_flow_spec("trZ:k=1");
            z.time = t;
            const cplx x = project(exact_flow(lift(s, P1), z, P1), P1).first.x(0);
            scalar = std::max(scalar, std::abs(x - s.x(0) * std::exp(t * z11)) / std::abs(x));
            flipped = std::min(flipped, std::abs(x - s.x(0) * std::exp(-t * z11)) / std::abs(x));
        }
    }

    const bool pass = add.failures == 0 && mom.failures == 0 && cons.failures == 0 && errors == 0 &&
                      match.failures == 0 && scalar <= 1e-12 && flipped > 1e-3;
    std::string s = describe("additivity", add, 1e-9) + "; " + describe("moment", mom, 1e-9) + "; " +
                    describe("conservation", cons, 1e-9) + "; " + describe("flow match |t|=0.1", match, 1e-6) +
                    "; n=1 oracle " + sci(scalar) + " (opposite sign " + sci(flipped) + ")";
    if (errors) s += "; " + std::to_string(errors) + " evaluations raised, first: " + first_error;
    if (!pass) s += "; for reference, " + describe("within |t|*spread(E) <= 8", conditioned, 1e-9);
    return {pass, s};
}

Outcome criterion6() {
    Gauge eq, com;
    double witness = 0.0;
    for (int n = 1; n <= 3; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = params_for(n, d);
            std::mt19937_64 rng(100 * n + d);
            for (const LocalPoint& p : points_for(n, d, 2, 9)) {
                const AmbientPoint m = lift(p, P);
                const SweepResult s = eqtt_sweep(m, 6);
                eq.upper(s.max_rel, 1e-8, tag(n, d) + " " + s.worst);
                const CommutationReport r = commutation_suite(m, P, rng);
                com.upper(r.max_rel(), 1e-8, tag(n, d));
                if (d == 2) witness = std::max(witness, r.witness);
            }
        }
    return {eq.failures == 0 && com.failures == 0 && witness > 1e-3,
            describe("t-bracket relations", eq, 1e-8) + "; " + describe("commutation", com, 1e-8) + "; witness at d=2 " +
                sci(witness) + " (> 1e-3)"};
}

Outcome criterion7() {
    int certificates = 0, wrong = 0, resampled = 0;
    double min_gap = 1e300;
    std::string where;
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = params_for(n, d);
            std::mt19937_64 rng(200 * n + d);
            for (const LocalPoint& p : points_for(n, d, 5, 10))
                for (RankFamily f : {RankFamily::AlgebraQ, RankFamily::GelfandTsetlin}) {
                    RankCertificate c;
                    try {
                        c = rank_certificate(p, f, P);
                    } catch (const RankAmbiguous&) {
                        ++resampled;
                        c = certify_rank(f, P, rng);
                    }
                    ++certificates;
                    min_gap = std::min(min_gap, c.gap);
                    if (c.rank != c.expected || c.expected != expected_rank(f, n, d) || !(c.gap >= kRankGap)) {
                        if (!wrong++) where = tag(n, d) + " " + family_name(f);
                    }
                }
        }
    std::string s = std::to_string(certificates) + " certificates over 12 (n,d), 5 points each; " +
                    std::to_string(wrong) + " disagree with 2nd-n / nd; min gap " + sci(min_gap) + " (>= 1e3)";
    if (resampled) s += "; " + std::to_string(resampled) + " ambiguous points redrawn";
    if (wrong) s += "; first at " + where;
    return {wrong == 0, s};
}

Outcome criterion8() {
    Gauge sa, lp, zf;
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = params_for(n, d);
            for (const LocalPoint& p : points_for(n, d, 2, 11)) {
                const AmbientPoint m = lift(p, P);
                sa.upper(salpha_identity_residuals(m).max_rel, 1e-8, tag(n, d));
                lp.upper(lempoisson_residuals(m, n + 1).max_rel, 1e-9, tag(n, d));
                zf.upper(z12f_residual(p, P) / std::max(1.0, m.Z.cwiseAbs().maxCoeff()), 1e-12, tag(n, d));
            }
        }
    return {sa.failures == 0 && lp.failures == 0 && zf.failures == 0,
            describe("S_alpha brackets", sa, 1e-8) + "; " + describe("f/g bracket table", lp, 1e-9) + "; " +
                describe("Z from f", zf, 1e-12)};
}

Outcome criterion9() {
    const SuiteConfig cfg;
    const VerificationReport a = run_suite(cfg);
    const VerificationReport b = run_suite(cfg);
    const bool same = to_json(a).dump() == to_json(b).dump();
    return {a.all_passed() && same,
            "default config n=" + std::to_string(cfg.params.n) + " d=" + std::to_string(cfg.params.d) +
                " points=" + std::to_string(cfg.points) + "; " + std::to_string(a.passed) + "/" +
                std::to_string(a.total) + " records passed; second run " + (same ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        double budget;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {{1, 5, criterion1},  {2, 60, criterion2},  {3, 30, criterion3},
                                        {4, 20, criterion4}, {5, 60, criterion5},  {6, 120, criterion6},
                                        {7, 60, criterion7}, {8, 30, criterion8},  {9, 300, criterion9}};
    int failed = 0;
    for (const Criterion& c : all) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("raised ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        const bool in_time = secs <= c.budget;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("criterion %d: %s  %s  [%.2f s, budget %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL",
                    o.summary.c_str(), secs, c.budget, in_time ? "" : ", OVER BUDGET");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed ? 1 : 0;
}
