#include "spinrs/suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include "spinrs/dynamics.hpp"
#include "spinrs/integrability.hpp"

namespace spinrs {

namespace {

const std::vector<std::string> kChecks = {"moment",    "roundtrip",    "jacobi", "pullback", "af",
                                          "rmatrix",   "eom",          "modified-eom", "flows", "eqtt",
                                          "commute",   "ranks",        "salpha", "lempoisson", "z12f"};

std::string sci(double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(1) << v;
    return s.str();
}

std::string idx1(int i) { return std::to_string(i + 1); }

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t task_seed(std::uint64_t seed, const std::string& check, int point) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : check) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    return splitmix(splitmix(seed ^ h) + static_cast<std::uint64_t>(point));
}

struct Task {
    const SuiteConfig& cfg;
    const LocalPoint& p;
    std::mt19937_64 rng;
    AmbientPoint m;

    const ModelParams& params() const { return cfg.params; }
};

CheckRecord record(const std::string& name, const SweepResult& s, Bound bound = Bound::Upper) {
    CheckRecord r;
    r.name = name;
    r.indices = s.worst;
    r.abs_residual = s.max_abs;
    r.rel_residual = s.max_rel;
    r.bound = bound;
    return r;
}

CheckRecord record(const std::string& name, const Residual& res, const std::string& indices,
                   Bound bound = Bound::Upper) {
    CheckRecord r;
    r.name = name;
    r.indices = indices;
    r.abs_residual = res.abs;
    r.rel_residual = res.rel;
    r.bound = bound;
    return r;
}

double max_entry(const LocalPoint& p) {
    return std::max({p.x.cwiseAbs().maxCoeff(), p.a.cwiseAbs().maxCoeff(), p.b.cwiseAbs().maxCoeff()});
}

double max_entry(const AmbientPoint& m) {
    double s = std::max(m.X.cwiseAbs().maxCoeff(), m.Z.cwiseAbs().maxCoeff());
    for (const CRow& v : m.V) s = std::max(s, v.cwiseAbs().maxCoeff());
    for (const CVec& w : m.W) s = std::max(s, w.cwiseAbs().maxCoeff());
    return s;
}

double max_entry(const Tangent& t) {
    return std::max({t.dx.cwiseAbs().maxCoeff(), t.da.cwiseAbs().maxCoeff(), t.db.cwiseAbs().maxCoeff()});
}

// Greedy nearest matching of the two spectra, relative to max(1, |lambda|).
double spectrum_drift(const CMat& a, const CMat& b) {
    const CVec ea = Eigen::ComplexEigenSolver<CMat>(a, false).eigenvalues();
    const CVec eb = Eigen::ComplexEigenSolver<CMat>(b, false).eigenvalues();
    std::vector<bool> used(eb.size(), false);
    double worst = 0.0;
    for (int i = 0; i < ea.size(); ++i) {
        int best = -1;
        for (int j = 0; j < eb.size(); ++j)
            if (!used[j] && (best < 0 || std::abs(ea(i) - eb(j)) < std::abs(ea(i) - eb(best)))) best = j;
        used[best] = true;
        worst = std::max(worst, std::abs(ea(i) - eb(best)) / std::max(1.0, std::abs(ea(i))));
    }
    return worst;
}

// ---- checks ----

std::vector<CheckRecord> check_moment(Task& t) {
    const double rel = moment_residual(t.m, t.params());
    return {record("moment", Residual{rel * t.m.Z.norm(), rel}, "")};
}

std::vector<CheckRecord> check_roundtrip(Task& t) {
    const LocalPoint ref = canonical_order(t.p);
    const double scale = max_entry(ref);
    const double plain = max_abs_diff(project(t.m, t.params()).first, ref);
    const CMat g = random_group_element(t.p.n(), t.rng);
    const double gauged = max_abs_diff(project(act(g, t.m), t.params()).first, ref);
    return {record("roundtrip", make_residual(plain, scale), "project(lift(p))"),
            record("roundtrip.gauge", make_residual(gauged, scale), "project(g.lift(p))")};
}

std::vector<CheckRecord> check_jacobi(Task& t) {
    const JacobiSweep js = jacobi_sweep(t.p, t.params());
    CheckRecord local = record("jacobi", Residual{js.max_abs, js.max_rel}, std::to_string(js.triples) + " triples");

    if (t.p.n() < 2) return {local};  // GL_1 is abelian: the ambient bracket is Poisson
    const std::vector<GenId> ids = generator_ids(t.p.n(), t.p.d());
    std::uniform_int_distribution<size_t> pick(0, ids.size() - 1);
    double witness = 0.0;
    for (int r = 0; r < 20; ++r)
        witness = std::max(witness, std::abs(ambient_jacobi(ids[pick(t.rng)], ids[pick(t.rng)], ids[pick(t.rng)], t.m)));
    CheckRecord amb = record("jacobi.ambient", Residual{witness, witness}, "max over 20 generator triples", Bound::Lower);
    return {local, amb};
}

std::vector<CheckRecord> check_pullback(Task& t) {
    const int n = t.p.n(), d = t.p.d();
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
                labels.push_back("g[" + idx1(al) + "," + idx1(be) + "]^" + std::to_string(k));
            }
    return {record("pullback", pullback_sweep(fs, labels, t.p, t.params()))};
}

std::vector<CheckRecord> check_af(Task& t) {
    const int n = t.p.n();
    const CMat P = local_poisson_matrix(t.p, t.params());
    std::vector<std::vector<LocalFunction>> f(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f[i].push_back(f_function(i, j, t.p));
    SweepResult ff, xf;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const BracketValue chain = local_bracket(f[i][j], f[k][l], P);
                    const cplx closed = ff_bracket(i, j, k, l, t.p, t.params());
                    ff.add(make_residual(std::abs(chain.value - closed), std::max(chain.scale, std::abs(closed))),
                           "{f" + idx1(i) + idx1(j) + ", f" + idx1(k) + idx1(l) + "}");
                }
    for (int i = 0; i < n; ++i) {
        const LocalFunction xi = coordinate_function(LocalId::x(i), t.p);
        for (int j = 0; j < n; ++j) {
            const BracketValue xx = local_bracket(xi, coordinate_function(LocalId::x(j), t.p), P);
            xf.add(make_residual(std::abs(xx.value), xx.scale), "{x" + idx1(i) + ", x" + idx1(j) + "}");
            for (int k = 0; k < n; ++k) {
                const BracketValue v = local_bracket(xi, f[j][k], P);
                const cplx closed = kron(i, k) * t.p.x(i) * t.p.f(j, k);
                xf.add(make_residual(std::abs(v.value - closed), v.scale),
                       "{x" + idx1(i) + ", f" + idx1(j) + idx1(k) + "}");
            }
        }
    }
    return {record("af", ff), record("af.xf", xf)};
}

std::vector<CheckRecord> check_rmatrix(Task& t) {
    const double r = rmatrix_residual(t.p, t.params());
    return {record("rmatrix", Residual{r, r}, "max over n^2 x n^2 entries")};
}

CheckRecord vector_field_record(const std::string& name, const Tangent& rhs, const Tangent& hvf) {
    return record(name, make_residual(max_abs_diff(rhs, hvf), max_entry(rhs)), "(dx, da, db)");
}

std::vector<CheckRecord> check_eom(Task& t) {
    FlowSpec spec;
    spec.kind = HamKind::SpinRS;
    const Tangent hvf =
        hamiltonian_vector_field(t.p, hamiltonian_observable(spec, t.p.d(), t.params().q), t.params());
    return {vector_field_record("eom", rs_rhs(t.p, t.params()), hvf)};
}

std::vector<CheckRecord> check_modified_eom(Task& t) {
    FlowSpec spec;
    spec.kind = HamKind::ModifiedRS;
    const Tangent hvf =
        hamiltonian_vector_field(t.p, hamiltonian_observable(spec, t.p.d(), t.params().q), t.params());
    return {vector_field_record("modified-eom", modified_rhs(t.p, t.params()), hvf)};
}

std::vector<FlowSpec> flow_specs(int d) {
    std::vector<std::string> names = {"trZ:k=1", "trZ:k=2", "trZ:k=3", "trY:k=1", "trY:k=2", "rs", "modified"};
    for (int al = 1; al <= d; ++al)
        for (int k = 1; k <= 2; ++k) names.push_back("trS:alpha=" + std::to_string(al) + ",k=" + std::to_string(k));
    std::vector<FlowSpec> out;
    for (const std::string& s : names) out.push_back(parse_flow_spec(s));
    return out;
}

std::vector<CheckRecord> check_flows(Task& t) {
    const ModelParams& P = t.params();
    const int d = t.p.d();
    const int kmax = t.cfg.effective_kmax();
    SweepResult additivity, moment, conservation, generator, commute;
    const std::vector<Observable> probes = {obs::tr_x(1), obs::tr_x(2), obs::tr_z(2), obs::t(0, 0, 1),
                                            obs::g(0, d - 1, 1), obs::tr_s(1, 2)};
    for (FlowSpec spec : flow_specs(d)) {
        const double limit = conditioned_time_limit(t.m, spec, P);
        for (cplx time : t.cfg.effective_flow_times()) {
            if (std::abs(time) > limit) time *= limit / std::abs(time);
            std::ostringstream tag;
            tag << describe(spec) << " t=" << time;
            spec.time = time;
            const AmbientPoint whole = exact_flow(t.m, spec, P);
            FlowSpec a = spec, b = spec;
            a.time = 0.4 * time;
            b.time = 0.6 * time;
            const AmbientPoint split = exact_flow(exact_flow(t.m, a, P), b, P);
            additivity.add(make_residual(max_abs_diff(whole, split), max_entry(whole)), tag.str());
            const double mr = moment_residual(whole, P);
            moment.add(Residual{mr, mr}, tag.str());
            SweepResult c = conservation_drift(t.m, whole, spec, kmax);
            conservation.add(Residual{c.max_abs, c.max_rel}, tag.str() + " " + c.worst);
        }
        spec.time = 0.0;
        for (size_t i = 0; i < probes.size(); ++i) {
            const Residual r = flow_generator_residual(t.m, spec, probes[i], P);
            generator.add(r, describe(spec) + " probe " + std::to_string(i));
        }
    }
    for (cplx time : t.cfg.effective_flow_times()) {
        FlowSpec z1 = parse_flow_spec("trZ:k=1"), z2 = parse_flow_spec("trZ:k=2");
        z1.time = time;
        z2.time = time;
        const AmbientPoint ab = exact_flow(exact_flow(t.m, z1, P), z2, P);
        const AmbientPoint ba = exact_flow(exact_flow(t.m, z2, P), z1, P);
        commute.add(make_residual(max_abs_diff(ab, ba), max_entry(ab)), "trZ^1 o trZ^2");
    }

    // Exact tr Z flow against the integrated spin RS equations at |t| = 0.1.
    const double theta = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(t.rng);
    const cplx tm = 0.1 * std::polar(1.0, theta);
    const double match = flow_match_residual(t.p, tm, P, 1e-10);
    const LocalPoint end = rk_integrate(RhsKind::SpinRS, t.p, tm, 1e-10, 1e-12, P);
    const cplx h0 = rs_energy(t.p), h1 = rs_energy(end);
    const double energy = std::abs(h1 - h0) / std::max(std::abs(h0), 1e-300);
    const double spec_drift = spectrum_drift(slice_z(t.p, P.q), slice_z(end, P.q));

    // n = 1 closed forms: x e^{t Z11} for the exact flow and x e^{2 f11 t} for the integrator.
    ModelParams p1 = P;
    p1.n = 1;
    const LocalPoint s = sample_regular(p1, t.rng);
    const cplx f11 = s.f(0, 0);
    SweepResult scalar;
    for (cplx time : t.cfg.effective_flow_times()) {
        FlowSpec z = parse_flow_spec("trZ:k=1");
        z.time = time;
        const cplx z11 = P.q * f11 / (1.0 - P.q);
        const LocalPoint ex = project(exact_flow(lift(s, p1), z, p1), p1).first;
        const cplx want = s.x(0) * std::exp(time * z11);
        scalar.add(make_residual(std::abs(ex.x(0) - want), std::abs(want)), "exact trZ");
        const LocalPoint rk = rk_integrate(RhsKind::SpinRS, s, 0.1 * time, 1e-10, 1e-12, p1);
        const cplx want_rk = s.x(0) * std::exp(2.0 * f11 * 0.1 * time);
        scalar.add(make_residual(std::abs(rk.x(0) - want_rk), std::abs(want_rk)), "rk spin RS");
    }

    std::vector<CheckRecord> out = {
        record("flows.additivity", additivity),   record("flows.moment", moment),
        record("flows.conservation", conservation), record("flows.generator", generator),
        record("flows.commute", commute),
        record("flows.match", make_residual(match, max_entry(t.p)), "|t| = 0.1"),
        record("flows.energy", Residual{std::abs(h1 - h0), energy}, "|t| = 0.1"),
        record("flows.isospectral", Residual{spec_drift, spec_drift}, "spectrum of Z, |t| = 0.1"),
        record("flows.scalar", scalar)};
    return out;
}

std::vector<CheckRecord> check_eqtt(Task& t) { return {record("eqtt", eqtt_sweep(t.m, 6))}; }

std::vector<CheckRecord> check_commute(Task& t) {
    const int n = t.p.n(), d = t.p.d();
    const CommutationReport rep = commutation_suite(t.m, t.params(), t.rng);
    std::vector<CheckRecord> out;
    for (const auto& [family, sweep] : rep.families) out.push_back(record("commute." + family, sweep));
    if (d >= 2 && n >= 2)
        out.push_back(record("commute.witness", Residual{rep.witness, rep.witness}, "{t^1_11, r_k1}, k <= 3",
                             Bound::Lower));
    SweepResult hk, trs;
    for (int k = 1; k <= std::min(n, 4); ++k) hk.add(hk_in_q_residual(t.m, k, t.params()), "k=" + std::to_string(k));
    for (int k = 1; k <= n + 1; ++k) trs.add(trs_moment_residual(t.m, k, t.params()), "k=" + std::to_string(k));
    out.push_back(record("commute.hk_in_q", hk));
    out.push_back(record("commute.trs_moment", trs));
    return out;
}

std::vector<CheckRecord> check_ranks(Task& t) {
    std::vector<CheckRecord> out;
    for (RankFamily fam : {RankFamily::AlgebraQ, RankFamily::GelfandTsetlin}) {
        RankCertificate c;
        std::string note;
        try {
            c = rank_certificate(t.p, fam, t.params());
        } catch (const RankAmbiguous&) {
            c = certify_rank(fam, t.params(), t.rng);
            note = ", resampled";
        }
        const double miss = std::abs(c.rank - c.expected);
        CheckRecord r = record(std::string("ranks.") + family_name(fam), Residual{miss, miss}, "", Bound::Integer);
        r.detail = "rank " + std::to_string(c.rank) + ", expected " + std::to_string(c.expected) + ", gap " +
                   (std::isfinite(c.gap) ? sci(c.gap) : std::string("inf")) + note;
        out.push_back(r);
    }
    return out;
}

std::vector<CheckRecord> check_salpha(Task& t) { return {record("salpha", salpha_identity_residuals(t.m))}; }

std::vector<CheckRecord> check_lempoisson(Task& t) {
    return {record("lempoisson", lempoisson_residuals(t.m, t.p.n() + 1))};
}

std::vector<CheckRecord> check_z12f(Task& t) {
    const double r = z12f_residual(t.p, t.params());
    return {record("z12f", make_residual(r, t.m.Z.cwiseAbs().maxCoeff()), "all i, j")};
}

using CheckFn = std::function<std::vector<CheckRecord>(Task&)>;

const std::map<std::string, CheckFn>& check_table() {
    static const std::map<std::string, CheckFn> table = {
        {"moment", check_moment},   {"roundtrip", check_roundtrip},
        {"jacobi", check_jacobi},   {"pullback", check_pullback},
        {"af", check_af},           {"rmatrix", check_rmatrix},
        {"eom", check_eom},         {"modified-eom", check_modified_eom},
        {"flows", check_flows},     {"eqtt", check_eqtt},
        {"commute", check_commute}, {"ranks", check_ranks},
        {"salpha", check_salpha},   {"lempoisson", check_lempoisson},
        {"z12f", check_z12f}};
    return table;
}

const char* bound_name(Bound b) {
    switch (b) {
        case Bound::Upper: return "upper";
        case Bound::Lower: return "lower";
        case Bound::Integer: return "integer";
    }
    return "upper";
}

}  // namespace

const std::vector<std::string>& registered_checks() { return kChecks; }

ToleranceRegistry ToleranceRegistry::defaults() {
    ToleranceRegistry t;
    t.values_ = {{"moment", 1e-11},
                 {"roundtrip", 1e-9},
                 {"jacobi", 1e-8},
                 {"jacobi.ambient", 1e-3},
                 {"pullback", 1e-8},
                 {"af", 1e-9},
                 {"rmatrix", 1e-8},
                 {"eom", 1e-9},
                 {"modified-eom", 1e-9},
                 {"flows", 1e-9},
                 {"flows.generator", 1e-8},
                 {"flows.match", 1e-6},
                 {"flows.energy", 1e-7},
                 {"flows.isospectral", 1e-7},
                 {"flows.scalar", 1e-8},
                 {"eqtt", 1e-8},
                 {"commute", 1e-8},
                 {"commute.hk_in_q", 1e-9},
                 {"commute.witness", 1e-3},
                 {"ranks", 0.0},
                 {"salpha", 1e-8},
                 {"lempoisson", 1e-9},
                 {"z12f", 1e-12}};
    return t;
}

double ToleranceRegistry::get(const std::string& name) const {
    auto it = values_.find(name);
    if (it != values_.end()) return it->second;
    it = values_.find(name.substr(0, name.find('.')));
    if (it != values_.end()) return it->second;
    throw InvalidParams("no tolerance registered for " + name);
}

void ToleranceRegistry::set(const std::string& name, double value) {
    const std::string check = name.substr(0, name.find('.'));
    if (std::find(kChecks.begin(), kChecks.end(), check) == kChecks.end())
        throw InvalidParams("unknown check in tolerance override: " + name);
    if (!(value >= 0.0) || !std::isfinite(value)) throw InvalidParams("tolerance must be finite and nonnegative");
    values_[name] = value;
}

void SuiteConfig::validate() const {
    params.validate();
    if (points < 1) throw InvalidParams("points must be at least 1");
    if (workers < 1) throw InvalidParams("workers must be at least 1");
    if (kmax < 0) throw InvalidParams("kmax must be nonnegative");
    for (const std::string& c : checks)
        if (std::find(kChecks.begin(), kChecks.end(), c) == kChecks.end())
            throw InvalidParams("unknown check: " + c);
    for (cplx t : flow_times)
        if (!std::isfinite(t.real()) || !std::isfinite(t.imag())) throw InvalidParams("flow time must be finite");
}

std::vector<cplx> SuiteConfig::effective_flow_times() const {
    if (!flow_times.empty()) return flow_times;
    return {cplx(0.3, 0.2), cplx(-0.5, 0.4), cplx(0.8, -0.6)};
}

void finalize(CheckRecord& r, const ToleranceRegistry& tol) {
    r.tolerance = tol.get(r.name);
    switch (r.bound) {
        case Bound::Upper:
            r.expected = "rel <= " + sci(r.tolerance);
            r.pass = r.reason.empty() && r.rel_residual <= r.tolerance;
            break;
        case Bound::Lower:
            r.expected = "rel > " + sci(r.tolerance);
            r.pass = r.reason.empty() && r.rel_residual > r.tolerance;
            break;
        case Bound::Integer:
            r.expected = "rank equality";
            r.pass = r.reason.empty() && r.abs_residual == 0.0;
            break;
    }
    // NaN residuals never pass.
    if (std::isnan(r.rel_residual) || std::isnan(r.abs_residual)) r.pass = false;
}

VerificationReport run_suite(const SuiteConfig& config) {
    config.validate();
    const std::vector<std::string> checks = config.checks.empty() ? kChecks : config.checks;

    std::mt19937_64 rng(config.params.seed);
    std::vector<LocalPoint> points;
    for (int i = 0; i < config.points; ++i) points.push_back(sample_regular(config.params, rng));
    std::vector<std::string> digests;
    for (const LocalPoint& p : points) digests.push_back(point_digest(p));

    const size_t ntasks = checks.size() * points.size();
    std::vector<std::vector<CheckRecord>> results(ntasks);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t task = next++; task < ntasks; task = next++) {
            const std::string& name = checks[task / points.size()];
            const int ip = static_cast<int>(task % points.size());
            std::vector<CheckRecord>& out = results[task];
            try {
                Task t{config, points[ip], std::mt19937_64(task_seed(config.params.seed, name, ip)),
                       lift(points[ip], config.params)};
                out = check_table().at(name)(t);
            } catch (const std::exception& e) {
                CheckRecord r;
                r.name = name;
                r.reason = e.what();
                r.abs_residual = r.rel_residual = std::nan("");
                out = {r};
            }
            for (CheckRecord& r : out) {
                r.point_digest = digests[ip];
                finalize(r, config.tolerances);
            }
        }
    };
    const int nworkers = std::min<int>(config.workers, static_cast<int>(ntasks));
    if (nworkers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nworkers; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    VerificationReport rep;
    for (auto& rs : results)
        for (CheckRecord& r : rs) {
            ++rep.total;
            (r.pass ? rep.passed : rep.failed)++;
            rep.records.push_back(std::move(r));
        }
    json tol = json::object();
    for (const auto& [k, v] : config.tolerances.values()) tol[k] = v;
    json times = json::array();
    for (cplx t : config.effective_flow_times()) times.push_back(to_json(t));
    rep.environment = {{"version", kVersion},
                       {"seed", config.params.seed},
                       {"params", to_json(config.params)},
                       {"points", config.points},
                       {"kmax", config.effective_kmax()},
                       {"flow_times", times},
                       {"checks", checks},
                       {"tolerances", tol}};
    return rep;
}

json to_json(const CheckRecord& r) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j = {{"check", r.name},
              {"indices", r.indices},
              {"point_digest", r.point_digest},
              {"abs_residual", num(r.abs_residual)},
              {"rel_residual", num(r.rel_residual)},
              {"bound", bound_name(r.bound)},
              {"tolerance", r.tolerance},
              {"expected", r.expected},
              {"pass", r.pass}};
    if (!r.detail.empty()) j["detail"] = r.detail;
    if (!r.reason.empty()) j["reason"] = r.reason;
    return j;
}

json to_json(const VerificationReport& report) {
    json recs = json::array();
    for (const CheckRecord& r : report.records) recs.push_back(to_json(r));
    return {{"schema", kSchema},
            {"kind", "VerificationReport"},
            {"records", recs},
            {"summary", {{"total", report.total}, {"passed", report.passed}, {"failed", report.failed}}},
            {"environment", report.environment}};
}

std::string summary_text(const VerificationReport& report) {
    struct Agg {
        int total = 0, failed = 0;
        const CheckRecord* worst = nullptr;
    };
    std::vector<std::string> order;
    std::map<std::string, Agg> agg;
    for (const CheckRecord& r : report.records) {
        if (!agg.count(r.name)) order.push_back(r.name);
        Agg& a = agg[r.name];
        ++a.total;
        if (!r.pass) ++a.failed;
        const bool worse = !a.worst || (r.bound == Bound::Lower ? r.rel_residual < a.worst->rel_residual
                                                                : !(r.rel_residual <= a.worst->rel_residual));
        if (worse) a.worst = &r;
    }
    std::ostringstream s;
    for (const std::string& name : order) {
        const Agg& a = agg[name];
        s << (a.failed ? "FAIL " : "pass ") << std::left << std::setw(24) << name << std::right << std::setw(4)
          << a.total - a.failed << "/" << a.total << "  worst " << sci(a.worst->rel_residual) << " ("
          << a.worst->expected << ")";
        if (!a.worst->detail.empty()) s << "  " << a.worst->detail;
        if (!a.worst->reason.empty()) s << "  error: " << a.worst->reason;
        s << "\n";
    }
    s << report.passed << "/" << report.total << " records passed\n";
    return s.str();
}

}  // namespace spinrs
