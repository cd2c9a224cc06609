#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "spinrs/dynamics.hpp"
#include "spinrs/integrability.hpp"
#include "spinrs/serialize.hpp"
#include "spinrs/suite.hpp"

using namespace spinrs;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Common {
    int n = 3;
    int d = 2;
    std::string q;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol_identity;
    std::optional<double> tol_rank;

    ModelParams params() const {
        ModelParams p;
        p.n = n;
        p.d = d;
        if (!q.empty()) p.q = parse_complex(q);
        p.seed = resolve_seed();
        apply_tolerances(p);
        p.validate();
        return p;
    }

    void apply_tolerances(ModelParams& p) const {
        if (tol_identity) p.tol_identity = *tol_identity;
        if (tol_rank) p.tol_rank = *tol_rank;
    }

    std::uint64_t resolve_seed() const {
        if (seed) return *seed;
        if (const char* env = std::getenv("SPINRS_SEED")) {
            try {
                size_t used = 0;
                const unsigned long long v = std::stoull(env, &used);
                if (used == std::string(env).size()) return v;
            } catch (const std::exception&) {
            }
            throw InvalidParams(std::string("SPINRS_SEED is not an unsigned integer: ") + env);
        }
        return 1;
    }
};

void emit(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-")
        std::cout << content;
    else
        write_file_atomic(out, content);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// A point from --point (params taken from the file) or sampled from the flags.
std::pair<LocalPoint, ModelParams> load_or_sample(const std::string& path, const Common& c) {
    if (path.empty()) {
        ModelParams p = c.params();
        return {sample_regular(p), p};
    }
    std::string kind;
    json doc = read_document(path, &kind);
    ModelParams p = params_from_json(doc.at("params"));
    c.apply_tolerances(p);
    if (kind == "LocalPoint") return {local_point_from_json(doc), p};
    if (kind == "AmbientPoint") return {project(ambient_point_from_json(doc), p).first, p};
    throw InvalidParams(path + ": expected a LocalPoint or AmbientPoint document, got '" + kind + "'");
}

json residual_record(const std::string& check, const std::string& indices, const std::string& digest, double abs,
                     double rel, bool pass) {
    return {{"check", check},   {"indices", indices},  {"point_digest", digest},
            {"abs_residual", abs}, {"rel_residual", rel}, {"pass", pass}};
}

int cmd_sample(const Common& c, int count, const std::string& out) {
    ModelParams p = c.params();
    std::mt19937_64 rng(p.seed);
    if (count == 1) {
        emit(out, dump(to_json(sample_regular(p, rng), p)));
        return 0;
    }
    json list = json::array();
    for (int i = 0; i < count; ++i) list.push_back(to_json(sample_regular(p, rng), p));
    emit(out, dump({{"schema", kSchema}, {"kind", "LocalPointList"}, {"points", list}}));
    return 0;
}

int cmd_lift(const Common& c, const std::string& point, const std::string& out) {
    auto [p, params] = load_or_sample(point, c);
    const AmbientPoint m = lift(p, params);
    const double r = moment_residual(m, params);
    const bool pass = r <= ToleranceRegistry::defaults().get("moment");
    emit(out, dump(to_json(m, params)));
    std::cerr << residual_record("moment", "", point_digest(p), r * m.Z.norm(), r, pass).dump() << "\n";
    return pass ? 0 : kExitFail;
}

int cmd_project(const Common& c, const std::string& point, const std::string& out) {
    if (point.empty()) throw InvalidParams("project needs --point with an AmbientPoint document");
    std::string kind;
    json doc = read_document(point, &kind);
    if (kind != "AmbientPoint") throw InvalidParams(point + ": expected an AmbientPoint document");
    ModelParams params = params_from_json(doc.at("params"));
    c.apply_tolerances(params);
    const AmbientPoint m = ambient_point_from_json(doc);
    auto [p, frame] = project(m, params);
    json j = to_json(p, params);
    j["frame"] = to_json(frame);
    emit(out, dump(j));
    return 0;
}

int cmd_flow(const Common& c, const std::string& ham, const std::string& time_text, const std::string& method,
             const std::string& point, int samples, double rk_tol, const std::string& out) {
    FlowSpec spec = parse_flow_spec(ham);
    const cplx time = parse_complex(time_text);
    if (samples < 1) throw InvalidParams("samples must be at least 1");
    if (method != "exact" && method != "rk") throw InvalidParams("method must be exact or rk");
    auto [p0, params] = load_or_sample(point, c);
    if (spec.level > params.d) throw InvalidParams("flow level exceeds d");
    const int kmax = params.n + 2;
    const AmbientPoint m0 = lift(p0, params);

    // Integrator time for the rk method: the spin RS field is the tr Z field
    // scaled by 2(q^-1 - 1), the modified field is the tr Y field.
    RhsKind rhs = RhsKind::SpinRS;
    cplx rk_scale = 1.0;
    if (method == "rk") {
        if (spec.kind == HamKind::TrZPow && spec.k == 1)
            rk_scale = 1.0 / (2.0 * (1.0 / params.q - 1.0));
        else if (spec.kind == HamKind::ModifiedRS || (spec.kind == HamKind::TrYPow && spec.k == 1))
            rhs = RhsKind::ModifiedRS;
        else if (spec.kind != HamKind::SpinRS)
            throw InvalidParams("the rk method integrates rs, modified, trZ:k=1 and trY:k=1 only");
    }

    json states = json::array();
    std::map<std::string, double> drift;
    double worst = 0.0;
    for (int j = 0; j <= samples; ++j) {
        const cplx tj = time * (static_cast<double>(j) / samples);
        AmbientPoint mj;
        LocalPoint pj;
        if (method == "exact") {
            FlowSpec s = spec;
            s.time = tj;
            mj = exact_flow(m0, s, params);
            pj = project(mj, params).first;
        } else {
            pj = rk_integrate(rhs, p0, tj * rk_scale, rk_tol, rk_tol * 1e-2, params);
            mj = lift(pj, params);
        }
        const auto families = conservation_by_family(m0, mj, spec, kmax);
        double here = 0.0;
        std::string which;
        for (const auto& [family, s] : families) {
            drift[family] = std::max(drift[family], s.max_rel);
            if (s.max_rel >= here) {
                here = s.max_rel;
                which = s.worst;
            }
        }
        worst = std::max(worst, here);
        states.push_back({{"time", to_json(tj)},
                          {"local", to_json(pj, params)},
                          {"moment_residual", moment_residual(mj, params)},
                          {"integrals", to_json(integral_table(mj, kmax))},
                          {"conserved_drift", here},
                          {"worst_quantity", which}});
    }
    const double tol = method == "exact" ? ToleranceRegistry::defaults().get("flows.conservation")
                                         : ToleranceRegistry::defaults().get("flows.energy");
    const bool pass = worst <= tol;
    json traj = {{"schema", kSchema},  {"kind", "FlowTrajectory"},       {"hamiltonian", describe(spec)},
                 {"method", method},   {"time", to_json(time)},          {"params", to_json(params)},
                 {"samples", states},  {"max_conserved_drift", worst},   {"pass", pass}};
    if (!out.empty()) write_file_atomic(out, dump(traj));

    std::cout << "flow " << describe(spec) << " (" << method << "), " << samples << " steps to t = " << time_text
              << "\n";
    std::cout << "conserved-quantity drift (relative, max over samples)\n";
    for (const auto& [family, v] : drift) std::cout << "  " << std::left << std::setw(12) << family << v << "\n";
    std::cout << (pass ? "pass" : "FAIL") << ": max drift " << worst << " (tolerance " << tol << ")\n";
    return pass ? 0 : kExitFail;
}

int cmd_integrals(const Common& c, const std::string& point, int kmax, const std::string& out) {
    auto [p, params] = load_or_sample(point, c);
    if (kmax <= 0) kmax = params.n + 2;
    emit(out, to_csv(integral_table(p, kmax, params)));
    return 0;
}

int cmd_rank(const Common& c, const std::string& family_text, const std::string& point, const std::string& out) {
    const RankFamily family = parse_family(family_text);
    RankCertificate cert;
    std::string digest;
    ModelParams params;
    if (point.empty()) {
        params = c.params();
        std::mt19937_64 rng(params.seed);
        cert = certify_rank(family, params, rng);
    } else {
        LocalPoint p;
        std::tie(p, params) = load_or_sample(point, c);
        digest = point_digest(p);
        cert = rank_certificate(p, family, params);
    }
    json j = to_json(cert);
    j["params"] = to_json(params);
    emit(out.empty() ? "-" : out, dump(j));
    const bool pass = cert.expected < 0 || cert.rank == cert.expected;
    const double miss = cert.expected < 0 ? 0.0 : std::abs(cert.rank - cert.expected);
    std::cerr << residual_record(std::string("ranks.") + family_name(family), "rank " + std::to_string(cert.rank),
                                 digest, miss, miss, pass)
                     .dump()
              << "\n";
    return pass ? 0 : kExitFail;
}

int cmd_check(const Common& c, const std::string& name, int points, int kmax, int workers,
              const std::vector<std::string>& tols, const std::vector<std::string>& times, const std::string& out,
              const std::string& output_dir, bool records) {
    SuiteConfig cfg;
    cfg.params = c.params();
    cfg.points = points;
    cfg.kmax = kmax;
    cfg.workers = workers;
    cfg.output_dir = output_dir;
    if (name != "all") cfg.checks = {name};
    for (const std::string& t : times) cfg.flow_times.push_back(parse_complex(t));
    for (const std::string& t : tols) {
        const size_t eq = t.find('=');
        if (eq == std::string::npos) throw InvalidParams("--tol expects name=value, got " + t);
        double v = 0.0;
        try {
            v = std::stod(t.substr(eq + 1));
        } catch (const std::exception&) {
            throw InvalidParams("--tol value is not a number: " + t);
        }
        cfg.tolerances.set(t.substr(0, eq), v);
    }
    cfg.validate();

    const VerificationReport rep = run_suite(cfg);
    std::string path = out;
    if (path.empty() && !output_dir.empty()) path = output_dir + "/report.json";
    if (!path.empty()) write_file_atomic(path, dump(to_json(rep)));
    if (records || name != "all")
        for (const CheckRecord& r : rep.records) std::cout << to_json(r).dump() << "\n";
    std::cout << summary_text(rep);
    return rep.all_passed() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trigonometric spin Ruijsenaars-Schneider phase space: sampling, flows and identity checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common c;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--n", c.n, "number of particles")->check(CLI::PositiveNumber);
        sub->add_option("--d", c.d, "spin dimension")->check(CLI::PositiveNumber);
        sub->add_option("--q", c.q, "coupling, e.g. 0.3+0.4i (default |q| = 1/2, golden-angle argument)");
        sub->add_option("--seed", c.seed, "RNG seed (falls back to SPINRS_SEED, then 1)");
        sub->add_option("--tol-identity", c.tol_identity, "identity-test tolerance");
        sub->add_option("--tol-rank", c.tol_rank, "singular-value cutoff ratio");
    };

    std::string point, out, ham, time = "0.1", method = "exact", family = "AlgebraQ", check_name, output_dir;
    int count = 1, samples = 10, kmax = 0, points = 10, workers = 1;
    double rk_tol = 1e-10;
    bool records = false;
    std::vector<std::string> tols, times;

    auto* sample = app.add_subcommand("sample", "draw regular points in slice coordinates");
    add_common(sample);
    sample->add_option("--count", count, "number of points")->check(CLI::PositiveNumber);
    sample->add_option("--out", out, "output file (stdout if omitted)");

    auto* lift_cmd = app.add_subcommand("lift", "lift a slice point to matrix data");
    add_common(lift_cmd);
    lift_cmd->add_option("--point", point, "LocalPoint JSON (sampled if omitted)");
    lift_cmd->add_option("--out", out, "output file (stdout if omitted)");

    auto* project_cmd = app.add_subcommand("project", "recover slice coordinates from matrix data");
    add_common(project_cmd);
    project_cmd->add_option("--point", point, "AmbientPoint JSON")->required();
    project_cmd->add_option("--out", out, "output file (stdout if omitted)");

    auto* flow = app.add_subcommand("flow", "integrate a flow and tabulate conserved quantities");
    add_common(flow);
    flow->add_option("--ham", ham, "trZ:k=K, trY:k=K, trS:alpha=A,k=K, rs or modified")->required();
    flow->add_option("--time", time, "complex end time");
    flow->add_option("--method", method, "exact or rk")->check(CLI::IsMember({"exact", "rk"}));
    flow->add_option("--point", point, "LocalPoint or AmbientPoint JSON (sampled if omitted)");
    flow->add_option("--samples", samples, "number of steps along the segment")->check(CLI::PositiveNumber);
    flow->add_option("--rk-tol", rk_tol, "integrator relative tolerance");
    flow->add_option("--out", out, "trajectory JSON");

    auto* integrals = app.add_subcommand("integrals", "first integrals as CSV");
    add_common(integrals);
    integrals->add_option("--point", point, "LocalPoint or AmbientPoint JSON (sampled if omitted)");
    integrals->add_option("--kmax", kmax, "largest power (default n + 2)");
    integrals->add_option("--out", out, "CSV file (stdout if omitted)");

    auto* rank = app.add_subcommand("rank", "numerical rank certificate of a function family");
    add_common(rank);
    rank->add_option("--family", family, "AlgebraQ, GelfandTsetlin (GT) or SpectralKZ (KZ)");
    rank->add_option("--point", point, "LocalPoint or AmbientPoint JSON (sampled with retries if omitted)");
    rank->add_option("--out", out, "certificate JSON (stdout if omitted)");

    auto* check = app.add_subcommand("check", "run registered identity checks");
    add_common(check);
    std::vector<std::string> names = registered_checks();
    names.push_back("all");
    check->add_option("name", check_name, "check name or all")->required()->check(CLI::IsMember(names));
    check->add_option("--points", points, "random points per check")->check(CLI::PositiveNumber);
    check->add_option("--kmax", kmax, "largest power in integral tables (default n + 2)");
    check->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    check->add_option("--tol", tols, "tolerance override name=value, repeatable");
    check->add_option("--flow-time", times, "flow time, repeatable");
    check->add_option("--out", out, "report JSON");
    check->add_option("--output-dir", output_dir, "directory for report.json");
    check->add_flag("--records", records, "print every record as a JSON line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sample) return cmd_sample(c, count, out);
        if (*lift_cmd) return cmd_lift(c, point, out);
        if (*project_cmd) return cmd_project(c, point, out);
        if (*flow) return cmd_flow(c, ham, time, method, point, samples, rk_tol, out);
        if (*integrals) return cmd_integrals(c, point, kmax, out);
        if (*rank) return cmd_rank(c, family, point, out);
        if (*check) return cmd_check(c, check_name, points, kmax, workers, tols, times, out, output_dir, records);
    } catch (const InvalidParams& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SpinError& e) {
        std::cerr << error_kind_name(e.kind()) << ": " << e.what() << "\n";
        return kExitFail;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
    return kExitConfig;
}
