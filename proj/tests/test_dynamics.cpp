#include <gtest/gtest.h>

#include "helpers.hpp"
#include "spinrs/dynamics.hpp"

using namespace spinrs;
using namespace spinrs::testing;

namespace {

FlowSpec spec_at(const std::string& text, cplx t) {
    FlowSpec s = parse_flow_spec(text);
    s.time = t;
    return s;
}

}  // namespace

TEST(Eom, ScalarClosedForms) {
    const cplx q(0.5, 0.2);
    const ModelParams P = ModelParams::make(1, 1, q);
    const LocalPoint p = LocalPoint::make(vec({cplx(1.3, 0.4)}), mat({{1.0}}), mat({{cplx(0.7, -0.2)}}));
    const cplx x = p.x(0), f = p.f(0, 0), b = p.b(0, 0);
    const Tangent rs = rs_rhs(p, P);
    EXPECT_LE(rel_err(rs.dx(0), 2.0 * f * x), 1e-14);
    EXPECT_LE(std::abs(rs.db(0, 0)), 1e-14);
    const Tangent mod = modified_rhs(p, P);
    EXPECT_LE(rel_err(mod.dx(0), q / (1.0 - q) * x * f), 1e-14);
    EXPECT_LE(rel_err(mod.db(0, 0), -b / x), 1e-14);
}

TEST(Eom, SpinRowsStayNormalized) {
    const ModelParams P = ModelParams::make(4, 3, default_q(), 2);
    const LocalPoint p = sample_regular(P);
    const Tangent t = rs_rhs(p, P);
    for (int i = 0; i < 4; ++i) EXPECT_LE(std::abs(t.da.row(i).sum()), 1e-12);
}

TEST(Eom, ZeroSpinsAreStatic) {
    const ModelParams P = half_q(2, 1);
    LocalPoint p = two_particle_point();
    p.b.setZero();
    const Tangent t = rs_rhs(p, P);
    EXPECT_EQ(t.dx.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.db.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Eom, HamiltonianVectorFields) {
    for (int n = 1; n <= 3; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = ModelParams::make(n, d, default_q(), 30 + n + d);
            const LocalPoint p = sample_regular(P);
            FlowSpec rs;
            rs.kind = HamKind::SpinRS;
            FlowSpec mod;
            mod.kind = HamKind::ModifiedRS;
            const Tangent a = rs_rhs(p, P);
            const Tangent b = hamiltonian_vector_field(p, hamiltonian_observable(rs, d, P.q), P);
            EXPECT_LE(max_abs_diff(a, b), 1e-9 * std::max(1.0, a.dx.cwiseAbs().maxCoeff()));
            const Tangent c = modified_rhs(p, P);
            const Tangent e = hamiltonian_vector_field(p, hamiltonian_observable(mod, d, P.q), P);
            EXPECT_LE(max_abs_diff(c, e), 1e-9 * std::max(1.0, c.dx.cwiseAbs().maxCoeff()));
        }
}

TEST(Lax, ClosedForms) {
    const cplx q(0.4, 0.3);
    const ModelParams P1 = ModelParams::make(1, 2, q);
    const LocalPoint s = sample_regular(P1);
    EXPECT_LE(rel_err(lax_matrix(s, P1)(0, 0), 2.0 * s.f(0, 0) / (1.0 - q)), 1e-14);

    const ModelParams P = ModelParams::make(3, 2, q, 4);
    const LocalPoint p = sample_regular(P);
    const CMat L = lax_matrix(p, P);
    EXPECT_LE(rel_err((1.0 - q) * L.trace(), 2.0 * p.fmat().trace()), 1e-12);
    const AmbientPoint m = lift(p, P);
    EXPECT_LE(rel_err(L, CMat(2.0 / q * m.X * m.Z * m.X.inverse())), 1e-11);
    EXPECT_LE(rel_err(spectral_lax(p, 0.0, P), m.Z), 1e-14);
    const auto [S, S2] = s_matrix_pair(m, P);
    EXPECT_LE(rel_err(S, S2), 1e-10);
    const cplx eta(0.2, 0.1);
    EXPECT_LE(rel_err(spectral_lax(p, eta, P), CMat(m.Z + eta * S)), 1e-11);
}

TEST(Lax, EnergyMatchesTrace) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 5);
    const LocalPoint p = sample_regular(P);
    EXPECT_LE(rel_err(rs_energy(p), 2.0 * p.fmat().trace()), 1e-14);
    const AmbientPoint m = lift(p, P);
    EXPECT_LE(rel_err(rs_energy(p), 2.0 * (1.0 / P.q - 1.0) * m.Z.trace()), 1e-11);
}

TEST(FlowSpecs, ParseAndDescribe) {
    for (const std::string s : {"trZ:k=2", "trY:k=1", "trS:alpha=2,k=1", "rs", "modified"})
        EXPECT_EQ(parse_flow_spec(describe(parse_flow_spec(s))).kind, parse_flow_spec(s).kind);
    const FlowSpec f = parse_flow_spec("trS:alpha=2,k=3");
    EXPECT_EQ(f.level, 2);
    EXPECT_EQ(f.k, 3);
    EXPECT_THROW(parse_flow_spec("trW:k=1"), InvalidParams);
    EXPECT_THROW(parse_flow_spec("trZ:k=0"), InvalidParams);
}

TEST(ExactFlow, TimeZeroIsIdentity) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 6);
    const AmbientPoint m = lift(sample_regular(P), P);
    for (const std::string s : {"trZ:k=2", "trY:k=1", "trS:alpha=1,k=2", "rs", "modified"})
        EXPECT_LE(max_abs_diff(exact_flow(m, spec_at(s, 0.0), P), m), 1e-13) << s;
}

TEST(ExactFlow, ScalarSignOracle) {
    const cplx q(0.5, 0.0);
    const ModelParams P = ModelParams::make(1, 1, q);
    const LocalPoint p = LocalPoint::make(vec({cplx(1.2, 0.3)}), mat({{1.0}}), mat({{cplx(0.4, 0.5)}}));
    const cplx z11 = q * p.f(0, 0) / (1.0 - q);
    for (cplx t : {cplx(0.3, 0.0), cplx(-0.5, 0.7)}) {
        const LocalPoint r = project(exact_flow(lift(p, P), spec_at("trZ:k=1", t), P), P).first;
        EXPECT_LE(rel_err(r.x(0), p.x(0) * std::exp(t * z11)), 1e-13);
    }
}

TEST(ExactFlow, AdditiveAndOnTheFiber) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 7);
    const AmbientPoint m = lift(sample_regular(P), P);
    const cplx t(0.5, -0.4);
    for (const std::string s : {"trZ:k=1", "trZ:k=3", "trY:k=2", "trS:alpha=1,k=1", "trS:alpha=2,k=2"}) {
        const AmbientPoint whole = exact_flow(m, spec_at(s, t), P);
        const AmbientPoint split = exact_flow(exact_flow(m, spec_at(s, 0.3 * t), P), spec_at(s, 0.7 * t), P);
        EXPECT_LE(max_abs_diff(whole, split), 1e-9 * std::max(1.0, whole.Z.cwiseAbs().maxCoeff())) << s;
        EXPECT_LE(moment_residual(whole, P), 1e-9) << s;
    }
}

TEST(ExactFlow, GeneratorIsTheBracket) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 8);
    const AmbientPoint m = lift(sample_regular(P), P);
    for (const std::string s : {"trZ:k=1", "trZ:k=2", "trY:k=1", "trS:alpha=1,k=2", "rs"})
        for (const Observable& f : {obs::tr_x(1), obs::g(0, 1, 1), obs::t(1, 0, 1)})
            EXPECT_LE(flow_generator_residual(m, spec_at(s, 0.0), f, P).rel, 1e-8) << s;
}

TEST(ExactFlow, ConditionedTimeLimit) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 9);
    const AmbientPoint m = lift(sample_regular(P), P);
    const FlowSpec s = spec_at("trZ:k=2", 0.0);
    const double lim = conditioned_time_limit(m, s, P);
    EXPECT_GT(lim, 0.0);
    EXPECT_NEAR(conditioned_time_limit(m, s, P, 4.0), lim / 2.0, 1e-12 * lim);
}

TEST(Integrator, TimeZeroAndScalarOracle) {
    const ModelParams P = ModelParams::make(1, 2, default_q(), 10);
    const LocalPoint p = sample_regular(P);
    EXPECT_EQ(max_abs_diff(rk_integrate(RhsKind::SpinRS, p, 0.0, 1e-10, 1e-12, P), p), 0.0);
    const cplx t(0.4, -0.3);
    const LocalPoint r = rk_integrate(RhsKind::SpinRS, p, t, 1e-10, 1e-12, P);
    EXPECT_LE(rel_err(r.x(0), p.x(0) * std::exp(2.0 * p.f(0, 0) * t)), 1e-9);
}

TEST(Integrator, EnergyAndExactMatch) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 11);
    const LocalPoint p = sample_regular(P);
    RkStats st;
    const LocalPoint r = rk_integrate(RhsKind::SpinRS, p, cplx(0.0, 0.1), 1e-10, 1e-12, P, &st);
    EXPECT_GT(st.accepted, 0);
    EXPECT_LE(rel_err(rs_energy(r), rs_energy(p)), 1e-8);
    EXPECT_LE(flow_match_residual(p, cplx(0.06, 0.08), P), 1e-6);
    EXPECT_LE(aligned_distance(p, p), 0.0);
}

TEST(Integrator, ModifiedEnergy) {
    const ModelParams P = ModelParams::make(2, 2, default_q(), 12);
    const LocalPoint p = sample_regular(P);
    const LocalPoint r = rk_integrate(RhsKind::ModifiedRS, p, cplx(0.05, 0.05), 1e-10, 1e-12, P);
    EXPECT_LE(rel_err(modified_energy(r, P.q), modified_energy(p, P.q)), 1e-8);
}
