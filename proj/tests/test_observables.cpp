#include <gtest/gtest.h>

#include "helpers.hpp"
#include "spinrs/observables.hpp"

using namespace spinrs;
using namespace spinrs::testing;

namespace {

AmbientPoint sampled(int n, int d, std::uint64_t seed = 1) {
    const ModelParams P = ModelParams::make(n, d, default_q(), seed);
    return lift(sample_regular(P), P);
}

CMat mpow(const CMat& m, int k) {
    CMat r = CMat::Identity(m.rows(), m.cols());
    for (int i = 0; i < k; ++i) r = r * m;
    return r;
}

}  // namespace

TEST(Observables, ElementaryValues) {
    const AmbientPoint m1 = lift(scalar_point(), half_q(1, 1));
    EXPECT_NEAR(std::abs(eval(obs::t(0, 0, 0), m1) - 1.0), 0.0, 1e-15);
    const AmbientPoint m2 = lift(two_particle_point(), half_q(2, 1));
    EXPECT_NEAR(std::abs(eval(obs::tr_x(1), m2) - 5.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(eval(obs::tr_z(0), m2) - 2.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(eval(obs::tr_z(1), m2) - 3.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(eval(obs::tr_z(2), m2) - 11.0), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(eval(obs::tr_x(-1), m2) - (0.5 + 1.0 / 3.0)), 0.0, 1e-14);
}

TEST(Observables, MatchDirectMatrixFormulas) {
    const AmbientPoint m = sampled(3, 2, 5);
    const CMat S1 = (CMat::Identity(3, 3) + m.W[0] * m.V[0]) * m.Z;
    const CMat S2 = (CMat::Identity(3, 3) + m.W[1] * m.V[1]) * S1;
    EXPECT_LE(rel_err(eval(obs::tr_s(2, 3), m), mpow(S2, 3).trace()), 1e-11);
    EXPECT_LE(rel_err(eval(obs::t(1, 0, 2), m), (m.V[0] * mpow(m.Z, 2) * m.W[1])(0, 0)), 1e-12);
    // A_2 B_2 = W_2 V_2 S_1
    EXPECT_LE(rel_err(eval(obs::g(1, 1, 2), m), (m.W[1] * m.V[1] * S1 * mpow(m.X, 2)).trace()), 1e-11);
    const CMat Y = m.Z - m.X.inverse();
    EXPECT_LE(rel_err(eval(obs::tr_y(3), m), mpow(Y, 3).trace()), 1e-11);
    const cplx eta(0.3, -0.2);
    EXPECT_LE(rel_err(eval(obs::tr_zeta(eta, 3, 2), m), mpow(m.Z + eta * S2, 3).trace()), 1e-11);
}

TEST(Observables, SpinSumsAtSlice) {
    const ModelParams P = ModelParams::make(3, 3, default_q(), 8);
    const LocalPoint p = sample_regular(P);
    const AmbientPoint m = lift(p, P);
    for (int al = 0; al < 3; ++al)
        for (int be = 0; be < 3; ++be) {
            const cplx want = p.a.col(al).cwiseProduct(p.b.col(be)).sum();
            EXPECT_LE(rel_err(eval(obs::g(al, be, 0), m), want), 1e-11);
        }
}

TEST(Observables, TraceS1IsHPlusT) {
    const AmbientPoint m = sampled(3, 2, 2);
    EXPECT_LE(rel_err(eval(obs::tr_s(1, 1), m), eval(obs::tr_z(1), m) + eval(obs::t(0, 0, 1), m)), 1e-12);
    const cplx t1 = eval(obs::t(0, 0, 1), m), t2 = eval(obs::t(0, 0, 2), m);
    EXPECT_LE(rel_err(eval(obs::gt(2, 1), m), 2.0 * t2 + t1 * t1), 1e-11);
}

TEST(Observables, GradientOfTraceZPower) {
    const AmbientPoint m = sampled(3, 2, 3);
    for (int k = 1; k <= 4; ++k) {
        const GradientBundle g = grad(obs::tr_z(k), m);
        EXPECT_LE(rel_err(g.dZ, double(k) * mpow(m.Z, k - 1)), 1e-11);
        EXPECT_LE(g.dX.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Observables, GradientsMatchDifferences) {
    const AmbientPoint m = sampled(3, 2, 4);
    const std::vector<Observable> fs = {obs::tr_x(2), obs::tr_x(-1), obs::tr_z(3), obs::tr_y(2),
                                        obs::t(1, 0, 2), obs::g(0, 1, 1), obs::hmix(1, 0, 1, 1),
                                        obs::tr_s(2, 2), obs::kz(3, 1, 2)};
    for (const Observable& f : fs) EXPECT_LE(grad_fd_residual(f, m, 1e-6), 1e-7);
}

TEST(Observables, PowerTermsAgreeWithWords) {
    const AmbientPoint m = sampled(2, 3, 6);
    Observable direct;
    direct.power_terms.push_back(PowerTerm{3, 2, 1.0});
    EXPECT_LE(rel_err(eval(direct, m), eval(obs::tr_s(3, 2), m)), 1e-11);
    const GradientBundle a = grad(direct, m), b = grad(obs::tr_s(3, 2), m);
    EXPECT_LE(rel_err(a.dZ, b.dZ), 1e-11);
    EXPECT_LE(rel_err(CMat(a.dV[1]), CMat(b.dV[1])), 1e-11);
}

TEST(Observables, GaugeInvariant) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 12);
    const AmbientPoint m = lift(sample_regular(P), P);
    std::mt19937_64 rng(12);
    const AmbientPoint gm = act(random_group_element(3, rng), m);
    for (const Observable& f : {obs::tr_x(2), obs::hmix(0, 1, 2, 1), obs::t(0, 1, 3), obs::tr_s(1, 3)})
        EXPECT_LE(rel_err(eval(f, gm), eval(f, m)), 1e-9);
}

TEST(Observables, CyclicCanonicalForm) {
    const LetterSeq w = {Letter::z(), Letter::x(), Letter::rank_one(0, 1), Letter::x_inv()};
    LetterSeq rotated(w.begin() + 2, w.end());
    rotated.insert(rotated.end(), w.begin(), w.begin() + 2);
    EXPECT_EQ(TraceWord::canonical(w), TraceWord::canonical(rotated));
    Observable f = Observable::word(w) - Observable::word(rotated);
    const AmbientPoint m = sampled(2, 2);
    EXPECT_LE(std::abs(eval(f, m)), 1e-13);
}

TEST(Observables, WordPolyAlgebra) {
    const WordPoly z = WordPoly::letter(Letter::z());
    const WordPoly one = WordPoly::identity();
    const WordPoly sq = (one + z).pow(2);
    EXPECT_EQ(sq.terms.size(), 3u);
    EXPECT_EQ(sq.terms.at(LetterSeq{Letter::z()}), cplx(2.0));
}

TEST(Observables, ParserMatchesConstructors) {
    const int d = 2;
    const AmbientPoint m = sampled(3, d, 13);
    const std::vector<std::pair<std::string, Observable>> cases = {
        {"trZ^3", obs::tr_z(3)},          {"t[2,1]^0", obs::t(1, 0, 0)},
        {"trS[1]^2", obs::tr_s(1, 2)},    {"g[1,2]^4", obs::g(0, 1, 4)},
        {"trX^2", obs::tr_x(2)},          {"trY^2", obs::tr_y(2)},
        {"h[2,1]", obs::gt(2, 1)},        {"trZeta(0.3+0i)^2", obs::tr_zeta(cplx(0.3, 0.0), 2, d)}};
    for (const auto& [text, f] : cases) EXPECT_LE(rel_err(eval(parse_observable(text, d), m), eval(f, m)), 1e-11) << text;
    EXPECT_NO_THROW(parse_observable("r[3,1]", d));
    EXPECT_THROW(parse_observable("t[3,1]^0", d), InvalidParams);
    EXPECT_THROW(parse_observable("foo", d), InvalidParams);
}

TEST(Observables, TPolynomialOfGelfandTsetlin) {
    const AmbientPoint m = sampled(3, 2, 14);
    for (int level = 1; level <= 2; ++level)
        for (int k = 1; k <= 3; ++k) {
            const Observable f = obs::gt(k, level);
            const TPolynomial tp = to_t_polynomial(f);
            const cplx v = tp.evaluate([&](const TIndex& ix) { return eval(obs::t(ix.alpha, ix.beta, ix.k), m); });
            EXPECT_LE(rel_err(v, eval(f, m)), 1e-10);
        }
    EXPECT_THROW(to_t_polynomial(obs::tr_x(1)), InvalidParams);
}
