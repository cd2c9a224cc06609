#include <gtest/gtest.h>

#include "helpers.hpp"
#include "spinrs/integrability.hpp"

using namespace spinrs;
using namespace spinrs::testing;

namespace {

struct Sample {
    ModelParams P;
    LocalPoint p;
    AmbientPoint m;
};

Sample sampled(int n, int d, std::uint64_t seed = 1) {
    const ModelParams P = ModelParams::make(n, d, default_q(), seed);
    const LocalPoint p = sample_regular(P);
    return {P, p, lift(p, P)};
}

}  // namespace

TEST(Integrals, SingleSpinNormalization) {
    // det(Id + W V) = q^-n on the fiber when d = 1
    for (int n = 1; n <= 4; ++n) {
        const Sample s = sampled(n, 1, n);
        EXPECT_LE(rel_err(TValues(s.m, 0)(0, 0, 0), std::pow(s.P.q, -n) - 1.0), 1e-11);
    }
}

TEST(Integrals, TableAgreesWithObservables) {
    const Sample s = sampled(3, 2, 2);
    const IntegralTable t = integral_table(s.m, 4);
    EXPECT_EQ(t.kmax, 4);
    for (int k = 1; k <= 4; ++k) {
        EXPECT_LE(rel_err(t.h.at(k), eval(obs::tr_z(k), s.m)), 1e-12);
        for (int level = 1; level <= 2; ++level)
            EXPECT_LE(rel_err(t.gt.at({level, k}), eval(obs::gt(k, level), s.m)), 1e-10);
        for (int i = 0; i <= k; ++i) EXPECT_LE(rel_err(t.kz.at({k, i}), eval(obs::kz(k, i, 2), s.m)), 1e-10);
    }
    EXPECT_LE(rel_err(t.t.at({1, 0, 3}), eval(obs::t(1, 0, 3), s.m)), 1e-12);
    EXPECT_LE(table_drift(t, integral_table(s.p, 4, s.P)), 1e-12);
}

TEST(Integrals, CsvHeader) {
    const Sample s = sampled(2, 1, 3);
    const std::string csv = to_csv(integral_table(s.m, 2));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "family,indices,re,im");
    EXPECT_NE(csv.find("\nh,\"1\","), std::string::npos);
}

TEST(Integrals, TraceZFlowsKeepEverything) {
    const Sample s = sampled(3, 2, 4);
    FlowSpec f = parse_flow_spec("trZ:k=2");
    f.time = cplx(0.4, 0.3);
    const AmbientPoint after = exact_flow(s.m, f, s.P);
    EXPECT_LE(table_drift(integral_table(s.m, 5), integral_table(after, 5)), 1e-9);
    EXPECT_LE(conservation_drift(s.m, after, f, 5).max_rel, 1e-9);
}

TEST(Integrals, ScopedConservation) {
    const Sample s = sampled(3, 2, 5);
    FlowSpec y = parse_flow_spec("trY:k=1");
    y.time = cplx(0.3, -0.2);
    const AmbientPoint ay = exact_flow(s.m, y, s.P);
    // tr Z^k is not an integral of the tr Y flow; tr Y^k is
    EXPECT_GT(rel_err(eval(obs::tr_z(2), ay), eval(obs::tr_z(2), s.m)), 1e-3);
    EXPECT_LE(conservation_drift(s.m, ay, y, 4).max_rel, 1e-9);
    const auto fam = conservation_by_family(s.m, ay, y, 4);
    EXPECT_TRUE(fam.count("trY"));
    EXPECT_TRUE(fam.count("VYW"));

    FlowSpec s1 = parse_flow_spec("trS:alpha=1,k=1");
    s1.time = cplx(0.2, 0.2);
    const AmbientPoint a1 = exact_flow(s.m, s1, s.P);
    EXPECT_LE(conservation_drift(s.m, a1, s1, 4).max_rel, 1e-9);
    EXPECT_GT(rel_err(eval(obs::t(1, 0, 1), a1), eval(obs::t(1, 0, 1), s.m)), 1e-3);
}

TEST(TBrackets, ZeroFormAgrees) {
    const Sample s = sampled(3, 3, 6);
    const TValues t(s.m, 2);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
                for (int e = 0; e < 3; ++e)
                    EXPECT_LE(rel_err(eqtt_rhs_zero(t, a, b, c, e), eqtt_rhs(t, 0, 0, a, b, c, e)), 1e-12);
}

TEST(TBrackets, Sweep) {
    for (int d = 1; d <= 3; ++d) {
        const Sample s = sampled(2, d, 7 + d);
        EXPECT_LE(eqtt_sweep(s.m, 4).max_rel, 1e-8) << "d=" << d;
    }
    const Sample s = sampled(3, 2, 10);
    EXPECT_LE(eqtt_residual(s.m, 2, 1, 0, 1, 1, 0).rel, 1e-8);
}

TEST(Commutation, Suite) {
    std::mt19937_64 rng(1);
    const Sample s = sampled(3, 2, 11);
    const CommutationReport r = commutation_suite(s.m, s.P, rng);
    EXPECT_LE(r.max_rel(), 1e-8);
    EXPECT_GT(r.witness, 1e-3);
    for (const char* fam : {"h_t", "h_h", "trY", "gt", "spectral", "kz", "t0_gt", "central"})
        EXPECT_TRUE(r.families.count(fam)) << fam;
    const Sample s1 = sampled(3, 1, 12);
    EXPECT_EQ(commutation_suite(s1.m, s1.P, rng).witness, 0.0);
}

TEST(Commutation, MomentIdentities) {
    const Sample s = sampled(3, 2, 13);
    for (int k = 1; k <= 3; ++k) {
        EXPECT_LE(hk_in_q_residual(s.m, k, s.P).rel, 1e-9);
        EXPECT_LE(trs_moment_residual(s.m, k, s.P).rel, 1e-9);
    }
}

TEST(Ranks, ExpectedFormulas) {
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            EXPECT_EQ(expected_rank(RankFamily::AlgebraQ, n, d), 2 * n * d - n);
            EXPECT_EQ(expected_rank(RankFamily::GelfandTsetlin, n, d), n * d);
        }
    EXPECT_EQ(parse_family(family_name(RankFamily::GelfandTsetlin)), RankFamily::GelfandTsetlin);
    EXPECT_THROW(parse_family("nonsense"), InvalidParams);
}

TEST(Ranks, Certificates) {
    for (int n = 1; n <= 3; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = ModelParams::make(n, d, default_q(), 40 + n * d);
            std::mt19937_64 rng(P.seed);
            for (RankFamily f : {RankFamily::AlgebraQ, RankFamily::GelfandTsetlin}) {
                const RankCertificate c = certify_rank(f, P, rng);
                EXPECT_EQ(c.rank, c.expected) << family_name(f) << " n=" << n << " d=" << d;
                EXPECT_GE(c.gap, kRankGap);
                EXPECT_EQ(c.cols, (FreeLayout{n, d}.dim()));
            }
        }
}

TEST(BracketTables, PartialProductsAndGenerators) {
    for (int d = 1; d <= 3; ++d) {
        const Sample s = sampled(3, d, 50 + d);
        EXPECT_LE(salpha_identity_residuals(s.m).max_rel, 1e-8) << "d=" << d;
        EXPECT_LE(lempoisson_residuals(s.m, 3).max_rel, 1e-9) << "d=" << d;
    }
}
