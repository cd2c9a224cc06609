#include <gtest/gtest.h>

#include "helpers.hpp"
#include "spinrs/linalg.hpp"
#include "spinrs/phasespace.hpp"

using namespace spinrs;
using namespace spinrs::testing;

TEST(Params, RejectsRootsOfUnity) {
    EXPECT_THROW(ModelParams::make(2, 2, cplx(-1.0, 0.0)), InvalidParams);
    EXPECT_THROW(ModelParams::make(3, 1, std::polar(1.0, 2.0 * M_PI / 3.0)), InvalidParams);
    EXPECT_THROW(ModelParams::make(2, 1, cplx(1.0, 0.0)), InvalidParams);
    EXPECT_THROW(ModelParams::make(2, 1, cplx(0.0, 0.0)), InvalidParams);
    EXPECT_THROW(ModelParams::make(0, 1, cplx(0.5, 0.0)), InvalidParams);
    EXPECT_NO_THROW(ModelParams::make(4, 3));
}

TEST(Params, ParseComplex) {
    EXPECT_EQ(parse_complex("0.3+0.4i"), cplx(0.3, 0.4));
    EXPECT_EQ(parse_complex("-2"), cplx(-2.0, 0.0));
    EXPECT_EQ(parse_complex("i"), cplx(0.0, 1.0));
    EXPECT_EQ(parse_complex("1.5-2i"), cplx(1.5, -2.0));
    EXPECT_THROW(parse_complex("abc"), InvalidParams);
    EXPECT_NEAR(std::abs(default_q()), 0.5, 1e-15);
}

TEST(Slice, ScalarPointLiftsToOnes) {
    const ModelParams P = half_q(1, 1);
    const AmbientPoint m = lift(scalar_point(), P);
    EXPECT_NEAR(std::abs(m.X(0, 0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m.Z(0, 0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m.V[0](0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m.W[0](0) - 1.0), 0.0, 1e-15);
    EXPECT_LE(moment_residual(m, P), 1e-15);
}

TEST(Slice, TwoParticleZ) {
    const CMat z = slice_z(two_particle_point(), cplx(0.5, 0.0));
    EXPECT_LE(rel_err(z, mat({{1.0, 6.0}, {0.5, 2.0}})), 1e-15);
}

TEST(Slice, SpinMatricesRecoverSliceData) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 7);
    const LocalPoint p = sample_regular(P);
    const SpinMatrices sm = spin_matrices(lift(p, P));
    for (int al = 0; al < 2; ++al) {
        EXPECT_LE(rel_err(CMat(sm.A[al]), CMat(p.a.col(al))), 1e-12);
        EXPECT_LE(rel_err(CMat(sm.B[al]), CMat(p.b.col(al).transpose())), 1e-12);
    }
}

TEST(Slice, MomentEquationDirect) {
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = ModelParams::make(n, d, default_q(), 11 * n + d);
            const AmbientPoint m = lift(sample_regular(P), P);
            const CMat lhs = m.X * m.Z * m.X.inverse() / P.q;
            const CMat s = partial_products(m).back();
            EXPECT_LE(rel_err(s, lhs), 1e-10) << "n=" << n << " d=" << d;
        }
}

TEST(Slice, OffFiberHasLargeResidual) {
    const ModelParams P = ModelParams::make(2, 1);
    AmbientPoint m = lift(sample_regular(P), P);
    m.V[0].setZero();
    EXPECT_GT(moment_residual(m, P), 1e-2);
}

TEST(Slice, ZeroSpinsAreRejected) {
    const ModelParams P = half_q(2, 1);
    LocalPoint p = two_particle_point();
    p.b.setZero();
    EXPECT_THROW(lift(p, P), SingularMatrix);
}

TEST(Slice, DegenerateSpectrumRejected) {
    const ModelParams P = half_q(2, 1);
    LocalPoint p = two_particle_point();
    p.x(1) = 4.0;  // x_1 = q x_2
    EXPECT_THROW(check_spectrum(p, P.q), DegenerateSpectrum);
    p.x(1) = 2.0;
    EXPECT_THROW(check_spectrum(p, P.q), DegenerateSpectrum);
}

TEST(Slice, RoundTripAndGaugeInvariance) {
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            const ModelParams P = ModelParams::make(n, d, default_q(), 100 + n * d);
            std::mt19937_64 rng(5);
            const LocalPoint p = sample_regular(P, rng);
            const LocalPoint ref = canonical_order(p);
            const AmbientPoint m = lift(p, P);
            EXPECT_LE(max_abs_diff(project(m, P).first, ref), 1e-9);
            const AmbientPoint gm = act(random_group_element(n, rng), m);
            EXPECT_LE(max_abs_diff(project(gm, P).first, ref), 1e-9);
            EXPECT_LE(moment_residual(gm, P), 1e-9);
        }
}

TEST(Slice, ProjectFrameFixesSortedLift) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 3);
    const LocalPoint p = canonical_order(sample_regular(P));
    const auto [r, frame] = project(lift(p, P), P);
    EXPECT_LE(rel_err(frame.g, CMat::Identity(3, 3)), 1e-9);
    EXPECT_EQ(frame.permutation.size(), 3u);
}

TEST(Sampler, DeterministicPerSeed) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 42);
    const auto a = sample_points(P, 4);
    const auto b = sample_points(P, 4);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(max_abs_diff(a[i], b[i]), 0.0);
    ModelParams Q = P;
    Q.seed = 43;
    EXPECT_GT(max_abs_diff(sample_points(Q, 1)[0], a[0]), 1e-6);
}

TEST(Sampler, PointsAreRegular) {
    for (int d = 1; d <= 3; ++d) {
        const ModelParams P = ModelParams::make(4, d);
        for (const LocalPoint& p : sample_points(P, 5)) {
            EXPECT_NO_THROW(check_spectrum(p, P.q));
            for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(p.a.row(i).sum() - 1.0), 0.0, 1e-14);
            EXPECT_LT(lift_condition(lift(p, P)), kConditionGuard);
        }
    }
}

TEST(Slice, FreeVectorRoundTrip) {
    const ModelParams P = ModelParams::make(3, 3);
    const LocalPoint p = sample_regular(P);
    const CVec v = free_vector(p);
    EXPECT_EQ(v.size(), (FreeLayout{3, 3}.dim()));
    EXPECT_LE(max_abs_diff(from_free_vector(v, 3, 3), p), 1e-15);
}

TEST(Slice, LiftTangentMatchesDifferences) {
    const ModelParams P = ModelParams::make(3, 2, default_q(), 9);
    std::mt19937_64 rng(9);
    const LocalPoint p = sample_regular(P, rng);
    CVec dx(3);
    CMat da(3, 2), db(3, 2);
    for (int i = 0; i < 3; ++i) {
        dx(i) = complex_gaussian(rng);
        da(i, 0) = complex_gaussian(rng);
        da(i, 1) = -da(i, 0);
        for (int al = 0; al < 2; ++al) db(i, al) = complex_gaussian(rng);
    }
    const double h = 1e-5;
    auto shifted = [&](double s) { return lift(LocalPoint{p.x + s * dx, p.a + s * da, p.b + s * db}, P); };
    const AmbientPoint up = shifted(h), down = shifted(-h);
    const AmbientPoint tan = lift_tangent(p, P, dx, da, db);
    EXPECT_LE(rel_err(tan.X, (up.X - down.X) / (2 * h)), 1e-7);
    EXPECT_LE(rel_err(tan.Z, (up.Z - down.Z) / (2 * h)), 1e-7);
    for (int al = 0; al < 2; ++al) {
        EXPECT_LE(rel_err(CMat(tan.V[al]), CMat((up.V[al] - down.V[al]) / (2 * h))), 1e-7);
        EXPECT_LE(rel_err(CMat(tan.W[al]), CMat((up.W[al] - down.W[al]) / (2 * h))), 1e-7);
    }
}

TEST(Linalg, ExpmAgainstDiagonalization) {
    std::mt19937_64 rng(4);
    CMat a(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) a(i, j) = 1.5 * complex_gaussian(rng);
    Eigen::ComplexEigenSolver<CMat> es(a);
    const CMat v = es.eigenvectors();
    const CMat want = v * es.eigenvalues().array().exp().matrix().asDiagonal() * v.inverse();
    EXPECT_LE(rel_err(expm(a), want), 1e-11);
    EXPECT_LE(rel_err(expm(CMat::Zero(3, 3)), CMat::Identity(3, 3)), 0.0);
    // phi1(A) A = e^A - I
    EXPECT_LE(rel_err(CMat(phi1(a) * a), CMat(want - CMat::Identity(4, 4))), 1e-11);
}

TEST(Linalg, GuardedInverse) {
    CMat s = CMat::Identity(2, 2);
    s(1, 1) = 1e-14;
    EXPECT_THROW(guarded_inverse(s, "s"), SingularMatrix);
    EXPECT_LE(rel_err(guarded_inverse(mat({{2.0, 0.0}, {0.0, 4.0}}), "d"), mat({{0.5, 0.0}, {0.0, 0.25}})), 1e-16);
}
