#pragma once

#include <random>
#include <utility>
#include <vector>

#include "spinrs/types.hpp"

namespace spinrs {

// Slice coordinates (x, a, b); a is stored in full with unit row sums.
struct LocalPoint {
    CVec x;
    CMat a;  // n x d
    CMat b;  // n x d

    int n() const { return static_cast<int>(x.size()); }
    int d() const { return static_cast<int>(a.cols()); }

    cplx f(int i, int j) const { return a.row(i).cwiseProduct(b.row(j)).sum(); }
    CMat fmat() const { return a * b.transpose(); }

    // Rescales each row of a to sum to one; the last column absorbs rounding.
    static LocalPoint make(CVec x, CMat a, CMat b);
};

// Matrix data (X, Z, V_alpha, W_alpha). Also used to hold tangent vectors.
struct AmbientPoint {
    CMat X;
    CMat Z;
    std::vector<CRow> V;
    std::vector<CVec> W;

    int n() const { return static_cast<int>(X.rows()); }
    int d() const { return static_cast<int>(V.size()); }

    static AmbientPoint zeros(int n, int d);
};

struct GaugeFrame {
    CMat g;
    std::vector<int> permutation;
};

struct SpinMatrices {
    std::vector<CVec> A;
    std::vector<CRow> B;
};

// Layout of the 2nd free coordinates (x, a_{.,1..d-1}, b).
struct FreeLayout {
    int n;
    int d;
    int dim() const { return 2 * n * d; }
    int x(int i) const { return i; }
    int a(int i, int alpha) const { return n + i * (d - 1) + alpha; }
    int b(int i, int alpha) const { return n + n * (d - 1) + i * d + alpha; }
};

// Z_ij = q x_j f_ij / (x_i - q x_j).
CMat slice_z(const LocalPoint& p, cplx q);

// Throws DegenerateSpectrum when x_i = 0, x_i = x_j or x_i = q x_j.
void check_spectrum(const LocalPoint& p, cplx q);

AmbientPoint lift(const LocalPoint& p, const ModelParams& params);

std::pair<LocalPoint, GaugeFrame> project(const AmbientPoint& m, const ModelParams& params);

double moment_residual(const AmbientPoint& m, const ModelParams& params);

SpinMatrices spin_matrices(const AmbientPoint& m);

// S_0 = Z, S_alpha = (Id + W_alpha V_alpha) S_{alpha-1}; returns S_0..S_d.
std::vector<CMat> partial_products(const AmbientPoint& m);

// g.(X, Z, V, W) = (gXg^-1, gZg^-1, V g^-1, g W).
AmbientPoint act(const CMat& g, const AmbientPoint& m);

// Largest condition number among Z and the partial products S_1..S_d.
double lift_condition(const AmbientPoint& m);

LocalPoint sample_regular(const ModelParams& params);
LocalPoint sample_regular(const ModelParams& params, std::mt19937_64& rng);
std::vector<LocalPoint> sample_points(const ModelParams& params, int count);

cplx complex_gaussian(std::mt19937_64& rng);
CMat random_group_element(int n, std::mt19937_64& rng);

// Rows of p reordered so that x is sorted by (real, imag).
LocalPoint canonical_order(const LocalPoint& p);

double max_abs_diff(const LocalPoint& p, const LocalPoint& r);
double max_abs_diff(const AmbientPoint& m, const AmbientPoint& r);

CVec free_vector(const LocalPoint& p);
LocalPoint from_free_vector(const CVec& v, int n, int d);

// Forward-mode derivative of lift along each free coordinate.
struct LiftJacobian {
    AmbientPoint base;
    std::vector<AmbientPoint> tangents;
};

LiftJacobian lift_jacobian(const LocalPoint& p, const ModelParams& params);

// Tangent of lift along an arbitrary direction (dx, da, db); da must have
// zero row sums.
AmbientPoint lift_tangent(const LocalPoint& p, const ModelParams& params, const CVec& dx,
                          const CMat& da, const CMat& db);

}  // namespace spinrs
