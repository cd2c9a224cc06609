#pragma once

#include <string>
#include <vector>

#include "spinrs/bracket_tables.hpp"
#include "spinrs/observables.hpp"
#include "spinrs/phasespace.hpp"

namespace spinrs {

// A bracket value together with the sum of absolute contributions, the
// natural scale for rounding error.
struct BracketValue {
    cplx value = 0.0;
    double scale = 0.0;
};

struct Residual {
    double abs = 0.0;
    double rel = 0.0;
};

// rel = abs / max(1, scale)
Residual make_residual(double abs, double scale);

// Running maximum over many residuals, remembering the worst label by rel.
struct SweepResult {
    double max_abs = 0.0;
    double max_rel = 0.0;
    long count = 0;
    std::string worst;

    void add(const Residual& r, const std::string& label);
};

// ---- ambient quasi-Poisson bivector ----

cplx ambient_pair_bracket(const GenId& u, const GenId& v, const AmbientPoint& m);

// All generator entries in the order X, Z, V_0.., W_0..
std::vector<GenId> generator_ids(int n, int d);

// Gradient component dF/du for a generator entry u.
cplx gradient_entry(const GradientBundle& g, const GenId& u);

// Gradient bundle of the coordinate function u.
GradientBundle coordinate_gradient(const GenId& u, int n, int d);

// Entrywise absolute values, for magnitude scales.
GradientBundle abs_bundle(const GradientBundle& g);
AmbientPoint abs_point(const AmbientPoint& m);

// Block trace contractions, O(n^3).
BracketValue ambient_bracket(const GradientBundle& f, const GradientBundle& g, const AmbientPoint& m);
// Double loop over generator pairs; oracle for the fast path.
BracketValue ambient_bracket_slow(const GradientBundle& f, const GradientBundle& g, const AmbientPoint& m);
BracketValue ambient_bracket(const Observable& f, const Observable& g, const AmbientPoint& m);

// Jacobiator of three generator entries on the ambient table.
cplx ambient_jacobi(const GenId& u, const GenId& v, const GenId& w, const AmbientPoint& m);

// ---- local Poisson bracket ----

cplx local_pair_bracket(const LocalId& u, const LocalId& v, const LocalPoint& p, const ModelParams& params);

// Free coordinates in FreeLayout order.
std::vector<LocalId> free_ids(int n, int d);

// Pair brackets of free coordinates, 2nd x 2nd.
CMat local_poisson_matrix(const LocalPoint& p, const ModelParams& params);

// A function near p given by its value and its gradient in free coordinates.
struct LocalFunction {
    cplx value = 0.0;
    CVec grad;
};

LocalFunction coordinate_function(const LocalId& u, const LocalPoint& p);
LocalFunction f_function(int i, int j, const LocalPoint& p);
LocalFunction lax_function(int i, int j, const LocalPoint& p, cplx q);
LocalFunction pullback(const Observable& f, const LiftJacobian& jac);

BracketValue local_bracket(const LocalFunction& f, const LocalFunction& g, const CMat& poisson);

// Closed form for {f_ij, f_kl}.
cplx ff_bracket(int i, int j, int k, int l, const LocalPoint& p, const ModelParams& params);

// Jacobiator of three free coordinates, inner brackets differentiated in
// forward mode.
cplx jacobi_residual(const LocalId& u, const LocalId& v, const LocalId& w, const LocalPoint& p,
                     const ModelParams& params);

// All Jacobiators over unordered triples of distinct free coordinates.
struct JacobiSweep {
    double max_abs = 0.0;
    double max_rel = 0.0;
    long triples = 0;
};
JacobiSweep jacobi_sweep(const LocalPoint& p, const ModelParams& params);

Residual pullback_residual(const Observable& f, const Observable& g, const LocalPoint& p,
                           const ModelParams& params);

// pullback_residual over all unordered pairs of fs, sharing the lift Jacobian.
SweepResult pullback_sweep(const std::vector<Observable>& fs, const std::vector<std::string>& labels,
                           const LocalPoint& p, const ModelParams& params);

// ---- r-matrix formulation ----

struct RMatrixTriple {
    CMat r;
    CMat rbar;
    CMat rhat;
};

RMatrixTriple rmatrices(const LocalPoint& p);

// Swaps the two tensor factors of an n^2 x n^2 operator.
CMat swap_factors(const CMat& t, int n);

// L_ij = 2 x_i f_ij / (x_i - q x_j)
CMat lax_matrix_local(const LocalPoint& p, cplx q);

// Max-abs entry of {L1, L2} - (r12 L1 L2 + L1 L2 rhat12 + L1 rbar21 L2 - L2 rbar12 L1)/2
// with (L1)_{(ik),(jl)} = L_ij delta_kl; transposed = true uses (L1)_{(ik),(jl)} = delta_ij L_kl.
double rmatrix_residual(const LocalPoint& p, const ModelParams& params, bool transposed = false);

// Max-abs of Z_ij + f_ij/2 - f_ij (x_i + q x_j) / (2 (x_i - q x_j)).
double z12f_residual(const LocalPoint& p, const ModelParams& params);

}  // namespace spinrs
