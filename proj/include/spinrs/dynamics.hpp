#pragma once

#include <string>

#include "spinrs/brackets.hpp"
#include "spinrs/observables.hpp"
#include "spinrs/phasespace.hpp"

namespace spinrs {

// Time derivative of (x, a, b); rows of da sum to zero.
struct Tangent {
    CVec dx;
    CMat da;
    CMat db;

    static Tangent zeros(int n, int d);
};

double max_abs_diff(const Tangent& u, const Tangent& v);

// V_ik = (x_i + x_k)/(x_i - x_k) - (x_i + q x_k)/(x_i - q x_k)
cplx potential(const LocalPoint& p, int i, int k, cplx q);

// Spin RS equations of motion in multiplicative coordinates.
Tangent rs_rhs(const LocalPoint& p, const ModelParams& params);
// Vector field of tr Y = tr Z - tr X^-1.
Tangent modified_rhs(const LocalPoint& p, const ModelParams& params);

// h = 2 sum_i f_ii, the spin RS energy in local coordinates.
cplx rs_energy(const LocalPoint& p);
// sum_i (q f_ii / (1 - q) - 1 / x_i)
cplx modified_energy(const LocalPoint& p, cplx q);

// L_ij = 2 x_i f_ij / (x_i - q x_j)
CMat lax_matrix(const LocalPoint& p, const ModelParams& params);

// Z_eta = (1 + eta) Z + eta sum_alpha A_alpha B_alpha at lift(p).
CMat spectral_lax(const LocalPoint& p, cplx eta, const ModelParams& params);
// S = Z + sum_alpha A_alpha B_alpha and the moment-map form q^-1 X Z X^-1.
std::pair<CMat, CMat> s_matrix_pair(const AmbientPoint& m, const ModelParams& params);

enum class HamKind { TrZPow, TrYPow, TrSPow, SpinRS, ModifiedRS };
enum class FlowMethod { Exact, RungeKutta };

struct FlowSpec {
    HamKind kind = HamKind::TrZPow;
    int k = 1;
    int level = 1;  // S_level for TrSPow, 1..d
    cplx time = 0.0;
    FlowMethod method = FlowMethod::Exact;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
};

// Parses "trZ:k=2", "trY:k=1", "trS:alpha=2,k=1", "rs", "modified".
FlowSpec parse_flow_spec(const std::string& s);
std::string describe(const FlowSpec& spec);

// (1/k) tr Z^k, (1/k) tr Y^k, (1/k) tr S_level^k, 2(q^-1 - 1) tr Z or tr Y.
Observable hamiltonian_observable(const FlowSpec& spec, int d, cplx q);

// Closed-form flow of the Hamiltonian for time spec.time, with X_H(F) = {F, H}.
AmbientPoint exact_flow(const AmbientPoint& m, const FlowSpec& spec, const ModelParams& params);

// Matrix E whose exponential drives the flow (Z^k, Y^k, S_level^k, ...).
CMat flow_exponent(const AmbientPoint& m, const FlowSpec& spec, const ModelParams& params);

// Largest |t| with |t| * spread(spectrum of E) <= budget; exact flows beyond it
// conjugate by matrices with condition number above e^budget.
double conditioned_time_limit(const AmbientPoint& m, const FlowSpec& spec, const ModelParams& params,
                              double budget = 8.0);

// X_H on free coordinates via the local Poisson matrix, expanded to full a.
Tangent hamiltonian_vector_field(const LocalPoint& p, const LocalFunction& h, const ModelParams& params);
Tangent hamiltonian_vector_field(const LocalPoint& p, const Observable& h, const ModelParams& params);

enum class RhsKind { SpinRS, ModifiedRS };

struct RkStats {
    int accepted = 0;
    int rejected = 0;
};

// Dormand-Prince 5(4) along the straight segment 0 -> t in complex time.
LocalPoint rk_integrate(RhsKind kind, const LocalPoint& p, cplx t, double rel_tol, double abs_tol,
                        const ModelParams& params, RkStats* stats = nullptr);

// Smallest max-abs distance between two local points over relabelings of the particles.
double aligned_distance(const LocalPoint& p, const LocalPoint& r);

// Exact tr Z flow at time 2(q^-1 - 1) t, projected, against rk_integrate(SpinRS, t).
double flow_match_residual(const LocalPoint& p, cplx t, const ModelParams& params, double rk_tol = 1e-10);

// d/dt F(exact_flow(m, t)) at t = 0 by central differences at step and
// step / 2, Richardson-combined, minus {F, H}.
Residual flow_generator_residual(const AmbientPoint& m, const FlowSpec& spec, const Observable& f,
                                 const ModelParams& params, double step = 1e-5);

}  // namespace spinrs
