#pragma once

#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "spinrs/brackets.hpp"
#include "spinrs/dynamics.hpp"
#include "spinrs/observables.hpp"
#include "spinrs/phasespace.hpp"

namespace spinrs {

// First integrals at one point; spin indices and levels are 0-based in keys
// except gt, whose level runs 1..d.
struct IntegralTable {
    int kmax = 0;
    std::map<int, cplx> h;                           // tr Z^k, 1 <= k <= kmax
    std::map<std::tuple<int, int, int>, cplx> t;     // (alpha, beta, k), 0 <= k <= kmax
    std::map<std::pair<int, int>, cplx> gt;          // (level, k): tr S_level^k - tr Z^k
    std::map<std::pair<int, int>, cplx> kz;          // (k, i): coefficient of eta^i in tr Z_eta^k
    std::map<std::pair<int, int>, cplx> trs;         // (level, k): tr S_level^k
};

IntegralTable integral_table(const AmbientPoint& m, int kmax);
IntegralTable integral_table(const LocalPoint& p, int kmax, const ModelParams& params);

// Columns family,indices,re,im with 1-based indices.
std::string to_csv(const IntegralTable& table);

// Max relative drift between two tables over all shared entries.
double table_drift(const IntegralTable& a, const IntegralTable& b);

// Drift between before and after of the quantities conserved by the flow of
// spec, k <= kmax. tr Z flows and the S_d flow keep the whole table; an
// S_alpha flow keeps h, gt, trs and t^k with both spin indices <= alpha; a
// tr Y flow keeps tr Y^k and V_beta Y^k W_alpha instead.
SweepResult conservation_drift(const AmbientPoint& before, const AmbientPoint& after, const FlowSpec& spec,
                               int kmax);
// The same, split into families h, t, gt, trS, r (or trY, VYW).
std::map<std::string, SweepResult> conservation_by_family(const AmbientPoint& before, const AmbientPoint& after,
                                                          const FlowSpec& spec, int kmax);

// Values t^k_{alpha beta} = V_beta Z^k W_alpha for 0 <= k <= kmax.
class TValues {
public:
    TValues(const AmbientPoint& m, int kmax);
    cplx operator()(int alpha, int beta, int k) const;
    int kmax() const { return kmax_; }

private:
    int d_;
    int kmax_;
    std::vector<cplx> v_;
};

// Right-hand side of the {t^k_{gamma eps}, t^l_{alpha beta}} relation.
cplx eqtt_rhs(const TValues& t, int k, int l, int alpha, int beta, int gamma, int eps);
// Short form for k = l = 0.
cplx eqtt_rhs_zero(const TValues& t, int alpha, int beta, int gamma, int eps);

Residual eqtt_residual(const AmbientPoint& m, int k, int l, int alpha, int beta, int gamma, int eps);

// All index tuples with k + l <= kl_max.
SweepResult eqtt_sweep(const AmbientPoint& m, int kl_max);

struct CommutationReport {
    std::map<std::string, SweepResult> families;
    double witness = 0.0;   // max_k |{t^1_11, r_{k,1}}|, k <= 3; zero when d = 1
    double max_rel() const;
};

// Families: h_t, h_h, trY, gt, spectral, kz, t0_gt, central.
CommutationReport commutation_suite(const AmbientPoint& m, const ModelParams& params, std::mt19937_64& rng);

enum class RankFamily { AlgebraQ, GelfandTsetlin, SpectralKZ };

const char* family_name(RankFamily f);
RankFamily parse_family(const std::string& s);

struct RankCertificate {
    RankFamily family = RankFamily::AlgebraQ;
    int rows = 0;
    int cols = 0;
    std::vector<double> singular_values;
    int rank = 0;
    double threshold = 0.0;
    double gap = 0.0;
    int expected = 0;  // -1 when the family carries no asserted rank
};

std::vector<Observable> family_observables(RankFamily f, int n, int d);
int expected_rank(RankFamily f, int n, int d);

// Throws RankAmbiguous when the gap below the cutoff is under 1e3.
RankCertificate rank_certificate(const LocalPoint& p, RankFamily family, const ModelParams& params);

// Draws fresh points from rng until a certificate is unambiguous.
RankCertificate certify_rank(RankFamily family, const ModelParams& params, std::mt19937_64& rng,
                             int max_attempts = 20);

constexpr double kRankGap = 1e3;

// Brackets of entries of S_alpha against X, Z, V, W and S_beta minus their closed forms.
SweepResult salpha_identity_residuals(const AmbientPoint& m);

// {f_k, f_l}, {f_k, g^l} and {g^k, g^l} against their closed forms for 1 <= k, l <= kmax.
SweepResult lempoisson_residuals(const AmbientPoint& m, int kmax);
cplx lempoisson_gg(const AmbientPoint& m, int k, int l, int alpha, int beta, int gamma, int eps);

// (q^-k - 1) h_k against the t-polynomial expansion of tr S_d^k - tr Z^k.
Residual hk_in_q_residual(const AmbientPoint& m, int k, const ModelParams& params);

// tr S_d^k against q^-k tr Z^k.
Residual trs_moment_residual(const AmbientPoint& m, int k, const ModelParams& params);

}  // namespace spinrs
