#pragma once

#include <compare>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spinrs/phasespace.hpp"
#include "spinrs/types.hpp"

namespace spinrs {

enum class LetterKind : int { X = 0, XInv = 1, Z = 2, ZInv = 3, RankOne = 4 };

// RankOne(alpha, beta) stands for the n x n matrix W_alpha V_beta.
struct Letter {
    LetterKind kind = LetterKind::X;
    int alpha = 0;
    int beta = 0;

    static Letter x() { return {LetterKind::X, 0, 0}; }
    static Letter x_inv() { return {LetterKind::XInv, 0, 0}; }
    static Letter z() { return {LetterKind::Z, 0, 0}; }
    static Letter z_inv() { return {LetterKind::ZInv, 0, 0}; }
    static Letter rank_one(int alpha, int beta) { return {LetterKind::RankOne, alpha, beta}; }

    auto operator<=>(const Letter&) const = default;
};

using LetterSeq = std::vector<Letter>;

// A trace word stored in its lexicographically minimal rotation.
struct TraceWord {
    LetterSeq letters;

    static TraceWord canonical(LetterSeq seq);
    auto operator<=>(const TraceWord&) const = default;
};

// Ordered noncommutative polynomial in the letters (no cyclic identification).
struct WordPoly {
    std::map<LetterSeq, cplx> terms;

    static WordPoly identity();
    static WordPoly letter(Letter l);
    WordPoly& operator+=(const WordPoly& o);
    WordPoly operator+(const WordPoly& o) const;
    WordPoly operator-(const WordPoly& o) const;
    WordPoly operator*(const WordPoly& o) const;
    WordPoly operator*(cplx c) const;
    WordPoly pow(int k) const;
};

// coeff * tr(S_level^k), evaluated directly from matrices.
struct PowerTerm {
    int level = 0;
    int k = 1;
    cplx coeff = 1.0;
};

class Observable {
public:
    std::map<TraceWord, cplx> terms;
    cplx constant = 0.0;
    std::vector<PowerTerm> power_terms;

    static Observable trace(const WordPoly& p);
    static Observable word(const LetterSeq& seq, cplx coeff = 1.0);
    static Observable constant_value(cplx c);

    void add_word(const LetterSeq& seq, cplx coeff);
    Observable& operator+=(const Observable& o);
    Observable operator+(const Observable& o) const;
    Observable operator-(const Observable& o) const;
    Observable operator*(cplx c) const;

    size_t size() const { return terms.size() + power_terms.size(); }
    int max_spin_index() const;
};

// dF = tr(dX dX') + tr(dZ dZ') + sum_a (dV'_a . dV_a) + sum_a (dW_a . dW'_a)
// where primes denote the variation of the generators.
struct GradientBundle {
    CMat dX;
    CMat dZ;
    std::vector<CVec> dV;
    std::vector<CRow> dW;

    static GradientBundle zeros(int n, int d);
    GradientBundle& operator+=(const GradientBundle& o);
    GradientBundle operator*(cplx c) const;
    double norm() const;
};

// Directional derivative: pairing of a gradient with an ambient tangent.
cplx pair(const GradientBundle& g, const AmbientPoint& tangent);

// Scratch for repeated evaluation at one point; inverses computed lazily.
class EvalContext {
public:
    explicit EvalContext(const AmbientPoint& m);
    const AmbientPoint& point() const { return m_; }
    const CMat& matrix(LetterKind k);
    CMat letter_matrix(const Letter& l);
    const std::vector<CMat>& partial_products();

private:
    const AmbientPoint& m_;
    CMat xinv_, zinv_;
    bool have_xinv_ = false, have_zinv_ = false;
    std::vector<CMat> s_;
};

cplx eval_word(const TraceWord& w, EvalContext& ctx);
cplx eval(const Observable& f, EvalContext& ctx);
cplx eval(const Observable& f, const AmbientPoint& m);

void add_word_gradient(const TraceWord& w, cplx coeff, EvalContext& ctx, GradientBundle& out);
// Adds the gradient of tr(G S_level) for a fixed matrix G.
void add_partial_product_gradient(int level, const CMat& g, EvalContext& ctx, GradientBundle& out);
GradientBundle grad(const Observable& f, EvalContext& ctx);
GradientBundle grad(const Observable& f, const AmbientPoint& m);

// Max relative deviation of grad from central differences over all entries.
double grad_fd_residual(const Observable& f, const AmbientPoint& m, double step);

// Standard families. Spin indices and levels are 0-based here.
namespace obs {
Observable tr_x(int k);                 // f_k = tr X^k (negative k uses X^-1)
Observable tr_z(int k);                 // h_k = tr Z^k
Observable tr_y(int k);                 // tr (Z - X^-1)^k
Observable t(int alpha, int beta, int k);  // t^k_{alpha beta} = tr(W_alpha V_beta Z^k)
Observable g(int alpha, int beta, int k);  // tr(A_alpha B_beta X^k)
Observable hmix(int gamma, int eps, int k, int l);  // tr(A_gamma B_eps X^k Z X^l)
Observable tr_s(int level, int k);      // tr S_level^k
Observable gt(int k, int level);        // h_{k,level} = tr S_level^k - tr Z^k
Observable tr_zeta(cplx eta, int k, int d);  // tr (Z + eta S_d)^k
Observable kz(int k, int i, int d);     // coefficient of eta^i in tr Z_eta^k

WordPoly s_poly(int level);             // (Id + W V)...(Id + W V) Z
WordPoly ab_poly(int alpha, int beta);  // A_alpha B_beta
}  // namespace obs

// Parses "trZ^3", "t[2,1]^0", "trS[1]^2", "g[1,2]^4", "trZeta(0.3+0i)^2",
// "r[3,1]", "trX^2", "trY^2", "h[2,1]". Indices are 1-based.
Observable parse_observable(const std::string& spec, int d);

// t^k_{alpha beta} = V_beta Z^k W_alpha.
struct TIndex {
    int k = 0;
    int alpha = 0;
    int beta = 0;
    auto operator<=>(const TIndex&) const = default;
};

struct TPolynomial {
    std::map<std::vector<TIndex>, cplx> terms;
    cplx evaluate(const std::function<cplx(const TIndex&)>& t) const;
};

// Rewrites words in Z and rank-one letters as products of t values.
// Throws InvalidParams on words without a rank-one letter or with X letters.
TPolynomial to_t_polynomial(const Observable& f);

}  // namespace spinrs
