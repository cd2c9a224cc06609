#include "spinrs/observables.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <regex>
#include <tuple>

#include "spinrs/linalg.hpp"

namespace spinrs {

TraceWord TraceWord::canonical(LetterSeq seq) {
    const size_t m = seq.size();
    if (m < 2) return TraceWord{std::move(seq)};
    size_t best = 0;
    for (size_t r = 1; r < m; ++r) {
        for (size_t k = 0; k < m; ++k) {
            const Letter& u = seq[(r + k) % m];
            const Letter& v = seq[(best + k) % m];
            if (u < v) {
                best = r;
                break;
            }
            if (v < u) break;
        }
    }
    LetterSeq out(m);
    for (size_t k = 0; k < m; ++k) out[k] = seq[(best + k) % m];
    return TraceWord{std::move(out)};
}

WordPoly WordPoly::identity() {
    WordPoly p;
    p.terms[{}] = 1.0;
    return p;
}

WordPoly WordPoly::letter(Letter l) {
    WordPoly p;
    p.terms[{l}] = 1.0;
    return p;
}

WordPoly& WordPoly::operator+=(const WordPoly& o) {
    for (const auto& [w, c] : o.terms) {
        cplx& slot = terms[w];
        slot += c;
        if (slot == 0.0) terms.erase(w);
    }
    return *this;
}

WordPoly WordPoly::operator+(const WordPoly& o) const {
    WordPoly r = *this;
    r += o;
    return r;
}

WordPoly WordPoly::operator-(const WordPoly& o) const { return *this + o * cplx(-1.0); }

WordPoly WordPoly::operator*(const WordPoly& o) const {
    WordPoly r;
    for (const auto& [u, cu] : terms)
        for (const auto& [v, cv] : o.terms) {
            LetterSeq w = u;
            w.insert(w.end(), v.begin(), v.end());
            r.terms[w] += cu * cv;
        }
    std::erase_if(r.terms, [](const auto& kv) { return kv.second == 0.0; });
    return r;
}

WordPoly WordPoly::operator*(cplx c) const {
    WordPoly r;
    if (c == 0.0) return r;
    for (const auto& [w, cw] : terms) r.terms[w] = cw * c;
    return r;
}

WordPoly WordPoly::pow(int k) const {
    WordPoly r = identity();
    for (int i = 0; i < k; ++i) r = r * *this;
    return r;
}

Observable Observable::trace(const WordPoly& p) {
    Observable f;
    for (const auto& [w, c] : p.terms) f.add_word(w, c);
    return f;
}

Observable Observable::word(const LetterSeq& seq, cplx coeff) {
    Observable f;
    f.add_word(seq, coeff);
    return f;
}

Observable Observable::constant_value(cplx c) {
    Observable f;
    f.constant = c;
    return f;
}

void Observable::add_word(const LetterSeq& seq, cplx coeff) {
    if (coeff == 0.0) return;
    TraceWord w = TraceWord::canonical(seq);
    cplx& slot = terms[w];
    slot += coeff;
    if (slot == 0.0) terms.erase(w);
}

Observable& Observable::operator+=(const Observable& o) {
    for (const auto& [w, c] : o.terms) {
        cplx& slot = terms[w];
        slot += c;
        if (slot == 0.0) terms.erase(w);
    }
    constant += o.constant;
    power_terms.insert(power_terms.end(), o.power_terms.begin(), o.power_terms.end());
    return *this;
}

Observable Observable::operator+(const Observable& o) const {
    Observable r = *this;
    r += o;
    return r;
}

Observable Observable::operator-(const Observable& o) const { return *this + o * cplx(-1.0); }

Observable Observable::operator*(cplx c) const {
    Observable r;
    if (c == 0.0) return r;
    for (const auto& [w, cw] : terms) r.terms[w] = cw * c;
    r.constant = constant * c;
    for (PowerTerm p : power_terms) {
        p.coeff *= c;
        r.power_terms.push_back(p);
    }
    return r;
}

int Observable::max_spin_index() const {
    int mx = -1;
    for (const auto& [w, c] : terms)
        for (const Letter& l : w.letters)
            if (l.kind == LetterKind::RankOne) mx = std::max({mx, l.alpha, l.beta});
    for (const PowerTerm& p : power_terms) mx = std::max(mx, p.level - 1);
    return mx;
}

GradientBundle GradientBundle::zeros(int n, int d) {
    GradientBundle g;
    g.dX = CMat::Zero(n, n);
    g.dZ = CMat::Zero(n, n);
    g.dV.assign(d, CVec::Zero(n));
    g.dW.assign(d, CRow::Zero(n));
    return g;
}

GradientBundle& GradientBundle::operator+=(const GradientBundle& o) {
    dX += o.dX;
    dZ += o.dZ;
    for (size_t a = 0; a < dV.size(); ++a) {
        dV[a] += o.dV[a];
        dW[a] += o.dW[a];
    }
    return *this;
}

GradientBundle GradientBundle::operator*(cplx c) const {
    GradientBundle r = *this;
    r.dX *= c;
    r.dZ *= c;
    for (size_t a = 0; a < dV.size(); ++a) {
        r.dV[a] *= c;
        r.dW[a] *= c;
    }
    return r;
}

double GradientBundle::norm() const {
    double s = dX.squaredNorm() + dZ.squaredNorm();
    for (size_t a = 0; a < dV.size(); ++a) s += dV[a].squaredNorm() + dW[a].squaredNorm();
    return std::sqrt(s);
}

cplx pair(const GradientBundle& g, const AmbientPoint& t) {
    cplx s = g.dX.cwiseProduct(t.X.transpose()).sum() + g.dZ.cwiseProduct(t.Z.transpose()).sum();
    for (int a = 0; a < t.d(); ++a) {
        s += (t.V[a] * g.dV[a]).value();
        s += (g.dW[a] * t.W[a]).value();
    }
    return s;
}

EvalContext::EvalContext(const AmbientPoint& m) : m_(m) {}

const CMat& EvalContext::matrix(LetterKind k) {
    switch (k) {
        case LetterKind::X: return m_.X;
        case LetterKind::Z: return m_.Z;
        case LetterKind::XInv:
            if (!have_xinv_) {
                xinv_ = guarded_inverse(m_.X, "X");
                have_xinv_ = true;
            }
            return xinv_;
        case LetterKind::ZInv:
            if (!have_zinv_) {
                zinv_ = guarded_inverse(m_.Z, "Z");
                have_zinv_ = true;
            }
            return zinv_;
        case LetterKind::RankOne: break;
    }
    throw InvalidParams("rank-one letter has no cached matrix");
}

namespace {

void check_spin(const Letter& l, int d) {
    if (l.alpha < 0 || l.beta < 0 || l.alpha >= d || l.beta >= d)
        throw InvalidParams("spin index out of range in rank-one letter");
}

}  // namespace

CMat EvalContext::letter_matrix(const Letter& l) {
    if (l.kind == LetterKind::RankOne) {
        check_spin(l, m_.d());
        return m_.W[l.alpha] * m_.V[l.beta];
    }
    return matrix(l.kind);
}

const std::vector<CMat>& EvalContext::partial_products() {
    if (s_.empty()) s_ = spinrs::partial_products(m_);
    return s_;
}

cplx eval_word(const TraceWord& w, EvalContext& ctx) {
    const LetterSeq& L = w.letters;
    const int m = static_cast<int>(L.size());
    const AmbientPoint& pt = ctx.point();
    if (m == 0) return static_cast<double>(pt.n());
    int first = -1;
    for (int i = 0; i < m; ++i)
        if (L[i].kind == LetterKind::RankOne) {
            first = i;
            break;
        }
    if (first < 0) {
        if (m == 1) return ctx.matrix(L[0].kind).trace();
        CMat p = ctx.matrix(L[0].kind);
        for (int i = 1; i + 1 < m; ++i) p = p * ctx.matrix(L[i].kind);
        return p.cwiseProduct(ctx.matrix(L[m - 1].kind).transpose()).sum();
    }
    const Letter& r0 = L[first];
    check_spin(r0, pt.d());
    CRow row = pt.V[r0.beta];
    cplx acc = 1.0;
    for (int s = 1; s < m; ++s) {
        const Letter& l = L[(first + s) % m];
        if (l.kind == LetterKind::RankOne) {
            check_spin(l, pt.d());
            acc *= (row * pt.W[l.alpha]).value();
            row = pt.V[l.beta];
        } else {
            row = row * ctx.matrix(l.kind);
        }
    }
    return acc * (row * pt.W[r0.alpha]).value();
}

namespace {

cplx eval_power(const PowerTerm& p, EvalContext& ctx) {
    const auto& s = ctx.partial_products();
    if (p.level < 0 || p.level >= static_cast<int>(s.size()))
        throw InvalidParams("partial product level out of range");
    const CMat& sl = s[p.level];
    CMat pw = CMat::Identity(sl.rows(), sl.cols());
    for (int i = 0; i < p.k; ++i) pw = pw * sl;
    return p.coeff * pw.trace();
}

}  // namespace

cplx eval(const Observable& f, EvalContext& ctx) {
    cplx s = f.constant;
    for (const auto& [w, c] : f.terms) s += c * eval_word(w, ctx);
    for (const PowerTerm& p : f.power_terms) s += eval_power(p, ctx);
    return s;
}

cplx eval(const Observable& f, const AmbientPoint& m) {
    EvalContext ctx(m);
    return eval(f, ctx);
}

void add_word_gradient(const TraceWord& w, cplx coeff, EvalContext& ctx, GradientBundle& out) {
    const LetterSeq& L = w.letters;
    const int m = static_cast<int>(L.size());
    if (m == 0) return;
    const AmbientPoint& pt = ctx.point();
    const int n = pt.n();
    std::vector<CMat> mats;
    mats.reserve(m);
    for (const Letter& l : L) mats.push_back(ctx.letter_matrix(l));
    std::vector<CMat> prefix(m + 1), suffix(m + 1);
    prefix[0] = CMat::Identity(n, n);
    for (int i = 0; i < m; ++i) prefix[i + 1] = prefix[i] * mats[i];
    suffix[m] = CMat::Identity(n, n);
    for (int i = m - 1; i >= 0; --i) suffix[i] = mats[i] * suffix[i + 1];
    for (int p = 0; p < m; ++p) {
        CMat r = suffix[p + 1] * prefix[p];
        r *= coeff;
        const Letter& l = L[p];
        switch (l.kind) {
            case LetterKind::X: out.dX += r; break;
            case LetterKind::Z: out.dZ += r; break;
            case LetterKind::XInv: {
                const CMat& xi = ctx.matrix(LetterKind::XInv);
                out.dX -= xi * r * xi;
                break;
            }
            case LetterKind::ZInv: {
                const CMat& zi = ctx.matrix(LetterKind::ZInv);
                out.dZ -= zi * r * zi;
                break;
            }
            case LetterKind::RankOne:
                out.dW[l.alpha] += pt.V[l.beta] * r;
                out.dV[l.beta] += r * pt.W[l.alpha];
                break;
        }
    }
}

void add_partial_product_gradient(int level, const CMat& g, EvalContext& ctx, GradientBundle& out) {
    const auto& s = ctx.partial_products();
    const AmbientPoint& pt = ctx.point();
    const int n = pt.n();
    CMat lg = CMat::Identity(n, n);
    for (int ga = level - 1; ga >= 0; --ga) {
        CMat gl = g * lg;
        CRow bg = pt.V[ga] * s[ga];
        out.dW[ga] += bg * gl;
        out.dV[ga] += s[ga] * (gl * pt.W[ga]);
        lg += (lg * pt.W[ga]) * pt.V[ga];
    }
    out.dZ += g * lg;
}

GradientBundle grad(const Observable& f, EvalContext& ctx) {
    const AmbientPoint& pt = ctx.point();
    GradientBundle out = GradientBundle::zeros(pt.n(), pt.d());
    for (const auto& [w, c] : f.terms) add_word_gradient(w, c, ctx, out);
    for (const PowerTerm& p : f.power_terms) {
        const CMat& sl = ctx.partial_products()[p.level];
        CMat pw = CMat::Identity(pt.n(), pt.n());
        for (int i = 0; i + 1 < p.k; ++i) pw = pw * sl;
        add_partial_product_gradient(p.level, pw * (p.coeff * static_cast<double>(p.k)), ctx, out);
    }
    return out;
}

GradientBundle grad(const Observable& f, const AmbientPoint& m) {
    EvalContext ctx(m);
    return grad(f, ctx);
}

double grad_fd_residual(const Observable& f, const AmbientPoint& m, double step) {
    GradientBundle g = grad(f, m);
    const int n = m.n();
    const int d = m.d();
    double scale = 1.0;
    scale = std::max(scale, g.dX.cwiseAbs().maxCoeff());
    scale = std::max(scale, g.dZ.cwiseAbs().maxCoeff());
    for (int a = 0; a < d; ++a) {
        scale = std::max(scale, g.dV[a].cwiseAbs().maxCoeff());
        scale = std::max(scale, g.dW[a].cwiseAbs().maxCoeff());
    }
    AmbientPoint pt = m;
    double worst = 0.0;
    auto probe = [&](cplx& entry, cplx analytic) {
        const cplx saved = entry;
        const double h = step * std::max(1.0, std::abs(saved));
        entry = saved + h;
        const cplx fp = eval(f, pt);
        entry = saved - h;
        const cplx fm = eval(f, pt);
        entry = saved;
        worst = std::max(worst, std::abs((fp - fm) / (2.0 * h) - analytic) / scale);
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            probe(pt.X(i, j), g.dX(j, i));
            probe(pt.Z(i, j), g.dZ(j, i));
        }
    for (int a = 0; a < d; ++a)
        for (int j = 0; j < n; ++j) {
            probe(pt.V[a](j), g.dV[a](j));
            probe(pt.W[a](j), g.dW[a](j));
        }
    return worst;
}

namespace obs {

namespace {

WordPoly zp() { return WordPoly::letter(Letter::z()); }

std::mutex& cache_mutex() {
    static std::mutex mu;
    return mu;
}

}  // namespace

Observable tr_x(int k) {
    LetterSeq w(std::abs(k), k >= 0 ? Letter::x() : Letter::x_inv());
    return Observable::word(w);
}

Observable tr_z(int k) {
    LetterSeq w(std::abs(k), k >= 0 ? Letter::z() : Letter::z_inv());
    return Observable::word(w);
}

Observable tr_y(int k) {
    WordPoly y = zp() - WordPoly::letter(Letter::x_inv());
    return Observable::trace(y.pow(k));
}

Observable t(int alpha, int beta, int k) {
    LetterSeq w{Letter::rank_one(alpha, beta)};
    w.insert(w.end(), k, Letter::z());
    return Observable::word(w);
}

WordPoly s_poly(int level) {
    WordPoly s = zp();
    for (int ga = 0; ga < level; ++ga) s = (WordPoly::identity() + WordPoly::letter(Letter::rank_one(ga, ga))) * s;
    return s;
}

WordPoly ab_poly(int alpha, int beta) {
    return WordPoly::letter(Letter::rank_one(alpha, beta)) * s_poly(beta);
}

Observable g(int alpha, int beta, int k) {
    return Observable::trace(ab_poly(alpha, beta) * WordPoly::letter(Letter::x()).pow(k));
}

Observable hmix(int gamma, int eps, int k, int l) {
    WordPoly xp = WordPoly::letter(Letter::x());
    return Observable::trace(ab_poly(gamma, eps) * xp.pow(k) * zp() * xp.pow(l));
}

Observable tr_s(int level, int k) {
    if (level == 0) return tr_z(k);
    if (level * k > 16) {
        Observable f;
        f.power_terms.push_back(PowerTerm{level, k, 1.0});
        return f;
    }
    static std::map<std::pair<int, int>, Observable> cache;
    std::lock_guard<std::mutex> lock(cache_mutex());
    auto it = cache.find({level, k});
    if (it != cache.end()) return it->second;
    Observable f = Observable::trace(s_poly(level).pow(k));
    cache.emplace(std::make_pair(level, k), f);
    return f;
}

Observable gt(int k, int level) { return tr_s(level, k) - tr_z(k); }

namespace {

const std::vector<Observable>& kz_table(int k, int d) {
    static std::map<std::pair<int, int>, std::vector<Observable>> cache;
    {
        std::lock_guard<std::mutex> lock(cache_mutex());
        auto it = cache.find({k, d});
        if (it != cache.end()) return it->second;
    }
    WordPoly s = s_poly(d);
    std::vector<WordPoly> coef{WordPoly::identity()};
    for (int step = 0; step < k; ++step) {
        std::vector<WordPoly> next(coef.size() + 1);
        for (size_t j = 0; j < coef.size(); ++j) {
            next[j] += coef[j] * zp();
            next[j + 1] += coef[j] * s;
        }
        coef = std::move(next);
    }
    std::vector<Observable> out;
    for (const WordPoly& c : coef) out.push_back(Observable::trace(c));
    std::lock_guard<std::mutex> lock(cache_mutex());
    return cache.emplace(std::make_pair(k, d), std::move(out)).first->second;
}

}  // namespace

Observable kz(int k, int i, int d) {
    if (i < 0 || i > k) return Observable{};
    return kz_table(k, d)[i];
}

Observable tr_zeta(cplx eta, int k, int d) {
    const auto& tab = kz_table(k, d);
    Observable f;
    cplx e = 1.0;
    for (int i = 0; i <= k; ++i) {
        f += tab[i] * e;
        e *= eta;
    }
    return f;
}

}  // namespace obs

Observable parse_observable(const std::string& spec, int d) {
    std::smatch mt;
    auto power = [](const std::ssub_match& s) { return s.matched && s.length() > 0 ? std::stoi(s.str()) : 1; };
    auto spin = [&](const std::string& s) {
        int v = std::stoi(s);
        if (v < 1 || v > d) throw InvalidParams("spin index " + s + " out of range in '" + spec + "'");
        return v - 1;
    };
    static const std::regex tr_re(R"(^tr(X|Z|Y)(?:\^(-?\d+))?$)");
    static const std::regex s_re(R"(^trS\[(\d+)\](?:\^(\d+))?$)");
    static const std::regex t_re(R"(^(t|g)\[(\d+),(\d+)\](?:\^(\d+))?$)");
    static const std::regex h_re(R"(^h\[(\d+),(\d+)\]$)");
    static const std::regex zeta_re(R"(^trZeta\(([^)]*)\)(?:\^(\d+))?$)");
    static const std::regex r_re(R"(^r\[(\d+),(\d+)\]$)");
    std::string s;
    for (char c : spec)
        if (c != ' ') s += c;
    if (std::regex_match(s, mt, tr_re)) {
        int k = power(mt[2]);
        if (mt[1] == "X") return obs::tr_x(k);
        if (mt[1] == "Z") return obs::tr_z(k);
        if (k < 0) throw InvalidParams("negative powers of Y are not supported");
        return obs::tr_y(k);
    }
    if (std::regex_match(s, mt, s_re)) {
        int level = std::stoi(mt[1]);
        if (level < 0 || level > d) throw InvalidParams("partial product level out of range in '" + spec + "'");
        return obs::tr_s(level, power(mt[2]));
    }
    if (std::regex_match(s, mt, t_re)) {
        int k = mt[4].matched ? std::stoi(mt[4]) : 1;
        if (mt[1] == "t") return obs::t(spin(mt[2]), spin(mt[3]), k);
        return obs::g(spin(mt[2]), spin(mt[3]), k);
    }
    if (std::regex_match(s, mt, h_re)) {
        int level = std::stoi(mt[2]);
        if (level < 1 || level > d) throw InvalidParams("level out of range in '" + spec + "'");
        return obs::gt(std::stoi(mt[1]), level);
    }
    if (std::regex_match(s, mt, zeta_re)) return obs::tr_zeta(parse_complex(mt[1]), power(mt[2]), d);
    if (std::regex_match(s, mt, r_re)) return obs::kz(std::stoi(mt[1]), std::stoi(mt[2]), d);
    throw InvalidParams("unrecognized observable '" + spec + "'");
}

cplx TPolynomial::evaluate(const std::function<cplx(const TIndex&)>& t) const {
    cplx s = 0.0;
    for (const auto& [mono, c] : terms) {
        cplx v = c;
        for (const TIndex& ix : mono) v *= t(ix);
        s += v;
    }
    return s;
}

TPolynomial to_t_polynomial(const Observable& f) {
    if (!f.power_terms.empty() || f.constant != 0.0)
        throw InvalidParams("only pure trace words convert to t-polynomials");
    TPolynomial out;
    for (const auto& [w, c] : f.terms) {
        const LetterSeq& L = w.letters;
        const int m = static_cast<int>(L.size());
        int first = -1;
        for (int i = 0; i < m; ++i) {
            if (L[i].kind == LetterKind::RankOne) {
                if (first < 0) first = i;
            } else if (L[i].kind != LetterKind::Z) {
                throw InvalidParams("word contains letters other than Z and W V");
            }
        }
        if (first < 0) throw InvalidParams("word without a rank-one letter is not a t-monomial");
        std::vector<TIndex> mono;
        int beta = L[first].beta;
        int k = 0;
        for (int s = 1; s <= m; ++s) {
            const Letter& l = L[(first + s) % m];
            if (l.kind == LetterKind::Z) {
                ++k;
                continue;
            }
            mono.push_back(TIndex{k, l.alpha, beta});
            beta = l.beta;
            k = 0;
        }
        std::sort(mono.begin(), mono.end());
        out.terms[mono] += c;
    }
    std::erase_if(out.terms, [](const auto& kv) { return kv.second == 0.0; });
    return out;
}

}  // namespace spinrs
