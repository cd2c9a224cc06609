#include "spinrs/types.hpp"

#include <cmath>
#include <numbers>

namespace spinrs {

const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::SingularMatrix: return "SingularMatrix";
        case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorKind::GaugeFixFailure: return "GaugeFixFailure";
        case ErrorKind::SamplingExhausted: return "SamplingExhausted";
        case ErrorKind::RegularityLost: return "RegularityLost";
        case ErrorKind::StepUnderflow: return "StepUnderflow";
        case ErrorKind::RankAmbiguous: return "RankAmbiguous";
        case ErrorKind::InvalidParams: return "InvalidParams";
    }
    return "Unknown";
}

cplx parse_complex(const std::string& text) {
    std::string s;
    for (char c : text)
        if (c != ' ') s += c;
    if (s.empty()) throw InvalidParams("empty complex literal");
    auto parse_real = [&](const std::string& t) {
        size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            throw InvalidParams("bad complex literal '" + text + "'");
        }
        if (used != t.size()) throw InvalidParams("bad complex literal '" + text + "'");
        return v;
    };
    if (s.back() != 'i') return cplx(parse_real(s), 0.0);
    s.pop_back();
    // split at the last sign that is not part of an exponent
    size_t cut = std::string::npos;
    for (size_t k = s.size(); k-- > 1;) {
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            cut = k;
            break;
        }
    }
    auto imag_part = [&](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return parse_real(t);
    };
    if (cut == std::string::npos) return cplx(0.0, imag_part(s));
    return cplx(parse_real(s.substr(0, cut)), imag_part(s.substr(cut)));
}

cplx default_q() {
    return std::polar(0.5, std::numbers::pi * (std::numbers::phi - 1.0));
}

void ModelParams::validate() const {
    if (n < 1) throw InvalidParams("n must be at least 1");
    if (d < 1) throw InvalidParams("d must be at least 1");
    if (!std::isfinite(q.real()) || !std::isfinite(q.imag()) || std::abs(q) < 1e-12)
        throw InvalidParams("q must be finite and nonzero");
    cplx qm = 1.0;
    for (int m = 1; m <= 2 * n; ++m) {
        qm *= q;
        if (std::abs(qm - 1.0) < 1e-10)
            throw InvalidParams("q is a root of unity of order " + std::to_string(m));
    }
    if (!(tol_identity >= 0.0) || !(tol_rank >= 0.0))
        throw InvalidParams("tolerances must be nonnegative");
}

ModelParams ModelParams::make(int n, int d, cplx q, std::uint64_t seed) {
    ModelParams p;
    p.n = n;
    p.d = d;
    p.q = q;
    p.seed = seed;
    p.validate();
    return p;
}

}  // namespace spinrs
