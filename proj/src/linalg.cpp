#include "spinrs/linalg.hpp"

#include <cmath>
#include <string>

namespace spinrs {

double condition_number(const CMat& m) {
    if (m.rows() == 0) return 1.0;
    Eigen::PartialPivLU<CMat> lu(m);
    double rc = lu.rcond();
    if (!(rc > 0.0) || !std::isfinite(rc)) return INFINITY;
    return 1.0 / rc;
}

CMat guarded_inverse(const CMat& m, const char* what) {
    Eigen::PartialPivLU<CMat> lu(m);
    double rc = lu.rcond();
    if (!(rc > 0.0) || !std::isfinite(rc) || 1.0 / rc > kConditionGuard) {
        throw SingularMatrix(std::string(what) + " has condition estimate " +
                             std::to_string(rc > 0.0 ? 1.0 / rc : INFINITY));
    }
    return lu.inverse();
}

namespace {

// Higham (2005) theta_m for m = 3, 5, 7, 9, 13.
constexpr double kTheta[] = {1.495585217958292e-2, 2.539398330063230e-1,
                             9.504178996162932e-1, 2.097847961257068e0,
                             5.371920351148152e0};

const double kB3[] = {120, 60, 12, 1};
const double kB5[] = {30240, 15120, 3360, 420, 30, 1};
const double kB7[] = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
const double kB9[] = {17643225600., 8821612800., 2075673600., 302702400.,
                      30270240.,    2162160.,    110880.,     3960.,
                      90.,          1.};
const double kB13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                       1187353796428800.,  129060195264000.,   10559470521600.,
                       670442572800.,      33522128640.,       1323241920.,
                       40840800.,          960960.,            16380.,
                       182.,               1.};

CMat pade_solve(const CMat& u, const CMat& v) {
    return (v - u).partialPivLu().solve(v + u);
}

CMat pade_low(const CMat& a, const double* b, int m) {
    const int n = static_cast<int>(a.rows());
    CMat id = CMat::Identity(n, n);
    CMat a2 = a * a;
    CMat pw = id;
    CMat uo = b[1] * id;
    CMat ve = b[0] * id;
    for (int j = 2; j <= m; j += 2) {
        pw = pw * a2;
        uo += b[j + 1] * pw;
        ve += b[j] * pw;
    }
    return pade_solve(a * uo, ve);
}

CMat pade13(const CMat& a) {
    const int n = static_cast<int>(a.rows());
    const double* b = kB13;
    CMat id = CMat::Identity(n, n);
    CMat a2 = a * a, a4 = a2 * a2, a6 = a4 * a2;
    CMat u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
                  b[5] * a4 + b[3] * a2 + b[1] * id);
    CMat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
             b[4] * a4 + b[2] * a2 + b[0] * id;
    return pade_solve(u, v);
}

}  // namespace

CMat expm(const CMat& a) {
    const int n = static_cast<int>(a.rows());
    if (n == 0) return a;
    double nrm = a.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(nrm)) throw SingularMatrix("expm argument is not finite");
    if (nrm <= kTheta[0]) return pade_low(a, kB3, 3);
    if (nrm <= kTheta[1]) return pade_low(a, kB5, 5);
    if (nrm <= kTheta[2]) return pade_low(a, kB7, 7);
    if (nrm <= kTheta[3]) return pade_low(a, kB9, 9);
    int s = 0;
    if (nrm > kTheta[4]) s = static_cast<int>(std::ceil(std::log2(nrm / kTheta[4])));
    CMat r = pade13(a / std::ldexp(1.0, s));
    for (int i = 0; i < s; ++i) r = r * r;
    return r;
}

CMat phi1(const CMat& a) {
    const int n = static_cast<int>(a.rows());
    double nrm = a.cwiseAbs().colwise().sum().maxCoeff();
    if (nrm < 1e-2) {
        // Taylor series; 12 terms reach double precision for ||A|| < 1e-2.
        CMat id = CMat::Identity(n, n);
        CMat r = id;
        for (int k = 13; k >= 2; --k) r = id + a * r / static_cast<double>(k);
        return r;
    }
    CMat big = CMat::Zero(2 * n, 2 * n);
    big.topLeftCorner(n, n) = a;
    big.topRightCorner(n, n) = CMat::Identity(n, n);
    return expm(big).topRightCorner(n, n);
}

double abs_sum(const CMat& m) { return m.cwiseAbs().sum(); }

}  // namespace spinrs
