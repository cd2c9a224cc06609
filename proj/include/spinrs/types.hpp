#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spinrs {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using CRow = Eigen::RowVectorXcd;

enum class ErrorKind {
    SingularMatrix,
    DegenerateSpectrum,
    GaugeFixFailure,
    SamplingExhausted,
    RegularityLost,
    StepUnderflow,
    RankAmbiguous,
    InvalidParams,
};

const char* error_kind_name(ErrorKind k);

class SpinError : public std::runtime_error {
public:
    SpinError(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

#define SPINRS_ERROR_TYPE(Name)                                                \
    class Name : public SpinError {                                            \
    public:                                                                    \
        explicit Name(const std::string& what)                                 \
            : SpinError(ErrorKind::Name, #Name ": " + what) {}                 \
    };

SPINRS_ERROR_TYPE(SingularMatrix)
SPINRS_ERROR_TYPE(DegenerateSpectrum)
SPINRS_ERROR_TYPE(GaugeFixFailure)
SPINRS_ERROR_TYPE(SamplingExhausted)
SPINRS_ERROR_TYPE(RegularityLost)
SPINRS_ERROR_TYPE(StepUnderflow)
SPINRS_ERROR_TYPE(RankAmbiguous)
SPINRS_ERROR_TYPE(InvalidParams)

#undef SPINRS_ERROR_TYPE

// Ordering symbol o(a,b): +1 if a<b, -1 if a>b, 0 on the diagonal.
inline int ord(int a, int b) { return a == b ? 0 : (a < b ? 1 : -1); }

inline double kron(int a, int b) { return a == b ? 1.0 : 0.0; }

// Accepts "a", "a+bi", "a-bi", "bi", "i"; throws InvalidParams otherwise.
cplx parse_complex(const std::string& s);

// |q| = 1/2, argument pi*(sqrt(5)-1)/2.
cplx default_q();

struct ModelParams {
    int n = 3;
    int d = 2;
    cplx q = default_q();
    double tol_identity = 1e-9;
    double tol_rank = 1e-8;
    std::uint64_t seed = 1;

    // Throws InvalidParams when n, d or q are out of range.
    void validate() const;

    static ModelParams make(int n, int d, cplx q, std::uint64_t seed = 1);
    static ModelParams make(int n, int d, std::uint64_t seed = 1) {
        return make(n, d, default_q(), seed);
    }
};

}  // namespace spinrs
