#pragma once

#include "spinrs/types.hpp"

namespace spinrs {

constexpr double kConditionGuard = 1e10;

// Estimated 1-norm condition number from a partial-pivot LU.
double condition_number(const CMat& m);

// Inverse by partial-pivot LU. Throws SingularMatrix when the estimated
// condition number exceeds kConditionGuard; `what` names the matrix.
CMat guarded_inverse(const CMat& m, const char* what);

// Scaling-and-squaring with diagonal Pade approximants of degree 3..13.
CMat expm(const CMat& a);

// phi1(A) = sum_k A^k/(k+1)!, the entire extension of (e^A - I) A^{-1}.
CMat phi1(const CMat& a);

// Sum of absolute values of the entries, used for magnitude scales.
double abs_sum(const CMat& m);

}  // namespace spinrs
