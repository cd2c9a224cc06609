#pragma once

#include <initializer_list>
#include <random>

#include "spinrs/phasespace.hpp"

namespace spinrs::testing {

inline CVec vec(std::initializer_list<cplx> xs) {
    CVec v(static_cast<int>(xs.size()));
    int i = 0;
    for (cplx x : xs) v(i++) = x;
    return v;
}

inline CMat mat(std::initializer_list<std::initializer_list<cplx>> rows) {
    CMat m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int i = 0;
    for (const auto& r : rows) {
        int j = 0;
        for (cplx x : r) m(i, j++) = x;
        ++i;
    }
    return m;
}

// x = (1), a = (1), b = (1)
inline LocalPoint scalar_point() { return LocalPoint::make(vec({1.0}), mat({{1.0}}), mat({{1.0}})); }

// x = (2, 3), a = (1, 1), b = (1, 2); with q = 1/2 the slice gives Z = [[1, 6], [1/2, 2]].
inline LocalPoint two_particle_point() {
    return LocalPoint::make(vec({2.0, 3.0}), mat({{1.0}, {1.0}}), mat({{1.0}, {2.0}}));
}

inline ModelParams half_q(int n, int d) { return ModelParams::make(n, d, cplx(0.5, 0.0)); }

inline double rel_err(cplx got, cplx want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

inline double rel_err(const CMat& got, const CMat& want) {
    return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

}  // namespace spinrs::testing
