// expm.hpp: dense complex matrix exponential.
//
// Scaling and squaring with diagonal Padé approximants of degree 3..13,
// degree selection and scaling thresholds after Higham (SIAM J. Matrix Anal.
// Appl. 26, 2005). Backward error bounded by unit roundoff in exact
// arithmetic, which is well inside the 1e-12 contract used across the library.

#pragma once

#include <array>
#include <cmath>

#include "ionlc/core.hpp"

namespace ionlc {

namespace detail {

inline Matrix pade_solve(const Matrix& u, const Matrix& v) {
    // r = (v - u)^{-1} (v + u)
    return (v - u).partialPivLu().solve(v + u);
}

inline double one_norm(const Matrix& a) {
    return a.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace detail

inline Matrix expm(const Matrix& a) {
    require(a.rows() == a.cols(), "expm: matrix must be square");
    const auto n = a.rows();
    if (n == 0) return a;
    const Matrix ident = Matrix::Identity(n, n);
    const double norm = detail::one_norm(a);
    if (norm == 0.0) return ident;

    static constexpr std::array<double, 4> theta = {1.495585217958292e-2, 2.539398330063230e-1,
                                                    9.504178996162932e-1, 2.097847961257068e0};
    static constexpr double theta13 = 5.371920351148152e0;

    const Matrix a2 = a * a;
    if (norm <= theta[0]) {
        static constexpr double b[] = {120., 60., 12., 1.};
        const Matrix u = a * (b[3] * a2 + b[1] * ident);
        const Matrix v = b[2] * a2 + b[0] * ident;
        return detail::pade_solve(u, v);
    }
    const Matrix a4 = a2 * a2;
    if (norm <= theta[1]) {
        static constexpr double b[] = {30240., 15120., 3360., 420., 30., 1.};
        const Matrix u = a * (b[5] * a4 + b[3] * a2 + b[1] * ident);
        const Matrix v = b[4] * a4 + b[2] * a2 + b[0] * ident;
        return detail::pade_solve(u, v);
    }
    const Matrix a6 = a4 * a2;
    if (norm <= theta[2]) {
        static constexpr double b[] = {17297280., 8648640., 1995840., 277200.,
                                       25200.,    1512.,    56.,      1.};
        const Matrix u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
        const Matrix v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
        return detail::pade_solve(u, v);
    }
    if (norm <= theta[3]) {
        static constexpr double b[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                       2162160.,     110880.,     3960.,       90.,        1.};
        const Matrix a8 = a6 * a2;
        const Matrix u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
        const Matrix v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
        return detail::pade_solve(u, v);
    }

    static constexpr double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                                   1187353796428800.,  129060195264000.,   10559470521600.,
                                   670442572800.,      33522128640.,       1323241920.,
                                   40840800.,          960960.,            16380.,
                                   182.,               1.};
    int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    const double scale = std::ldexp(1.0, -s);
    const Matrix as = a * scale;
    const Matrix b2 = a2 * (scale * scale);
    const Matrix b4 = b2 * b2;
    const Matrix b6 = b4 * b2;
    const Matrix u = as * (b6 * (b[13] * b6 + b[11] * b4 + b[9] * b2) + b[7] * b6 + b[5] * b4 +
                           b[3] * b2 + b[1] * ident);
    const Matrix v =
        b6 * (b[12] * b6 + b[10] * b4 + b[8] * b2) + b[6] * b6 + b[4] * b4 + b[2] * b2 + b[0] * ident;
    Matrix r = detail::pade_solve(u, v);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

}  // namespace ionlc
