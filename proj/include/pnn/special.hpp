#pragma once

#include <cmath>
#include <limits>

#include "pnn/error.hpp"

namespace pnn {

namespace detail {

// Regularized lower incomplete gamma P(a,x) by series expansion.
// Converges fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
    const double gln = std::lgamma(a);
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - gln);
    }
    throw NumericError("incomplete gamma series failed to converge");
}

// Regularized upper incomplete gamma Q(a,x) by continued fraction
// (modified Lentz). Converges fast for x >= a + 1.
inline double gamma_q_contfrac(double a, double x) {
    const double gln = std::lgamma(a);
    const double fpmin = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return std::exp(-x + a * std::log(x) - gln) * h;
    }
    throw NumericError("incomplete gamma continued fraction failed to converge");
}

} // namespace detail

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
inline double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0 || !std::isfinite(a) || !std::isfinite(x))
        throw NumericError("gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_contfrac(a, x);
}

/// Survival function of the chi-square distribution with df degrees of
/// freedom: P(X >= x).
inline double chi_square_sf(double x, double df) {
    if (df <= 0.0) throw NumericError("chi_square_sf: df must be positive");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

/// Standard normal upper tail P(Z >= z).
inline double normal_sf(double z) {
    return 0.5 * std::erfc(z / 1.4142135623730950488);
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return normal_sf(-z); }

} // namespace pnn
