#pragma once

#include <cmath>

namespace lrd::detail {

// Integrand family x^(-t) * (c*ln x + d), closed under differentiation and
// with an elementary integral over [a, inf) when t > 1.  Power-law tail
// sums (zeta-like series and their entropy analogues) all live here.
struct log_power_term {
    double t;
    double c;
    double d;

    double operator()(double x) const {
        return std::pow(x, -t) * (c * std::log(x) + d);
    }

    log_power_term derivative() const { return {t + 1.0, -t * c, c - t * d}; }

    // Integral over [a, inf); requires t > 1 for convergence.
    double integral_from(double a) const {
        const double s = t - 1.0;
        return std::pow(a, -s) * ((c * std::log(a) + d) / s + c / (s * s));
    }
};

struct tail_estimate {
    double value;
    double error_bound;
};

// Sum_{n >= a} f(n) by Euler-Maclaurin through the third-derivative
// correction.  The remainder after these terms is bounded by
// (2 zeta(4) / (2 pi)^4) * integral of |f^(5)| over [a, inf); the integrand
// bound |c ln x + d| <= |c| ln x + |d| (valid for x >= 1) keeps the bound
// elementary, and 1/700 over-covers the zeta(4) constant.
inline tail_estimate euler_maclaurin_tail(const log_power_term& f, double a) {
    const log_power_term f1 = f.derivative();
    const log_power_term f2 = f1.derivative();
    const log_power_term f3 = f2.derivative();
    const log_power_term f4 = f3.derivative();
    const log_power_term f5 = f4.derivative();

    const double value = f.integral_from(a) + 0.5 * f(a) - f1(a) / 12.0 + f3(a) / 720.0;
    const log_power_term f5_abs{f5.t, std::abs(f5.c), std::abs(f5.d)};
    const double error = f5_abs.integral_from(a) / 700.0;
    return {value, error};
}

}  // namespace lrd::detail
