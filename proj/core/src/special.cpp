#include "memfpk/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace memfpk::special {

namespace {

// P(a,z) by power series, valid/fast for z < a+1
double gamma_p_series(double a, double z) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= z / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17)
            return sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
    }
    throw std::runtime_error("incomplete gamma series failed to converge");
}

// Q(a,z)*Gamma(a) = Gamma(a,z) by modified Lentz continued fraction, z >= a+1
double gamma_q_cf(double a, double z) {
    constexpr double tiny = 1e-300;
    double b = z + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return std::exp(-z + a * std::log(z)) * h;
    }
    throw std::runtime_error("incomplete gamma continued fraction failed to converge");
}

} // namespace

double gamma_fn(double a) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw std::domain_error("gamma_fn: requires finite a > 0, got a=" + std::to_string(a));
    return std::tgamma(a);
}

double upper_incomplete_gamma(double a, double z) {
    if (!(a > 0.0) || !std::isfinite(a) || !(z >= 0.0) || !std::isfinite(z))
        throw std::domain_error("upper_incomplete_gamma: requires a > 0, z >= 0 (a=" +
                                std::to_string(a) + ", z=" + std::to_string(z) + ")");
    if (z == 0.0) return gamma_fn(a);
    if (z < a + 1.0) return gamma_fn(a) * (1.0 - gamma_p_series(a, z));
    return gamma_q_cf(a, z);
}

double lower_incomplete_gamma(double a, double z) {
    if (!(a > 0.0) || !std::isfinite(a) || !(z >= 0.0) || !std::isfinite(z))
        throw std::domain_error("lower_incomplete_gamma: requires a > 0, z >= 0");
    if (z == 0.0) return 0.0;
    if (z < a + 1.0) return gamma_fn(a) * gamma_p_series(a, z);
    return gamma_fn(a) - gamma_q_cf(a, z);
}

} // namespace memfpk::special
