#pragma once

namespace memfpk::special {

/// Gamma function for a > 0. Relative error <= 1e-12.
double gamma_fn(double a);

/// Upper incomplete gamma Gamma(a,z) = int_z^inf t^(a-1) e^(-t) dt, a > 0,
/// z >= 0. Series for z < a+1, continued fraction otherwise.
double upper_incomplete_gamma(double a, double z);

/// Lower incomplete gamma, gamma(a,z) = Gamma(a) - Gamma(a,z).
double lower_incomplete_gamma(double a, double z);

} // namespace memfpk::special
