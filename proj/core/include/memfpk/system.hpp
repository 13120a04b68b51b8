#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>

namespace memfpk {

using ScalarFn = std::function<double(double)>;

/// One scalar SDE instance dX = f(X) dt + g(X) dW + h(X) dB^H (Stratonovich),
/// with the analytic derivatives the memory-kernel compositions need.
struct SystemSpec {
    ScalarFn f, f_prime;
    ScalarFn g, g_prime, g_second;
    ScalarFn h, h_prime, h_second;
    std::string label;
};

/// Largest relative mismatch between the stored derivatives and central finite
/// differences of f, g, h over the probe points. Smoke check for hand-derived
/// derivative code.
double max_derivative_mismatch(const SystemSpec& spec, std::span<const double> probes,
                               double step = 1e-5);

struct InitialLaw {
    enum class Kind { point, gaussian };
    Kind kind = Kind::point;
    double x0 = 0.0;     ///< point location
    double mu0 = 0.0;    ///< gaussian mean
    double sigma0_sq = 0.0; ///< gaussian variance, > 0

    static InitialLaw point(double x) { return {Kind::point, x, 0.0, 0.0}; }
    static InitialLaw gaussian(double mu, double var) { return {Kind::gaussian, 0.0, mu, var}; }
};

} // namespace memfpk
