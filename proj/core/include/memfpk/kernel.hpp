#pragma once

#include "memfpk/fgn.hpp"
#include "memfpk/grid.hpp"
#include "memfpk/system.hpp"

#include <vector>

namespace memfpk::kernel {

/// Memory weight phi(t,s) = H(2H-1)(t-s)^(2H-2), s < t. Integrably singular
/// at s = t for H > 1/2; vanishes identically at H = 1/2.
double phi(double t, double s, Hurst H);

/// Drift-exponent composition phi1 = f' - f h'/h
///   + g/2 (g'' - (g' h h' + g h h'' - g' h'^2)/h^2).
/// Requires h(x) != 0.
double phi1(const SystemSpec& spec, double x);

/// Ito-exponent composition phi2 = g' - g h'/h. Vanishes exactly when g and h
/// commute (g h' = h g'). Requires h(x) != 0.
double phi2(const SystemSpec& spec, double x);

/// True iff max over grid nodes of |g h' - h g'| <= tol.
bool commutativity_check(const SystemSpec& spec, const Grid1D& grid, double tol);

/// Memory term for constant drift exponent zero: H t^(2H-1).
double kernel_case_constant(Hurst H, double t);

/// Closed form of int_0^t e^(-alpha(t-s)) phi(t,s) ds
///   = H(2H-1) alpha^(1-2H) (Gamma(2H-1) - Gamma(2H-1, alpha t)).
double kernel_case_linear(double alpha, Hurst H, double t);

/// History integrals K_j = int_0^t exp{int_s^t E[phi1] du} (t-s)^j phi(t,s) ds
/// for j = 0..2 (K3 additionally populated when requested, for the
/// third-order expansion variant).
struct KernelMoments {
    double K0 = 0.0, K1 = 0.0, K2 = 0.0, K3 = 0.0;
    double t = 0.0;
};

/// Macro-grid history of the mean of phi1 and its running time integral.
struct VadaState {
    double refresh = 0.0;
    std::vector<double> times; ///< strictly increasing macro times, first is 0
    std::vector<double> m1;    ///< E[phi1(X_t)] at the macro times
    std::vector<double> I;     ///< trapezoid cumulative of m1, I[0] = 0
};

/// Appends a mean record one refresh interval after the previous one
/// (tolerance tol on the spacing) and extends I by the trapezoid rule.
void vada_record_mean(VadaState& state, double t, double m1, double tol);

/// Product integration of the three weighted history integrals over the macro
/// subintervals: the power-law weight and its first two moments are integrated
/// exactly, the exponential factor is taken at the subinterval midpoint with a
/// second-order Taylor correction in the local slope of I. The integrable
/// singularity at s -> t needs no special casing and the result matches the
/// Case IV closed form to ~1e-9 at the default refresh for constant m1.
KernelMoments vada_kernel_moments(const VadaState& state, double t, Hurst H,
                                  bool with_third_order = false);

/// Second-order decoupled memory term:
/// psi = K0 + (phi1_x - m1_now) K1 + (phi1_x - m1_now)^2 K2 / 2.
double vada_psi(const KernelMoments& m, double phi1_x, double m1_now);

/// Truncation-order variants (order in {1,2,3}); order 3 needs m.K3.
double vada_psi_order(const KernelMoments& m, double phi1_x, double m1_now, int order);

struct MemCoefficients {
    double a = 0.0; ///< f + g g'/2 + h h' psi
    double b = 0.0; ///< g^2/2 + h^2 psi, floored at 1e-12
    bool clamped = false;
};

constexpr double kDiffusionFloor = 1e-12;

MemCoefficients mem_coefficients(const SystemSpec& spec, double x, double psi);

namespace detail {

/// int_{u2}^{u1} u^(a-1) du, exact (a > 0, u1 >= u2 >= 0).
inline double power_moment(double a, double u1, double u2) {
    return (std::pow(u1, a) - std::pow(u2, a)) / a;
}

/// int_{u2}^{u1} exp{eps_mid + lam (u - u_mid)} u^(a-1) du with the
/// exponential Taylor-expanded to second order about u_mid = (u1+u2)/2 and
/// every power moment integrated exactly.
double expweight_segment(double a, double u1, double u2, double eps_mid, double lam);

} // namespace detail
} // namespace memfpk::kernel
