#include "memfpk/kernel.hpp"

#include "memfpk/special.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace memfpk::kernel {

double phi(double t, double s, Hurst H) {
    if (!(s < t)) throw std::domain_error("phi: requires s < t");
    const double h = H.value;
    return h * (2.0 * h - 1.0) * std::pow(t - s, 2.0 * h - 2.0);
}

double phi1(const SystemSpec& spec, double x) {
    const double h = spec.h(x);
    if (h == 0.0 || !std::isfinite(h))
        throw std::domain_error("phi1: h(x) = 0 at x = " + std::to_string(x));
    const double f = spec.f(x), fp = spec.f_prime(x);
    const double g = spec.g(x), gp = spec.g_prime(x), gpp = spec.g_second(x);
    const double hp = spec.h_prime(x), hpp = spec.h_second(x);
    return fp - f * hp / h +
           0.5 * g * (gpp - (gp * h * hp + g * h * hpp - gp * hp * hp) / (h * h));
}

double phi2(const SystemSpec& spec, double x) {
    const double h = spec.h(x);
    if (h == 0.0 || !std::isfinite(h))
        throw std::domain_error("phi2: h(x) = 0 at x = " + std::to_string(x));
    return spec.g_prime(x) - spec.g(x) * spec.h_prime(x) / h;
}

bool commutativity_check(const SystemSpec& spec, const Grid1D& grid, double tol) {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        worst = std::max(worst,
                         std::fabs(spec.g(x) * spec.h_prime(x) - spec.h(x) * spec.g_prime(x)));
    }
    return worst <= tol;
}

double kernel_case_constant(Hurst H, double t) {
    if (!(t >= 0.0)) throw std::domain_error("kernel_case_constant: t >= 0");
    if (t == 0.0) return 0.0;
    return H.value * std::pow(t, 2.0 * H.value - 1.0);
}

double kernel_case_linear(double alpha, Hurst H, double t) {
    if (!(alpha > 0.0)) throw std::domain_error("kernel_case_linear: alpha > 0");
    if (!(t >= 0.0)) throw std::domain_error("kernel_case_linear: t >= 0");
    if (t == 0.0) return 0.0;
    const double a = 2.0 * H.value - 1.0;
    if (a == 0.0) return 0.5; // white-noise limit of the closed form
    return H.value * a * std::pow(alpha, -a) *
           (special::gamma_fn(a) - special::upper_incomplete_gamma(a, alpha * t));
}

void vada_record_mean(VadaState& state, double t, double m1, double tol) {
    if (!std::isfinite(m1)) throw std::invalid_argument("vada_record_mean: non-finite mean");
    if (state.times.empty()) {
        if (std::fabs(t) > tol)
            throw std::invalid_argument("vada_record_mean: first record must be at t = 0");
        state.times.push_back(t);
        state.m1.push_back(m1);
        state.I.push_back(0.0);
        return;
    }
    const double prev = state.times.back();
    if (!(t > prev)) throw std::invalid_argument("vada_record_mean: non-monotone time");
    if (state.refresh > 0.0 && std::fabs(t - prev - state.refresh) > tol)
        throw std::invalid_argument("vada_record_mean: record at t=" + std::to_string(t) +
                                    " is not one refresh interval after t=" + std::to_string(prev));
    state.I.push_back(state.I.back() + 0.5 * (state.m1.back() + m1) * (t - prev));
    state.times.push_back(t);
    state.m1.push_back(m1);
}

namespace detail {

double expweight_segment(double a, double u1, double u2, double eps_mid, double lam) {
    const double P0 = power_moment(a, u1, u2);
    const double P1 = power_moment(a + 1.0, u1, u2);
    const double P2 = power_moment(a + 2.0, u1, u2);
    const double um = 0.5 * (u1 + u2);
    const double c0 = 1.0 - lam * um + 0.5 * lam * lam * um * um;
    const double c1 = lam - lam * lam * um;
    const double c2 = 0.5 * lam * lam;
    return std::exp(eps_mid) * (c0 * P0 + c1 * P1 + c2 * P2);
}

} // namespace detail

KernelMoments vada_kernel_moments(const VadaState& state, double t, Hurst H,
                                  bool with_third_order) {
    if (!(H.value > 0.5))
        throw std::domain_error("vada_kernel_moments: requires H > 1/2");
    KernelMoments out;
    out.t = t;
    if (t <= 0.0) return out;
    if (state.times.empty() || t > state.times.back() + 1e-12)
        throw std::out_of_range("vada_kernel_moments: t beyond recorded history");

    const double a = 2.0 * H.value - 1.0;
    const double pref = H.value * a;

    // I interpolated at t
    auto I_at = [&](double s) {
        const auto it = std::upper_bound(state.times.begin(), state.times.end(), s);
        std::size_t i = std::size_t(it - state.times.begin());
        if (i == 0) return state.I.front();
        if (i >= state.times.size()) i = state.times.size() - 1;
        const double t0 = state.times[i - 1], t1 = state.times[i];
        const double w = (s - t0) / (t1 - t0);
        return state.I[i - 1] * (1.0 - w) + state.I[i] * w;
    };
    const double It = I_at(t);

    double K[4] = {0.0, 0.0, 0.0, 0.0};
    const int n_orders = with_third_order ? 4 : 3;
    for (std::size_t i = 0; i + 1 < state.times.size() && state.times[i] < t; ++i) {
        const double s_lo = state.times[i];
        const double s_hi = std::min(state.times[i + 1], t);
        if (!(s_hi > s_lo)) continue;
        const double lam = (state.I[i + 1] - state.I[i]) / (state.times[i + 1] - state.times[i]);
        const double s_mid = 0.5 * (s_lo + s_hi);
        const double eps_mid = It - (state.I[i] + lam * (s_mid - state.times[i]));
        const double u1 = t - s_lo, u2 = t - s_hi;
        for (int j = 0; j < n_orders; ++j)
            K[j] += pref * detail::expweight_segment(a + double(j), u1, u2, eps_mid, lam);
    }
    out.K0 = K[0];
    out.K1 = K[1];
    out.K2 = K[2];
    out.K3 = K[3];
    return out;
}

double vada_psi(const KernelMoments& m, double phi1_x, double m1_now) {
    const double d = phi1_x - m1_now;
    return m.K0 + d * m.K1 + 0.5 * d * d * m.K2;
}

double vada_psi_order(const KernelMoments& m, double phi1_x, double m1_now, int order) {
    const double d = phi1_x - m1_now;
    switch (order) {
        case 1: return m.K0 + d * m.K1;
        case 2: return vada_psi(m, phi1_x, m1_now);
        case 3: return vada_psi(m, phi1_x, m1_now) + d * d * d * m.K3 / 6.0;
        default: throw std::invalid_argument("vada_psi_order: order must be 1, 2 or 3");
    }
}

MemCoefficients mem_coefficients(const SystemSpec& spec, double x, double psi) {
    if (!std::isfinite(psi)) throw std::invalid_argument("mem_coefficients: non-finite psi");
    const double g = spec.g(x), h = spec.h(x);
    MemCoefficients out;
    out.a = spec.f(x) + 0.5 * g * spec.g_prime(x) + h * spec.h_prime(x) * psi;
    out.b = 0.5 * g * g + h * h * psi;
    if (out.b < kDiffusionFloor) {
        out.b = kDiffusionFloor;
        out.clamped = true;
    }
    return out;
}

} // namespace memfpk::kernel
