#include "memfpk/analytic.hpp"

#include "memfpk/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace memfpk::analytic {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// FGN contribution 2 int_0^t e^(-2 alpha (t-u)) W(u) du at a fixed panel
/// count, where W(u) = H(2H-1) int_0^u e^(-alpha w) w^(2H-2) dw accumulates
/// one product-integrated segment per outer node.
double fgn_part_fixed(double alpha, double H, double t, std::size_t n_panels) {
    const std::size_t n_nodes = 2 * n_panels + 1; // Simpson on n_panels pairs
    const double h = t / double(n_nodes - 1);
    const double a = 2.0 * H - 1.0;
    const double pref = H * a;

    double W = 0.0, u_prev = 0.0;
    double simpson = 0.0;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const double u = double(i) * h;
        if (i > 0) {
            // segment of the inner integral; exponent is exactly linear in w
            const double eps_mid = -alpha * 0.5 * (u_prev + u);
            W += pref * kernel::detail::expweight_segment(a, u, u_prev, eps_mid, -alpha);
        }
        const double f = std::exp(-2.0 * alpha * (t - u)) * W;
        const double wgt = (i == 0 || i + 1 == n_nodes) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        simpson += wgt * f;
        u_prev = u;
    }
    return 2.0 * simpson * h / 3.0;
}

double fgn_part(double alpha, double H, double t) {
    std::size_t n_panels = 1000; // 2000 Simpson sub-panels
    double prev = fgn_part_fixed(alpha, H, t, n_panels);
    double est = 1.0;
    for (int it = 0; it < 12; ++it) {
        n_panels *= 2;
        const double next = fgn_part_fixed(alpha, H, t, n_panels);
        est = std::fabs(next - prev) / std::max(std::fabs(next), 1e-300);
        if (est <= 1e-7) return next;
        prev = next;
    }
    throw std::runtime_error("ou_variance: quadrature did not reach 1e-7 relative (achieved " +
                             std::to_string(est) + ")");
}

void validate(const OuParams& p) {
    if (!(p.alpha > 0.0)) throw std::domain_error("OuParams: alpha > 0");
    if (p.sigma_w < 0.0 || p.sigma_b < 0.0) throw std::domain_error("OuParams: intensities >= 0");
    if (p.sigma_w == 0.0 && p.sigma_b == 0.0)
        throw std::domain_error("OuParams: at least one noise intensity must be positive");
}

} // namespace

double ou_mean(const OuParams& p, double t) {
    validate(p);
    if (!(t >= 0.0)) throw std::domain_error("ou_mean: t >= 0");
    return p.x0 * std::exp(-p.alpha * t);
}

double ou_variance(const OuParams& p, double t) {
    validate(p);
    if (!(t >= 0.0)) throw std::domain_error("ou_variance: t >= 0");
    if (t == 0.0) return 0.0;
    const double white = p.sigma_w * p.sigma_w / (2.0 * p.alpha) *
                         (1.0 - std::exp(-2.0 * p.alpha * t));
    if (p.sigma_b == 0.0) return white;
    const double H = p.hurst.value;
    if (H == 0.5) // white-noise limit of the fractional channel
        return white + p.sigma_b * p.sigma_b / (2.0 * p.alpha) *
                           (1.0 - std::exp(-2.0 * p.alpha * t));
    return white + p.sigma_b * p.sigma_b * fgn_part(p.alpha, H, t);
}

double ou_pdf(const OuParams& p, double x, double t) {
    if (!(t > 0.0)) throw std::domain_error("ou_pdf: t > 0");
    const double var = ou_variance(p, t);
    if (!(var > 0.0)) throw std::logic_error("ou_pdf: non-positive variance");
    const double d = x - ou_mean(p, t);
    return std::exp(-0.5 * d * d / var) / std::sqrt(kTwoPi * var);
}

std::vector<double> ou_pdf_slice(const OuParams& p, const Grid1D& grid, double t) {
    if (!(t > 0.0)) throw std::domain_error("ou_pdf_slice: t > 0");
    const double var = ou_variance(p, t);
    if (!(var > 0.0)) throw std::logic_error("ou_pdf_slice: non-positive variance");
    const double mu = ou_mean(p, t);
    const double norm = 1.0 / std::sqrt(kTwoPi * var);
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = grid.node(i) - mu;
        out[i] = norm * std::exp(-0.5 * d * d / var);
    }
    return out;
}

} // namespace memfpk::analytic
