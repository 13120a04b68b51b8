#include "memfpk/fpk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace memfpk::fpk {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double minmod(double x, double y) {
    if (x > 0.0 && y > 0.0) return std::min(x, y);
    if (x < 0.0 && y < 0.0) return std::max(x, y);
    return 0.0;
}

/// monotonized-central limited slope at node i (zero at the ends)
double limited_slope(std::span<const double> p, std::size_t i, double dx) {
    if (i == 0 || i + 1 == p.size()) return 0.0;
    const double dl = (p[i] - p[i - 1]) / dx;
    const double dr = (p[i + 1] - p[i]) / dx;
    const double dc = 0.5 * (dl + dr);
    return minmod(dc, minmod(2.0 * dl, 2.0 * dr));
}

std::size_t output_index(double t, double dt, std::size_t n_steps, const char* what) {
    const double k = t / dt;
    const double r = std::round(k);
    if (std::fabs(k - r) > 0.5 + 1e-9 || r < 0.0 || std::size_t(r) > n_steps)
        throw std::invalid_argument(std::string(what) + " " + std::to_string(t) +
                                    " does not sit on the time grid");
    return std::size_t(r);
}

} // namespace

PdfField init_pdf(const InitialLaw& init, const Grid1D& grid) {
    double mu, sigma;
    if (init.kind == InitialLaw::Kind::point) {
        mu = init.x0;
        sigma = kPointSigmaCells * grid.dx();
    } else {
        if (!(init.sigma0_sq > 0.0)) throw std::invalid_argument("init_pdf: sigma0^2 > 0");
        mu = init.mu0;
        sigma = std::sqrt(init.sigma0_sq);
    }
    if (mu - 4.0 * sigma < grid.x_min || mu + 4.0 * sigma > grid.x_max)
        throw std::invalid_argument("init_pdf: initial support [" +
                                    std::to_string(mu - 4.0 * sigma) + ", " +
                                    std::to_string(mu + 4.0 * sigma) + "] not inside grid");
    PdfField p;
    p.time = 0.0;
    p.values.resize(grid.size());
    const double norm = 1.0 / std::sqrt(kTwoPi * sigma * sigma);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = grid.node(i) - mu;
        p.values[i] = norm * std::exp(-0.5 * d * d / (sigma * sigma));
    }
    const double mass = trapezoid(p.values, grid.dx());
    if (!(mass > 0.0)) throw std::runtime_error("init_pdf: zero mass");
    for (double& v : p.values) v /= mass;
    return p;
}

PdfField fd_step(const PdfField& p, std::span<const double> a, std::span<const double> b,
                 double dt, const Grid1D& grid) {
    const std::size_t n = grid.size();
    if (p.values.size() != n || a.size() != n || b.size() != n)
        throw std::invalid_argument("fd_step: size mismatch");
    const double dx = grid.dx();

    double bmax = 0.0, amax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        bmax = std::max(bmax, b[i]);
        amax = std::max(amax, std::fabs(a[i]));
    }
    if (bmax > 0.0 && dt > 0.9 * dx * dx / (2.0 * bmax))
        throw std::runtime_error("fd_step: diffusion stability violated, need dt <= " +
                                 std::to_string(0.9 * dx * dx / (2.0 * bmax)) + ", got " +
                                 std::to_string(dt));
    if (amax > 0.0 && dt > 0.9 * dx / amax)
        throw std::runtime_error("fd_step: advection stability violated, need dt <= " +
                                 std::to_string(0.9 * dx / amax) + ", got " + std::to_string(dt));

    const auto& pv = p.values;
    // interior faces between nodes i and i+1; zero flux at both boundary faces
    std::vector<double> flux(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double af = 0.5 * (a[i] + a[i + 1]);
        double pface;
        if (af >= 0.0)
            pface = pv[i] + 0.5 * dx * limited_slope(pv, i, dx);
        else
            pface = pv[i + 1] - 0.5 * dx * limited_slope(pv, i + 1, dx);
        flux[i] = af * pface - (b[i + 1] * pv[i + 1] - b[i] * pv[i]) / dx;
    }

    PdfField out;
    out.time = p.time + dt;
    out.values.resize(n);
    out.values[0] = pv[0] - dt * flux[0] / (0.5 * dx);
    for (std::size_t i = 1; i + 1 < n; ++i)
        out.values[i] = pv[i] - dt * (flux[i] - flux[i - 1]) / dx;
    out.values[n - 1] = pv[n - 1] - dt * (0.0 - flux[n - 2]) / (0.5 * dx);

    double pmin = out.values[0];
    for (double v : out.values) pmin = std::min(pmin, v);
    if (pmin < -1e-8)
        throw std::runtime_error("fd_step: density fell to " + std::to_string(pmin) +
                                 " (below -1e-8) at t=" + std::to_string(out.time));
    return out;
}

PdfSurface solve_memfpk(const SystemSpec& spec, const InitialLaw& init, Hurst H,
                        const Grid1D& grid, const SolveOptions& opts) {
    using kernel::KernelMoments;

    if (!(opts.dt > 0.0) || !(opts.t_end > 0.0))
        throw std::invalid_argument("solve_memfpk: dt and t_end must be positive");
    if (opts.mode != KernelMode::classical && !(H.value > 0.5))
        throw std::domain_error("solve_memfpk: memory modes require H > 1/2");
    if (opts.vada_order < 1 || opts.vada_order > 3)
        throw std::invalid_argument("solve_memfpk: vada_order in {1,2,3}");
    if (opts.mode == KernelMode::closed_case_iv && !(opts.alpha > 0.0))
        throw std::invalid_argument("solve_memfpk: closed_case_iv needs alpha > 0");
    if (opts.mode == KernelMode::vada &&
        !kernel::commutativity_check(spec, grid, opts.commutativity_tol))
        throw std::runtime_error(
            "solve_memfpk: VADA requires the commutativity condition g h' = h g'; "
            "this system violates it — use the Monte Carlo kernel oracle instead");

    const double dt = opts.dt;
    const std::size_t n_steps = output_index(opts.t_end, dt, std::size_t(-1), "t_end");
    if (n_steps == 0) throw std::invalid_argument("solve_memfpk: t_end shorter than one step");

    // macro refresh snapped to the micro grid
    double refresh = std::min(opts.macro_refresh, opts.t_end);
    std::size_t refresh_steps = std::max<std::size_t>(1, std::size_t(std::round(refresh / dt)));
    refresh = double(refresh_steps) * dt;

    std::vector<std::size_t> out_idx;
    for (double t : opts.output_times) out_idx.push_back(output_index(t, dt, n_steps, "output time"));

    const std::size_t n = grid.size();
    const bool vada = opts.mode == KernelMode::vada;

    std::vector<double> phi1_nodes(n, 0.0);
    if (vada) {
        const ScalarFn p1 = opts.phi1_override
                                ? opts.phi1_override
                                : ScalarFn([&spec](double x) { return kernel::phi1(spec, x); });
        for (std::size_t i = 0; i < n; ++i) phi1_nodes[i] = p1(grid.node(i));
    }

    PdfField p = init_pdf(init, grid);

    PdfSurface surf;
    surf.grid = grid;

    kernel::VadaState state;
    state.refresh = refresh;

    auto mean_phi1 = [&](const PdfField& field) {
        if (!vada) return 0.0;
        std::vector<double> integrand(n);
        for (std::size_t i = 0; i < n; ++i) integrand[i] = phi1_nodes[i] * field.values[i];
        const double mass = trapezoid(field.values, grid.dx());
        return trapezoid(integrand, grid.dx()) / mass;
    };

    // Memory term at a macro time, one scalar triple (vada: moments of the
    // recorded history; closed modes: the closed form in the K0 slot).
    auto psi_at_macro = [&](double t) -> KernelMoments {
        KernelMoments m;
        m.t = t;
        switch (opts.mode) {
            case KernelMode::vada:
                return kernel::vada_kernel_moments(state, t, H, opts.vada_order == 3);
            case KernelMode::closed_case_ii:
                m.K0 = kernel::kernel_case_constant(H, t);
                return m;
            case KernelMode::closed_case_iv:
                m.K0 = kernel::kernel_case_linear(opts.alpha, H, t);
                return m;
            case KernelMode::classical:
                return m;
        }
        return m;
    };

    // predicted moments one refresh ahead (mean held constant past the last record)
    auto psi_predicted = [&](double t) -> KernelMoments {
        if (!vada) return psi_at_macro(t);
        kernel::VadaState ext = state;
        kernel::vada_record_mean(ext, t, ext.m1.back(), 0.5 * dt);
        return kernel::vada_kernel_moments(ext, t, H, opts.vada_order == 3);
    };

    if (vada) kernel::vada_record_mean(state, 0.0, mean_phi1(p), 0.5 * dt);

    KernelMoments K_lo = psi_at_macro(0.0); // zeros at t = 0
    double t_lo = 0.0;
    double t_hi = std::min(refresh, double(n_steps) * dt);
    KernelMoments K_hi = psi_predicted(t_hi);
    double m1_now = vada ? state.m1.back() : 0.0;

    std::vector<double> a(n), b(n), psi(n);
    auto assemble = [&](double tau) {
        const double w = (tau - t_lo) / (t_hi - t_lo);
        KernelMoments K;
        K.t = tau;
        K.K0 = (1.0 - w) * K_lo.K0 + w * K_hi.K0;
        K.K1 = (1.0 - w) * K_lo.K1 + w * K_hi.K1;
        K.K2 = (1.0 - w) * K_lo.K2 + w * K_hi.K2;
        K.K3 = (1.0 - w) * K_lo.K3 + w * K_hi.K3;
        for (std::size_t i = 0; i < n; ++i) {
            psi[i] = vada ? kernel::vada_psi_order(K, phi1_nodes[i], m1_now, opts.vada_order)
                          : K.K0;
            const auto mc = kernel::mem_coefficients(spec, grid.node(i), psi[i]);
            a[i] = mc.a;
            b[i] = mc.b;
            if (mc.clamped) ++surf.clamp_events;
        }
    };

    auto record_mass = [&](const PdfField& field) {
        const double mass = trapezoid(field.values, grid.dx());
        surf.mass_min = std::min(surf.mass_min, mass);
        surf.mass_max = std::max(surf.mass_max, mass);
        if (std::fabs(mass - 1.0) > 1e-6)
            throw std::runtime_error("solve_memfpk: mass drifted to " + std::to_string(mass) +
                                     " at t=" + std::to_string(field.time));
        double pmin = field.values[0];
        for (double v : field.values) pmin = std::min(pmin, v);
        surf.min_density = std::min(surf.min_density, pmin);
        return mass;
    };

    auto record_output = [&](const PdfField& field) {
        surf.slices.push_back(field);
        surf.mass_history.push_back(trapezoid(field.values, grid.dx()));
        surf.m1_history.push_back(vada ? m1_now : std::numeric_limits<double>::quiet_NaN());
        if (opts.record_psi) surf.psi_slices.push_back(psi);
    };

    auto record_bmem = [&](double t_macro) {
        if (!opts.record_bmem_macro) return;
        const KernelMoments K = psi_at_macro(t_macro);
        std::vector<double> bm(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ps = vada
                                  ? kernel::vada_psi_order(K, phi1_nodes[i], m1_now, opts.vada_order)
                                  : K.K0;
            bm[i] = kernel::mem_coefficients(spec, grid.node(i), ps).b;
        }
        surf.macro_times.push_back(t_macro);
        surf.bmem_macro.push_back(std::move(bm));
    };

    record_mass(p);
    record_bmem(0.0);
    for (auto idx : out_idx)
        if (idx == 0) record_output(p);

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double tau = double(k + 1) * dt;
        assemble(tau);
        p = fd_step(p, a, b, dt, grid);
        p.time = tau;
        record_mass(p);

        // refresh the kernel state exactly at macro multiples; a partial final
        // interval keeps using the prediction
        if ((k + 1) % refresh_steps == 0) {
            if (vada) {
                kernel::vada_record_mean(state, tau, mean_phi1(p), 0.5 * dt);
                m1_now = state.m1.back();
            }
            record_bmem(tau);
            if (k + 1 < n_steps) {
                K_lo = psi_at_macro(tau);
                t_lo = tau;
                t_hi = std::min(tau + refresh, double(n_steps) * dt);
                K_hi = psi_predicted(t_hi);
            }
        }

        for (auto idx : out_idx)
            if (idx == k + 1) record_output(p);
    }
    return surf;
}

} // namespace memfpk::fpk
