#include "memfpk/sde.hpp"

#include "memfpk/kernel.hpp"
#include "memfpk/parallel.hpp"
#include "memfpk/rng.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace memfpk {

double max_derivative_mismatch(const SystemSpec& spec, std::span<const double> probes,
                               double step) {
    auto mismatch = [&](const ScalarFn& fn, const ScalarFn& dfn, double x) {
        const double num = (fn(x + step) - fn(x - step)) / (2.0 * step);
        const double ana = dfn(x);
        const double scale = std::max({std::fabs(num), std::fabs(ana), 1e-8});
        return std::fabs(num - ana) / scale;
    };
    double worst = 0.0;
    for (double x : probes) {
        worst = std::max(worst, mismatch(spec.f, spec.f_prime, x));
        worst = std::max(worst, mismatch(spec.g, spec.g_prime, x));
        worst = std::max(worst, mismatch(spec.h, spec.h_prime, x));
        worst = std::max(worst, mismatch(spec.g_prime, spec.g_second, x));
        worst = std::max(worst, mismatch(spec.h_prime, spec.h_second, x));
    }
    return worst;
}

namespace sde {

namespace {

struct KernelFns {
    ScalarFn p1, p2;
};

/// Integrates one path; returns false on divergence (remaining states NaN).
/// When kf is set, fills the cumulative kernel exponent G (length n_steps+1)
/// and reports via kernel_ok whether every G entry stayed finite.
bool simulate_path(const SystemSpec& spec, double x0, const double* fgn, const double* gwn,
                   double dt, std::size_t n_steps, double* states, double* G,
                   const KernelFns* kf, bool* kernel_ok) {
    states[0] = x0;
    double x = x0;
    bool ok = true;
    double p1_prev = 0.0, p2_prev = 0.0;
    if (kf) {
        G[0] = 0.0;
        *kernel_ok = true;
        try {
            p1_prev = kf->p1(x);
            p2_prev = kf->p2 ? kf->p2(x) : 0.0;
        } catch (const std::exception&) {
            p1_prev = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(p1_prev) || !std::isfinite(p2_prev)) *kernel_ok = false;
    }
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double dW = gwn ? gwn[i] : 0.0;
        const double dBH = fgn ? fgn[i] : 0.0;
        const double xt = x + spec.f(x) * dt + spec.g(x) * dW + spec.h(x) * dBH;
        const double xn = x + 0.5 * (spec.f(x) + spec.f(xt)) * dt +
                          0.5 * (spec.g(x) + spec.g(xt)) * dW +
                          0.5 * (spec.h(x) + spec.h(xt)) * dBH;
        if (!std::isfinite(xn)) {
            for (std::size_t j = i + 1; j <= n_steps; ++j)
                states[j] = std::numeric_limits<double>::quiet_NaN();
            if (kf)
                for (std::size_t j = i + 1; j <= n_steps; ++j)
                    G[j] = std::numeric_limits<double>::quiet_NaN();
            ok = false;
            break;
        }
        states[i + 1] = xn;
        if (kf) {
            double p1_next, p2_next = 0.0;
            try {
                p1_next = kf->p1(xn);
                p2_next = kf->p2 ? kf->p2(xn) : 0.0;
            } catch (const std::exception&) {
                p1_next = std::numeric_limits<double>::quiet_NaN();
            }
            // trapezoid du-integral plus Ito (left endpoint) dW-sum
            G[i + 1] = G[i] + 0.5 * (p1_prev + p1_next) * dt + p2_prev * dW;
            if (!std::isfinite(G[i + 1])) *kernel_ok = false;
            p1_prev = p1_next;
            p2_prev = p2_next;
        }
        x = xn;
    }
    return ok;
}

double initial_state(const InitialLaw& init, std::uint64_t seed, std::size_t path) {
    if (init.kind == InitialLaw::Kind::point) return init.x0;
    return init.mu0 +
           std::sqrt(init.sigma0_sq) * rng::NormalStream(seed, rng::Domain::init, path).normal(0);
}

void check_divergence_rate(std::size_t n_div, std::size_t n_paths, const std::string& label) {
    const double frac = double(n_div) / double(n_paths);
    if (frac > 0.05)
        throw std::runtime_error("simulate: " + std::to_string(n_div) + "/" +
                                 std::to_string(n_paths) + " divergent paths (" + label + ")");
    if (frac > 0.001)
        std::fprintf(stderr, "warning: %zu/%zu divergent paths (%s)\n", n_div, n_paths,
                     label.c_str());
}

/// Exact power moments of the singular weight over the uniform simulation
/// grid, for one evaluation index k: P_r[j] = int over [t_j, t_{j+1}] of
/// (t_k - s)^(2H-2+r) ds.
struct SegmentWeights {
    std::vector<double> P0, P1, P2;
    double pref = 0.0; ///< H(2H-1)
    std::size_t k = 0;
    double dt = 0.0;
};

SegmentWeights make_segment_weights(std::size_t k, double dt, Hurst H) {
    SegmentWeights w;
    w.k = k;
    w.dt = dt;
    const double a = 2.0 * H.value - 1.0;
    w.pref = H.value * a;
    w.P0.resize(k);
    w.P1.resize(k);
    w.P2.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double u1 = double(k - j) * dt;
        const double u2 = double(k - j - 1) * dt;
        w.P0[j] = kernel::detail::power_moment(a, u1, u2);
        w.P1[j] = kernel::detail::power_moment(a + 1.0, u1, u2);
        w.P2[j] = kernel::detail::power_moment(a + 2.0, u1, u2);
    }
    return w;
}

double kernel_functional(const double* G, const SegmentWeights& w) {
    const double Gk = G[w.k];
    double F = 0.0;
    for (std::size_t j = 0; j < w.k; ++j) {
        const double lam = (G[j + 1] - G[j]) / w.dt;
        const double eps = Gk - 0.5 * (G[j] + G[j + 1]);
        const double um = (double(w.k - j) - 0.5) * w.dt;
        const double c0 = 1.0 - lam * um + 0.5 * lam * lam * um * um;
        const double c1 = lam - lam * lam * um;
        const double c2 = 0.5 * lam * lam;
        F += std::exp(eps) * (c0 * w.P0[j] + c1 * w.P1[j] + c2 * w.P2[j]);
    }
    return w.pref * F;
}

struct RawMoments {
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    std::size_t n = 0;
};

SampleMoments finish_moments(const RawMoments& r) {
    if (r.n < 2) throw std::runtime_error("moments: need at least 2 valid paths");
    SampleMoments m;
    m.n = r.n;
    const double n = double(r.n);
    const double mean = r.s1 / n;
    const double m2 = r.s2 / n - mean * mean;
    m.mean = mean;
    if (m2 <= 0.0) {
        m.std = 0.0;
        m.skew_kurt_defined = false;
        m.skewness = m.kurtosis = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    m.std = std::sqrt(m2 * n / (n - 1.0));
    const double m3 = r.s3 / n - 3.0 * mean * r.s2 / n + 2.0 * mean * mean * mean;
    const double m4 = r.s4 / n - 4.0 * mean * r.s3 / n + 6.0 * mean * mean * r.s2 / n -
                      3.0 * mean * mean * mean * mean;
    m.skewness = m3 / std::pow(m2, 1.5);
    m.kurtosis = m4 / (m2 * m2);
    m.skew_kurt_defined = true;
    return m;
}

} // namespace

double heun_step(const SystemSpec& spec, double x, double dW, double dBH, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("heun_step: dt > 0");
    const double xt = x + spec.f(x) * dt + spec.g(x) * dW + spec.h(x) * dBH;
    return x + 0.5 * (spec.f(x) + spec.f(xt)) * dt + 0.5 * (spec.g(x) + spec.g(xt)) * dW +
           0.5 * (spec.h(x) + spec.h(xt)) * dBH;
}

PathEnsemble simulate_ensemble(const SystemSpec& spec, const InitialLaw& init,
                               const NoiseEnsemble& noise, const SimulateOptions& opts) {
    if (noise.n_paths == 0) throw std::invalid_argument("simulate_ensemble: empty ensemble");
    PathEnsemble ens;
    ens.n_paths = noise.n_paths;
    ens.n_steps = noise.n_steps;
    ens.dt = noise.dt;
    ens.hurst = noise.hurst;
    ens.seed = noise.seed;
    ens.label = spec.label;
    ens.states.resize(ens.n_paths * (ens.n_steps + 1));
    ens.divergent.assign(ens.n_paths, 0);

    KernelFns kf;
    if (opts.kernel_accumulators) {
        ens.kernel_cum.resize(ens.n_paths * (ens.n_steps + 1));
        kf.p1 = opts.phi1_override ? opts.phi1_override
                                   : [&spec](double x) { return kernel::phi1(spec, x); };
        kf.p2 = [&spec](double x) { return kernel::phi2(spec, x); };
    }

    std::vector<std::uint8_t> kernel_bad(ens.n_paths, 0);
    parallel_for(ens.n_paths, opts.n_threads, [&](std::size_t b, std::size_t e, unsigned) {
        for (std::size_t k = b; k < e; ++k) {
            bool kok = true;
            const bool ok = simulate_path(
                spec, initial_state(init, noise.seed, k), noise.fgn_row(k), noise.gwn_row(k),
                noise.dt, noise.n_steps, ens.states.data() + k * (ens.n_steps + 1),
                opts.kernel_accumulators ? ens.kernel_cum.data() + k * (ens.n_steps + 1) : nullptr,
                opts.kernel_accumulators ? &kf : nullptr, &kok);
            ens.divergent[k] = ok ? 0 : 1;
            kernel_bad[k] = kok ? 0 : 1;
        }
    });
    for (std::size_t k = 0; k < ens.n_paths; ++k) {
        ens.n_divergent += ens.divergent[k];
        ens.n_kernel_invalid += kernel_bad[k];
    }
    check_divergence_rate(ens.n_divergent, ens.n_paths, spec.label);
    return ens;
}

PdfField empirical_pdf(const PathEnsemble& ens, std::size_t t_index, const Grid1D& grid) {
    if (t_index > ens.n_steps) throw std::out_of_range("empirical_pdf: t_index out of range");
    std::vector<double> counts(grid.size(), 0.0);
    std::size_t n_valid = 0, n_inside = 0;
    for (std::size_t k = 0; k < ens.n_paths; ++k) {
        if (ens.divergent[k]) continue;
        ++n_valid;
        const auto c = grid.cell_of(ens.path(k)[t_index]);
        if (c == Grid1D::npos) continue;
        ++n_inside;
        counts[c] += 1.0;
    }
    if (n_valid == 0) throw std::runtime_error("empirical_pdf: no valid paths");
    const double frac = double(n_inside) / double(n_valid);
    if (frac < 0.9)
        throw std::runtime_error("empirical_pdf: only " + std::to_string(100.0 * frac) +
                                 "% of samples inside the grid");
    PdfField f;
    f.time = double(t_index) * ens.dt;
    f.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        f.values[i] = counts[i] / (double(n_valid) * grid.dx());
    const double tz = trapezoid(f.values, grid.dx());
    if (tz > 0.0)
        for (double& v : f.values) v *= frac / tz;
    return f;
}

SampleMoments empirical_moments(const PathEnsemble& ens, std::size_t t_index) {
    if (t_index > ens.n_steps) throw std::out_of_range("empirical_moments: t_index out of range");
    RawMoments r;
    for (std::size_t k = 0; k < ens.n_paths; ++k) {
        if (ens.divergent[k]) continue;
        const double x = ens.path(k)[t_index];
        r.s1 += x;
        r.s2 += x * x;
        r.s3 += x * x * x;
        r.s4 += x * x * x * x;
        ++r.n;
    }
    return finish_moments(r);
}

KernelField mc_kernel_estimate(const SystemSpec&, const PathEnsemble& ens, std::size_t t_index,
                               Hurst H, const Grid1D& grid, std::size_t min_bin) {
    if (ens.kernel_cum.empty())
        throw std::logic_error("mc_kernel_estimate: ensemble lacks kernel accumulators");
    if (t_index > ens.n_steps) throw std::out_of_range("mc_kernel_estimate: t_index out of range");

    KernelField out;
    out.t = double(t_index) * ens.dt;
    out.values.assign(grid.size(), 0.0);
    out.counts.assign(grid.size(), 0);
    if (t_index == 0) return out; // empty integral, F = 0 everywhere

    const auto w = make_segment_weights(t_index, ens.dt, H);
    for (std::size_t k = 0; k < ens.n_paths; ++k) {
        if (ens.divergent[k]) continue;
        const double* G = ens.kernel_cum.data() + k * (ens.n_steps + 1);
        if (!std::isfinite(G[t_index])) continue;
        const double F = kernel_functional(G, w);
        if (!std::isfinite(F)) continue;
        const auto c = grid.cell_of(ens.path(k)[t_index]);
        if (c == Grid1D::npos) continue;
        out.values[c] += F;
        out.counts[c] += 1;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (out.counts[i] >= min_bin)
            out.values[i] /= double(out.counts[i]);
        else
            out.values[i] = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

McSummary mc_run(const SystemSpec& spec, const InitialLaw& init, Hurst H, const Grid1D& grid,
                 double dt, std::size_t n_steps, const std::vector<std::size_t>& output_indices,
                 std::size_t n_paths, std::uint64_t seed, const McStreamOptions& opts) {
    McSummary sum;
    sum.grid = grid;
    sum.dt = dt;
    sum.n_paths = n_paths;
    sum.n_steps = n_steps;
    sum.outputs.resize(output_indices.size());
    for (std::size_t o = 0; o < output_indices.size(); ++o) {
        auto& st = sum.outputs[o];
        st.t_index = output_indices[o];
        if (st.t_index > n_steps) throw std::out_of_range("mc_run: output index beyond horizon");
        st.t = double(st.t_index) * dt;
        st.hist_counts.assign(grid.size(), 0.0);
        if (opts.kernel_estimate) {
            st.kernel_sum.assign(grid.size(), 0.0);
            st.kernel_cnt.assign(grid.size(), 0);
        }
    }

    KernelFns kf;
    if (opts.kernel_estimate) {
        kf.p1 = opts.phi1_override ? opts.phi1_override
                                   : [&spec](double x) { return kernel::phi1(spec, x); };
        kf.p2 = [&spec](double x) { return kernel::phi2(spec, x); };
    }
    std::vector<SegmentWeights> weights;
    if (opts.kernel_estimate) {
        weights.reserve(output_indices.size());
        for (auto idx : output_indices) weights.push_back(make_segment_weights(idx, dt, H));
    }

    const std::size_t chunk = std::max<std::size_t>(1, opts.chunk_paths);
    fgn::SampleOptions nopts;
    nopts.skip_fgn = opts.skip_fgn;
    nopts.skip_gwn = opts.skip_gwn;
    nopts.n_threads = opts.n_threads;

    for (std::size_t begin = 0; begin < n_paths; begin += chunk) {
        const std::size_t end = std::min(begin + chunk, n_paths);
        const std::size_t nc = end - begin;

        // noise for this chunk; the stream id is the global path index, so
        // chunk boundaries do not change the draws
        auto chunk_opts = nopts;
        chunk_opts.stream_offset = begin;
        const NoiseEnsemble noise =
            fgn::sample_noise(H, IncrementGrid(n_steps, dt), nc, seed, chunk_opts);

        std::vector<double> states(nc * (n_steps + 1));
        std::vector<double> gcum(opts.kernel_estimate ? nc * (n_steps + 1) : 0);
        std::vector<std::uint8_t> div(nc, 0), kbad(nc, 0);

        parallel_for(nc, opts.n_threads, [&](std::size_t b, std::size_t e, unsigned) {
            for (std::size_t i = b; i < e; ++i) {
                bool kok = true;
                const bool ok = simulate_path(
                    spec, initial_state(init, seed, begin + i),
                    opts.skip_fgn ? nullptr : noise.fgn.data() + i * n_steps,
                    opts.skip_gwn ? nullptr : noise.gwn.data() + i * n_steps, dt, n_steps,
                    states.data() + i * (n_steps + 1),
                    opts.kernel_estimate ? gcum.data() + i * (n_steps + 1) : nullptr,
                    opts.kernel_estimate ? &kf : nullptr, &kok);
                div[i] = ok ? 0 : 1;
                kbad[i] = kok ? 0 : 1;
            }
        });

        // ordered reduction
        for (std::size_t i = 0; i < nc; ++i) {
            if (div[i]) {
                ++sum.n_divergent;
                continue;
            }
            if (opts.kernel_estimate && kbad[i]) ++sum.n_kernel_invalid;
            const double* path = states.data() + i * (n_steps + 1);
            for (std::size_t o = 0; o < sum.outputs.size(); ++o) {
                auto& st = sum.outputs[o];
                const double x = path[st.t_index];
                ++st.n_valid;
                st.sum += x;
                st.sum2 += x * x;
                st.sum3 += x * x * x;
                st.sum4 += x * x * x * x;
                const auto c = grid.cell_of(x);
                if (c == Grid1D::npos) continue;
                ++st.n_inside;
                st.hist_counts[c] += 1.0;
                if (opts.kernel_estimate && !kbad[i]) {
                    const double F =
                        kernel_functional(gcum.data() + i * (n_steps + 1), weights[o]);
                    if (std::isfinite(F)) {
                        st.kernel_sum[c] += F;
                        st.kernel_cnt[c] += 1;
                    }
                }
            }
        }
    }
    check_divergence_rate(sum.n_divergent, n_paths, spec.label);
    return sum;
}

PdfField pdf_of(const McOutputStats& st, const Grid1D& grid) {
    if (st.n_valid == 0) throw std::runtime_error("pdf_of: no valid paths");
    const double frac = double(st.n_inside) / double(st.n_valid);
    if (frac < 0.9)
        throw std::runtime_error("pdf_of: only " + std::to_string(100.0 * frac) +
                                 "% of samples inside the grid");
    PdfField f;
    f.time = st.t;
    f.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        f.values[i] = st.hist_counts[i] / (double(st.n_valid) * grid.dx());
    const double tz = trapezoid(f.values, grid.dx());
    if (tz > 0.0)
        for (double& v : f.values) v *= frac / tz;
    return f;
}

SampleMoments moments_of(const McOutputStats& st) {
    RawMoments r{st.sum, st.sum2, st.sum3, st.sum4, st.n_valid};
    return finish_moments(r);
}

KernelField kernel_field_of(const McOutputStats& st, std::size_t min_bin) {
    if (st.kernel_cnt.empty()) throw std::logic_error("kernel_field_of: no kernel bins recorded");
    KernelField out;
    out.t = st.t;
    out.values.resize(st.kernel_sum.size());
    out.counts = st.kernel_cnt;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = st.kernel_cnt[i] >= min_bin
                            ? st.kernel_sum[i] / double(st.kernel_cnt[i])
                            : std::numeric_limits<double>::quiet_NaN();
    return out;
}

} // namespace sde
} // namespace memfpk
