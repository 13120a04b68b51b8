#include "memfpk/fgn.hpp"

#include "memfpk/parallel.hpp"
#include "memfpk/rng.hpp"
#include "memfpk/special.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

namespace memfpk::fgn {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kEigTol = -1e-10; // on the unit-dt covariance, O(1) scale

std::mutex fftw_planner_mutex;

/// Unit-dt increment autocovariances gamma(0..n-1).
std::vector<double> unit_autocov(double H, std::size_t n) {
    std::vector<double> g(n);
    const double e = 2.0 * H;
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = double(k);
        g[k] = 0.5 * (std::pow(kk + 1.0, e) + (k == 0 ? std::pow(1.0, e) : std::pow(kk - 1.0, e)) -
                      2.0 * std::pow(kk, e));
    }
    return g;
}

/// Eigenvalues of the circulant embedding of size M = 2(n-1).
std::vector<double> embedding_eigenvalues(double H, std::size_t n) {
    const std::size_t M = 2 * (n - 1);
    const auto g = unit_autocov(H, n);
    std::vector<std::complex<double>> c(M), lam(M);
    for (std::size_t j = 0; j < M; ++j) c[j] = g[j < n ? j : M - j];

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex);
        plan = fftw_plan_dft_1d(int(M), reinterpret_cast<fftw_complex*>(c.data()),
                                reinterpret_cast<fftw_complex*>(lam.data()), FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex);
        fftw_destroy_plan(plan);
    }
    std::vector<double> ev(M);
    for (std::size_t k = 0; k < M; ++k) ev[k] = lam[k].real();
    return ev;
}

struct FftWorkspace {
    std::vector<std::complex<double>> in, out;
    fftw_plan plan = nullptr;

    explicit FftWorkspace(std::size_t M) : in(M), out(M) {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex);
        plan = fftw_plan_dft_1d(int(M), reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    }
    ~FftWorkspace() {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex);
        if (plan) fftw_destroy_plan(plan);
    }
    FftWorkspace(const FftWorkspace&) = delete;
    FftWorkspace& operator=(const FftWorkspace&) = delete;
};

} // namespace

double fgn_increment_autocov(Hurst H, long lag, double dt) {
    if (lag < 0) throw std::domain_error("fgn_increment_autocov: lag must be >= 0");
    if (!(dt > 0.0)) throw std::domain_error("fgn_increment_autocov: dt must be > 0");
    const double e = 2.0 * H.value;
    const double k = double(lag);
    return 0.5 * std::pow(dt, e) *
           (std::pow(std::fabs(k + 1.0), e) + std::pow(std::fabs(k - 1.0), e) -
            2.0 * std::pow(k, e));
}

double spectral_density(Hurst H, double omega) {
    const double h = H.value;
    if (h == 0.5) return 1.0 / kTwoPi;
    if (omega == 0.0) return std::numeric_limits<double>::infinity();
    return h * special::gamma_fn(2.0 * h) * std::sin(h * 3.14159265358979323846) /
           3.14159265358979323846 * std::pow(std::fabs(omega), 1.0 - 2.0 * h);
}

bool embedding_is_valid(Hurst H, std::size_t n_steps) {
    if (n_steps < 2) return true;
    const auto ev = embedding_eigenvalues(H.value, n_steps);
    for (double v : ev)
        if (v < kEigTol) return false;
    return true;
}

NoiseEnsemble sample_noise(Hurst H, const IncrementGrid& grid, std::size_t n_paths,
                           std::uint64_t seed, const SampleOptions& opts) {
    if (n_paths < 1) throw std::invalid_argument("sample_noise: n_paths >= 1");
    const std::size_t n = grid.n_steps;
    const double dt = grid.dt;

    NoiseEnsemble out;
    out.n_paths = n_paths;
    out.n_steps = n;
    out.dt = dt;
    out.hurst = H.value;
    out.seed = seed;

    if (!opts.skip_gwn) {
        out.gwn.resize(n_paths * n);
        const double sdt = std::sqrt(dt);
        parallel_for(n_paths, opts.n_threads, [&](std::size_t b, std::size_t e, unsigned) {
            for (std::size_t k = b; k < e; ++k) {
                rng::NormalStream ns(seed, rng::Domain::gwn, opts.stream_offset + k);
                double* row = out.gwn.data() + k * n;
                for (std::size_t j = 0; j < n; ++j) row[j] = sdt * ns.normal(j);
            }
        });
    }

    if (opts.skip_fgn) return out;
    out.fgn.resize(n_paths * n);
    const double scale = std::pow(dt, H.value);

    if (n == 1) {
        parallel_for(n_paths, opts.n_threads, [&](std::size_t b, std::size_t e, unsigned) {
            for (std::size_t k = b; k < e; ++k)
                out.fgn[k] = scale * rng::NormalStream(seed, rng::Domain::fgn, opts.stream_offset + k).normal(0);
        });
        return out;
    }

    const std::size_t M = 2 * (n - 1);
    auto ev = embedding_eigenvalues(H.value, n);
    double ev_min = ev[0];
    for (double v : ev) ev_min = std::min(ev_min, v);

    if (ev_min >= kEigTol) {
        // Davies-Harte: per path, colored complex normals through one inverse DFT
        std::vector<double> amp(M);
        for (std::size_t k = 0; k < M; ++k)
            amp[k] = std::sqrt(std::max(ev[k], 0.0) / double(M));

        const unsigned n_threads =
            opts.n_threads == 0 ? default_threads() : opts.n_threads;
        std::vector<std::unique_ptr<FftWorkspace>> ws(n_threads);

        parallel_for(n_paths, n_threads, [&](std::size_t b, std::size_t e, unsigned tid) {
            if (!ws[tid]) ws[tid] = std::make_unique<FftWorkspace>(M);
            FftWorkspace& w = *ws[tid];
            const double inv_sqrt2 = 0.70710678118654752440;
            for (std::size_t k = b; k < e; ++k) {
                rng::NormalStream ns(seed, rng::Domain::fgn, opts.stream_offset + k);
                w.in[0] = amp[0] * ns.normal(0);
                for (std::size_t j = 1; j < M / 2; ++j) {
                    const double a = ns.normal(2 * j - 1) * inv_sqrt2;
                    const double c = ns.normal(2 * j) * inv_sqrt2;
                    w.in[j] = amp[j] * std::complex<double>(a, c);
                    w.in[M - j] = amp[M - j] * std::complex<double>(a, -c);
                }
                w.in[M / 2] = amp[M / 2] * ns.normal(M - 1);
                fftw_execute_dft(w.plan, reinterpret_cast<fftw_complex*>(w.in.data()),
                                 reinterpret_cast<fftw_complex*>(w.out.data()));
                double* row = out.fgn.data() + k * n;
                for (std::size_t j = 0; j < n; ++j) row[j] = scale * w.out[j].real();
            }
        });
        return out;
    }

    // Fallback: dense Cholesky of the n x n Toeplitz covariance
    const auto g = unit_autocov(H.value, n);
    Eigen::MatrixXd cov(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cov(i, j) = g[std::size_t(std::labs(long(i) - long(j)))];
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("sample_noise: covariance not positive definite (H=" +
                                 std::to_string(H.value) + ", n_steps=" + std::to_string(n) + ")");
    const Eigen::MatrixXd L = llt.matrixL();

    parallel_for(n_paths, opts.n_threads, [&](std::size_t b, std::size_t e, unsigned) {
        Eigen::VectorXd z(n);
        for (std::size_t k = b; k < e; ++k) {
            rng::NormalStream ns(seed, rng::Domain::fgn, opts.stream_offset + k);
            for (std::size_t j = 0; j < n; ++j) z[j] = ns.normal(j);
            Eigen::VectorXd x = L * z;
            double* row = out.fgn.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) row[j] = scale * x[j];
        }
    });
    return out;
}

} // namespace memfpk::fgn
