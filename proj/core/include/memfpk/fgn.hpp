#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace memfpk {

/// Hurst exponent. The solver regime is 1/2 < H < 1; H = 1/2 is admitted so
/// the samplers can be exercised in the degenerate white-noise limit.
struct Hurst {
    double value;
    explicit Hurst(double v) : value(v) {
        if (!(v >= 0.5) || !(v < 1.0))
            throw std::domain_error("Hurst: need 0.5 <= H < 1, got " + std::to_string(v));
    }
};

struct IncrementGrid {
    std::size_t n_steps;
    double dt;
    IncrementGrid(std::size_t n, double step) : n_steps(n), dt(step) {
        if (n_steps < 1) throw std::invalid_argument("IncrementGrid: n_steps >= 1");
        if (!(dt > 0.0)) throw std::invalid_argument("IncrementGrid: dt > 0");
    }
};

/// Monte Carlo noise block: row k holds path k's increments.
struct NoiseEnsemble {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    double dt = 0.0;
    double hurst = 0.5;
    std::uint64_t seed = 0;

    std::vector<double> fgn; ///< n_paths x n_steps fractional increments; empty if skipped
    std::vector<double> gwn; ///< n_paths x n_steps Brownian increments; empty if skipped

    const double* fgn_row(std::size_t k) const { return fgn.empty() ? nullptr : fgn.data() + k * n_steps; }
    const double* gwn_row(std::size_t k) const { return gwn.empty() ? nullptr : gwn.data() + k * n_steps; }
};

namespace fgn {

/// Autocovariance of FGN increments over steps of length dt at integer lag:
/// gamma(k) = dt^(2H)/2 (|k+1|^(2H) + |k-1|^(2H) - 2|k|^(2H)).
double fgn_increment_autocov(Hurst H, long lag, double dt);

/// Power spectral density of unit FGN. Diverges at omega = 0 for H > 1/2
/// (returns +infinity); constant 1/(2 pi) when H = 1/2.
double spectral_density(Hurst H, double omega);

struct SampleOptions {
    bool skip_fgn = false;
    bool skip_gwn = false;
    unsigned n_threads = 0; ///< 0 = hardware concurrency
    std::uint64_t stream_offset = 0; ///< path k draws from stream (stream_offset + k)
};

/// Exact joint sampling of the FGN block (circulant embedding of size
/// 2(n_steps-1); Cholesky of the full covariance if the embedding has an
/// eigenvalue below -1e-10) plus an independent i.i.d. N(0, dt) GWN block.
/// Identical (seed, H, grid, n_paths) reproduce bit-identical ensembles for
/// any thread count.
NoiseEnsemble sample_noise(Hurst H, const IncrementGrid& grid, std::size_t n_paths,
                           std::uint64_t seed, const SampleOptions& opts = {});

/// True when the last sample_noise call for these parameters would take the
/// Cholesky fallback (exposed for tests).
bool embedding_is_valid(Hurst H, std::size_t n_steps);

} // namespace fgn
} // namespace memfpk
