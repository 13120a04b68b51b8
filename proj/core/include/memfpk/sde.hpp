#pragma once

#include "memfpk/fgn.hpp"
#include "memfpk/grid.hpp"
#include "memfpk/system.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace memfpk::sde {

/// One Stratonovich Heun (2-stage Runge-Kutta) step.
double heun_step(const SystemSpec& spec, double x, double dW, double dBH, double dt);

struct PathEnsemble {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    double dt = 0.0;
    double hurst = 0.5;
    std::uint64_t seed = 0;
    std::string label;

    std::vector<double> states;     ///< n_paths x (n_steps+1), row per path
    std::vector<std::uint8_t> divergent; ///< per path
    std::size_t n_divergent = 0;

    /// cumulative kernel exponent per path: G[k] = int_0^{t_k} phi1 du (trapezoid)
    /// + Ito-left sum of phi2 dW; empty unless requested at simulation time
    std::vector<double> kernel_cum;
    std::size_t n_kernel_invalid = 0;

    const double* path(std::size_t k) const { return states.data() + k * (n_steps + 1); }
    double time(std::size_t i) const { return double(i) * dt; }
};

struct SimulateOptions {
    bool kernel_accumulators = false;
    ScalarFn phi1_override; ///< replaces the phi1 composition in the accumulators
    unsigned n_threads = 0;
};

/// Heun-integrates every path of the noise ensemble from the initial law
/// (drawn from a dedicated substream). Paths hitting a non-finite value are
/// flagged divergent, frozen at NaN and excluded from downstream statistics;
/// more than 0.1% of them prints a warning, more than 5% throws.
PathEnsemble simulate_ensemble(const SystemSpec& spec, const InitialLaw& init,
                               const NoiseEnsemble& noise, const SimulateOptions& opts = {});

/// Histogram density on the grid cells at the t_index-th time, normalized so
/// its trapezoid integral equals the in-domain sample fraction. Throws when
/// fewer than 90% of the valid samples land inside the grid.
PdfField empirical_pdf(const PathEnsemble& ens, std::size_t t_index, const Grid1D& grid);

struct SampleMoments {
    double mean = 0.0, std = 0.0, skewness = 0.0, kurtosis = 0.0;
    bool skew_kurt_defined = false;
    std::size_t n = 0;
};

SampleMoments empirical_moments(const PathEnsemble& ens, std::size_t t_index);

/// Conditional expectation of the path functional
///   F(t) = int_0^t exp{int_s^t phi1 du + int_s^t phi2 dW} phi(t,s) ds
/// binned by X_t over the grid cells (the memory term of the memFPK
/// coefficients, without the sigma_B factor). Bins with fewer than min_bin
/// paths are NaN with a zero count.
struct KernelField {
    std::vector<double> values; ///< per grid cell; NaN where missing
    std::vector<std::size_t> counts;
    double t = 0.0;
};

KernelField mc_kernel_estimate(const SystemSpec& spec, const PathEnsemble& ens,
                               std::size_t t_index, Hurst H, const Grid1D& grid,
                               std::size_t min_bin = 50);

// --- streaming runner (large ensembles without materializing paths) ---

struct McOutputStats {
    double t = 0.0;
    std::size_t t_index = 0;
    std::vector<double> hist_counts;
    std::size_t n_inside = 0;
    std::size_t n_valid = 0;
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
    std::vector<double> kernel_sum;
    std::vector<std::size_t> kernel_cnt;
};

struct McSummary {
    Grid1D grid;
    double dt = 0.0;
    std::size_t n_paths = 0, n_steps = 0;
    std::size_t n_divergent = 0, n_kernel_invalid = 0;
    std::vector<McOutputStats> outputs;
};

struct McStreamOptions {
    std::size_t chunk_paths = 2048;
    unsigned n_threads = 0;
    bool kernel_estimate = false;
    ScalarFn phi1_override;
    bool skip_gwn = false; ///< g == 0
    bool skip_fgn = false; ///< h == 0
};

/// Chunked Monte Carlo: samples noise, integrates and reduces per-output-time
/// histograms, moment sums and (optionally) kernel-oracle bins. Fixed chunk
/// boundaries and an ordered reduction keep the result independent of the
/// worker count.
McSummary mc_run(const SystemSpec& spec, const InitialLaw& init, Hurst H, const Grid1D& grid,
                 double dt, std::size_t n_steps, const std::vector<std::size_t>& output_indices,
                 std::size_t n_paths, std::uint64_t seed, const McStreamOptions& opts = {});

PdfField pdf_of(const McOutputStats& s, const Grid1D& grid);
SampleMoments moments_of(const McOutputStats& s);
KernelField kernel_field_of(const McOutputStats& s, std::size_t min_bin = 50);

} // namespace memfpk::sde
