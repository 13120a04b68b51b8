#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace memfpk {

/// Uniform 1-D grid with nodes at cell centers: x_i = x_min + (i + 1/2) dx.
struct Grid1D {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n_cells = 0;

    Grid1D() = default;
    Grid1D(double xmin, double xmax, std::size_t cells) : x_min(xmin), x_max(xmax), n_cells(cells) {
        if (!(x_min < x_max)) throw std::invalid_argument("Grid1D: x_min must be < x_max");
        if (n_cells < 8) throw std::invalid_argument("Grid1D: need at least 8 cells");
    }

    double dx() const { return (x_max - x_min) / double(n_cells); }
    double node(std::size_t i) const { return x_min + (double(i) + 0.5) * dx(); }
    std::size_t size() const { return n_cells; }

    /// Cell index containing x, or npos when outside [x_min, x_max].
    static constexpr std::size_t npos = std::size_t(-1);
    std::size_t cell_of(double x) const {
        if (!(x >= x_min) || !(x <= x_max)) return npos;
        auto i = std::size_t((x - x_min) / dx());
        return i >= n_cells ? n_cells - 1 : i;
    }

    std::vector<double> nodes() const {
        std::vector<double> xs(n_cells);
        for (std::size_t i = 0; i < n_cells; ++i) xs[i] = node(i);
        return xs;
    }

    bool operator==(const Grid1D&) const = default;
};

/// Trapezoid rule over the grid nodes (uniform spacing dx).
inline double trapezoid(std::span<const double> v, double dx) {
    if (v.size() < 2) return 0.0;
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s * dx;
}

/// Grid-sampled probability density at one time instant.
struct PdfField {
    std::vector<double> values;
    double time = 0.0;
};

/// Stack of density slices at the recorded output times, plus run diagnostics.
struct PdfSurface {
    Grid1D grid;
    std::vector<PdfField> slices;

    // per recorded slice
    std::vector<double> mass_history;
    std::vector<double> m1_history; ///< mean of phi1 under p at the slice time

    // optional per-slice memory-term snapshot (nodes x slices), used by the
    // kernel-oracle comparison; empty when not recorded
    std::vector<std::vector<double>> psi_slices;

    // whole-run extrema/counters
    double mass_min = 1.0;
    double mass_max = 1.0;
    double min_density = 0.0;
    long clamp_events = 0;

    // optional diffusion-coefficient snapshots on the macro grid
    std::vector<double> macro_times;
    std::vector<std::vector<double>> bmem_macro;

    std::vector<double> times() const {
        std::vector<double> ts(slices.size());
        for (std::size_t i = 0; i < slices.size(); ++i) ts[i] = slices[i].time;
        return ts;
    }
};

} // namespace memfpk
