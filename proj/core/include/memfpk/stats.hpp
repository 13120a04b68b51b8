#pragma once

#include "memfpk/grid.hpp"

#include <vector>

namespace memfpk::stats {

struct MomentSet {
    double mean = 0.0, std = 0.0, skewness = 0.0, kurtosis = 0.0;
    bool skew_kurt_defined = false;
};

/// Trapezoid raw moments up to order 4 in central/standardized form; kurtosis
/// is the raw standardized fourth moment (3 for a Gaussian). Requires mass
/// within 1e-4 of 1.
MomentSet moments_from_pdf(const PdfField& p, const Grid1D& grid);

/// Cumulative trapezoid, clamped to [0,1], final value renormalized to 1.
std::vector<double> pdf_to_cdf(const PdfField& p, const Grid1D& grid);

struct SurfaceDistance {
    double linf_overall = 0.0;
    std::vector<double> times;
    std::vector<double> linf; ///< per time
    std::vector<double> l1;   ///< per time, trapezoid of |A-B|
};

/// Pointwise comparison of two surfaces on identical grids and output times.
SurfaceDistance compare_surfaces(const PdfSurface& A, const PdfSurface& B);

} // namespace memfpk::stats
