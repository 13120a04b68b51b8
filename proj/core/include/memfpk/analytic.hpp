#pragma once

#include "memfpk/fgn.hpp"
#include "memfpk/grid.hpp"

#include <vector>

namespace memfpk::analytic {

struct OuParams {
    double alpha;
    double sigma_w;
    double sigma_b;
    double x0;
    Hurst hurst;
};

/// mu_x(t) = x0 e^(-alpha t)
double ou_mean(const OuParams& p, double t);

/// sigma_x^2(t) = sigma_w^2/(2 alpha) (1 - e^(-2 alpha t))
///   + sigma_b^2 int_0^t int_0^t e^(-alpha(t-u)) e^(-alpha(t-v)) phi(u,v) du dv.
/// The double integral is reduced symmetrically to one outer integral of the
/// product-integrated inner kernel; the outer composite Simpson rule doubles
/// its panel count from 2000 until the Richardson estimate is below 1e-7
/// relative, else throws with the achieved estimate.
double ou_variance(const OuParams& p, double t);

/// Gaussian transient density with ou_mean / ou_variance; t > 0.
double ou_pdf(const OuParams& p, double x, double t);

/// Density slice over the grid nodes (one variance evaluation).
std::vector<double> ou_pdf_slice(const OuParams& p, const Grid1D& grid, double t);

} // namespace memfpk::analytic
