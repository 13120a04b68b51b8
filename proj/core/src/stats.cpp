#include "memfpk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace memfpk::stats {

MomentSet moments_from_pdf(const PdfField& p, const Grid1D& grid) {
    if (p.values.size() != grid.size())
        throw std::invalid_argument("moments_from_pdf: field/grid size mismatch");
    const double dx = grid.dx();
    const double mass = trapezoid(p.values, dx);
    if (std::fabs(mass - 1.0) > 1e-4)
        throw std::runtime_error("moments_from_pdf: mass " + std::to_string(mass) +
                                 " not within 1e-4 of 1");
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    const std::size_t n = grid.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.node(i);
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        const double pv = w * p.values[i] * dx;
        m1 += pv * x;
        m2 += pv * x * x;
        m3 += pv * x * x * x;
        m4 += pv * x * x * x * x;
    }
    m1 /= mass;
    m2 /= mass;
    m3 /= mass;
    m4 /= mass;

    MomentSet out;
    out.mean = m1;
    const double var = m2 - m1 * m1;
    if (var <= 0.0) {
        out.std = 0.0;
        out.skewness = out.kurtosis = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.std = std::sqrt(var);
    const double c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
    const double c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
    out.skewness = c3 / (var * out.std);
    out.kurtosis = c4 / (var * var);
    out.skew_kurt_defined = true;
    return out;
}

std::vector<double> pdf_to_cdf(const PdfField& p, const Grid1D& grid) {
    if (p.values.size() != grid.size())
        throw std::invalid_argument("pdf_to_cdf: field/grid size mismatch");
    const double dx = grid.dx();
    std::vector<double> cdf(p.values.size(), 0.0);
    for (std::size_t i = 1; i < p.values.size(); ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (p.values[i - 1] + p.values[i]) * dx;
    const double total = cdf.back();
    for (double& c : cdf) {
        if (total > 0.0) c /= total;
        c = std::clamp(c, 0.0, 1.0);
    }
    return cdf;
}

SurfaceDistance compare_surfaces(const PdfSurface& A, const PdfSurface& B) {
    if (!(A.grid == B.grid)) throw std::invalid_argument("compare_surfaces: grid mismatch");
    if (A.slices.size() != B.slices.size())
        throw std::invalid_argument("compare_surfaces: output time count mismatch");
    SurfaceDistance d;
    const double dx = A.grid.dx();
    for (std::size_t s = 0; s < A.slices.size(); ++s) {
        if (std::fabs(A.slices[s].time - B.slices[s].time) > 1e-9)
            throw std::invalid_argument("compare_surfaces: output time mismatch at slice " +
                                        std::to_string(s));
        const auto& a = A.slices[s].values;
        const auto& b = B.slices[s].values;
        if (a.size() != b.size()) throw std::invalid_argument("compare_surfaces: slice size");
        std::vector<double> diff(a.size());
        double linf = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            diff[i] = std::fabs(a[i] - b[i]);
            linf = std::max(linf, diff[i]);
        }
        d.times.push_back(A.slices[s].time);
        d.linf.push_back(linf);
        d.l1.push_back(trapezoid(diff, dx));
        d.linf_overall = std::max(d.linf_overall, linf);
    }
    return d;
}

} // namespace memfpk::stats
