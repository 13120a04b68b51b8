#pragma once

#include "memfpk/fgn.hpp"
#include "memfpk/grid.hpp"
#include "memfpk/kernel.hpp"
#include "memfpk/system.hpp"

#include <span>
#include <vector>

namespace memfpk::fpk {

/// Point initial data is regularized as a Gaussian of width sigma_init =
/// point_sigma_cells * dx (bounded gradients for the explicit scheme).
constexpr double kPointSigmaCells = 2.0;

/// Samples the initial law on the grid nodes and renormalizes to unit
/// trapezoid mass. The law's +-4 sigma support must lie inside the grid.
PdfField init_pdf(const InitialLaw& init, const Grid1D& grid);

/// One explicit Euler update of the conservative flux form of
/// dp/dt = -d/dx(a p) + d^2/dx^2(b p).
/// Control volumes are centered on the nodes with half-width cells at the two
/// ends, so the exactly conserved quantity is the trapezoid mass. Advective
/// face values are second-order upwind-biased (monotonized-central limited
/// reconstruction of p, drift averaged to the face); (b p) is differenced
/// centrally across each face; both boundary faces carry zero flux.
/// Enforces dt <= 0.9 dx^2/(2 max b) and dt <= 0.9 dx/max|a| and fails on
/// emergent density below -1e-8.
PdfField fd_step(const PdfField& p, std::span<const double> a, std::span<const double> b,
                 double dt, const Grid1D& grid);

enum class KernelMode { vada, closed_case_ii, closed_case_iv, classical };

struct SolveOptions {
    KernelMode mode = KernelMode::vada;
    double alpha = 0.0; ///< decay rate for closed_case_iv
    double dt = 1e-4;
    double t_end = 1.0;
    std::vector<double> output_times;
    double macro_refresh = 0.01;
    int vada_order = 2; ///< expansion order of the decoupled memory term (1..3)
    ScalarFn phi1_override; ///< alternative drift-exponent (kernel-exponent studies)
    bool record_psi = false;        ///< keep the memory-term slice at output times
    bool record_bmem_macro = false; ///< keep diffusion snapshots at macro times
    double commutativity_tol = 1e-9;
};

/// Integrates the memFPK equation, self-consistently refreshing the memory
/// kernel state on the macro grid. The memory term Psi is evaluated at macro
/// times (per kernel mode) and linearly interpolated at the micro steps; the
/// coefficients of the step [t, t+dt] are taken at t+dt.
PdfSurface solve_memfpk(const SystemSpec& spec, const InitialLaw& init, Hurst H,
                        const Grid1D& grid, const SolveOptions& opts);

} // namespace memfpk::fpk
