/// @file comparison.hpp
/// @brief Explicit comparison (super)solutions dominating the local energy
/// densities for all time.
///
/// From the initial densities rho±(0) the construction assembles, per sign:
///
///   rho00 = C0 rho(0) * N1                      (d-dim smoothed data)
///   rho0(x) = C0 (rho* ** q)(x)                 (line data; rho* = transverse
///                                                max, q = transverse-integrated
///                                                N1 folded into the box)
///   g00, g0 = exponential averages along B0     ((I ± 2 mu d_x)^-1)
///   h0(x)   = cumulative mass profile           (values in [0,1))
///
/// and evolves everything by the exact drift-diffusion semigroup:
/// rho10(t) = rho01(t) + g01(t) h1∓(t),  rho1(t) = C0 rho10(t) * N1.
///
/// The line profiles live on the axis-0 grid of the field box, so every
/// pointwise domination survives wrap-around exactly; h carries its
/// non-periodic part as an analytic linear ramp so the evolution PDE holds
/// exactly (a cumulative re-anchoring would not satisfy it).

#pragma once

#include <memory>

#include "mhdc/kernel.hpp"

namespace mhdc {

// ---------------------------------------------------------------------------
// Line profiles (axis-0 grid of the field box)
// ---------------------------------------------------------------------------

struct Profile1D {
    int n = 0;
    double length = 0.0;
    std::vector<double> v;

    Profile1D() = default;
    Profile1D(int n_, double length_) : n(n_), length(length_), v(n_, 0.0) {}
    double spacing() const { return length / n; }
    double coord(int i) const { return -0.5 * length + i * spacing(); }
    double mass() const;  // sum * spacing
};

/// rho*(x) = max over transverse grid points of f(x, .).
Profile1D transverse_max(const ScalarField& f);

Profile1D line_exp_average(const Profile1D& f, double mu, int sign);
Profile1D line_advect_diffuse(const Profile1D& f, double t, double mu, int sign);
Profile1D line_derivative(const Profile1D& f);
/// Zero-mean spectral antiderivative of a zero-mean input.
Profile1D line_antiderivative(const Profile1D& f);
/// Circular convolution with a centered kernel sample, times the spacing.
Profile1D line_convolve(const Profile1D& f, const Profile1D& centered_kernel);

/// value(i) = periodic.v[i] + slope * x_i + intercept.  Used for the
/// cumulative profiles h, whose periodic extension would jump at the seam.
struct RampProfile {
    Profile1D periodic;
    double slope = 0.0;
    double intercept = 0.0;
    double value(int i) const { return periodic.v[i] + slope * periodic.coord(i) + intercept; }
};

RampProfile ramp_advect_diffuse(const RampProfile& f, double t, double mu, int sign);

/// Exact solution operator of d_t f - sign*B0.grad f - mu laplace f = 0 on
/// scalar fields (spectral phase shift times heat factor).
ScalarField advect_diffuse(const ScalarField& f, double t, double mu, int sign);
/// slope + spectral derivative of the periodic part; equals the exact
/// integrand h was built from.
Profile1D ramp_derivative(const RampProfile& f);

// ---------------------------------------------------------------------------
// Step 1: data construction
// ---------------------------------------------------------------------------

/// rho±00 = C0 (rho±(0) * N1).  Asserts rho(0) <= rho00 and the comparability
/// C0^-1 rho00 <= rho00*N1 <= C0 rho00 on the grid; failure signals a C0 too
/// small for this grid.
std::pair<ScalarField, ScalarField> build_rho00(const EnergyDensity& rho0, double c0,
                                                const KernelSample& kernel);

/// Transverse-integrated, box-folded N1 line kernel q (centered sample).
Profile1D n1_line_kernel(const KernelSample& kernel);

/// rho±0(x) = C0 (rho±* ** q)(x); guarantees rho00 <= rho0 pointwise and the
/// mass identity ||rho0||_L1 = C0 J(0) ||N1||_L1 on the grid.
std::pair<Profile1D, Profile1D> build_rho0_line(const EnergyDensity& rho0, double c0,
                                                const KernelSample& kernel);

/// Exponential average (I + sign*2*mu d_x0)^-1 f; identity
/// g + sign*2*mu d_x0 g = f holds to round-off, mass and sup norms do not
/// increase.  mu = 0 returns f.
ScalarField exp_average(const ScalarField& f, double mu, int sign);

/// h0 with +d_x h = (rho0+g0)/(2 eps0) for sign +1 (anchored 0 at the left box
/// edge) and -d_x h = ... for sign -1 (anchored 0 at the right edge).
/// Throws "smallness violated" when ||rho0 + g0||_L1 >= 2 eps0.
RampProfile build_h0(const Profile1D& rho0, const Profile1D& g0, double eps0, int sign);

// ---------------------------------------------------------------------------
// Step 2/3: assembled bundle
// ---------------------------------------------------------------------------

struct ComparisonInputs {
    DomainSpec domain;
    double mu = 0.0;
    ConstantsLedger ledger;
    std::shared_ptr<const KernelSample> kernel;
    ScalarField rho00_p, rho00_m, g00_p, g00_m;
    Profile1D rho0_p, rho0_m, g0_p, g0_m;
    RampProfile h0_p, h0_m;
    double j_p = 0.0, j_m = 0.0;  // J±(0) of the source density
};

ComparisonInputs build_comparison_inputs(const EnergyDensity& rho0, const ConstantsLedger& ledger,
                                         std::shared_ptr<const KernelSample> kernel, double mu);

struct BundleDiagnostics {
    double h_min = 0.0, h_max = 0.0;
    double min_rho01 = 0.0, min_g01 = 0.0, min_rho1 = 0.0;
    double sandwich_rho_excess = 0.0;  // max(rho01 - rho11); > 0 means violation
    double sandwich_g_excess = 0.0;
    std::size_t worst_index = 0;
};

struct ComparisonBundle {
    double t = 0.0;
    ScalarField rho01_p, rho01_m, g01_p, g01_m;
    Profile1D rho11_p, rho11_m, g1_p, g1_m;
    RampProfile h1_p, h1_m;
    ScalarField rho1_p, rho1_m;  // C0 * rho10 * N1
    BundleDiagnostics diag;
};

ComparisonBundle assemble_bundle(const ComparisonInputs& inputs, double t);

/// Pointwise residual of the supersolution inequality at time t:
///   [d_t -+ B0.grad - mu laplace] rho±1  -  (rho+1 rho-1 * N1)/(2 eps0 C0^3),
/// with d_t by centered differencing (width dt_fd) and spectral space
/// derivatives.  min_p/min_m should be >= -tol for a calibrated budget tol.
struct SupersolutionResidual {
    ScalarField resid_p, resid_m;
    double min_p = 0.0, min_m = 0.0;
    double scale = 0.0;  // max magnitude of the compared terms, for tolerances
};

SupersolutionResidual supersolution_residual(const ComparisonInputs& inputs, double t,
                                             double dt_fd = 1e-3);

}  // namespace mhdc
