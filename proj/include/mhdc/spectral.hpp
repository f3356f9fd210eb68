/// @file spectral.hpp
/// @brief FFT-backed spectral operators: transforms, derivatives, Leray
/// projection, dealiasing, constant-coefficient semigroups, and grid
/// convolution with sampled kernels.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "mhdc/domain.hpp"

namespace mhdc {

/// Fourier coefficients in FFTW r2c half-storage (last axis 0..n/2), already
/// normalized by 1/Ntot so that f(x) = sum_k c_k exp(i k.x).
struct SpectralField {
    DomainSpec domain;
    std::vector<std::complex<double>> coeff;

    std::array<int, 3> cdims() const {
        std::array<int, 3> cd = domain.dims;
        cd[domain.d - 1] = domain.dims[domain.d - 1] / 2 + 1;
        return cd;
    }
};

SpectralField forward(const ScalarField& f);
ScalarField inverse(const SpectralField& s);

/// Signed physical wavenumber 2*pi*m/len for storage index idx on an axis.
double wavenumber(const DomainSpec& dom, int axis, int idx);

/// Spectral derivative along `axis` (0-based) of the given order; exact for
/// band-limited inputs.  Odd orders zero the Nyquist mode of that axis.
ScalarField derivative(const ScalarField& f, int axis, int order);
ScalarField laplacian(const ScalarField& f);

/// u - grad(laplace^-1 div u), computed on nonzero modes; the mean mode is
/// untouched.  Idempotent and an L2 contraction.
VectorField leray_project(const VectorField& u);

/// Sup norm of the grid divergence (per-axis Nyquist terms drop, matching the
/// odd-order convention of derivative()).
double divergence_sup(const VectorField& u);

/// Relative solenoidality measure: divergence_sup / max(|u|).  Zero field -> 0.
double solenoidal_defect(const VectorField& u);

/// 2/3-rule dealiasing: zero every mode with per-axis |index| > dims/3.
void dealias_23(SpectralField& s);

/// In-place multiplier exp(t*(sign*i*k0 - mu*|k|^2)): exact solution operator
/// of  d_t f - sign*B0.grad f - mu*laplace f = 0.
void apply_drift_heat(SpectralField& s, double t, double mu, int sign);

/// Multiplier 1/(1 + sign*2*mu*i*k0): the exponential average along axis 0,
/// i.e. the inverse of (I + sign*2*mu*d_x0).
void apply_exp_average(SpectralField& s, double mu, int sign);

// ---------------------------------------------------------------------------
// Grid convolution
// ---------------------------------------------------------------------------

/// Precomputed spectral kernel for grid-quadrature convolution:
/// conv(f)(X) ~= integral f(Y) ker(X-Y) dY realized as a circular FFT product
/// times the cell volume.  The kernel sample must be centered at x = 0
/// (grid index dims/2 on every axis).
struct ConvKernel {
    DomainSpec domain;
    std::vector<std::complex<double>> khat_vol;  // FFT(kernel) * cell_volume
    double grid_mass = 0.0;                      // sum(kernel) * cell volume
};

/// Builds a ConvKernel from a centered sample.  `outside_mass_fraction` is the
/// caller's estimate of continuum kernel mass outside the box; a warning is
/// emitted when it exceeds `warn_fraction` (default 1e-3).
ConvKernel make_conv_kernel(const ScalarField& centered_sample,
                            double outside_mass_fraction = 0.0,
                            double warn_fraction = 1e-3);

ScalarField periodic_convolve(const ScalarField& f, const ConvKernel& kernel);

/// Centered radial sample ker(|X|) on the grid (torus metric not applied;
/// plain Euclidean distance from the box center).
template <class F>
ScalarField sample_radial(const DomainSpec& dom, F&& radial) {
    ScalarField out(dom);
    const int d = dom.d;
    std::array<int, 3> id{0, 0, 0};
    const std::size_t np = dom.points();
    for (std::size_t p = 0; p < np; ++p) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            double x = dom.coord(a, id[a]);
            r2 += x * x;
        }
        out.values[p] = radial(std::sqrt(r2));
        for (int a = d - 1; a >= 0; --a) {
            if (++id[a] < dom.dims[a]) break;
            id[a] = 0;
        }
    }
    return out;
}

}  // namespace mhdc
