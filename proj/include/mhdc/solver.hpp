/// @file solver.hpp
/// @brief Time integration of the Elsasser system near the homogeneous
/// equilibrium:
///
///   d_t z+ + (Z- . grad) z+ = mu*laplace z+ - grad p,   Z- = -B0 + z-
///   d_t z- + (Z+ . grad) z- = mu*laplace z- - grad p,   Z+ = +B0 + z+
///   div z+ = div z- = 0,    B0 = e_0.
///
/// Splitting the drift out, the stiff/linear part  mu*laplace z± ± B0.grad z±
/// is integrated exactly (integrating factor in spectral space); the quadratic
/// coupling and pressure go through an explicit RK2 stage pair.  With one
/// fluctuation identically zero the step reproduces the closed-form
/// translate-and-diffuse solution to round-off, which is the calibration case
/// every tolerance in the verifier hangs off.

#pragma once

#include <utility>

#include "mhdc/domain.hpp"
#include "mhdc/spectral.hpp"

namespace mhdc {

/// Multiplicity convention for |grad^q z|^2.  `multinomial` weights each
/// multi-index a by q!/a! (Frobenius norm of the derivative tensor, rotation
/// invariant); `plain` counts each distinct multi-index once.
enum class DerivWeight { multinomial, plain };

struct FieldState {
    double t = 0.0;
    VectorField zp;  // z+
    VectorField zm;  // z-
    double mu = 0.0;

    const DomainSpec& domain() const { return zp.domain; }
};

FieldState make_state(const VectorField& zp, const VectorField& zm, double mu, double t = 0.0);

struct PressureField {
    ScalarField p;  // zero spatial mean
};

/// z+ = (v+b) - B0, z- = (v-b) + B0 with B0 = e_0.
std::pair<VectorField, VectorField> elsasser_from_vb(const VectorField& v, const VectorField& b);
/// Inverse map: v = (z+ + z-)/2, b = (z+ - z-)/2 + B0.
std::pair<VectorField, VectorField> vb_from_elsasser(const VectorField& zp, const VectorField& zm);

/// Solves -laplace p = d_i d_j (z+^j z-^i) spectrally (2/3-dealiased product),
/// zero-mean.
PressureField pressure(const VectorField& zp, const VectorField& zm);

/// Full right-hand side (diffusion + drift + projected nonlinearity).
std::pair<VectorField, VectorField> rhs(const FieldState& state);

/// Largest admissible step: 0.5 * min_spacing / (1 + max |z|).
double cfl_limit(const FieldState& state);

/// One integrating-factor RK2 step.  Rejects dt violating the CFL bound and
/// throws on NaN/Inf blow-up.
FieldState step(const FieldState& state, double dt);

/// Spectral H^N norms of (z+, z-):
/// ||z||_{H^N}^2 = sum_{q<=N} sum_{|a|=q} w(a) ||d^a z||_{L2}^2.
std::pair<double, double> hn_norm(const FieldState& state, int N,
                                  DerivWeight w = DerivWeight::multinomial);

/// max over the grid of sqrt(|z|^2 + |grad z|_F^2), used by the decay fits.
double w1inf_norm(const VectorField& z);

// ---------------------------------------------------------------------------
// Spectral-state driver (fast path used by simulate and the step() wrapper)
// ---------------------------------------------------------------------------

struct SpectralState {
    double t = 0.0;
    double mu = 0.0;
    DomainSpec domain;
    std::vector<SpectralField> zp, zm;  // d components each

    FieldState to_physical() const;
};

SpectralState to_spectral(const FieldState& state);
void step_inplace(SpectralState& state, double dt);

}  // namespace mhdc
