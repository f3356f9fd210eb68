/// @file local_energy.hpp
/// @brief Local energy densities rho±, the line functional J±, the bilinear
/// forcing F, and the ball-covering inequality.
///
/// rho±(X)^2 = sum_{q<=N} integral |grad^q z±|^2(Y) theta(|X-Y|) dY with a
/// fixed C^1 cutoff theta (1 on [0,1], cosine-squared ramp on [1,2], 0 beyond),
/// realized as grid convolution of derivative-magnitude fields with the radial
/// sample of theta.  J± integrates the transverse sup of rho± along axis 0.

#pragma once

#include <utility>

#include "mhdc/solver.hpp"

namespace mhdc {

// ---------------------------------------------------------------------------
// Cutoff profile
// ---------------------------------------------------------------------------

/// theta(r): 1 on [0,1], cos^2(pi(r-1)/2) on [1,2], 0 on [2,inf).
/// |theta'|^2 = pi^2 sin^2(pi(r-1)/2) theta <= pi^2 theta, so C_theta = pi^2.
double theta(double r);
double theta_deriv(double r);

struct CutoffProfile {
    double c_theta = kPi * kPi;
    double operator()(double r) const { return theta(r); }
    double deriv(double r) const { return theta_deriv(r); }
};

CutoffProfile default_cutoff();

// ---------------------------------------------------------------------------
// Energy densities
// ---------------------------------------------------------------------------

struct EnergyDensity {
    ScalarField rho_p;  // rho+, nonnegative
    ScalarField rho_m;  // rho-
    int order = 0;      // derivative order N used
};

/// Pointwise |grad^q z|^2 with the chosen multiplicity convention, summed over
/// components.
ScalarField deriv_magnitude_sq(const VectorField& z, int q,
                               DerivWeight w = DerivWeight::multinomial);
ScalarField deriv_magnitude_sq(const ScalarField& f, int q,
                               DerivWeight w = DerivWeight::multinomial);

EnergyDensity rho(const FieldState& state, int N, const CutoffProfile& cutoff = default_cutoff(),
                  DerivWeight w = DerivWeight::multinomial);

/// J± = sum over axis-0 slices of (max over transverse points of rho±) * dx0.
std::pair<double, double> j_functional(const EnergyDensity& density);

/// Grid quadrature of theta(|X|) over the domain (the exact factor in
/// ||rho||_{L2} = sqrt(theta_mass) * ||z||_{H^N}).
double theta_mass(const DomainSpec& dom);

// ---------------------------------------------------------------------------
// Ball-restricted L2 norms and F
// ---------------------------------------------------------------------------

/// X -> ||g||_{L2(B(X,r))} via indicator-kernel convolution of g^2.
ScalarField ball_l2(const ScalarField& g, double radius);

/// F(X) = sum_{k+j<=N+1, 0<=k,j<=N} || |grad^k z+| |grad^j z-| ||_{L2(B(X,2))}
///      + sum_{k<=N} || grad^{k+1} p ||_{L2(B(X,2))},
/// with p the spectral pressure of the state.  All (k,j) ordered pairs count.
ScalarField f_direct(const FieldState& state, int N,
                     DerivWeight w = DerivWeight::multinomial);

// ---------------------------------------------------------------------------
// Covering inequality
// ---------------------------------------------------------------------------

struct CoveringResult {
    ScalarField lhs;      // ||f||_{L2(B(X,2))}
    ScalarField rhs;      // integral over B(X,3) of ||f||_{L2(B(Y,1/2))}
    double c_measured;    // max lhs/rhs where rhs > 1e-14
    double c_lemma;       // 2^d / omega_d
};

CoveringResult covering_check(const ScalarField& f);

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

}  // namespace mhdc
