/// @file kernel.hpp
/// @brief The algebraic kernel N1(X) = (1+|X|^{d+1})^{-1}, its convolution
/// algebra, and measurement of the comparability constant C0.
///
/// N1 decays algebraically, so convolution against it is done zero-padded: the
/// kernel is sampled on a box twice the field box per axis, fields are
/// embedded with zeros, and the result is cropped back.  The neglected
/// continuum tail mass is estimated and reported.  C0 is measured per domain
/// (largest of the comparability ratios and the grid L1 mass, plus a 5%
/// safety margin) rather than taken as an abstract absolute constant.

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mhdc/local_energy.hpp"

namespace mhdc {

/// N1(X) = 1 / (1 + |X|^{d+1}).
double n1_eval(int d, double r);

/// Closed-form L1 mass over R^2: 4*pi^2/(3*sqrt(3)).
double n1_mass_r2_closed_form();

struct KernelSample {
    DomainSpec field_domain;
    DomainSpec padded_domain;      // every axis doubled
    ScalarField values;            // N1 sampled centered on the padded box
    double l1_mass = 0.0;          // grid quadrature over the padded box
    double tail_mass = 0.0;        // estimated continuum mass outside it
    ConvKernel conv;               // spectral kernel on the padded box
};

KernelSample build_n1_kernel(const DomainSpec& field_domain);

/// Zero-padded convolution f * N1 on the field box.
ScalarField n1_convolve(const ScalarField& f, const KernelSample& kernel);

/// Constants with provenance.  eps0 = 1/(2 C0^3 C1), eps1 = eps0/(2 C0^2).
struct ConstantsLedger {
    double c0 = 0.0;
    double c1 = 0.0;
    double c_theta = 0.0;
    double eps0 = 0.0;
    double eps1 = 0.0;
    double c_f = 0.0;
    std::map<std::string, std::string> provenance;  // keyed c0, c1, ...
    std::string domain_hash;

    void derive_thresholds();       // fills eps0/eps1 from c0, c1
    void validate() const;          // invariants: c0 > 1, all finite positive
    std::string to_json() const;
    static ConstantsLedger from_json(const std::string& text);
};

/// Smallest C satisfying, on the grid:
///   C^-1 N1 <= N1*N1 <= C N1,   rho±(0) <= C (rho±(0)*N1),   ||N1||_L1 <= C,
/// rounded up by 5%.  Throws if a ratio is unbounded (truncation too small).
double estimate_c0(const KernelSample& kernel, const EnergyDensity& rho0);

/// Max over random pairs (X,Y) of min(N1(Y), N1(X-Y)) / N1(X); bounded by
/// 2^{d+1} in the continuum.
double min_max_split_check(const DomainSpec& dom, int sample_count,
                           std::uint64_t seed = 0x9e3779b97f4a7c15ull);

}  // namespace mhdc
