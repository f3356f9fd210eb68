/// @file domain.hpp
/// @brief Computational domain, uniform grids, and grid-sampled fields.
///
/// The solver works on a periodic box standing in for R^k x T^(d-k).
/// Axes 0..k-1 truncate an R factor to length `box_len` (centered at 0);
/// axes k..d-1 are tori of fixed length 2*pi.  Axis 0 carries the background
/// field direction B0 = e_0.  Truncation validity is never assumed: callers
/// monitor field magnitude near the R-axis edges (see boundary_guard).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mhdc {

inline constexpr double kPi = 3.14159265358979323846;

struct DomainSpec {
    int d = 2;               // spatial dimension, 2 or 3
    int k = 1;               // number of truncated-R axes, 1..d
    double box_len = 16.0 * kPi;  // length of each R axis (>= 8*pi)
    int n = 128;             // grid points per axis (even, >= 8)

    // Derived per-axis geometry. dims[a] == n for user-built domains; internal
    // scratch domains (zero-padded convolutions) may double individual axes.
    std::array<double, 3> len{};
    std::array<int, 3> dims{};

    double spacing(int axis) const { return len[axis] / dims[axis]; }
    double coord(int axis, int i) const { return -0.5 * len[axis] + i * spacing(axis); }
    std::size_t points() const {
        std::size_t p = 1;
        for (int a = 0; a < d; ++a) p *= static_cast<std::size_t>(dims[a]);
        return p;
    }
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < d; ++a) v *= spacing(a);
        return v;
    }
    double volume() const {
        double v = 1.0;
        for (int a = 0; a < d; ++a) v *= len[a];
        return v;
    }
    double min_spacing() const {
        double h = spacing(0);
        for (int a = 1; a < d; ++a) h = std::min(h, spacing(a));
        return h;
    }

    bool operator==(const DomainSpec&) const = default;

    /// FNV-1a digest of the geometry, used in ledgers and manifests.
    std::string hash() const;
};

/// Validating constructor for user domains.  Throws std::invalid_argument on
/// d outside {2,3}, k outside [1,d], odd or small n, or box_len < 8*pi.
DomainSpec make_domain(int d, int k, double box_len, int n);

/// Internal: same geometry with every axis length and point count doubled
/// (used for zero-padded convolutions with slowly decaying kernels).
DomainSpec doubled_domain(const DomainSpec& dom);

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

/// Real scalar sample over the grid, row-major with axis 0 slowest.
struct ScalarField {
    DomainSpec domain;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const DomainSpec& dom, double fill = 0.0)
        : domain(dom), values(dom.points(), fill) {}

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * domain.dims[1] + j;
    }
    std::size_t index(int i, int j, int m) const {
        return (static_cast<std::size_t>(i) * domain.dims[1] + j) * domain.dims[2] + m;
    }
    double& at(int i, int j) { return values[index(i, j)]; }
    double at(int i, int j) const { return values[index(i, j)]; }
    double& at(int i, int j, int m) { return values[index(i, j, m)]; }
    double at(int i, int j, int m) const { return values[index(i, j, m)]; }
};

/// Vector field: d scalar components on a shared grid.
struct VectorField {
    DomainSpec domain;
    std::vector<ScalarField> comp;

    VectorField() = default;
    explicit VectorField(const DomainSpec& dom) : domain(dom) {
        comp.assign(dom.d, ScalarField(dom));
    }
};

// Pointwise / reduction helpers (serial reductions keep outputs deterministic).
double field_min(const ScalarField& f);
double field_max(const ScalarField& f);
double field_linf(const ScalarField& f);
double field_mean(const ScalarField& f);
double field_integral(const ScalarField& f);       // sum * cell volume
double field_l2(const ScalarField& f);             // grid L2 norm, sqrt(sum f^2 * vol)
double field_linf(const VectorField& u);           // max pointwise Euclidean magnitude
bool field_finite(const ScalarField& f);
bool field_finite(const VectorField& u);

void scale(ScalarField& f, double s);
void scale(VectorField& u, double s);
/// y += a*x (domains must match)
void axpy(ScalarField& y, double a, const ScalarField& x);

/// Grid inner product <f,g> = sum f*g * cell volume.
double inner(const ScalarField& f, const ScalarField& g);

/// Band-limited random field: independent normal coefficients on modes with
/// per-axis |index| <= kmax_index, smooth by construction.  Deterministic for
/// a given generator state; built by direct trigonometric summation.
ScalarField random_smooth_field(const DomainSpec& dom, int kmax_index, double amplitude,
                                std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Data parallelism
// ---------------------------------------------------------------------------

/// Width cap for internal data-parallel loops: MHDC_THREADS when set,
/// hardware concurrency otherwise.
int thread_cap();

/// Runs fn(begin, end) over disjoint chunks of [0, count).  Results are
/// independent of the thread count (chunks write disjoint ranges; reductions
/// stay serial elsewhere).  Small counts run inline.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Truncation guard
// ---------------------------------------------------------------------------

struct BoundaryGuard {
    bool ok = true;
    double band_max = 0.0;    // max |z| within distance 2 of an R-axis edge
    double global_max = 0.0;  // max |z| over the grid
};

/// Measures field magnitude within distance 2 of the boundary of each R axis.
/// The run is flagged invalid when band_max > 1e-6 * global_max.
BoundaryGuard boundary_guard(const VectorField& zp, const VectorField& zm);

}  // namespace mhdc
