#include "mhdc/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <iostream>
#include <map>
#include <mutex>
#include <stdexcept>

namespace mhdc {

// ---------------------------------------------------------------------------
// FFTW plan cache.  Plans are created once per grid shape with FFTW_ESTIMATE
// (deterministic) on internal aligned buffers; callers copy in and out.  A
// single mutex guards planning and execution; transforms themselves are
// single-threaded.
// ---------------------------------------------------------------------------

namespace {

struct PlanSet {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double* real = nullptr;
    fftw_complex* cplx = nullptr;
    std::size_t nreal = 0, ncplx = 0;
};

std::mutex g_fft_mutex;
std::map<std::vector<int>, PlanSet>& plan_cache() {
    static std::map<std::vector<int>, PlanSet> cache;
    return cache;
}

PlanSet& get_plans(const DomainSpec& dom) {
    std::vector<int> key(dom.dims.begin(), dom.dims.begin() + dom.d);
    auto& cache = plan_cache();
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    PlanSet ps;
    std::size_t nreal = 1, ncplx = 1;
    for (int a = 0; a < dom.d; ++a) nreal *= static_cast<std::size_t>(dom.dims[a]);
    for (int a = 0; a + 1 < dom.d; ++a) ncplx *= static_cast<std::size_t>(dom.dims[a]);
    ncplx *= static_cast<std::size_t>(dom.dims[dom.d - 1] / 2 + 1);
    ps.nreal = nreal;
    ps.ncplx = ncplx;
    ps.real = fftw_alloc_real(nreal);
    ps.cplx = fftw_alloc_complex(ncplx);
    if (!ps.real || !ps.cplx) throw std::bad_alloc();
    ps.fwd = fftw_plan_dft_r2c(dom.d, key.data(), ps.real, ps.cplx, FFTW_ESTIMATE);
    ps.bwd = fftw_plan_dft_c2r(dom.d, key.data(), ps.cplx, ps.real, FFTW_ESTIMATE);
    if (!ps.fwd || !ps.bwd) throw std::runtime_error("fftw planning failed");
    return cache.emplace(key, ps).first->second;
}

}  // namespace

SpectralField forward(const ScalarField& f) {
    SpectralField out;
    out.domain = f.domain;
    std::lock_guard<std::mutex> lock(g_fft_mutex);
    PlanSet& ps = get_plans(f.domain);
    if (ps.nreal != f.values.size()) throw std::invalid_argument("forward: field size mismatch");
    std::memcpy(ps.real, f.values.data(), ps.nreal * sizeof(double));
    fftw_execute(ps.fwd);
    out.coeff.resize(ps.ncplx);
    const double norm = 1.0 / static_cast<double>(ps.nreal);
    for (std::size_t i = 0; i < ps.ncplx; ++i)
        out.coeff[i] = std::complex<double>(ps.cplx[i][0] * norm, ps.cplx[i][1] * norm);
    return out;
}

ScalarField inverse(const SpectralField& s) {
    ScalarField out(s.domain);
    std::lock_guard<std::mutex> lock(g_fft_mutex);
    PlanSet& ps = get_plans(s.domain);
    if (ps.ncplx != s.coeff.size()) throw std::invalid_argument("inverse: coeff size mismatch");
    for (std::size_t i = 0; i < ps.ncplx; ++i) {
        ps.cplx[i][0] = s.coeff[i].real();
        ps.cplx[i][1] = s.coeff[i].imag();
    }
    fftw_execute(ps.bwd);
    std::memcpy(out.values.data(), ps.real, ps.nreal * sizeof(double));
    return out;
}

double wavenumber(const DomainSpec& dom, int axis, int idx) {
    int n = dom.dims[axis];
    int m = (idx <= n / 2) ? idx : idx - n;
    return 2.0 * kPi * m / dom.len[axis];
}

// Iterates the half-storage lattice, invoking fn(flat_index, k_vector, idx_vector).
template <class Fn>
static void for_each_mode(const DomainSpec& dom, Fn&& fn) {
    std::array<int, 3> cd{1, 1, 1};
    for (int a = 0; a < dom.d; ++a) cd[a] = dom.dims[a];
    cd[dom.d - 1] = dom.dims[dom.d - 1] / 2 + 1;
    std::array<int, 3> id{0, 0, 0};
    std::size_t total = 1;
    for (int a = 0; a < dom.d; ++a) total *= static_cast<std::size_t>(cd[a]);
    for (std::size_t p = 0; p < total; ++p) {
        std::array<double, 3> kv{0.0, 0.0, 0.0};
        for (int a = 0; a < dom.d; ++a) kv[a] = wavenumber(dom, a, id[a]);
        fn(p, kv, id);
        for (int a = dom.d - 1; a >= 0; --a) {
            if (++id[a] < cd[a]) break;
            id[a] = 0;
        }
    }
}

ScalarField derivative(const ScalarField& f, int axis, int order) {
    const DomainSpec& dom = f.domain;
    if (axis < 0 || axis >= dom.d) throw std::invalid_argument("derivative: axis out of range");
    if (order < 1) throw std::invalid_argument("derivative: order must be >= 1");
    SpectralField s = forward(f);
    // The Nyquist mode of the target axis is annihilated for every order, so
    // d^a factors commute and chained derivatives agree with the spectral
    // H^N weights exactly on the grid.
    for_each_mode(dom, [&](std::size_t p, const std::array<double, 3>& kv,
                           const std::array<int, 3>& id) {
        if (id[axis] == dom.dims[axis] / 2) {
            s.coeff[p] = 0.0;
            return;
        }
        std::complex<double> ik(0.0, kv[axis]);
        std::complex<double> mult = 1.0;
        for (int q = 0; q < order; ++q) mult *= ik;
        s.coeff[p] *= mult;
    });
    return inverse(s);
}

ScalarField laplacian(const ScalarField& f) {
    SpectralField s = forward(f);
    for_each_mode(f.domain, [&](std::size_t p, const std::array<double, 3>& kv,
                                const std::array<int, 3>&) {
        double k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
        s.coeff[p] *= -k2;
    });
    return inverse(s);
}

VectorField leray_project(const VectorField& u) {
    const DomainSpec& dom = u.domain;
    std::vector<SpectralField> s(dom.d);
    for (int c = 0; c < dom.d; ++c) s[c] = forward(u.comp[c]);
    // The wavevector enters with Nyquist components zeroed so the projector
    // is the exact annihilator of the grid divergence (first-order operators
    // share the Nyquist-zeroing convention of derivative()).
    for_each_mode(dom, [&](std::size_t p, const std::array<double, 3>& kv,
                           const std::array<int, 3>& id) {
        double kt[3] = {0.0, 0.0, 0.0};
        double k2 = 0.0;
        for (int c = 0; c < dom.d; ++c) {
            kt[c] = (id[c] == dom.dims[c] / 2) ? 0.0 : kv[c];
            k2 += kt[c] * kt[c];
        }
        if (k2 == 0.0) return;  // mean flow (and pure-Nyquist content) passes
        std::complex<double> kdotu = 0.0;
        for (int c = 0; c < dom.d; ++c) kdotu += kt[c] * s[c].coeff[p];
        for (int c = 0; c < dom.d; ++c) s[c].coeff[p] -= kt[c] * kdotu / k2;
    });
    VectorField out(dom);
    for (int c = 0; c < dom.d; ++c) out.comp[c] = inverse(s[c]);
    return out;
}

double divergence_sup(const VectorField& u) {
    const DomainSpec& dom = u.domain;
    std::vector<SpectralField> s(dom.d);
    for (int c = 0; c < dom.d; ++c) s[c] = forward(u.comp[c]);
    SpectralField div;
    div.domain = dom;
    div.coeff.assign(s[0].coeff.size(), 0.0);
    // Nyquist terms are skipped per axis: an odd multiplier there breaks the
    // Hermitian symmetry of the half-storage spectrum (the same convention as
    // odd-order derivative()).
    for_each_mode(dom, [&](std::size_t p, const std::array<double, 3>& kv,
                           const std::array<int, 3>& id) {
        std::complex<double> acc = 0.0;
        for (int c = 0; c < dom.d; ++c) {
            if (id[c] == dom.dims[c] / 2) continue;
            acc += std::complex<double>(0.0, kv[c]) * s[c].coeff[p];
        }
        div.coeff[p] = acc;
    });
    return field_linf(inverse(div));
}

double solenoidal_defect(const VectorField& u) {
    double m = field_linf(u);
    if (m == 0.0) return 0.0;
    return divergence_sup(u) / m;
}

void dealias_23(SpectralField& s) {
    const DomainSpec& dom = s.domain;
    for_each_mode(dom, [&](std::size_t p, const std::array<double, 3>&,
                           const std::array<int, 3>& id) {
        for (int a = 0; a < dom.d; ++a) {
            int n = dom.dims[a];
            int m = (id[a] <= n / 2) ? id[a] : id[a] - n;
            if (3 * std::abs(m) > n) {
                s.coeff[p] = 0.0;
                return;
            }
        }
    });
}

void apply_drift_heat(SpectralField& s, double t, double mu, int sign) {
    const DomainSpec& dom = s.domain;
    // drift phase follows the grid-derivative convention (no axis-0 Nyquist
    // action); diffusion is an even operator and keeps the full spectrum
    for_each_mode(dom, [&](std::size_t p, const std::array<double, 3>& kv,
                           const std::array<int, 3>& id) {
        double k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
        double decay = std::exp(-mu * k2 * t);
        double phase = (id[0] == dom.dims[0] / 2) ? 0.0 : sign * kv[0] * t;
        s.coeff[p] *= std::complex<double>(decay * std::cos(phase), decay * std::sin(phase));
    });
}

void apply_exp_average(SpectralField& s, double mu, int sign) {
    if (mu == 0.0) return;
    const DomainSpec& dom = s.domain;
    // The axis-0 Nyquist mode is left alone so that the operator is the exact
    // inverse of I + sign*2*mu*D with D the (Nyquist-zeroing) grid derivative.
    for_each_mode(dom, [&](std::size_t p, const std::array<double, 3>& kv,
                           const std::array<int, 3>& id) {
        if (id[0] == dom.dims[0] / 2) return;
        s.coeff[p] /= std::complex<double>(1.0, sign * 2.0 * mu * kv[0]);
    });
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

ConvKernel make_conv_kernel(const ScalarField& centered_sample, double outside_mass_fraction,
                            double warn_fraction) {
    const DomainSpec& dom = centered_sample.domain;
    if (outside_mass_fraction > warn_fraction) {
        std::cerr << "[mhdc] warning: convolution kernel mass outside the box ("
                  << outside_mass_fraction << ") exceeds " << warn_fraction << "\n";
    }
    // Rotate so the center (index dims/2 per axis) lands at index 0.
    ScalarField shifted(dom);
    const std::size_t np = dom.points();
    std::array<int, 3> id{0, 0, 0};
    for (std::size_t p = 0; p < np; ++p) {
        std::array<int, 3> src = id;
        for (int a = 0; a < dom.d; ++a) src[a] = (id[a] + dom.dims[a] / 2) % dom.dims[a];
        std::size_t q = 0;
        for (int a = 0; a < dom.d; ++a) q = q * dom.dims[a] + src[a];
        shifted.values[p] = centered_sample.values[q];
        for (int a = dom.d - 1; a >= 0; --a) {
            if (++id[a] < dom.dims[a]) break;
            id[a] = 0;
        }
    }
    SpectralField ks = forward(shifted);
    ConvKernel out;
    out.domain = dom;
    out.khat_vol.resize(ks.coeff.size());
    // FFT coefficients are normalized by 1/N; convolution wants the raw DFT
    // times the cell volume, i.e. coeff * N * vol.
    const double fac = static_cast<double>(np) * dom.cell_volume();
    for (std::size_t i = 0; i < ks.coeff.size(); ++i) out.khat_vol[i] = ks.coeff[i] * fac;
    out.grid_mass = field_integral(centered_sample);
    return out;
}

ScalarField periodic_convolve(const ScalarField& f, const ConvKernel& kernel) {
    if (!(f.domain == kernel.domain))
        throw std::invalid_argument("periodic_convolve: kernel sampled on a different grid");
    SpectralField s = forward(f);
    for (std::size_t i = 0; i < s.coeff.size(); ++i) s.coeff[i] *= kernel.khat_vol[i];
    return inverse(s);
}

}  // namespace mhdc
