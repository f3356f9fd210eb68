#include "mhdc/local_energy.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <stdexcept>

namespace mhdc {

double theta(double r) {
    r = std::abs(r);
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    double c = std::cos(0.5 * kPi * (r - 1.0));
    return c * c;
}

double theta_deriv(double r) {
    r = std::abs(r);
    if (r <= 1.0 || r >= 2.0) return 0.0;
    return -0.5 * kPi * std::sin(kPi * (r - 1.0));
}

CutoffProfile default_cutoff() { return CutoffProfile{}; }

// ---------------------------------------------------------------------------
// Cached radial kernels (theta and ball indicators) per domain.
// ---------------------------------------------------------------------------

namespace {

std::mutex g_kernel_mutex;

const ConvKernel& cached_radial_kernel(const DomainSpec& dom, const std::string& tag,
                                       double radius) {
    static std::map<std::string, ConvKernel> cache;
    std::lock_guard<std::mutex> lock(g_kernel_mutex);
    std::string key = dom.hash() + ":" + tag;
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    ScalarField sample = (tag == "theta")
                             ? sample_radial(dom, [](double r) { return theta(r); })
                             : sample_radial(dom, [radius](double r) {
                                   return r <= radius ? 1.0 : 0.0;
                               });
    return cache.emplace(key, make_conv_kernel(sample)).first->second;
}

// Multi-index enumeration with multinomial weights q!/a!.
struct MultiIndex {
    std::array<int, 3> a;
    double weight;
};

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

std::vector<MultiIndex> multi_indices(int d, int q, DerivWeight w) {
    std::vector<MultiIndex> out;
    if (d == 2) {
        for (int i = 0; i <= q; ++i) {
            int j = q - i;
            double wt = (w == DerivWeight::multinomial)
                            ? factorial(q) / (factorial(i) * factorial(j))
                            : 1.0;
            out.push_back({{i, j, 0}, wt});
        }
    } else {
        for (int i = 0; i <= q; ++i)
            for (int j = 0; j <= q - i; ++j) {
                int l = q - i - j;
                double wt = (w == DerivWeight::multinomial)
                                ? factorial(q) / (factorial(i) * factorial(j) * factorial(l))
                                : 1.0;
                out.push_back({{i, j, l}, wt});
            }
    }
    return out;
}

// d^a f for a multi-index, via repeated spectral derivatives.
ScalarField partial_deriv(const ScalarField& f, const std::array<int, 3>& a, int d) {
    ScalarField g = f;
    for (int ax = 0; ax < d; ++ax)
        if (a[ax] > 0) g = derivative(g, ax, a[ax]);
    return g;
}

}  // namespace

ScalarField deriv_magnitude_sq(const ScalarField& f, int q, DerivWeight w) {
    const DomainSpec& dom = f.domain;
    ScalarField out(dom);
    if (q == 0) {
        for (std::size_t p = 0; p < out.values.size(); ++p)
            out.values[p] = f.values[p] * f.values[p];
        return out;
    }
    for (const MultiIndex& mi : multi_indices(dom.d, q, w)) {
        ScalarField g = partial_deriv(f, mi.a, dom.d);
        parallel_for(out.values.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t p = b; p < e; ++p)
                out.values[p] += mi.weight * g.values[p] * g.values[p];
        });
    }
    return out;
}

ScalarField deriv_magnitude_sq(const VectorField& z, int q, DerivWeight w) {
    ScalarField out(z.domain);
    for (int c = 0; c < z.domain.d; ++c) {
        ScalarField part = deriv_magnitude_sq(z.comp[c], q, w);
        axpy(out, 1.0, part);
    }
    return out;
}

EnergyDensity rho(const FieldState& state, int N, const CutoffProfile&, DerivWeight w) {
    if (N < 0) throw std::invalid_argument("rho: N must be >= 0");
    const DomainSpec& dom = state.domain();
    const ConvKernel& ker = cached_radial_kernel(dom, "theta", 2.0);
    EnergyDensity out;
    out.order = N;
    for (int which = 0; which < 2; ++which) {
        const VectorField& z = (which == 0) ? state.zp : state.zm;
        ScalarField total(dom);
        for (int q = 0; q <= N; ++q) axpy(total, 1.0, deriv_magnitude_sq(z, q, w));
        ScalarField conv = periodic_convolve(total, ker);
        parallel_for(conv.values.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t p = b; p < e; ++p)
                conv.values[p] = std::sqrt(std::max(conv.values[p], 0.0));
        });
        (which == 0 ? out.rho_p : out.rho_m) = std::move(conv);
    }
    return out;
}

std::pair<double, double> j_functional(const EnergyDensity& density) {
    const DomainSpec& dom = density.rho_p.domain;
    const double dx0 = dom.spacing(0);
    const std::size_t slice = dom.points() / dom.dims[0];
    double j[2] = {0.0, 0.0};
    for (int which = 0; which < 2; ++which) {
        const ScalarField& r = (which == 0) ? density.rho_p : density.rho_m;
        for (int i = 0; i < dom.dims[0]; ++i) {
            double m = 0.0;
            const double* base = r.values.data() + static_cast<std::size_t>(i) * slice;
            for (std::size_t p = 0; p < slice; ++p) m = std::max(m, base[p]);
            j[which] += m;
        }
        j[which] *= dx0;
    }
    return {j[0], j[1]};
}

double theta_mass(const DomainSpec& dom) {
    return field_integral(sample_radial(dom, [](double r) { return theta(r); }));
}

ScalarField ball_l2(const ScalarField& g, double radius) {
    const DomainSpec& dom = g.domain;
    char tag[32];
    std::snprintf(tag, sizeof tag, "ball:%.6f", radius);
    const ConvKernel& ker = cached_radial_kernel(dom, tag, radius);
    ScalarField sq(dom);
    for (std::size_t p = 0; p < sq.values.size(); ++p) sq.values[p] = g.values[p] * g.values[p];
    ScalarField conv = periodic_convolve(sq, ker);
    for (double& v : conv.values) v = std::sqrt(std::max(v, 0.0));
    return conv;
}

ScalarField f_direct(const FieldState& state, int N, DerivWeight w) {
    if (N < 0) throw std::invalid_argument("f_direct: N must be >= 0");
    const DomainSpec& dom = state.domain();
    // |grad^q z±| magnitude fields, q = 0..N
    std::vector<ScalarField> mp(N + 1), mm(N + 1);
    for (int q = 0; q <= N; ++q) {
        mp[q] = deriv_magnitude_sq(state.zp, q, w);
        mm[q] = deriv_magnitude_sq(state.zm, q, w);
        for (double& v : mp[q].values) v = std::sqrt(std::max(v, 0.0));
        for (double& v : mm[q].values) v = std::sqrt(std::max(v, 0.0));
    }
    ScalarField out(dom);
    ScalarField prod(dom);
    for (int kk = 0; kk <= N; ++kk)
        for (int j = 0; j <= N; ++j) {
            if (kk + j > N + 1) continue;
            for (std::size_t p = 0; p < prod.values.size(); ++p)
                prod.values[p] = mp[kk].values[p] * mm[j].values[p];
            axpy(out, 1.0, ball_l2(prod, 2.0));
        }
    // pressure terms: ||grad^{q} p||, q = 1..N+1
    PressureField pf = pressure(state.zp, state.zm);
    for (int q = 1; q <= N + 1; ++q) {
        ScalarField mag = deriv_magnitude_sq(pf.p, q, w);
        for (double& v : mag.values) v = std::sqrt(std::max(v, 0.0));
        axpy(out, 1.0, ball_l2(mag, 2.0));
    }
    return out;
}

double unit_ball_volume(int d) {
    return (d == 2) ? kPi : 4.0 * kPi / 3.0;
}

CoveringResult covering_check(const ScalarField& f) {
    const DomainSpec& dom = f.domain;
    CoveringResult res;
    res.lhs = ball_l2(f, 2.0);
    ScalarField inner_norm = ball_l2(f, 0.5);
    const ConvKernel& ker3 = cached_radial_kernel(dom, "ball:3.000000", 3.0);
    res.rhs = periodic_convolve(inner_norm, ker3);
    res.c_lemma = std::pow(2.0, dom.d) / unit_ball_volume(dom.d);
    double cmax = 0.0;
    for (std::size_t p = 0; p < res.lhs.values.size(); ++p) {
        if (res.rhs.values[p] > 1e-14)
            cmax = std::max(cmax, res.lhs.values[p] / res.rhs.values[p]);
    }
    res.c_measured = cmax;
    return res;
}

}  // namespace mhdc
