#include "mhdc/comparison.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace mhdc {

// ---------------------------------------------------------------------------
// 1-D spectral helpers
// ---------------------------------------------------------------------------

namespace {

struct LinePlan {
    fftw_plan fwd = nullptr, bwd = nullptr;
    double* real = nullptr;
    fftw_complex* cplx = nullptr;
    int n = 0;
};

std::mutex g_line_mutex;

LinePlan& line_plans(int n) {
    static std::map<int, LinePlan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    LinePlan lp;
    lp.n = n;
    lp.real = fftw_alloc_real(n);
    lp.cplx = fftw_alloc_complex(n / 2 + 1);
    lp.fwd = fftw_plan_dft_r2c_1d(n, lp.real, lp.cplx, FFTW_ESTIMATE);
    lp.bwd = fftw_plan_dft_c2r_1d(n, lp.cplx, lp.real, FFTW_ESTIMATE);
    return cache.emplace(n, lp).first->second;
}

std::vector<std::complex<double>> line_forward(const Profile1D& f) {
    std::lock_guard<std::mutex> lock(g_line_mutex);
    LinePlan& lp = line_plans(f.n);
    for (int i = 0; i < f.n; ++i) lp.real[i] = f.v[i];
    fftw_execute(lp.fwd);
    std::vector<std::complex<double>> c(f.n / 2 + 1);
    const double norm = 1.0 / f.n;
    for (int i = 0; i <= f.n / 2; ++i)
        c[i] = std::complex<double>(lp.cplx[i][0] * norm, lp.cplx[i][1] * norm);
    return c;
}

Profile1D line_inverse(const std::vector<std::complex<double>>& c, int n, double length) {
    Profile1D out(n, length);
    std::lock_guard<std::mutex> lock(g_line_mutex);
    LinePlan& lp = line_plans(n);
    for (int i = 0; i <= n / 2; ++i) {
        lp.cplx[i][0] = c[i].real();
        lp.cplx[i][1] = c[i].imag();
    }
    fftw_execute(lp.bwd);
    for (int i = 0; i < n; ++i) out.v[i] = lp.real[i];
    return out;
}

double line_wavenumber(int n, double length, int idx) {
    int m = (idx <= n / 2) ? idx : idx - n;
    return 2.0 * kPi * m / length;
}

}  // namespace

double Profile1D::mass() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s * spacing();
}

Profile1D transverse_max(const ScalarField& f) {
    const DomainSpec& dom = f.domain;
    Profile1D out(dom.dims[0], dom.len[0]);
    const std::size_t slice = dom.points() / dom.dims[0];
    for (int i = 0; i < dom.dims[0]; ++i) {
        const double* base = f.values.data() + static_cast<std::size_t>(i) * slice;
        double m = base[0];
        for (std::size_t p = 1; p < slice; ++p) m = std::max(m, base[p]);
        out.v[i] = m;
    }
    return out;
}

Profile1D line_exp_average(const Profile1D& f, double mu, int sign) {
    if (mu == 0.0) return f;
    auto c = line_forward(f);
    // Nyquist left alone: exact inverse of I + sign*2*mu*D, D the grid derivative
    for (int i = 0; i + 1 < static_cast<int>(c.size()); ++i) {
        double k = line_wavenumber(f.n, f.length, i);
        c[i] /= std::complex<double>(1.0, sign * 2.0 * mu * k);
    }
    return line_inverse(c, f.n, f.length);
}

Profile1D line_advect_diffuse(const Profile1D& f, double t, double mu, int sign) {
    auto c = line_forward(f);
    for (int i = 0; i < static_cast<int>(c.size()); ++i) {
        double k = line_wavenumber(f.n, f.length, i);
        double decay = std::exp(-mu * k * k * t);
        double phase = (i == f.n / 2) ? 0.0 : sign * k * t;
        c[i] *= std::complex<double>(decay * std::cos(phase), decay * std::sin(phase));
    }
    return line_inverse(c, f.n, f.length);
}

Profile1D line_derivative(const Profile1D& f) {
    auto c = line_forward(f);
    for (int i = 0; i < static_cast<int>(c.size()); ++i) {
        double k = line_wavenumber(f.n, f.length, i);
        c[i] *= std::complex<double>(0.0, k);
        if (i == f.n / 2) c[i] = 0.0;  // Nyquist
    }
    return line_inverse(c, f.n, f.length);
}

Profile1D line_antiderivative(const Profile1D& f) {
    auto c = line_forward(f);
    double cmax = 0.0;
    for (const auto& z : c) cmax = std::max(cmax, std::abs(z));
    if (cmax > 0.0 && std::abs(c[0]) > 1e-10 * cmax)
        throw std::invalid_argument("line_antiderivative: input must have zero mean");
    c[0] = 0.0;
    for (int i = 1; i < static_cast<int>(c.size()); ++i) {
        double k = line_wavenumber(f.n, f.length, i);
        c[i] /= std::complex<double>(0.0, k);
        if (i == f.n / 2) c[i] = 0.0;
    }
    return line_inverse(c, f.n, f.length);
}

Profile1D line_convolve(const Profile1D& f, const Profile1D& centered_kernel) {
    if (centered_kernel.n != f.n)
        throw std::invalid_argument("line_convolve: kernel size mismatch");
    // rotate kernel so the center (index n/2) lands at index 0
    Profile1D rot(f.n, f.length);
    for (int i = 0; i < f.n; ++i) rot.v[i] = centered_kernel.v[(i + f.n / 2) % f.n];
    auto cf = line_forward(f);
    auto ck = line_forward(rot);
    const double fac = static_cast<double>(f.n) * f.spacing();
    for (std::size_t i = 0; i < cf.size(); ++i) cf[i] *= ck[i] * fac;
    return line_inverse(cf, f.n, f.length);
}

ScalarField advect_diffuse(const ScalarField& f, double t, double mu, int sign) {
    SpectralField s = forward(f);
    apply_drift_heat(s, t, mu, sign);
    return inverse(s);
}

RampProfile ramp_advect_diffuse(const RampProfile& f, double t, double mu, int sign) {
    RampProfile out;
    out.periodic = line_advect_diffuse(f.periodic, t, mu, sign);
    out.slope = f.slope;
    out.intercept = f.intercept + sign * f.slope * t;
    return out;
}

Profile1D ramp_derivative(const RampProfile& f) {
    Profile1D out = line_derivative(f.periodic);
    for (double& x : out.v) x += f.slope;
    return out;
}

// ---------------------------------------------------------------------------
// Step 1
// ---------------------------------------------------------------------------

std::pair<ScalarField, ScalarField> build_rho00(const EnergyDensity& rho0, double c0,
                                                const KernelSample& kernel) {
    std::pair<ScalarField, ScalarField> out;
    for (int which = 0; which < 2; ++which) {
        const ScalarField& r0 = (which == 0) ? rho0.rho_p : rho0.rho_m;
        ScalarField r00 = n1_convolve(r0, kernel);
        scale(r00, c0);
        const double sc = field_linf(r00);
        // rho(0) <= rho00
        for (std::size_t p = 0; p < r0.values.size(); ++p) {
            if (r0.values[p] > r00.values[p] + 1e-11 * sc) {
                throw std::runtime_error(
                    "build_rho00: rho(0) <= C0 rho(0)*N1 fails on the grid; C0 too small");
            }
        }
        // C0^-1 rho00 <= rho00*N1 <= C0 rho00
        if (sc > 0.0) {
            ScalarField rn = n1_convolve(r00, kernel);
            for (std::size_t p = 0; p < r00.values.size(); ++p) {
                double a = r00.values[p], b = rn.values[p];
                if (b > c0 * a + 1e-11 * sc || b < a / c0 - 1e-11 * sc)
                    throw std::runtime_error(
                        "build_rho00: comparability of rho00 and rho00*N1 fails; C0 too small");
            }
        }
        (which == 0 ? out.first : out.second) = std::move(r00);
    }
    return out;
}

Profile1D n1_line_kernel(const KernelSample& kernel) {
    const DomainSpec& pd = kernel.padded_domain;
    const int n2 = pd.dims[0];
    // transverse integral over the padded box
    std::vector<double> q2(n2, 0.0);
    const std::size_t slice = pd.points() / n2;
    double tvol = 1.0;
    for (int a = 1; a < pd.d; ++a) tvol *= pd.spacing(a);
    for (int i = 0; i < n2; ++i) {
        const double* base = kernel.values.values.data() + static_cast<std::size_t>(i) * slice;
        double s = 0.0;
        for (std::size_t p = 0; p < slice; ++p) s += base[p];
        q2[i] = s * tvol;
    }
    // fold the 2L-line into the L-line: index j (coord -L + j h) lands on
    // i = (j - n/2) mod n
    const int n = kernel.field_domain.dims[0];
    Profile1D q(n, kernel.field_domain.len[0]);
    for (int j = 0; j < n2; ++j) {
        int i = ((j - n / 2) % n + n) % n;
        q.v[i] += q2[j];
    }
    return q;
}

std::pair<Profile1D, Profile1D> build_rho0_line(const EnergyDensity& rho0, double c0,
                                                const KernelSample& kernel) {
    Profile1D q = n1_line_kernel(kernel);
    std::pair<Profile1D, Profile1D> out;
    for (int which = 0; which < 2; ++which) {
        const ScalarField& r0 = (which == 0) ? rho0.rho_p : rho0.rho_m;
        Profile1D star = transverse_max(r0);
        Profile1D line = line_convolve(star, q);
        for (double& x : line.v) x *= c0;
        (which == 0 ? out.first : out.second) = std::move(line);
    }
    return out;
}

ScalarField exp_average(const ScalarField& f, double mu, int sign) {
    if (mu == 0.0) return f;
    SpectralField s = forward(f);
    apply_exp_average(s, mu, sign);
    return inverse(s);
}

RampProfile build_h0(const Profile1D& rho0, const Profile1D& g0, double eps0, int sign) {
    Profile1D w(rho0.n, rho0.length);
    for (int i = 0; i < w.n; ++i) w.v[i] = rho0.v[i] + g0.v[i];
    const double mass = w.mass();
    if (!(mass < 2.0 * eps0)) {
        std::ostringstream msg;
        msg << "build_h0: smallness violated: ||rho0+g0||_L1 = " << mass
            << " >= 2*eps0 = " << 2.0 * eps0
            << " (initial data too large: J(0) must not exceed eps1)";
        throw std::runtime_error(msg.str());
    }
    const double wbar = mass / w.length;
    RampProfile h;
    h.slope = sign * wbar / (2.0 * eps0);
    Profile1D dev(w.n, w.length);
    for (int i = 0; i < w.n; ++i) dev.v[i] = sign * (w.v[i] - wbar) / (2.0 * eps0);
    // exact zero-mean input by construction; clear residual round-off mean
    double m = 0.0;
    for (double x : dev.v) m += x;
    m /= dev.n;
    for (double& x : dev.v) x -= m;
    h.periodic = line_antiderivative(dev);
    if (sign > 0) {
        h.intercept = -(h.slope * h.periodic.coord(0) + h.periodic.v[0]);
    } else {
        // anchor at x = +L/2, whose periodic value equals the one at -L/2
        h.intercept = -(h.slope * (0.5 * h.periodic.length) + h.periodic.v[0]);
    }
    for (int i = 0; i < h.periodic.n; ++i) {
        double v = h.value(i);
        // lower slack covers Fourier ringing of rough inputs; bundle
        // diagnostics track the exact minimum
        if (v < -0.05 || v >= 1.0)
            throw std::runtime_error("build_h0: profile left [0,1) despite the smallness gate");
    }
    return h;
}

// ---------------------------------------------------------------------------
// Step 2/3
// ---------------------------------------------------------------------------

ComparisonInputs build_comparison_inputs(const EnergyDensity& rho0, const ConstantsLedger& ledger,
                                         std::shared_ptr<const KernelSample> kernel, double mu) {
    ComparisonInputs in;
    in.domain = rho0.rho_p.domain;
    in.mu = mu;
    in.ledger = ledger;
    in.kernel = std::move(kernel);
    auto [r00p, r00m] = build_rho00(rho0, ledger.c0, *in.kernel);
    in.rho00_p = std::move(r00p);
    in.rho00_m = std::move(r00m);
    auto [r0p, r0m] = build_rho0_line(rho0, ledger.c0, *in.kernel);
    in.rho0_p = std::move(r0p);
    in.rho0_m = std::move(r0m);

    // rho00(x,y) <= rho0(x) pointwise (exact up to round-off by construction)
    for (int which = 0; which < 2; ++which) {
        const ScalarField& r00 = (which == 0) ? in.rho00_p : in.rho00_m;
        const Profile1D& r0 = (which == 0) ? in.rho0_p : in.rho0_m;
        const double sc = field_linf(r00) + 1e-300;
        const std::size_t slice = r00.values.size() / r00.domain.dims[0];
        for (int i = 0; i < r00.domain.dims[0]; ++i) {
            const double* base = r00.values.data() + static_cast<std::size_t>(i) * slice;
            for (std::size_t p = 0; p < slice; ++p)
                if (base[p] > r0.v[i] + 1e-10 * sc)
                    throw std::runtime_error("comparison: rho00 <= rho0 domination failed");
        }
    }

    in.g00_p = exp_average(in.rho00_p, mu, +1);
    in.g00_m = exp_average(in.rho00_m, mu, -1);
    in.g0_p = line_exp_average(in.rho0_p, mu, +1);
    in.g0_m = line_exp_average(in.rho0_m, mu, -1);
    in.h0_p = build_h0(in.rho0_p, in.g0_p, ledger.eps0, +1);
    in.h0_m = build_h0(in.rho0_m, in.g0_m, ledger.eps0, -1);

    auto [jp, jm] = j_functional(rho0);
    in.j_p = jp;
    in.j_m = jm;
    return in;
}

ComparisonBundle assemble_bundle(const ComparisonInputs& in, double t) {
    ComparisonBundle b;
    b.t = t;
    const double mu = in.mu;
    b.rho01_p = advect_diffuse(in.rho00_p, t, mu, +1);
    b.rho01_m = advect_diffuse(in.rho00_m, t, mu, -1);
    b.g01_p = advect_diffuse(in.g00_p, t, mu, +1);
    b.g01_m = advect_diffuse(in.g00_m, t, mu, -1);
    b.rho11_p = line_advect_diffuse(in.rho0_p, t, mu, +1);
    b.rho11_m = line_advect_diffuse(in.rho0_m, t, mu, -1);
    b.g1_p = line_advect_diffuse(in.g0_p, t, mu, +1);
    b.g1_m = line_advect_diffuse(in.g0_m, t, mu, -1);
    b.h1_p = ramp_advect_diffuse(in.h0_p, t, mu, +1);
    b.h1_m = ramp_advect_diffuse(in.h0_m, t, mu, -1);

    const DomainSpec& dom = in.domain;
    const std::size_t slice = dom.points() / dom.dims[0];
    auto assemble = [&](const ScalarField& rho01, const ScalarField& g01, const RampProfile& h_opp) {
        ScalarField rho10 = rho01;
        for (int i = 0; i < dom.dims[0]; ++i) {
            const double hv = h_opp.value(i);
            double* base = rho10.values.data() + static_cast<std::size_t>(i) * slice;
            const double* gb = g01.values.data() + static_cast<std::size_t>(i) * slice;
            for (std::size_t p = 0; p < slice; ++p) base[p] += gb[p] * hv;
        }
        ScalarField rho1 = n1_convolve(rho10, *in.kernel);
        scale(rho1, in.ledger.c0);
        return rho1;
    };
    b.rho1_p = assemble(b.rho01_p, b.g01_p, b.h1_m);
    b.rho1_m = assemble(b.rho01_m, b.g01_m, b.h1_p);

    // diagnostics: invariants with locations
    BundleDiagnostics d;
    d.h_min = 1e300;
    d.h_max = -1e300;
    for (int i = 0; i < dom.dims[0]; ++i) {
        for (const RampProfile* h : {&b.h1_p, &b.h1_m}) {
            double v = h->value(i);
            d.h_min = std::min(d.h_min, v);
            d.h_max = std::max(d.h_max, v);
        }
    }
    d.min_rho01 = std::min(field_min(b.rho01_p), field_min(b.rho01_m));
    d.min_g01 = std::min(field_min(b.g01_p), field_min(b.g01_m));
    d.min_rho1 = std::min(field_min(b.rho1_p), field_min(b.rho1_m));
    d.sandwich_rho_excess = -1e300;
    d.sandwich_g_excess = -1e300;
    for (int which = 0; which < 2; ++which) {
        const ScalarField& r01 = (which == 0) ? b.rho01_p : b.rho01_m;
        const ScalarField& g01 = (which == 0) ? b.g01_p : b.g01_m;
        const Profile1D& r11 = (which == 0) ? b.rho11_p : b.rho11_m;
        const Profile1D& g1 = (which == 0) ? b.g1_p : b.g1_m;
        for (int i = 0; i < dom.dims[0]; ++i) {
            const double* rb = r01.values.data() + static_cast<std::size_t>(i) * slice;
            const double* gb = g01.values.data() + static_cast<std::size_t>(i) * slice;
            for (std::size_t p = 0; p < slice; ++p) {
                double er = rb[p] - r11.v[i];
                double eg = gb[p] - g1.v[i];
                if (er > d.sandwich_rho_excess) {
                    d.sandwich_rho_excess = er;
                    d.worst_index = static_cast<std::size_t>(i) * slice + p;
                }
                d.sandwich_g_excess = std::max(d.sandwich_g_excess, eg);
            }
        }
    }
    b.diag = d;
    if (d.h_max >= 1.0)
        throw std::runtime_error("assemble_bundle: h reached 1 (mass drifted past the gate)");
    return b;
}

SupersolutionResidual supersolution_residual(const ComparisonInputs& in, double t, double dt_fd) {
    if (t < dt_fd) dt_fd = std::max(t / 2.0, 1e-6);
    ComparisonBundle bm = assemble_bundle(in, t - dt_fd);
    ComparisonBundle b0 = assemble_bundle(in, t);
    ComparisonBundle bp = assemble_bundle(in, t + dt_fd);

    SupersolutionResidual res;
    // RHS = (rho+1 rho-1 * N1) / (2 eps0 C0^3)
    ScalarField prod(in.domain);
    for (std::size_t p = 0; p < prod.values.size(); ++p)
        prod.values[p] = b0.rho1_p.values[p] * b0.rho1_m.values[p];
    ScalarField rhs_field = n1_convolve(prod, *in.kernel);
    const double c0 = in.ledger.c0;
    scale(rhs_field, 1.0 / (2.0 * in.ledger.eps0 * c0 * c0 * c0));

    double scale_acc = field_linf(rhs_field);
    for (int which = 0; which < 2; ++which) {
        const ScalarField& fm = (which == 0) ? bm.rho1_p : bm.rho1_m;
        const ScalarField& f0 = (which == 0) ? b0.rho1_p : b0.rho1_m;
        const ScalarField& fp = (which == 0) ? bp.rho1_p : bp.rho1_m;
        const int sign = (which == 0) ? +1 : -1;
        ScalarField lhs(in.domain);
        for (std::size_t p = 0; p < lhs.values.size(); ++p)
            lhs.values[p] = (fp.values[p] - fm.values[p]) / (2.0 * dt_fd);
        ScalarField drift = derivative(f0, 0, 1);
        ScalarField diff = laplacian(f0);
        for (std::size_t p = 0; p < lhs.values.size(); ++p)
            lhs.values[p] += -sign * drift.values[p] - in.mu * diff.values[p];
        scale_acc = std::max(scale_acc, field_linf(lhs));
        ScalarField resid = lhs;
        axpy(resid, -1.0, rhs_field);
        double mn = field_min(resid);
        if (which == 0) {
            res.resid_p = std::move(resid);
            res.min_p = mn;
        } else {
            res.resid_m = std::move(resid);
            res.min_m = mn;
        }
    }
    res.scale = scale_acc;
    return res;
}

}  // namespace mhdc
