#include "mhdc/solver.hpp"

#include <cmath>
#include <stdexcept>

namespace mhdc {

namespace {

void check_same_domain(const VectorField& a, const VectorField& b, const char* who) {
    if (!(a.domain == b.domain)) throw std::invalid_argument(std::string(who) + ": domain mismatch");
}

// Complete homogeneous symmetric polynomial h_q(x_0..x_{d-1}): the plain
// (multiplicity-free) spectral weight for |grad^q|^2.
double homogeneous_sum(const std::array<double, 3>& x, int d, int q) {
    double s = 0.0;
    if (d == 2) {
        for (int i = 0; i <= q; ++i) s += std::pow(x[0], i) * std::pow(x[1], q - i);
    } else {
        for (int i = 0; i <= q; ++i)
            for (int j = 0; j <= q - i; ++j)
                s += std::pow(x[0], i) * std::pow(x[1], j) * std::pow(x[2], q - i - j);
    }
    return s;
}

}  // namespace

FieldState make_state(const VectorField& zp, const VectorField& zm, double mu, double t) {
    check_same_domain(zp, zm, "make_state");
    if (mu < 0.0 || !std::isfinite(mu)) throw std::invalid_argument("make_state: mu must be >= 0");
    if (t < 0.0 || !std::isfinite(t)) throw std::invalid_argument("make_state: t must be >= 0");
    if (!field_finite(zp) || !field_finite(zm))
        throw std::invalid_argument("make_state: fields must be finite");
    if (solenoidal_defect(zp) > 1e-10 || solenoidal_defect(zm) > 1e-10)
        throw std::invalid_argument("make_state: fields violate the solenoidal invariant");
    FieldState s;
    s.t = t;
    s.zp = zp;
    s.zm = zm;
    s.mu = mu;
    return s;
}

std::pair<VectorField, VectorField> elsasser_from_vb(const VectorField& v, const VectorField& b) {
    check_same_domain(v, b, "elsasser_from_vb");
    VectorField zp(v.domain), zm(v.domain);
    const std::size_t np = v.domain.points();
    for (int c = 0; c < v.domain.d; ++c) {
        const double b0 = (c == 0) ? 1.0 : 0.0;
        for (std::size_t p = 0; p < np; ++p) {
            zp.comp[c].values[p] = v.comp[c].values[p] + b.comp[c].values[p] - b0;
            zm.comp[c].values[p] = v.comp[c].values[p] - b.comp[c].values[p] + b0;
        }
    }
    return {zp, zm};
}

std::pair<VectorField, VectorField> vb_from_elsasser(const VectorField& zp, const VectorField& zm) {
    check_same_domain(zp, zm, "vb_from_elsasser");
    VectorField v(zp.domain), b(zp.domain);
    const std::size_t np = zp.domain.points();
    for (int c = 0; c < zp.domain.d; ++c) {
        const double b0 = (c == 0) ? 1.0 : 0.0;
        for (std::size_t p = 0; p < np; ++p) {
            v.comp[c].values[p] = 0.5 * (zp.comp[c].values[p] + zm.comp[c].values[p]);
            b.comp[c].values[p] = 0.5 * (zp.comp[c].values[p] - zm.comp[c].values[p]) + b0;
        }
    }
    return {v, b};
}

// ---------------------------------------------------------------------------
// Pressure
// ---------------------------------------------------------------------------

namespace {

// Dealiased physical copy of a spectral component.
ScalarField dealiased_physical(const SpectralField& s) {
    SpectralField t = s;
    dealias_23(t);
    return inverse(t);
}

std::vector<SpectralField> forward_vec(const VectorField& u) {
    std::vector<SpectralField> s(u.domain.d);
    for (int c = 0; c < u.domain.d; ++c) s[c] = forward(u.comp[c]);
    return s;
}

// Spectrum of the pressure: p_hat = k_i k_j (z+^j z-^i)_hat / |k|^2, from
// dealiased products.
SpectralField pressure_spectrum(const std::vector<SpectralField>& zp,
                                const std::vector<SpectralField>& zm) {
    const DomainSpec& dom = zp[0].domain;
    const int d = dom.d;
    std::vector<ScalarField> zp_phys(d), zm_phys(d);
    for (int c = 0; c < d; ++c) {
        zp_phys[c] = dealiased_physical(zp[c]);
        zm_phys[c] = dealiased_physical(zm[c]);
    }
    SpectralField acc;
    acc.domain = dom;
    acc.coeff.assign(zp[0].coeff.size(), 0.0);
    ScalarField prod(dom);
    const std::size_t np = dom.points();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            for (std::size_t p = 0; p < np; ++p)
                prod.values[p] = zp_phys[j].values[p] * zm_phys[i].values[p];
            SpectralField ps = forward(prod);
            dealias_23(ps);
            // -lap p = d_i d_j (prod)  =>  |k|^2 p_hat = -k_i k_j prod_hat
            std::array<int, 3> cd{1, 1, 1};
            for (int a = 0; a < d; ++a) cd[a] = dom.dims[a];
            cd[d - 1] = dom.dims[d - 1] / 2 + 1;
            std::array<int, 3> id{0, 0, 0};
            for (std::size_t p = 0; p < ps.coeff.size(); ++p) {
                double ki = wavenumber(dom, i, id[i]);
                double kj = wavenumber(dom, j, id[j]);
                acc.coeff[p] -= ki * kj * ps.coeff[p];
                for (int a = d - 1; a >= 0; --a) {
                    if (++id[a] < cd[a]) break;
                    id[a] = 0;
                }
            }
        }
    // divide by |k|^2, zero the mean
    std::array<int, 3> cd{1, 1, 1};
    for (int a = 0; a < d; ++a) cd[a] = dom.dims[a];
    cd[d - 1] = dom.dims[d - 1] / 2 + 1;
    std::array<int, 3> id{0, 0, 0};
    for (std::size_t p = 0; p < acc.coeff.size(); ++p) {
        double k2 = 0.0;
        for (int a = 0; a < d; ++a) {
            double kk = wavenumber(dom, a, id[a]);
            k2 += kk * kk;
        }
        acc.coeff[p] = (k2 == 0.0) ? 0.0 : acc.coeff[p] / k2;
        for (int a = d - 1; a >= 0; --a) {
            if (++id[a] < cd[a]) break;
            id[a] = 0;
        }
    }
    return acc;
}

}  // namespace

PressureField pressure(const VectorField& zp, const VectorField& zm) {
    check_same_domain(zp, zm, "pressure");
    SpectralField ps = pressure_spectrum(forward_vec(zp), forward_vec(zm));
    PressureField out;
    out.p = inverse(ps);
    return out;
}

// ---------------------------------------------------------------------------
// Nonlinear term and right-hand side
// ---------------------------------------------------------------------------

namespace {

// Projected advection spectra: N± = -P[(z∓ . grad) z±], dealiased.
void nonlinear_spectra(const SpectralState& st, std::vector<SpectralField>& np_out,
                       std::vector<SpectralField>& nm_out, double* max_z) {
    const DomainSpec& dom = st.domain;
    const int d = dom.d;
    std::vector<ScalarField> zp(d), zm(d);
    std::vector<std::vector<ScalarField>> dzp(d), dzm(d);  // [comp][axis]
    for (int c = 0; c < d; ++c) {
        zp[c] = dealiased_physical(st.zp[c]);
        zm[c] = dealiased_physical(st.zm[c]);
        dzp[c].resize(d);
        dzm[c].resize(d);
        for (int a = 0; a < d; ++a) {
            SpectralField s = st.zp[c];
            dealias_23(s);
            std::array<int, 3> cd{1, 1, 1};
            for (int ax = 0; ax < d; ++ax) cd[ax] = dom.dims[ax];
            cd[d - 1] = dom.dims[d - 1] / 2 + 1;
            std::array<int, 3> id{0, 0, 0};
            for (std::size_t p = 0; p < s.coeff.size(); ++p) {
                double kk = wavenumber(dom, a, id[a]);
                bool nyq = (id[a] == dom.dims[a] / 2);
                s.coeff[p] *= nyq ? std::complex<double>(0.0, 0.0)
                                  : std::complex<double>(0.0, kk);
                for (int ax = d - 1; ax >= 0; --ax) {
                    if (++id[ax] < cd[ax]) break;
                    id[ax] = 0;
                }
            }
            dzp[c][a] = inverse(s);

            SpectralField sm = st.zm[c];
            dealias_23(sm);
            id = {0, 0, 0};
            for (std::size_t p = 0; p < sm.coeff.size(); ++p) {
                double kk = wavenumber(dom, a, id[a]);
                bool nyq = (id[a] == dom.dims[a] / 2);
                sm.coeff[p] *= nyq ? std::complex<double>(0.0, 0.0)
                                   : std::complex<double>(0.0, kk);
                for (int ax = d - 1; ax >= 0; --ax) {
                    if (++id[ax] < cd[ax]) break;
                    id[ax] = 0;
                }
            }
            dzm[c][a] = inverse(sm);
        }
    }
    if (max_z) {
        double m = 0.0;
        const std::size_t np = dom.points();
        for (std::size_t p = 0; p < np; ++p) {
            double sp = 0.0, sm = 0.0;
            for (int c = 0; c < d; ++c) {
                sp += zp[c].values[p] * zp[c].values[p];
                sm += zm[c].values[p] * zm[c].values[p];
            }
            m = std::max(m, std::max(sp, sm));
        }
        *max_z = std::sqrt(m);
    }

    const std::size_t np = dom.points();
    std::vector<SpectralField> advp(d), advm(d);
    ScalarField accp(dom), accm(dom);
    for (int c = 0; c < d; ++c) {
        for (std::size_t p = 0; p < np; ++p) {
            double ap = 0.0, am = 0.0;
            for (int a = 0; a < d; ++a) {
                ap += zm[a].values[p] * dzp[c][a].values[p];  // (z- . grad) z+
                am += zp[a].values[p] * dzm[c][a].values[p];  // (z+ . grad) z-
            }
            accp.values[p] = ap;
            accm.values[p] = am;
        }
        advp[c] = forward(accp);
        dealias_23(advp[c]);
        advm[c] = forward(accm);
        dealias_23(advm[c]);
    }

    // Leray projection and sign flip.
    auto project = [&](std::vector<SpectralField>& v) {
        std::array<int, 3> cd{1, 1, 1};
        for (int a = 0; a < d; ++a) cd[a] = dom.dims[a];
        cd[d - 1] = dom.dims[d - 1] / 2 + 1;
        std::array<int, 3> id{0, 0, 0};
        for (std::size_t p = 0; p < v[0].coeff.size(); ++p) {
            double kv[3] = {0, 0, 0};
            double k2 = 0.0;
            for (int a = 0; a < d; ++a) {
                kv[a] = (id[a] == dom.dims[a] / 2) ? 0.0 : wavenumber(dom, a, id[a]);
                k2 += kv[a] * kv[a];
            }
            if (k2 != 0.0) {
                std::complex<double> kdot = 0.0;
                for (int c = 0; c < d; ++c) kdot += kv[c] * v[c].coeff[p];
                for (int c = 0; c < d; ++c) v[c].coeff[p] -= kv[c] * kdot / k2;
            }
            for (int a = d - 1; a >= 0; --a) {
                if (++id[a] < cd[a]) break;
                id[a] = 0;
            }
        }
    };
    project(advp);
    project(advm);
    for (int c = 0; c < d; ++c) {
        for (auto& z : advp[c].coeff) z = -z;
        for (auto& z : advm[c].coeff) z = -z;
    }
    np_out = std::move(advp);
    nm_out = std::move(advm);
}

}  // namespace

std::pair<VectorField, VectorField> rhs(const FieldState& state) {
    SpectralState st = to_spectral(state);
    std::vector<SpectralField> np, nm;
    nonlinear_spectra(st, np, nm, nullptr);
    const DomainSpec& dom = st.domain;
    // add exact linear part: (-mu k^2 ± i k0) z±
    std::array<int, 3> cd{1, 1, 1};
    for (int a = 0; a < dom.d; ++a) cd[a] = dom.dims[a];
    cd[dom.d - 1] = dom.dims[dom.d - 1] / 2 + 1;
    for (int c = 0; c < dom.d; ++c) {
        std::array<int, 3> id{0, 0, 0};
        for (std::size_t p = 0; p < np[c].coeff.size(); ++p) {
            double kv0 = wavenumber(dom, 0, id[0]);
            double k2 = 0.0;
            for (int a = 0; a < dom.d; ++a) {
                double kk = wavenumber(dom, a, id[a]);
                k2 += kk * kk;
            }
            bool nyq0 = (id[0] == dom.dims[0] / 2);
            std::complex<double> lin_p(-state.mu * k2, nyq0 ? 0.0 : kv0);
            std::complex<double> lin_m(-state.mu * k2, nyq0 ? 0.0 : -kv0);
            np[c].coeff[p] += lin_p * st.zp[c].coeff[p];
            nm[c].coeff[p] += lin_m * st.zm[c].coeff[p];
            for (int a = dom.d - 1; a >= 0; --a) {
                if (++id[a] < cd[a]) break;
                id[a] = 0;
            }
        }
    }
    VectorField dzp(state.domain()), dzm(state.domain());
    for (int c = 0; c < dom.d; ++c) {
        dzp.comp[c] = inverse(np[c]);
        dzm.comp[c] = inverse(nm[c]);
    }
    return {dzp, dzm};
}

double cfl_limit(const FieldState& state) {
    double mz = std::max(field_linf(state.zp), field_linf(state.zm));
    return 0.5 * state.domain().min_spacing() / (1.0 + mz);
}

// ---------------------------------------------------------------------------
// Integrating-factor RK2 stepping
// ---------------------------------------------------------------------------

SpectralState to_spectral(const FieldState& state) {
    SpectralState st;
    st.t = state.t;
    st.mu = state.mu;
    st.domain = state.domain();
    st.zp.resize(st.domain.d);
    st.zm.resize(st.domain.d);
    for (int c = 0; c < st.domain.d; ++c) {
        st.zp[c] = forward(state.zp.comp[c]);
        st.zm[c] = forward(state.zm.comp[c]);
    }
    return st;
}

FieldState SpectralState::to_physical() const {
    FieldState out;
    out.t = t;
    out.mu = mu;
    out.zp = VectorField(domain);
    out.zm = VectorField(domain);
    for (int c = 0; c < domain.d; ++c) {
        out.zp.comp[c] = inverse(zp[c]);
        out.zm.comp[c] = inverse(zm[c]);
    }
    return out;
}

void step_inplace(SpectralState& st, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    const DomainSpec& dom = st.domain;
    const int d = dom.d;

    std::vector<SpectralField> n1p, n1m;
    double max_z = 0.0;
    nonlinear_spectra(st, n1p, n1m, &max_z);
    if (!std::isfinite(max_z)) throw std::runtime_error("step: NaN/Inf blow-up detected");
    double cfl = 0.5 * dom.min_spacing() / (1.0 + max_z);
    if (dt > cfl * (1.0 + 1e-12))
        throw std::invalid_argument("step: dt violates the advective CFL bound");

    // Predictor: z* = E(dt) (z + dt N(z)); corrector averages E(dt)N(z) with N(z*).
    SpectralState star = st;
    for (int c = 0; c < d; ++c) {
        for (std::size_t p = 0; p < st.zp[c].coeff.size(); ++p) {
            star.zp[c].coeff[p] = st.zp[c].coeff[p] + dt * n1p[c].coeff[p];
            star.zm[c].coeff[p] = st.zm[c].coeff[p] + dt * n1m[c].coeff[p];
        }
        apply_drift_heat(star.zp[c], dt, st.mu, +1);
        apply_drift_heat(star.zm[c], dt, st.mu, -1);
    }
    star.t = st.t + dt;

    std::vector<SpectralField> n2p, n2m;
    double max_z2 = 0.0;
    nonlinear_spectra(star, n2p, n2m, &max_z2);
    if (!std::isfinite(max_z2)) throw std::runtime_error("step: NaN/Inf blow-up detected");

    for (int c = 0; c < d; ++c) {
        // E(dt) applied to z and to N(z)
        for (std::size_t p = 0; p < st.zp[c].coeff.size(); ++p) {
            st.zp[c].coeff[p] += 0.5 * dt * n1p[c].coeff[p];
            st.zm[c].coeff[p] += 0.5 * dt * n1m[c].coeff[p];
        }
        apply_drift_heat(st.zp[c], dt, st.mu, +1);
        apply_drift_heat(st.zm[c], dt, st.mu, -1);
        for (std::size_t p = 0; p < st.zp[c].coeff.size(); ++p) {
            st.zp[c].coeff[p] += 0.5 * dt * n2p[c].coeff[p];
            st.zm[c].coeff[p] += 0.5 * dt * n2m[c].coeff[p];
        }
    }
    st.t += dt;
}

FieldState step(const FieldState& state, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    if (dt > cfl_limit(state) * (1.0 + 1e-12))
        throw std::invalid_argument("step: dt violates the advective CFL bound");
    SpectralState st = to_spectral(state);
    step_inplace(st, dt);
    FieldState out = st.to_physical();
    if (!field_finite(out.zp) || !field_finite(out.zm))
        throw std::runtime_error("step: NaN/Inf blow-up detected");
    return out;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

std::pair<double, double> hn_norm(const FieldState& state, int N, DerivWeight w) {
    if (N < 0) throw std::invalid_argument("hn_norm: N must be >= 0");
    const DomainSpec& dom = state.domain();
    const double vol = dom.volume();
    double acc[2] = {0.0, 0.0};
    for (int which = 0; which < 2; ++which) {
        const VectorField& z = (which == 0) ? state.zp : state.zm;
        for (int c = 0; c < dom.d; ++c) {
            SpectralField s = forward(z.comp[c]);
            std::array<int, 3> cd{1, 1, 1};
            for (int a = 0; a < dom.d; ++a) cd[a] = dom.dims[a];
            cd[dom.d - 1] = dom.dims[dom.d - 1] / 2 + 1;
            std::array<int, 3> id{0, 0, 0};
            for (std::size_t p = 0; p < s.coeff.size(); ++p) {
                // Nyquist components drop out, matching the grid derivative
                std::array<double, 3> k2{0.0, 0.0, 0.0};
                double ksq = 0.0;
                for (int a = 0; a < dom.d; ++a) {
                    double kk = (id[a] == dom.dims[a] / 2) ? 0.0 : wavenumber(dom, a, id[a]);
                    k2[a] = kk * kk;
                    ksq += kk * kk;
                }
                double weight = 0.0;
                for (int q = 0; q <= N; ++q)
                    weight += (w == DerivWeight::multinomial) ? std::pow(ksq, q)
                                                              : homogeneous_sum(k2, dom.d, q);
                int last = id[dom.d - 1];
                double hs = (last == 0 || last == dom.dims[dom.d - 1] / 2) ? 1.0 : 2.0;
                acc[which] += hs * weight * std::norm(s.coeff[p]);
                for (int a = dom.d - 1; a >= 0; --a) {
                    if (++id[a] < cd[a]) break;
                    id[a] = 0;
                }
            }
        }
    }
    return {std::sqrt(vol * acc[0]), std::sqrt(vol * acc[1])};
}

double w1inf_norm(const VectorField& z) {
    const DomainSpec& dom = z.domain;
    const std::size_t np = dom.points();
    std::vector<double> mag(np, 0.0);
    for (int c = 0; c < dom.d; ++c) {
        for (std::size_t p = 0; p < np; ++p)
            mag[p] += z.comp[c].values[p] * z.comp[c].values[p];
        for (int a = 0; a < dom.d; ++a) {
            ScalarField g = derivative(z.comp[c], a, 1);
            for (std::size_t p = 0; p < np; ++p) mag[p] += g.values[p] * g.values[p];
        }
    }
    double m = 0.0;
    for (double v : mag) m = std::max(m, v);
    return std::sqrt(m);
}

}  // namespace mhdc
