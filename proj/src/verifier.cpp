#include "mhdc/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mhdc {

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

TolerancePolicy calibrate_tolerance(const FieldState& linear_state, int N, double dt_sample,
                                    double t_span) {
    if (field_linf(linear_state.zm) != 0.0)
        throw std::invalid_argument("calibrate_tolerance: calibration state must have z- = 0");
    TolerancePolicy pol;
    pol.h = linear_state.domain().min_spacing();
    pol.dt_sample = dt_sample;

    // Run the linear trajectory; measure (a) the positive excess of the
    // discretized local-energy LHS (continuum value <= 0 since F == 0), and
    // (b) the gap between stepped and closed-form densities.
    LocalEnergyChecker le(N, linear_state.mu, 1.0, nullptr);
    SpectralState st = to_spectral(linear_state);
    SpectralState exact0 = st;
    double dt = 0.45 * cfl_limit(linear_state);
    int per = std::max(1, static_cast<int>(std::ceil(dt_sample / dt)));
    dt = dt_sample / per;

    double rho_gap = 0.0, rho_scale = 0.0;
    int nsamples = std::max(3, static_cast<int>(std::round(t_span / dt_sample)) + 1);
    for (int s = 0; s < nsamples; ++s) {
        FieldState cur = st.to_physical();
        le.add_sample(cur);
        // closed form: drift-heat applied to the initial spectra
        SpectralState ex = exact0;
        for (int c = 0; c < ex.domain.d; ++c) {
            apply_drift_heat(ex.zp[c], cur.t - exact0.t, ex.mu, +1);
            apply_drift_heat(ex.zm[c], cur.t - exact0.t, ex.mu, -1);
        }
        EnergyDensity rn = rho(cur, N);
        EnergyDensity re = rho(ex.to_physical(), N);
        for (std::size_t p = 0; p < rn.rho_p.values.size(); ++p)
            rho_gap = std::max(rho_gap, std::abs(rn.rho_p.values[p] - re.rho_p.values[p]));
        rho_scale = std::max(rho_scale, field_linf(re.rho_p));
        if (s + 1 < nsamples)
            for (int q = 0; q < per; ++q) step_inplace(st, dt);
    }
    auto res = le.finish();
    const double floor_rel = 1e-12;
    pol.rel_local_energy = std::max(4.0 * res.lhs_where_f_small / (res.scale + 1e-300), floor_rel);
    pol.rel_comparison = std::max(4.0 * rho_gap / (rho_scale + 1e-300), floor_rel);
    // decompose for reporting: attribute the LE noise to the dt^2 term and the
    // rho gap to the h^2 term (the dominant sources in each)
    pol.b_coeff = pol.rel_local_energy / (dt_sample * dt_sample);
    pol.a_coeff = pol.rel_comparison / (pol.h * pol.h);
    return pol;
}

// ---------------------------------------------------------------------------
// Local energy inequality
// ---------------------------------------------------------------------------

LocalEnergyChecker::LocalEnergyChecker(int N, double mu, double c1,
                                       std::shared_ptr<const KernelSample> kernel, double tol_rel,
                                       double eps_rel)
    : order_(N), mu_(mu), c1_(c1), tol_rel_(tol_rel), eps_rel_(eps_rel),
      kernel_(std::move(kernel)) {}

void LocalEnergyChecker::add_sample(const FieldState& state) {
    EnergyDensity den = rho(state, order_);
    if (!any_) {
        eps_ = eps_rel_ * std::max(field_linf(den.rho_p), field_linf(den.rho_m));
        if (eps_ == 0.0) eps_ = eps_rel_;
        any_ = true;
        acc_.eps_used = eps_;
    }
    rawp_.push_back(den.rho_p);
    rawm_.push_back(den.rho_m);
    auto regularize = [&](ScalarField& f) {
        for (double& v : f.values) v = std::sqrt(v * v + eps_ * eps_);
    };
    regularize(den.rho_p);
    regularize(den.rho_m);
    times_.push_back(state.t);
    rp_.push_back(std::move(den.rho_p));
    rm_.push_back(std::move(den.rho_m));
    states_.push_back(state);
    if (times_.size() > 3) {
        times_.pop_front();
        rp_.pop_front();
        rm_.pop_front();
        rawp_.pop_front();
        rawm_.pop_front();
        states_.pop_front();
    }
    if (times_.size() == 3) process_triple();
}

void LocalEnergyChecker::process_triple() {
    const double dt0 = times_[1] - times_[0];
    const double dt1 = times_[2] - times_[1];
    if (std::abs(dt1 - dt0) > 1e-9 * dt0)
        throw std::invalid_argument("LocalEnergyChecker: samples must be uniformly spaced");
    const FieldState& center = states_[1];
    ScalarField f = f_direct(center, order_);
    const double f_floor = 1e-6 * field_linf(f) + 1e-300;

    // Eq. (3.1)-style right-hand side: C1 (rho+ rho-) * N1
    ScalarField rhs31;
    if (kernel_) {
        ScalarField prod(center.domain());
        for (std::size_t p = 0; p < prod.values.size(); ++p)
            prod.values[p] = rawp_[1].values[p] * rawm_[1].values[p];
        rhs31 = n1_convolve(prod, *kernel_);
        scale(rhs31, c1_);
    }

    for (int which = 0; which < 2; ++which) {
        const std::deque<ScalarField>& r = (which == 0) ? rp_ : rm_;
        const int sign = (which == 0) ? +1 : -1;
        ScalarField lhs(center.domain());
        for (std::size_t p = 0; p < lhs.values.size(); ++p)
            lhs.values[p] = (r[2].values[p] - r[0].values[p]) / (dt0 + dt1);
        ScalarField drift = derivative(r[1], 0, 1);
        ScalarField diff = laplacian(r[1]);
        double sc = 0.0;
        for (std::size_t p = 0; p < lhs.values.size(); ++p) {
            double terms = std::abs(lhs.values[p]) + std::abs(drift.values[p]) +
                           mu_ * std::abs(diff.values[p]);
            sc = std::max(sc, terms);
            lhs.values[p] += -sign * drift.values[p] - mu_ * diff.values[p];
        }
        acc_.scale = std::max(acc_.scale, sc);
        const double tol = tol_rel_ * sc;
        for (std::size_t p = 0; p < lhs.values.size(); ++p) {
            const double L = lhs.values[p];
            const double F = f.values[p];
            if (kernel_)
                acc_.excess_vs_c1 = std::max(acc_.excess_vs_c1, L - rhs31.values[p]);
            if (F > f_floor)
                acc_.c_min = std::max(acc_.c_min, (L - tol) / F);
            else
                acc_.lhs_where_f_small = std::max(acc_.lhs_where_f_small, L);
        }
    }
    acc_.interior_samples += 1;
}

LocalEnergyChecker::Result LocalEnergyChecker::finish() const { return acc_; }

double check_f_estimate(const FieldState& state, int N, const KernelSample& kernel) {
    ScalarField f = f_direct(state, N);
    EnergyDensity den = rho(state, N);
    ScalarField prod(state.domain());
    for (std::size_t p = 0; p < prod.values.size(); ++p)
        prod.values[p] = den.rho_p.values[p] * den.rho_m.values[p];
    ScalarField conv = n1_convolve(prod, kernel);
    const double floor = 1e-12 * field_linf(conv) + 1e-300;
    double c = 0.0;
    for (std::size_t p = 0; p < f.values.size(); ++p)
        if (conv.values[p] > floor) c = std::max(c, f.values[p] / conv.values[p]);
    return c;
}

// ---------------------------------------------------------------------------
// Comparison ordering
// ---------------------------------------------------------------------------

ComparisonChecker::ComparisonChecker(const ComparisonInputs& inputs, int N)
    : inputs_(inputs), order_(N) {
    acc_.advisory = !(std::max(inputs.j_p, inputs.j_m) <= inputs.ledger.eps1);
}

ComparisonChecker::TimePoint ComparisonChecker::add_sample(const FieldState& state) {
    TimePoint tp;
    tp.t = state.t;
    EnergyDensity den = rho(state, order_);
    ComparisonBundle b = assemble_bundle(inputs_, state.t);
    auto excess = [](const ScalarField& r, const ScalarField& r1) {
        double e = -std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < r.values.size(); ++p)
            e = std::max(e, r.values[p] - r1.values[p]);
        return e;
    };
    tp.excess_p = excess(den.rho_p, b.rho1_p);
    tp.excess_m = excess(den.rho_m, b.rho1_m);
    auto [hp, hm] = hn_norm(state, order_);
    tp.hn_p = hp;
    tp.hn_m = hm;
    auto [jp, jm] = j_functional(den);
    tp.j_p = jp;
    tp.j_m = jm;
    tp.guard_ok = boundary_guard(state.zp, state.zm).ok;

    acc_.rho1_scale = std::max(acc_.rho1_scale,
                               std::max(field_linf(b.rho1_p), field_linf(b.rho1_m)));
    double ex = std::max(tp.excess_p, tp.excess_m);
    acc_.max_excess = std::max(acc_.max_excess, ex);
    if (first_) {
        hn0_p_ = hp;
        hn0_m_ = hm;
        acc_.excess_at_zero = ex;
        acc_.ordered_at_zero = ex <= 1e-10 * (acc_.rho1_scale + 1e-300);
        first_ = false;
    }
    acc_.hn_ratio_p = std::max(acc_.hn_ratio_p, hn0_p_ > 0.0 ? hp / hn0_p_ : 1.0);
    acc_.hn_ratio_m = std::max(acc_.hn_ratio_m, hn0_m_ > 0.0 ? hm / hn0_m_ : 1.0);
    double rho_l2_p = field_l2(den.rho_p), rho_l2_m = field_l2(den.rho_m);
    double rho1_l2_p = field_l2(b.rho1_p), rho1_l2_m = field_l2(b.rho1_m);
    if (rho_l2_p > 0.0) {
        acc_.chain_c_a = std::max(acc_.chain_c_a, hp / rho_l2_p);
        acc_.chain_rho_vs_rho1 = std::max(acc_.chain_rho_vs_rho1, rho_l2_p / (rho1_l2_p + 1e-300));
    }
    if (rho_l2_m > 0.0) {
        acc_.chain_c_a = std::max(acc_.chain_c_a, hm / rho_l2_m);
        acc_.chain_rho_vs_rho1 = std::max(acc_.chain_rho_vs_rho1, rho_l2_m / (rho1_l2_m + 1e-300));
    }
    acc_.points.push_back(tp);
    return tp;
}

// ---------------------------------------------------------------------------
// Supersolution residual
// ---------------------------------------------------------------------------

SupersolutionCheck check_supersolution(const ComparisonInputs& in, const std::vector<double>& times,
                                       double dt_fd) {
    SupersolutionCheck out;
    out.min_resid = std::numeric_limits<double>::infinity();
    out.min_resid_identity = std::numeric_limits<double>::infinity();
    const double c0 = in.ledger.c0;
    const double inv2eps = 1.0 / (2.0 * in.ledger.eps0);
    for (double t : times) {
        SupersolutionResidual r = supersolution_residual(in, t, dt_fd);
        out.min_resid = std::min(out.min_resid, std::min(r.min_p, r.min_m));

        // identity route: LHS_id = C0 K[(g01 + rho01)(rho11∓ + g1∓)]/(2 eps0)
        ComparisonBundle b = assemble_bundle(in, t);
        const DomainSpec& dom = in.domain;
        const std::size_t slice = dom.points() / dom.dims[0];
        ScalarField prod(dom);
        for (int which = 0; which < 2; ++which) {
            const ScalarField& r01 = (which == 0) ? b.rho01_p : b.rho01_m;
            const ScalarField& g01 = (which == 0) ? b.g01_p : b.g01_m;
            const Profile1D& r11o = (which == 0) ? b.rho11_m : b.rho11_p;
            const Profile1D& g1o = (which == 0) ? b.g1_m : b.g1_p;
            for (int i = 0; i < dom.dims[0]; ++i) {
                const double lineval = r11o.v[i] + g1o.v[i];
                const double* rb = r01.values.data() + static_cast<std::size_t>(i) * slice;
                const double* gb = g01.values.data() + static_cast<std::size_t>(i) * slice;
                double* pb = prod.values.data() + static_cast<std::size_t>(i) * slice;
                for (std::size_t p = 0; p < slice; ++p)
                    pb[p] = (gb[p] + rb[p]) * lineval * inv2eps;
            }
            ScalarField lhs_id = n1_convolve(prod, *in.kernel);
            scale(lhs_id, c0);

            // RHS as in the measured route
            ScalarField rr(dom);
            for (std::size_t p = 0; p < rr.values.size(); ++p)
                rr.values[p] = b.rho1_p.values[p] * b.rho1_m.values[p];
            ScalarField rhs_field = n1_convolve(rr, *in.kernel);
            scale(rhs_field, 1.0 / (2.0 * in.ledger.eps0 * c0 * c0 * c0));

            const ScalarField& measured = (which == 0) ? r.resid_p : r.resid_m;
            for (std::size_t p = 0; p < lhs_id.values.size(); ++p) {
                double resid_id = lhs_id.values[p] - rhs_field.values[p];
                out.min_resid_identity = std::min(out.min_resid_identity, resid_id);
                double measured_lhs = measured.values[p] + rhs_field.values[p];
                out.noise = std::max(out.noise, std::abs(measured_lhs - lhs_id.values[p]));
            }
        }
    }
    out.tol = 4.0 * out.noise + 1e-14;
    out.pass = out.min_resid >= -out.tol;
    return out;
}

// ---------------------------------------------------------------------------
// Decay fits
// ---------------------------------------------------------------------------

DecayFit fit_decay(const std::vector<std::pair<double, double>>& series,
                   const std::string& quantity, double mu, double box_len, double target_alpha,
                   double t_lo_floor) {
    if (!(mu > 0.0)) throw std::invalid_argument("fit_decay: decay requires mu>0");
    DecayFit fit;
    fit.quantity = quantity;
    fit.target = target_alpha;
    fit.t_lo = std::max(1.0 / mu, t_lo_floor);
    fit.t_hi = (box_len / 8.0) * (box_len / 8.0) / mu;  // heat length L/8
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (auto [t, q] : series) {
        if (t < fit.t_lo || t > fit.t_hi || !(q > 0.0)) continue;
        double x = std::log1p(mu * t);
        double y = std::log(q);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 5)
        throw std::runtime_error("fit_decay: saturated (window [" + std::to_string(fit.t_lo) +
                                 "," + std::to_string(fit.t_hi) + "] holds < 5 samples)");
    double denom = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / denom;
    double icept = (sy - slope * sx) / n;
    double ss = 0.0;
    for (auto [t, q] : series) {
        if (t < fit.t_lo || t > fit.t_hi || !(q > 0.0)) continue;
        double x = std::log1p(mu * t);
        double r = std::log(q) - (slope * x + icept);
        ss += r * r;
    }
    fit.alpha = -slope;
    fit.points = n;
    fit.residual = std::sqrt(ss / n);
    if (n > 2) {
        double se = std::sqrt(ss / (n - 2) / (sxx - sx * sx / n));
        fit.ci95 = 1.96 * se;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// RunReport serialization
// ---------------------------------------------------------------------------

std::string RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["ledger"] = nlohmann::json::parse(ledger.to_json());
    j["c_local"] = c_local;
    j["c_f"] = c_f;
    j["comparison_max_excess"] = comparison_max_excess;
    j["comparison_tol"] = comparison_tol;
    j["comparison_advisory"] = comparison_advisory;
    j["ordered_at_zero"] = ordered_at_zero;
    j["hn_ratio_p"] = hn_ratio_p;
    j["hn_ratio_m"] = hn_ratio_m;
    j["supersolution_min"] = supersolution_min;
    j["supersolution_tol"] = supersolution_tol;
    j["failures"] = failures;
    nlohmann::ordered_json fits_j = nlohmann::json::array();
    for (const DecayFit& f : fits) {
        nlohmann::ordered_json e;
        e["quantity"] = f.quantity;
        e["t_lo"] = f.t_lo;
        e["t_hi"] = f.t_hi;
        e["alpha"] = f.alpha;
        e["target"] = f.target;
        e["residual"] = f.residual;
        e["ci95"] = f.ci95;
        e["points"] = f.points;
        fits_j.push_back(e);
    }
    j["decay_fits"] = fits_j;
    nlohmann::ordered_json recs = nlohmann::json::array();
    for (const TimeRecord& r : records) {
        nlohmann::ordered_json e;
        e["t"] = r.t;
        e["hn_p"] = r.hn_p;
        e["hn_m"] = r.hn_m;
        e["j_p"] = r.j_p;
        e["j_m"] = r.j_m;
        if (r.resid_local) e["resid_local"] = *r.resid_local;
        if (r.excess_comparison) e["excess_comparison"] = *r.excess_comparison;
        e["guard_ok"] = r.guard_ok;
        recs.push_back(e);
    }
    j["records"] = recs;
    return j.dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RunReport rep;
    rep.ledger = ConstantsLedger::from_json(j.at("ledger").dump());
    rep.c_local = j.value("c_local", 0.0);
    rep.c_f = j.value("c_f", 0.0);
    rep.comparison_max_excess = j.value("comparison_max_excess", 0.0);
    rep.comparison_tol = j.value("comparison_tol", 0.0);
    rep.comparison_advisory = j.value("comparison_advisory", false);
    rep.ordered_at_zero = j.value("ordered_at_zero", true);
    rep.hn_ratio_p = j.value("hn_ratio_p", 1.0);
    rep.hn_ratio_m = j.value("hn_ratio_m", 1.0);
    rep.supersolution_min = j.value("supersolution_min", 0.0);
    rep.supersolution_tol = j.value("supersolution_tol", 0.0);
    rep.failures = j.value("failures", std::vector<std::string>{});
    for (const auto& e : j.value("decay_fits", nlohmann::json::array())) {
        DecayFit f;
        f.quantity = e.value("quantity", "");
        f.t_lo = e.value("t_lo", 0.0);
        f.t_hi = e.value("t_hi", 0.0);
        f.alpha = e.value("alpha", 0.0);
        f.target = e.value("target", 0.0);
        f.residual = e.value("residual", 0.0);
        f.ci95 = e.value("ci95", 0.0);
        f.points = e.value("points", 0);
        rep.fits.push_back(f);
    }
    for (const auto& e : j.value("records", nlohmann::json::array())) {
        TimeRecord r;
        r.t = e.value("t", 0.0);
        r.hn_p = e.value("hn_p", 0.0);
        r.hn_m = e.value("hn_m", 0.0);
        r.j_p = e.value("j_p", 0.0);
        r.j_m = e.value("j_m", 0.0);
        if (e.contains("resid_local")) r.resid_local = e["resid_local"].get<double>();
        if (e.contains("excess_comparison"))
            r.excess_comparison = e["excess_comparison"].get<double>();
        r.guard_ok = e.value("guard_ok", true);
        rep.records.push_back(r);
    }
    return rep;
}

std::string RunReport::to_csv() const {
    std::ostringstream os;
    os << "t,hn_p,hn_m,j_p,j_m,resid_local,excess_comparison,guard_ok\n";
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const TimeRecord& r : records) {
        os << num(r.t) << ',' << num(r.hn_p) << ',' << num(r.hn_m) << ',' << num(r.j_p) << ','
           << num(r.j_m) << ',';
        if (r.resid_local) os << num(*r.resid_local);
        os << ',';
        if (r.excess_comparison) os << num(*r.excess_comparison);
        os << ',' << (r.guard_ok ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace mhdc
