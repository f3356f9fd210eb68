#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <memory>
#include <random>

#include "mhdc/verifier.hpp"
#include "oracles.hpp"

using namespace mhdc;

namespace {

DomainSpec small2d(int n = 64) { return make_domain(2, 1, 16.0 * kPi, n); }

VectorField stream_bump(const DomainSpec& dom, double cx, double w, double amp) {
    ScalarField psi(dom);
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j) {
            double x = dom.coord(0, i) - cx, y = dom.coord(1, j);
            psi.at(i, j) = amp * std::exp(-0.5 * (x * x + y * y) / (w * w));
        }
    VectorField z(dom);
    ScalarField d1 = derivative(psi, 1, 1), d0 = derivative(psi, 0, 1);
    axpy(z.comp[0], 1.0, d1);
    axpy(z.comp[1], -1.0, d0);
    return leray_project(z);
}

}  // namespace

TEST_CASE("tolerance calibration on the linear configuration") {
    DomainSpec dom = small2d();
    VectorField zp = stream_bump(dom, 0.0, 2.0, 0.4);
    VectorField zero(dom);
    FieldState lin = make_state(zp, zero, 0.1, 0.0);
    TolerancePolicy pol = calibrate_tolerance(lin, 2, 0.05, 0.3);
    CHECK(pol.rel_local_energy > 0.0);
    CHECK(pol.rel_local_energy < 1e-2);  // the linear pathway is nearly exact
    CHECK(pol.rel_comparison > 0.0);
    CHECK(pol.rel_comparison < 1e-4);
    CHECK(pol.h == doctest::Approx(dom.min_spacing()));
    // rejects configurations with a nonlinear partner
    CHECK_THROWS(calibrate_tolerance(make_state(zp, zp, 0.1, 0.0), 2, 0.05, 0.3));
}

TEST_CASE("local energy checker: zero data and the linear (F == 0) pathway") {
    DomainSpec dom = small2d();
    VectorField zero(dom);
    LocalEnergyChecker lez(2, 0.1, 1.0, nullptr);
    FieldState zs = make_state(zero, zero, 0.1, 0.0);
    for (int s = 0; s < 3; ++s) {
        zs.t = 0.05 * s;
        lez.add_sample(zs);
    }
    auto rz = lez.finish();
    CHECK(rz.interior_samples == 1);
    CHECK(rz.lhs_where_f_small <= 1e-12);

    // z- = 0: F vanishes identically and the regularized LHS stays within the
    // discretization noise of the dissipative linear flow
    VectorField zp = stream_bump(dom, 0.0, 2.0, 0.4);
    FieldState lin = make_state(zp, zero, 0.1, 0.0);
    LocalEnergyChecker le(2, 0.1, 1.0, nullptr);
    double stride = 0.05;
    double dt = stride / std::ceil(stride / (0.45 * cfl_limit(lin)));
    int per = static_cast<int>(std::round(stride / dt));
    SpectralState st = to_spectral(lin);
    for (int s = 0; s < 7; ++s) {
        le.add_sample(st.to_physical());
        for (int q = 0; q < per; ++q) step_inplace(st, dt);
    }
    auto res = le.finish();
    CHECK(res.interior_samples == 5);
    CHECK(res.c_min == 0.0);  // F has no support: no ratio contributes
    CHECK(res.scale > 0.0);
    CHECK(res.lhs_where_f_small <= 1e-4 * res.scale);
}

TEST_CASE("check_f_estimate: zero for the linear family, scale invariant") {
    DomainSpec dom = small2d();
    auto kernel = std::make_shared<KernelSample>(build_n1_kernel(dom));
    VectorField zero(dom);
    VectorField zp = stream_bump(dom, +3.0, 2.0, 0.5);
    FieldState lin = make_state(zp, zero, 0.1, 0.0);
    CHECK(check_f_estimate(lin, 2, *kernel) == 0.0);

    VectorField zm = stream_bump(dom, -3.0, 2.0, 0.5);
    FieldState st = make_state(zp, zm, 0.1, 0.0);
    double cf = check_f_estimate(st, 2, *kernel);
    CHECK(cf > 0.0);
    CHECK(std::isfinite(cf));
    // both sides quadratic: scaling z by lambda leaves the ratio invariant
    VectorField zp2 = zp, zm2 = zm;
    scale(zp2, 0.01);
    scale(zm2, 0.01);
    double cf2 = check_f_estimate(make_state(zp2, zm2, 0.1, 0.0), 2, *kernel);
    CHECK(cf2 == doctest::Approx(cf).epsilon(1e-6));
}

TEST_CASE("comparison checker on zero data and a linear run") {
    DomainSpec dom = small2d();
    auto kernel = std::make_shared<KernelSample>(build_n1_kernel(dom));
    EnergyDensity zero_den;
    zero_den.rho_p = ScalarField(dom);
    zero_den.rho_m = ScalarField(dom);
    ConstantsLedger led;
    led.c0 = estimate_c0(*kernel, zero_den);
    led.c1 = 2.0;
    led.c_theta = kPi * kPi;
    led.c_f = 1.0;
    led.derive_thresholds();

    // zero data: 0 <= rho1 trivially, hn ratio reported as 1
    ComparisonInputs in0 = build_comparison_inputs(zero_den, led, kernel, 0.1);
    ComparisonChecker chk0(in0, 2);
    VectorField zero(dom);
    FieldState zs = make_state(zero, zero, 0.1, 0.0);
    chk0.add_sample(zs);
    zs.t = 0.5;
    chk0.add_sample(zs);
    CHECK(chk0.result().max_excess <= 0.0);
    CHECK(chk0.result().hn_ratio_p == 1.0);
    CHECK(chk0.result().ordered_at_zero);

    // z- = 0 linear run: rho+ evolves linearly and stays under rho+1
    VectorField zp = stream_bump(dom, 0.0, 2.0, 0.3);
    FieldState lin = make_state(zp, zero, 0.1, 0.0);
    EnergyDensity den0 = rho(lin, 2);
    auto [jp, jm] = j_functional(den0);
    (void)jm;
    double lambda = 0.9 * led.eps1 / jp;
    VectorField zps = zp;
    scale(zps, lambda);
    FieldState lin_small = make_state(zps, zero, 0.1, 0.0);
    EnergyDensity den_small = rho(lin_small, 2);
    ComparisonInputs in = build_comparison_inputs(den_small, led, kernel, 0.1);
    ComparisonChecker chk(in, 2);
    SpectralState st = to_spectral(lin_small);
    double dt = 0.45 * cfl_limit(lin_small);
    for (int s = 0; s < 5; ++s) {
        chk.add_sample(st.to_physical());
        for (int q = 0; q < 10; ++q) step_inplace(st, dt);
    }
    const auto& res = chk.result();
    CHECK(res.ordered_at_zero);
    CHECK(res.max_excess <= 1e-8 * res.rho1_scale);
    CHECK(res.hn_ratio_p <= 1.0 + 1e-6);  // pure decay for mu > 0
    CHECK_FALSE(res.advisory);
}

TEST_CASE("fit_decay: errors and synthetic exponent recovery") {
    std::vector<std::pair<double, double>> series;
    double mu = 0.2, L = 16.0 * kPi;
    for (double t = 0.0; t <= 150.0; t += 1.0)
        series.emplace_back(t, 2.7 * std::pow(1.0 + mu * t, -0.5));
    CHECK_THROWS_AS(fit_decay(series, "w1inf", 0.0, L, 0.5), std::invalid_argument);

    DecayFit fit = fit_decay(series, "w1inf", mu, L, 0.5);
    CHECK(fit.alpha == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(fit.t_lo == doctest::Approx(1.0 / mu));
    CHECK(fit.residual <= 1e-12);
    CHECK(fit.points > 5);

    // saturated window: mu so small that 1/mu exceeds the series span
    CHECK_THROWS_AS(fit_decay(series, "w1inf", 1e-4, L, 0.5), std::runtime_error);
}

TEST_CASE("run report: JSON round trip and CSV shape") {
    RunReport rep;
    rep.ledger.c0 = 9.0;
    rep.ledger.c1 = 2.0;
    rep.ledger.c_theta = kPi * kPi;
    rep.ledger.c_f = 1.25;
    rep.ledger.derive_thresholds();
    rep.c_local = 1.75;
    rep.c_f = 1.25;
    rep.comparison_max_excess = -1e-9;
    rep.comparison_tol = 1e-8;
    rep.hn_ratio_p = 1.002;
    rep.hn_ratio_m = 1.003;
    rep.supersolution_min = -1e-12;
    rep.supersolution_tol = 1e-10;
    DecayFit f;
    f.quantity = "w1inf";
    f.alpha = 0.48;
    f.target = 0.5;
    f.t_lo = 5;
    f.t_hi = 100;
    f.points = 40;
    rep.fits.push_back(f);
    TimeRecord r;
    r.t = 0.5;
    r.hn_p = 1.5e-3;
    r.hn_m = 1.4e-3;
    r.j_p = 2e-8;
    r.j_m = 3e-8;
    r.excess_comparison = -2.5e-10;
    r.guard_ok = true;
    rep.records.push_back(r);
    r.t = 1.0;
    r.resid_local = 4.2e-7;
    rep.records.push_back(r);

    std::string j1 = rep.to_json();
    RunReport back = RunReport::from_json(j1);
    CHECK(back.to_json() == j1);  // lossless round trip
    CHECK(back.records.size() == 2);
    CHECK(back.records[1].resid_local.has_value());
    CHECK(*back.records[1].resid_local == doctest::Approx(4.2e-7));
    CHECK_FALSE(back.records[0].resid_local.has_value());
    CHECK(back.fits.size() == 1);
    CHECK(back.fits[0].alpha == doctest::Approx(0.48));

    std::string csv = rep.to_csv();
    CHECK(csv.substr(0, csv.find('\n')) ==
          "t,hn_p,hn_m,j_p,j_m,resid_local,excess_comparison,guard_ok");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
