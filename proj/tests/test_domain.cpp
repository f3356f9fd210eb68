#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mhdc/spectral.hpp"
#include "oracles.hpp"

using namespace mhdc;

TEST_CASE("make_domain validates its arguments") {
    DomainSpec dom = make_domain(2, 1, 16.0 * kPi, 128);
    CHECK(dom.len[0] == doctest::Approx(16.0 * kPi));
    CHECK(dom.len[1] == doctest::Approx(2.0 * kPi));
    CHECK(dom.points() == 128u * 128u);

    DomainSpec d3 = make_domain(3, 1, 16.0 * kPi, 64);
    CHECK(d3.points() == 64u * 64u * 64u);
    CHECK(d3.len[2] == doctest::Approx(2.0 * kPi));

    CHECK_THROWS(make_domain(2, 3, 16.0 * kPi, 128));  // k > d
    CHECK_THROWS(make_domain(4, 1, 16.0 * kPi, 128));
    CHECK_THROWS(make_domain(2, 1, 16.0 * kPi, 127));  // odd n
    CHECK_THROWS(make_domain(2, 1, 16.0 * kPi, 4));
    CHECK_THROWS(make_domain(2, 1, 4.0 * kPi, 128));   // box too short
}

TEST_CASE("spectral derivative is exact on single modes") {
    DomainSpec dom = make_domain(2, 1, 16.0 * kPi, 64);
    ScalarField f(dom), g3(dom);
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j) {
            f.at(i, j) = std::sin(dom.coord(0, i));
            g3.at(i, j) = std::sin(3.0 * dom.coord(1, j));
        }
    ScalarField df = derivative(f, 0, 1);
    double err = 0.0;
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j)
            err = std::max(err, std::abs(df.at(i, j) - std::cos(dom.coord(0, i))));
    CHECK(err <= 1e-12);

    ScalarField c(dom, 3.25);
    CHECK(field_linf(derivative(c, 0, 1)) <= 1e-12);

    ScalarField d2g = derivative(g3, 1, 2);
    err = 0.0;
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j)
            err = std::max(err, std::abs(d2g.at(i, j) + 9.0 * std::sin(3.0 * dom.coord(1, j))));
    CHECK(err <= 1e-10);
}

TEST_CASE("derivative commutes with grid translation") {
    DomainSpec dom = make_domain(2, 1, 16.0 * kPi, 64);
    std::mt19937_64 rng(7);
    ScalarField f = random_smooth_field(dom, 6, 1.0, rng);
    ScalarField df = derivative(f, 1, 1);
    // translate by one cell along axis 1, differentiate, translate back
    ScalarField ft(dom);
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j)
            ft.at(i, j) = f.at(i, (j + 1) % dom.dims[1]);
    ScalarField dft = derivative(ft, 1, 1);
    double err = 0.0, scal = field_linf(df) + 1e-300;
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j)
            err = std::max(err, std::abs(dft.at(i, j) - df.at(i, (j + 1) % dom.dims[1])));
    CHECK(err / scal <= 1e-12);
}

TEST_CASE("leray projection: fixed points, gradients, idempotence, contraction") {
    DomainSpec dom = make_domain(2, 1, 16.0 * kPi, 64);
    // already solenoidal field stays put
    VectorField u(dom);
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j) {
            u.comp[0].at(i, j) = std::sin(dom.coord(1, j));
            u.comp[1].at(i, j) = std::sin(dom.coord(0, i));
        }
    VectorField pu = leray_project(u);
    double err = 0.0;
    for (int c = 0; c < 2; ++c)
        for (std::size_t p = 0; p < pu.comp[c].values.size(); ++p)
            err = std::max(err, std::abs(pu.comp[c].values[p] - u.comp[c].values[p]));
    CHECK(err / (field_linf(u) + 1e-300) <= 1e-12);
    CHECK(solenoidal_defect(pu) <= 1e-10);

    // pure gradient maps to zero
    VectorField g(dom);
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j) {
            double x = dom.coord(0, i), y = dom.coord(1, j);
            // grad of sin(x1_scaled)*sin(x2) with x1 on the 2pi-compatible mode
            g.comp[0].at(i, j) = std::cos(x) * std::sin(y);
            g.comp[1].at(i, j) = std::sin(x) * std::cos(y);
        }
    VectorField pg = leray_project(g);
    CHECK(field_linf(pg) / field_linf(g) <= 1e-12);

    // idempotence + L2 contraction on random data
    std::mt19937_64 rng(3);
    VectorField w(dom);
    for (int c = 0; c < 2; ++c) w.comp[c] = random_smooth_field(dom, 8, 1.0, rng);
    VectorField pw = leray_project(w);
    VectorField ppw = leray_project(pw);
    double diff = 0.0;
    for (int c = 0; c < 2; ++c)
        for (std::size_t p = 0; p < pw.comp[c].values.size(); ++p)
            diff = std::max(diff, std::abs(ppw.comp[c].values[p] - pw.comp[c].values[p]));
    CHECK(diff / (field_linf(pw) + 1e-300) <= 1e-12);
    double n2w = 0.0, n2pw = 0.0;
    for (int c = 0; c < 2; ++c) {
        n2w += field_l2(w.comp[c]) * field_l2(w.comp[c]);
        n2pw += field_l2(pw.comp[c]) * field_l2(pw.comp[c]);
    }
    CHECK(n2pw <= n2w * (1.0 + 1e-12));
}

TEST_CASE("periodic_convolve: delta identity, zero, constant vs direct Riemann sum") {
    DomainSpec dom = make_domain(2, 1, 16.0 * kPi, 64);
    ScalarField ker = sample_radial(dom, [](double r) { return std::exp(-r * r); });
    ConvKernel ck = make_conv_kernel(ker);

    // one-hot spike of weight 1 reproduces the kernel translated to the node
    ScalarField spike(dom);
    int si = 10, sj = 20;
    spike.at(si, sj) = 1.0 / dom.cell_volume();
    ScalarField out = periodic_convolve(spike, ck);
    double err = 0.0;
    for (int i = 0; i < dom.dims[0]; ++i)
        for (int j = 0; j < dom.dims[1]; ++j) {
            // kernel centered at (si,sj): value ker(|x - x_s|) with wrap
            int di = (i - si + dom.dims[0] / 2 + 4 * dom.dims[0]) % dom.dims[0];
            int dj = (j - sj + dom.dims[1] / 2 + 4 * dom.dims[1]) % dom.dims[1];
            err = std::max(err, std::abs(out.at(i, j) - ker.at(di, dj)));
        }
    CHECK(err <= 1e-10);

    // zero in, zero out
    ScalarField zero(dom);
    CHECK(field_linf(periodic_convolve(zero, ck)) == 0.0);

    // all ones -> constant field equal to the direct Riemann sum of the kernel
    ScalarField ones(dom, 1.0);
    ScalarField c = periodic_convolve(ones, ck);
    double direct = 0.0;
    for (double v : ker.values) direct += v;
    direct *= dom.cell_volume();
    CHECK(field_min(c) == doctest::Approx(direct).epsilon(1e-10));
    CHECK(field_max(c) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("periodic_convolve is symmetric for even kernels") {
    DomainSpec dom = make_domain(2, 1, 16.0 * kPi, 32);
    ScalarField ker = sample_radial(dom, [](double r) { return 1.0 / (1.0 + r * r * r); });
    ConvKernel ck = make_conv_kernel(ker);
    std::mt19937_64 rng(11);
    ScalarField f = random_smooth_field(dom, 5, 1.0, rng);
    ScalarField g = random_smooth_field(dom, 5, 1.0, rng);
    double a = inner(periodic_convolve(f, ck), g);
    double b = inner(f, periodic_convolve(g, ck));
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
}

TEST_CASE("convolution against the single-point direct oracle") {
    DomainSpec dom = make_domain(2, 1, 16.0 * kPi, 48);
    std::mt19937_64 rng(5);
    ScalarField f = random_smooth_field(dom, 5, 1.0, rng);
    for (double& v : f.values) v = v * v;  // nonnegative
    auto ker = [](double r) { return std::exp(-0.7 * r * r); };
    ConvKernel ck = make_conv_kernel(sample_radial(dom, ker));
    ScalarField conv = periodic_convolve(f, ck);
    for (auto [i, j] : {std::pair{3, 40}, std::pair{17, 5}, std::pair{30, 30}}) {
        double direct = test::direct_radial_convolution_at(f, ker, {i, j, 0});
        CHECK(conv.at(i, j) == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("boundary guard flags edge-supported data") {
    DomainSpec dom = make_domain(2, 1, 16.0 * kPi, 64);
    VectorField zp(dom), zm(dom);
    zp.comp[0].at(dom.dims[0] / 2, 5) = 1.0;  // center in x0: fine
    CHECK(boundary_guard(zp, zm).ok);
    zp.comp[0].at(0, 5) = 1.0;  // at the R-axis edge: flagged
    CHECK_FALSE(boundary_guard(zp, zm).ok);
}

TEST_CASE("parallel_for covers the range exactly once in disjoint chunks") {
    std::vector<int> hits(100000, 0);
    parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) hits[p] += 1;
    });
    bool all_once = true;
    for (int h : hits)
        if (h != 1) all_once = false;
    CHECK(all_once);
    CHECK(thread_cap() >= 1);

    // small counts run inline
    int calls = 0;
    parallel_for(16, [&](std::size_t b, std::size_t e) {
        ++calls;
        CHECK(b == 0);
        CHECK(e == 16);
    });
    CHECK(calls == 1);
}
