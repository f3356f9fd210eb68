#include "mhdc/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace mhdc {

static void fill_geometry(DomainSpec& dom) {
    for (int a = 0; a < dom.d; ++a) {
        dom.len[a] = (a < dom.k) ? dom.box_len : 2.0 * kPi;
        dom.dims[a] = dom.n;
    }
}

DomainSpec make_domain(int d, int k, double box_len, int n) {
    if (d != 2 && d != 3) throw std::invalid_argument("make_domain: d must be 2 or 3");
    if (k < 1 || k > d) throw std::invalid_argument("make_domain: k must satisfy 1 <= k <= d");
    if (n < 8 || n % 2 != 0) throw std::invalid_argument("make_domain: n must be even and >= 8");
    if (!(box_len >= 8.0 * kPi)) throw std::invalid_argument("make_domain: box length must be >= 8*pi");
    DomainSpec dom;
    dom.d = d;
    dom.k = k;
    dom.box_len = box_len;
    dom.n = n;
    fill_geometry(dom);
    return dom;
}

DomainSpec doubled_domain(const DomainSpec& dom) {
    DomainSpec out = dom;
    out.box_len = 2.0 * dom.box_len;
    out.n = 2 * dom.n;
    for (int a = 0; a < dom.d; ++a) {
        out.len[a] = 2.0 * dom.len[a];
        out.dims[a] = 2 * dom.dims[a];
    }
    return out;
}

std::string DomainSpec::hash() const {
    // FNV-1a over the geometry words.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<std::uint64_t>(d));
    mix(static_cast<std::uint64_t>(k));
    mix(static_cast<std::uint64_t>(n));
    std::uint64_t bits;
    static_assert(sizeof(double) == 8);
    std::memcpy(&bits, &box_len, 8);
    mix(bits);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

double field_min(const ScalarField& f) {
    double m = f.values.empty() ? 0.0 : f.values[0];
    for (double v : f.values) m = std::min(m, v);
    return m;
}

double field_max(const ScalarField& f) {
    double m = f.values.empty() ? 0.0 : f.values[0];
    for (double v : f.values) m = std::max(m, v);
    return m;
}

double field_linf(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

double field_mean(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return f.values.empty() ? 0.0 : s / static_cast<double>(f.values.size());
}

double field_integral(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.domain.cell_volume();
}

double field_l2(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(s * f.domain.cell_volume());
}

double field_linf(const VectorField& u) {
    double m = 0.0;
    const std::size_t np = u.domain.points();
    for (std::size_t p = 0; p < np; ++p) {
        double s = 0.0;
        for (int c = 0; c < u.domain.d; ++c) s += u.comp[c].values[p] * u.comp[c].values[p];
        m = std::max(m, s);
    }
    return std::sqrt(m);
}

bool field_finite(const ScalarField& f) {
    for (double v : f.values)
        if (!std::isfinite(v)) return false;
    return true;
}

bool field_finite(const VectorField& u) {
    for (const auto& c : u.comp)
        if (!field_finite(c)) return false;
    return true;
}

void scale(ScalarField& f, double s) {
    for (double& v : f.values) v *= s;
}

void scale(VectorField& u, double s) {
    for (auto& c : u.comp) scale(c, s);
}

void axpy(ScalarField& y, double a, const ScalarField& x) {
    if (y.values.size() != x.values.size()) throw std::invalid_argument("axpy: size mismatch");
    for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
}

double inner(const ScalarField& f, const ScalarField& g) {
    if (f.values.size() != g.values.size()) throw std::invalid_argument("inner: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += f.values[i] * g.values[i];
    return s * f.domain.cell_volume();
}

ScalarField random_smooth_field(const DomainSpec& dom, int kmax_index, double amplitude,
                                std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    struct Mode {
        std::array<int, 3> m;
        double ac, as;
    };
    std::vector<Mode> modes;
    std::array<int, 3> m{0, 0, 0};
    // Half-space of integer modes, deterministic order.
    for (int m0 = 0; m0 <= kmax_index; ++m0)
        for (int m1 = (dom.d > 1 ? -kmax_index : 0); m1 <= (dom.d > 1 ? kmax_index : 0); ++m1)
            for (int m2 = (dom.d > 2 ? -kmax_index : 0); m2 <= (dom.d > 2 ? kmax_index : 0); ++m2) {
                if (m0 == 0 && (m1 < 0 || (m1 == 0 && m2 < 0))) continue;
                if (m0 == 0 && m1 == 0 && m2 == 0) continue;
                m = {m0, m1, m2};
                double w = std::exp(-0.5 * (m0 * m0 + m1 * m1 + m2 * m2) /
                                    (0.25 * kmax_index * kmax_index + 1.0));
                modes.push_back({m, w * normal(rng), w * normal(rng)});
            }
    ScalarField out(dom);
    std::array<int, 3> id{0, 0, 0};
    const std::size_t np = dom.points();
    for (std::size_t p = 0; p < np; ++p) {
        double x[3] = {0, 0, 0};
        for (int a = 0; a < dom.d; ++a) x[a] = dom.coord(a, id[a]) * 2.0 * kPi / dom.len[a];
        double s = 0.0;
        for (const Mode& md : modes) {
            double phase = md.m[0] * x[0] + md.m[1] * x[1] + md.m[2] * x[2];
            s += md.ac * std::cos(phase) + md.as * std::sin(phase);
        }
        out.values[p] = amplitude * s;
        for (int a = dom.d - 1; a >= 0; --a) {
            if (++id[a] < dom.dims[a]) break;
            id[a] = 0;
        }
    }
    return out;
}

int thread_cap() {
    static int cap = [] {
        if (const char* env = std::getenv("MHDC_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        unsigned hc = std::thread::hardware_concurrency();
        return hc ? static_cast<int>(hc) : 1;
    }();
    return cap;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn) {
    const int nt = thread_cap();
    if (nt <= 1 || count < 1 << 14) {
        fn(0, count);
        return;
    }
    const std::size_t chunk = (count + nt - 1) / nt;
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) {
        std::size_t b = t * chunk, e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, b, e);
    }
    for (auto& th : pool) th.join();
}

BoundaryGuard boundary_guard(const VectorField& zp, const VectorField& zm) {
    const DomainSpec& dom = zp.domain;
    BoundaryGuard g;
    const std::size_t np = dom.points();
    std::array<int, 3> id{0, 0, 0};
    for (std::size_t p = 0; p < np; ++p) {
        double s = 0.0;
        for (int c = 0; c < dom.d; ++c) {
            s += zp.comp[c].values[p] * zp.comp[c].values[p];
            s += zm.comp[c].values[p] * zm.comp[c].values[p];
        }
        s = std::sqrt(s);
        g.global_max = std::max(g.global_max, s);
        bool near_edge = false;
        for (int a = 0; a < dom.k; ++a) {
            double x = dom.coord(a, id[a]);
            if (0.5 * dom.len[a] - std::abs(x) <= 2.0) near_edge = true;
        }
        if (near_edge) g.band_max = std::max(g.band_max, s);
        for (int a = dom.d - 1; a >= 0; --a) {
            if (++id[a] < dom.dims[a]) break;
            id[a] = 0;
        }
    }
    g.ok = (g.band_max <= 1e-6 * g.global_max) || g.global_max == 0.0;
    return g;
}

}  // namespace mhdc
