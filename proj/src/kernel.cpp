#include "mhdc/kernel.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mhdc {

double n1_eval(int d, double r) {
    return 1.0 / (1.0 + std::pow(std::abs(r), d + 1));
}

double n1_mass_r2_closed_form() {
    return 4.0 * kPi * kPi / (3.0 * std::sqrt(3.0));
}

KernelSample build_n1_kernel(const DomainSpec& field_domain) {
    KernelSample ks;
    ks.field_domain = field_domain;
    ks.padded_domain = doubled_domain(field_domain);
    const int d = field_domain.d;
    ks.values = sample_radial(ks.padded_domain, [d](double r) { return n1_eval(d, r); });
    ks.l1_mass = field_integral(ks.values);
    // Tail beyond the inscribed ball of the padded box: the surface integral
    // of r^{-(d+1)} gives |S^{d-1}| / R with R = min half-extent.
    double rmin = 0.5 * ks.padded_domain.len[0];
    for (int a = 1; a < d; ++a) rmin = std::min(rmin, 0.5 * ks.padded_domain.len[a]);
    double sphere = (d == 2) ? 2.0 * kPi : 4.0 * kPi;
    ks.tail_mass = sphere / rmin;
    ks.conv = make_conv_kernel(ks.values, ks.tail_mass / (ks.l1_mass + ks.tail_mass), 1.0);
    return ks;
}

namespace {

// Embed f (field box) centered into the padded box.
ScalarField embed(const ScalarField& f, const DomainSpec& padded) {
    const DomainSpec& dom = f.domain;
    ScalarField out(padded);
    std::array<int, 3> id{0, 0, 0};
    const std::size_t np = dom.points();
    for (std::size_t p = 0; p < np; ++p) {
        std::size_t q = 0;
        for (int a = 0; a < dom.d; ++a) q = q * padded.dims[a] + (id[a] + dom.dims[a] / 2);
        out.values[q] = f.values[p];
        for (int a = dom.d - 1; a >= 0; --a) {
            if (++id[a] < dom.dims[a]) break;
            id[a] = 0;
        }
    }
    return out;
}

ScalarField crop(const ScalarField& g, const DomainSpec& dom) {
    const DomainSpec& padded = g.domain;
    ScalarField out(dom);
    std::array<int, 3> id{0, 0, 0};
    const std::size_t np = dom.points();
    for (std::size_t p = 0; p < np; ++p) {
        std::size_t q = 0;
        for (int a = 0; a < dom.d; ++a) q = q * padded.dims[a] + (id[a] + dom.dims[a] / 2);
        out.values[p] = g.values[q];
        for (int a = dom.d - 1; a >= 0; --a) {
            if (++id[a] < dom.dims[a]) break;
            id[a] = 0;
        }
    }
    return out;
}

}  // namespace

ScalarField n1_convolve(const ScalarField& f, const KernelSample& kernel) {
    if (!(f.domain == kernel.field_domain))
        throw std::invalid_argument("n1_convolve: field lives on a different grid");
    ScalarField padded = embed(f, kernel.padded_domain);
    ScalarField conv = periodic_convolve(padded, kernel.conv);
    return crop(conv, kernel.field_domain);
}

double estimate_c0(const KernelSample& kernel, const EnergyDensity& rho0) {
    const DomainSpec& dom = kernel.field_domain;
    // N1 on the field box and its self-convolution there.
    const int d = dom.d;
    ScalarField n1_box = sample_radial(dom, [d](double r) { return n1_eval(d, r); });
    ScalarField n1n1 = n1_convolve(n1_box, kernel);

    double c_lower = 0.0;  // max N1/(N1*N1)
    double c_upper = 0.0;  // max (N1*N1)/N1
    for (std::size_t p = 0; p < n1_box.values.size(); ++p) {
        double a = n1_box.values[p], b = n1n1.values[p];
        if (!(b > 0.0))
            throw std::runtime_error("estimate_c0: N1*N1 not positive on the grid "
                                     "(truncation too small)");
        c_lower = std::max(c_lower, a / b);
        c_upper = std::max(c_upper, b / a);
    }

    double c_rho = 0.0;
    for (int which = 0; which < 2; ++which) {
        const ScalarField& r0 = (which == 0) ? rho0.rho_p : rho0.rho_m;
        if (field_linf(r0) == 0.0) continue;  // vacuous condition for zero data
        ScalarField rn = n1_convolve(r0, kernel);
        for (std::size_t p = 0; p < r0.values.size(); ++p) {
            if (r0.values[p] <= 0.0) continue;
            if (!(rn.values[p] > 0.0))
                throw std::runtime_error("estimate_c0: rho*N1 vanishes where rho > 0");
            c_rho = std::max(c_rho, r0.values[p] / rn.values[p]);
        }
    }

    double c = std::max(std::max(c_lower, c_upper), std::max(c_rho, kernel.l1_mass));
    c = std::max(c, 1.0 + 1e-6);
    if (!std::isfinite(c)) throw std::runtime_error("estimate_c0: unbounded ratio");
    return 1.05 * c;  // safety margin
}

double min_max_split_check(const DomainSpec& dom, int sample_count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int d = dom.d;
    double worst = 0.0;
    for (int s = 0; s < sample_count; ++s) {
        double X[3], Y[3];
        double rx2 = 0.0, ry2 = 0.0, rxy2 = 0.0;
        for (int a = 0; a < d; ++a) {
            double half = 0.5 * dom.len[a];
            X[a] = (2.0 * unif(rng) - 1.0) * half;
            Y[a] = (2.0 * unif(rng) - 1.0) * half;
            rx2 += X[a] * X[a];
            ry2 += Y[a] * Y[a];
            rxy2 += (X[a] - Y[a]) * (X[a] - Y[a]);
        }
        double num = std::min(n1_eval(d, std::sqrt(ry2)), n1_eval(d, std::sqrt(rxy2)));
        double ratio = num / n1_eval(d, std::sqrt(rx2));
        worst = std::max(worst, ratio);
    }
    if (!std::isfinite(worst)) throw std::runtime_error("min_max_split_check: unbounded ratio");
    return worst;
}

// ---------------------------------------------------------------------------
// ConstantsLedger
// ---------------------------------------------------------------------------

void ConstantsLedger::derive_thresholds() {
    eps0 = 1.0 / (2.0 * c0 * c0 * c0 * c1);
    eps1 = eps0 / (2.0 * c0 * c0);
}

void ConstantsLedger::validate() const {
    auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!(c0 > 1.0)) throw std::runtime_error("ledger: C0 must exceed 1");
    if (!pos(c1) || !pos(c_theta) || !pos(eps0) || !pos(eps1) || !pos(c_f))
        throw std::runtime_error("ledger: constants must be finite and positive");
    double e0 = 1.0 / (2.0 * c0 * c0 * c0 * c1);
    if (std::abs(eps0 - e0) > 1e-12 * e0) throw std::runtime_error("ledger: eps0 inconsistent");
    double e1 = eps0 / (2.0 * c0 * c0);
    if (std::abs(eps1 - e1) > 1e-12 * e1) throw std::runtime_error("ledger: eps1 inconsistent");
}

std::string ConstantsLedger::to_json() const {
    nlohmann::ordered_json j;
    auto entry = [&](const char* key, double v) {
        nlohmann::ordered_json e;
        e["value"] = v;
        auto it = provenance.find(key);
        e["provenance"] = (it != provenance.end()) ? it->second : "unspecified";
        e["domain_hash"] = domain_hash;
        j[key] = e;
    };
    entry("c0", c0);
    entry("c1", c1);
    entry("c_theta", c_theta);
    entry("eps0", eps0);
    entry("eps1", eps1);
    entry("c_f", c_f);
    return j.dump(2);
}

ConstantsLedger ConstantsLedger::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ConstantsLedger led;
    auto get = [&](const char* key, double& v) {
        v = j.at(key).at("value").get<double>();
        led.provenance[key] = j.at(key).value("provenance", "unspecified");
        led.domain_hash = j.at(key).value("domain_hash", "");
    };
    get("c0", led.c0);
    get("c1", led.c1);
    get("c_theta", led.c_theta);
    get("eps0", led.eps0);
    get("eps1", led.eps1);
    get("c_f", led.c_f);
    return led;
}

}  // namespace mhdc
