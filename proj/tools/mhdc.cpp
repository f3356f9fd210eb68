/// @file mhdc.cpp
/// @brief Command-line front end: simulate, construct, verify, decay,
/// estimate-constants, report.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhdc/io.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int d = -1, k = -1, n = -1, order_n = -1, sample_count = -1;
    double box_length = -1.0, mu = -1.0, dt = -1.0, t_end = -1.0;
    double delta = -1.0, big_r = -1.0, amplitude = -1.0, width = -1.0, offset = -1e300;
    double shear_frac = -1.0, le_window = -1.0, le_stride = -1.0;
    std::string family;
    bool auto_small = false;
    long long seed = -1;
    bool resolution_check = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config_path, "config file (key=value lines)");
    app->add_option("--out", f.out_dir, "output directory");
    app->add_option("--d", f.d, "spatial dimension (2 or 3)");
    app->add_option("--k", f.k, "number of unbounded directions");
    app->add_option("--n", f.n, "grid points per axis");
    app->add_option("--box-length", f.box_length, "length of each R axis (>= 8*pi)");
    app->add_option("--mu", f.mu, "diffusivity");
    app->add_option("--order-N", f.order_n, "derivative order N of the energy densities");
    app->add_option("--dt", f.dt, "time step (0 = auto)");
    app->add_option("--t-end", f.t_end, "final time");
    app->add_option("--sample-count", f.sample_count, "number of coarse samples");
    app->add_option("--le-window", f.le_window, "dense local-energy window length");
    app->add_option("--le-stride", f.le_stride, "dense sampling stride");
    app->add_option("--family", f.family, "initial data family");
    app->add_option("--delta", f.delta, "cl_power decay exponent");
    app->add_option("--big-r", f.big_r, "hxy_log scale R");
    app->add_option("--amplitude", f.amplitude, "data amplitude (sup norm)");
    app->add_option("--width", f.width, "bump width");
    app->add_option("--offset", f.offset, "bump center offset along axis 0");
    app->add_option("--shear-frac", f.shear_frac, "weight of the shear component");
    app->add_flag("--auto-small", f.auto_small, "rescale data so J(0) <= 0.9*eps1");
    app->add_option("--seed", f.seed, "random seed");
    app->add_flag("--resolution-check", f.resolution_check, "repeat at n and 2n");
}

mhdc::RunConfig build_config(const CommonFlags& f) {
    mhdc::RunConfig cfg;
    if (!f.config_path.empty()) cfg = mhdc::RunConfig::from_file(f.config_path);
    if (f.d > 0) cfg.d = f.d;
    if (f.k > 0) cfg.k = f.k;
    if (f.n > 0) cfg.n = f.n;
    if (f.box_length > 0) cfg.box_len = f.box_length;
    if (f.mu >= 0) cfg.mu = f.mu;
    if (f.order_n >= 0) cfg.order_n = f.order_n;
    if (f.dt >= 0) cfg.dt = f.dt;
    if (f.t_end > 0) cfg.t_end = f.t_end;
    if (f.sample_count > 0) cfg.sample_count = f.sample_count;
    if (f.le_window >= 0) cfg.le_window = f.le_window;
    if (f.le_stride > 0) cfg.le_stride = f.le_stride;
    if (!f.family.empty()) cfg.set("family", f.family);
    if (f.delta > 0) cfg.delta = f.delta;
    if (f.big_r > 0) cfg.big_r = f.big_r;
    if (f.amplitude >= 0) cfg.amplitude = f.amplitude;
    if (f.width > 0) cfg.width = f.width;
    if (f.offset > -1e299) cfg.offset = f.offset;
    if (f.shear_frac >= 0) cfg.shear_frac = f.shear_frac;
    if (f.auto_small) cfg.auto_small = true;
    if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mhdc: pseudo-spectral Elsasser MHD laboratory with comparison-principle checks"};
    app.require_subcommand(1);

    CommonFlags fs_sim, fs_con, fs_ver, fs_dec, fs_est, fs_rep;
    std::vector<double> bundle_times;

    CLI::App* sim = app.add_subcommand("simulate", "integrate the Elsasser system");
    add_common(sim, fs_sim);
    CLI::App* con = app.add_subcommand("construct", "build comparison bundles");
    add_common(con, fs_con);
    con->add_option("--times", bundle_times, "bundle snapshot times");
    CLI::App* ver = app.add_subcommand("verify", "run every inequality check");
    add_common(ver, fs_ver);
    CLI::App* dec = app.add_subcommand("decay", "fit time-decay exponents");
    add_common(dec, fs_dec);
    CLI::App* est = app.add_subcommand("estimate-constants", "measure C0, C1, C_theta, eps0, eps1");
    add_common(est, fs_est);
    CLI::App* repc = app.add_subcommand("report", "summarize an existing run directory");
    repc->add_option("--out", fs_rep.out_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return mhdc::run_simulate(build_config(fs_sim), fs_sim.out_dir);
        if (con->parsed())
            return mhdc::run_construct(build_config(fs_con), fs_con.out_dir, bundle_times);
        if (ver->parsed())
            return mhdc::run_verify(build_config(fs_ver), fs_ver.out_dir, fs_ver.resolution_check);
        if (dec->parsed()) return mhdc::run_decay(build_config(fs_dec), fs_dec.out_dir);
        if (est->parsed())
            return mhdc::run_estimate_constants(build_config(fs_est), fs_est.out_dir,
                                                fs_est.resolution_check);
        if (repc->parsed()) return mhdc::run_report(fs_rep.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
