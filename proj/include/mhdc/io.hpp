/// @file io.hpp
/// @brief Run configuration, initial-data generators, array persistence, and
/// the command-line pipelines.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mhdc/verifier.hpp"

namespace mhdc {

// ---------------------------------------------------------------------------
// Configuration: flat key=value text, typed parsing, unknown keys rejected.
// ---------------------------------------------------------------------------

struct RunConfig {
    int d = 2;
    int k = 1;
    int n = 256;
    double box_len = 16.0 * kPi;
    double mu = 0.05;
    int order_n = 3;       // N in the energy densities (> d/2 + 1)
    double dt = 0.0;       // 0 = auto (0.45 * CFL limit at t = 0)
    double t_end = 1.0;
    int sample_count = 20;
    double le_window = 0.0;   // dense local-energy window (0 disables)
    double le_stride = 0.05;
    std::string family = "gaussian_bump";  // cl_power|hxy_log|gaussian_bump|alfven_linear
    double delta = 2.0;       // cl_power decay exponent (> 1)
    double big_r = 100.0;     // hxy_log scale (>= 100)
    double amplitude = 0.1;
    double width = 4.0;       // bump width / support radius
    double offset = 0.0;      // z+ centered at +offset, z- at -offset (axis 0)
    double shear_frac = 0.5;  // weight of the 1-D shear component
    bool auto_small = false;
    std::uint64_t seed = 1;

    static RunConfig from_string(const std::string& text);
    static RunConfig from_file(const std::filesystem::path& p);
    std::string to_string() const;  // canonical serialization (hash input)
    void set(const std::string& key, const std::string& value);  // typed; throws on unknown key
    std::string hash() const;

    DomainSpec domain() const { return make_domain(d, k, box_len, n); }
};

// ---------------------------------------------------------------------------
// Array container: "MHDC" magic, version, f64 little-endian payload.
// ---------------------------------------------------------------------------

struct ArrayContainer {
    std::uint16_t version = 1;
    std::vector<std::uint64_t> dims;
    std::vector<std::string> labels;  // one per axis
    std::vector<double> payload;      // row-major
};

/// Atomic write (temp + rename).  Explicit little-endian codec.
void save_array(const std::filesystem::path& p, const ArrayContainer& c);
ArrayContainer load_array(const std::filesystem::path& p);

ArrayContainer container_from(const ScalarField& f);
ArrayContainer container_from(const VectorField& u);

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Divergence-free Elsasser data from stream-function bumps plus axis-0 shear
/// profiles, per family.  The measured rho envelope along the axis-0 line is
/// validated against the family's decay model (factor-2 gate on successive
/// decay ratios); violations reject the parameters.
FieldState generate_initial(const RunConfig& cfg, const DomainSpec& dom);

/// Scales z± by 0.9*eps1/max(J+(0), J-(0)) so both J±(0) <= 0.9*eps1
/// (exact under the homogeneity of rho).  Zero data is a no-op.
FieldState auto_rescale(const FieldState& state, double eps1, int N);

// ---------------------------------------------------------------------------
// Simulation driver
// ---------------------------------------------------------------------------

/// Fixed-dt integration to t_end, invoking `on_step(state, step_index)` at
/// t = 0 and after every step.  dt = 0 picks 0.45 * cfl_limit(initial).
void simulate(const FieldState& initial, double dt, double t_end,
              const std::function<void(const FieldState&, int)>& on_step);

// ---------------------------------------------------------------------------
// Pipelines (CLI back ends).  All artifacts land under out_dir.
// ---------------------------------------------------------------------------

struct ConstantsResult {
    ConstantsLedger ledger;
    std::shared_ptr<const KernelSample> kernel;
    double c_local = 0.0, c_f = 0.0;
    TolerancePolicy policy;  // calibrated on the linear twin of the data
};

/// Measures C0 (kernel comparability at this domain), C_theta, C1 (smallest
/// local-energy constant times C_F on a short calibration trajectory at the
/// configured amplitude), and derives eps0/eps1.
ConstantsResult estimate_constants(const RunConfig& cfg);

int run_simulate(const RunConfig& cfg, const std::filesystem::path& out);
int run_construct(const RunConfig& cfg, const std::filesystem::path& out,
                  const std::vector<double>& times);
int run_verify(const RunConfig& cfg, const std::filesystem::path& out,
               bool resolution_check = false);
int run_decay(const RunConfig& cfg, const std::filesystem::path& out);
int run_estimate_constants(const RunConfig& cfg, const std::filesystem::path& out,
                           bool resolution_check = false);
int run_report(const std::filesystem::path& out);

/// verify pipeline returning the report (used by tests and the CLI).
RunReport verify_report(const RunConfig& cfg, const std::filesystem::path& out);

// helpers shared by pipelines and tests
void write_text_atomic(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);
void write_manifest(const std::filesystem::path& out_dir, const RunConfig& cfg,
                    const ConstantsLedger& ledger, double wall_seconds);

}  // namespace mhdc
