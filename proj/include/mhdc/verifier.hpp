/// @file verifier.hpp
/// @brief Inequality checks along solver trajectories: the local energy
/// inequality, the F-estimate, comparison ordering against the constructed
/// supersolutions, H^N boundedness, and time-decay exponent fits.
///
/// Tolerance policy: the inequalities are exact in the continuum, so every
/// check carries a budget separating discretization error from genuine
/// violation.  The budget is calibrated on configurations with exact
/// solutions (the z- = 0 linear pathway, and the algebraic identity route for
/// the supersolution residual), never tuned against the checked data.

#pragma once

#include <deque>
#include <limits>
#include <optional>
#include <string>

#include "mhdc/comparison.hpp"

namespace mhdc {

// ---------------------------------------------------------------------------
// Tolerance calibration
// ---------------------------------------------------------------------------

struct TolerancePolicy {
    double rel_local_energy = 1e-6;  // LE residual noise / LE scale
    double rel_comparison = 1e-8;    // rho computation noise / rho scale
    double h = 0.0, dt_sample = 0.0;
    double a_coeff = 0.0, b_coeff = 0.0;  // rel = a*h^2 + b*dt^2 decomposition
};

/// Runs a short z- = 0 trajectory from `linear_state` (closed-form solution
/// known) and measures the noise floors of the discretized checks.
TolerancePolicy calibrate_tolerance(const FieldState& linear_state, int N, double dt_sample,
                                    double t_span);

// ---------------------------------------------------------------------------
// Local energy inequality (streaming over uniform samples)
// ---------------------------------------------------------------------------

class LocalEnergyChecker {
  public:
    /// eps_rel: relative floor of the regularized density
    /// rho_eps = sqrt(rho^2 + eps^2), eps = eps_rel * max rho(first sample);
    /// the differential inequality holds for the regularized density exactly
    /// as for rho itself.  tol_rel scales the calibrated noise budget
    /// subtracted before ratios are taken.  When a kernel is supplied, the
    /// full comparison-principle hypothesis LHS <= C1 (rho+ rho-)*N1 is
    /// checked as well.
    LocalEnergyChecker(int N, double mu, double c1, std::shared_ptr<const KernelSample> kernel,
                       double tol_rel = 0.0, double eps_rel = 1e-3);

    /// Samples must arrive with uniform time spacing.
    void add_sample(const FieldState& state);

    struct Result {
        double c_min = 0.0;       // smallest C with LHS <= C F + tol
        double excess_vs_c1 = 0.0;  // max (LHS - C1 (rho+ rho-)*N1)
        double lhs_where_f_small = 0.0;  // max LHS where F ~ 0 (coarseness flag)
        double scale = 0.0;       // magnitude of the differential terms
        double eps_used = 0.0;
        int interior_samples = 0;
    };
    Result finish() const;

  private:
    int order_;
    double mu_, c1_, tol_rel_, eps_rel_;
    double eps_ = 0.0;
    std::shared_ptr<const KernelSample> kernel_;
    std::deque<double> times_;
    std::deque<ScalarField> rp_, rm_;   // regularized densities
    std::deque<ScalarField> rawp_, rawm_;  // unregularized densities
    std::deque<FieldState> states_;
    Result acc_;
    bool any_ = false;
    void process_triple();
};

/// Measured C_F = max F / ((rho+ rho-) * N1) over the grid.
double check_f_estimate(const FieldState& state, int N, const KernelSample& kernel);

// ---------------------------------------------------------------------------
// Comparison ordering + H^N boundedness (per sampled time)
// ---------------------------------------------------------------------------

class ComparisonChecker {
  public:
    ComparisonChecker(const ComparisonInputs& inputs, int N);

    struct TimePoint {
        double t = 0.0;
        double excess_p = 0.0, excess_m = 0.0;  // max(rho - rho1), signed
        double hn_p = 0.0, hn_m = 0.0;
        double j_p = 0.0, j_m = 0.0;
        bool guard_ok = true;
    };
    TimePoint add_sample(const FieldState& state);

    struct Result {
        double max_excess = -std::numeric_limits<double>::infinity();
        double rho1_scale = 0.0;        // max rho1 seen (tolerance reference)
        bool ordered_at_zero = true;
        double excess_at_zero = 0.0;
        double hn_ratio_p = 1.0, hn_ratio_m = 1.0;  // sup_t hn(t)/hn(0)
        double chain_c_a = 0.0;         // max hn / ||rho||_L2
        double chain_rho_vs_rho1 = 0.0; // max ||rho||_L2 / ||rho1||_L2
        bool advisory = false;          // J(0) > eps1: ordering merely advisory
        std::vector<TimePoint> points;
    };
    const Result& result() const { return acc_; }

  private:
    const ComparisonInputs& inputs_;
    int order_;
    double hn0_p_ = 0.0, hn0_m_ = 0.0;
    bool first_ = true;
    Result acc_;
};

// ---------------------------------------------------------------------------
// Supersolution residual check (criterion "Step 3" pathway)
// ---------------------------------------------------------------------------

struct SupersolutionCheck {
    double min_resid = 0.0;       // worst measured residual over grid/times
    double tol = 0.0;             // calibrated budget (4x differential noise)
    double min_resid_identity = 0.0;  // residual via the exact algebraic route
    double noise = 0.0;           // max |measured LHS - identity LHS|
    bool pass = false;
};

SupersolutionCheck check_supersolution(const ComparisonInputs& inputs,
                                       const std::vector<double>& times, double dt_fd = 1e-3);

// ---------------------------------------------------------------------------
// Decay fits
// ---------------------------------------------------------------------------

struct DecayFit {
    std::string quantity;  // "w1inf" or "hn"
    double t_lo = 0.0, t_hi = 0.0;
    double alpha = 0.0;      // fitted decay exponent of (1+mu t)^-alpha
    double target = 0.0;
    double residual = 0.0;   // rms residual of the log-log fit
    double ci95 = 0.0;       // 1.96 * stderr of the slope
    int points = 0;
};

/// Least-squares slope of log(q) against log(1+mu t) on the pre-registered
/// window [max(1/mu, t_lo_floor), (L/8)^2/mu].  Throws "decay requires mu>0"
/// for mu = 0 and a "saturated" error when the window holds < 5 samples.
DecayFit fit_decay(const std::vector<std::pair<double, double>>& series,
                   const std::string& quantity, double mu, double box_len, double target_alpha,
                   double t_lo_floor = 0.0);

// ---------------------------------------------------------------------------
// Run report
// ---------------------------------------------------------------------------

struct TimeRecord {
    double t = 0.0;
    double hn_p = 0.0, hn_m = 0.0, j_p = 0.0, j_m = 0.0;
    std::optional<double> resid_local;
    std::optional<double> excess_comparison;
    bool guard_ok = true;
};

struct RunReport {
    std::vector<TimeRecord> records;
    ConstantsLedger ledger;
    std::vector<DecayFit> fits;
    double c_local = 0.0;  // measured constant of the local energy inequality
    double c_f = 0.0;
    double comparison_max_excess = 0.0, comparison_tol = 0.0;
    bool ordered_at_zero = true;
    bool comparison_advisory = false;
    double hn_ratio_p = 1.0, hn_ratio_m = 1.0;
    double supersolution_min = 0.0, supersolution_tol = 0.0;
    std::vector<std::string> failures;  // empty means all enabled checks passed

    std::string to_json() const;
    static RunReport from_json(const std::string& text);
    std::string to_csv() const;  // t,hn_p,hn_m,j_p,j_m,resid_local,excess_comparison,guard_ok
};

}  // namespace mhdc
