// Linear ramps towards a critical point: freeze-out, exact and slow-driving
// nonadiabatic entropy production, quasiadiabatic/impulse split

#pragma once

#include <functional>
#include <vector>

#include "dqpt/gaussian.hpp"

namespace dqpt {

struct RampProtocol {
    double g0{0.0};
    double gf{0.0};
    double tau_q{1.0};

    void validate() const;
    double g_at(double t) const { return g0 + (gf - g0) * t / tau_q; }
    double g_dot() const { return (gf - g0) / tau_q; }
};

struct FreezeOut {
    double t_star{0.0};
    double g_star{0.0};
    double impulse_duration{0.0};  // tau_q - t*
    double delta_g{0.0};           // |g* - g_c|
};

struct FreezeOutOptions {
    double g_c{0.0};        // critical point; <= 0 means use protocol.gf
    double scan_ratio{1.02}; // log grid ratio in tau_q - t
    double rel_tol{1e-10};   // bisection tolerance in t
};

// Solves |dDelta/dg| |g_dot| = Delta^2, taking the last crossing from below
// before tau_q. NoCrossing if the condition is never met in (0, tau_q).
FreezeOut find_freeze_out(const ModelFamily& family, const RampProtocol& protocol, const FreezeOutOptions& opts = {});

// 1/2 Tr[(M_rho - M_pi) Theta_dot]
double sigma_na_rate_exact(const CovarianceState& state, const Mat& theta_dot, const CovarianceState& pi_g);

// g_dot^2 zeta
double sigma_na_rate_metric(double g_dot, double zeta);

// g_dot^2 int_0^t* zeta dt for a linear ramp, as |g_dot| int_{g0}^{g*} zeta dg
// with Gauss-Kronrod in u = log|g_c - g|.
double quasiadiabatic_action(const std::function<double(double)>& zeta_of_g, const RampProtocol& protocol,
                             double g_star, double g_c, double tol = 1e-10);

struct RampOptions {
    EvolveOptions evolve{};
    double g_c{0.0};               // reference critical point for distances; <= 0 means protocol.gf
    int linear_points{1000};       // uniform output points over [0, tau_q]
    int points_per_decade{400};    // log-spaced output points around t* and towards tau_q
    double log_span_decades{8.0};  // extent of the log-spaced refinement
    bool compute_metric{true};     // metric rate at each output time (NaN where chi fails)
    bool compute_routes{true};     // metric quadrature and relative-entropy drop
    double quad_tol{1e-10};        // Gauss-Kronrod relative tolerance
};

struct RampSplit {
    double total{0.0};
    double quasiadiabatic{0.0};  // exact Sigma_na(0, t*)
    double impulse{0.0};         // exact Sigma_na(t*, tau_q)
    double quasiadiabatic_metric{0.0};  // g_dot^2 int_0^t* zeta dt
    double impulse_relative_entropy{0.0};  // D(rho_t* || pi_gf) - D(rho_tau || pi_gf)
};

struct RampResult {
    RampProtocol protocol;
    std::vector<double> t_grid;
    std::vector<double> g_of_t;
    std::vector<Mat> theta_of_t;
    std::vector<double> sigma_na_rate_exact;
    std::vector<double> sigma_na_rate_metric;  // NaN where not evaluated
    std::vector<double> sigma_na_cumulative;
    FreezeOut freeze_out;
    RampSplit split;
    double rate_at_freeze_out{0.0};
    double metric_rate_at_freeze_out{0.0};
    std::size_t index_t_star{0};
};

// Integrates Theta(t) together with the cumulative exact Sigma_na from the
// steady state at g0. Errors from lower layers are rethrown with the time.
RampResult run_ramp(const ModelFamily& family, const RampProtocol& protocol, const RampOptions& opts = {});

// Output grid: uniform points plus log-spaced points on both sides of t* and
// towards tau_q; sorted, unique, containing 0, t* and tau_q.
std::vector<double> ramp_output_grid(double tau_q, double t_star, const RampOptions& opts);

} // namespace dqpt
