// Concrete models: open Dicke (Gaussian, thermodynamic limit) and the open
// Kerr parametric oscillator (truncated Fock space)

#pragma once

#include <string>
#include <vector>

#include "dqpt/fock.hpp"
#include "dqpt/gaussian.hpp"

namespace dqpt {

struct DickeParams {
    double omega_c{1.0};
    double omega_z{1.0};
    double kappa{0.2};
    double g{0.0};

    void validate() const;
};

// A = [[w_c, g],[g, w_z]], B = [[0, g],[g, 0]], gamma_minus = diag(2 kappa, 0)
QuadraticModel dicke_model(const DickeParams& p);
ModelFamily dicke_family(DickeParams p);

// g_c = 1/2 sqrt((w_c^2 + kappa^2) / w_c * w_z); checks det W(g_c) = 0
double dicke_critical_coupling(const DickeParams& p);

struct KerrParams {
    double detuning{0.0};  // Delta
    double kerr_U{0.1};
    cplx drive_G{1.5, 0.0};
    double kappa{1.0};
    std::string control{"detuning"};  // which field is swept

    void validate() const;
    KerrParams with_control(double value) const;
    double control_value() const;
};

// H = -Delta n + (U/2) a^dag^2 a^2 + 1/2 (G a^dag^2 + G* a^2), jumps [(a, kappa)]
struct KerrOperators {
    CMat H;
    std::vector<Jump> jumps;
};
KerrOperators kerr_model(const KerrParams& p, int cutoff);

// Photon-parity operator (-1)^n
CMat parity_operator(int cutoff);

// Second-order critical detuning of the linearised model, -sqrt(|G|^2 - kappa^2/4).
// The normal phase is Delta < Delta_c.
double kerr_critical_detuning(const KerrParams& p);

// Linearised (U -> 0) one-mode Gaussian model at the given detuning
QuadraticModel kerr_gaussian_limit(const KerrParams& p);

struct KerrSweepPoint {
    double control{0.0};
    double distance{0.0};    // |control - control_c|
    double qfi{0.0};
    double gap{-1.0};        // negative when not computed
    double mean_photons{0.0};
    double leakage{0.0};     // population of the top 10% Fock levels
    int cutoff{0};
    CMat rho;                // steady state (left empty unless requested)
};

struct KerrSweepOptions {
    int cutoff{40};
    bool adaptive_cutoff{true};  // raise cutoff until the leakage test passes
    int max_cutoff{240};
    double leakage_tol{1e-8};
    double fd_step{1e-4};        // derivative step in the control parameter
    bool compute_gap{false};
    bool keep_states{false};
};

std::vector<KerrSweepPoint> kerr_control_sweep(const KerrParams& params,
                                               const std::vector<double>& control_values,
                                               const KerrSweepOptions& opts = {});

} // namespace dqpt
