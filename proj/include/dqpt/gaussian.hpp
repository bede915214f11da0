// Zero-mean Gaussian states of n bosonic modes: drift/diffusion, Lyapunov
// steady states, covariance evolution, symplectic spectra, exponent forms.
//
// Quadratures are ordered R = (q_1..q_n, p_1..p_n) with q = (b + b^dag)/sqrt2,
// p = i(b^dag - b)/sqrt2, and Theta = 1/2 <{R, R^T}> (vacuum: Theta = 1/2).

#pragma once

#include <functional>
#include <vector>

#include "dqpt/linalg.hpp"

namespace dqpt {

struct QuadraticModel {
    int n_modes{1};
    CMat A;           // Hermitian, H = b^dag A b + 1/2 (b^dag B b^dag + h.c.)
    CMat B;           // symmetric pairing
    Mat gamma_minus;  // diagonal loss rates
    Mat gamma_plus;   // diagonal gain rates
    double g{0.0};

    void validate(double tol = 1e-10) const;
};

using ModelFamily = std::function<QuadraticModel(double g)>;

struct DriftDiffusion {
    Mat W;      // drift: dTheta/dt = -(W Theta + Theta W^T) + Y
    Mat Y;      // diffusion
    Mat H_R;    // quadrature Hamiltonian, H = 1/2 R^T H_R R
    Mat Omega;  // symplectic form

    int n_modes() const { return static_cast<int>(W.rows() / 2); }
};

struct CovarianceState {
    Mat theta;
    int n_modes{1};

    CovarianceState() = default;
    CovarianceState(Mat th, int n) : theta(std::move(th)), n_modes(n) {}
    explicit CovarianceState(Mat th) : theta(std::move(th)), n_modes(static_cast<int>(theta.rows() / 2)) {}
};

struct GaussianExponentForm {
    Mat M;  // rho = exp(-1/2 R^T M R) / Z
    double logZ{0.0};
};

// Factorization Theta = L L^T, K = 2 L^T (i Omega) L = U diag(d) U^dag.
// The eigenvalues d come in pairs +-2 nu_k. Every matrix function of
// 2 Theta i Omega is L U f(d) U^dag L^-1.
struct WilliamsonFactor {
    Mat L;
    CMat U;
    Vec d;
    Vec nu;  // symplectic eigenvalues, descending

    static WilliamsonFactor of(const Mat& theta);
};

DriftDiffusion build_drift_diffusion(const QuadraticModel& model);

// Throws UnstableDrift unless every eigenvalue of W has Re > 0.
void require_stable(const DriftDiffusion& dd, const char* where = "steady_state");

// Right-hand side of the Lyapunov ODE.
Mat lyapunov_rhs(const DriftDiffusion& dd, const Mat& theta);

// Residual of W Theta + Theta W^T = Y, relative to the backward-error scale
// ||Y|| + 2 ||W|| ||Theta||.
double lyapunov_backward_residual(const DriftDiffusion& dd, const Mat& theta);
// Residual relative to ||Y|| alone.
double lyapunov_relative_residual(const DriftDiffusion& dd, const Mat& theta);

CovarianceState steady_state(const DriftDiffusion& dd);

struct EvolveOptions {
    double rtol{1e-9};
    double atol{1e-12};
    double initial_dt{1e-3};
};

using DriftSchedule = std::function<DriftDiffusion(double t)>;

std::vector<CovarianceState> evolve_covariance(const DriftSchedule& dd_of_t,
                                               const CovarianceState& theta0,
                                               const std::vector<double>& t_grid,
                                               const EvolveOptions& opts = {});

std::vector<double> symplectic_eigenvalues(const CovarianceState& state, double tol = 1e-9);

constexpr double kEpsNu = 1e-12;

GaussianExponentForm theta_to_M(const CovarianceState& state, double eps_nu = kEpsNu);
CovarianceState M_to_theta(const Mat& M);

// log Z = 1/2 log det(Theta + i Omega/2) = 1/2 sum_k log(nu_k^2 - 1/4)
double log_partition(const WilliamsonFactor& f);

// von Neumann entropy sum_k s(nu_k); finite for pure directions
double gaussian_entropy(const CovarianceState& state);

// Tr[M X] for the exponent matrix M of the factored state, without forming M.
double trace_M_times(const WilliamsonFactor& f, const Mat& X, double eps_nu = kEpsNu);

// D(rho || sigma) in nats
double relative_entropy(const CovarianceState& rho, const CovarianceState& sigma);

} // namespace dqpt
