// Information geometry of NESS families: KMB quantum Fisher information,
// thermodynamic metric, Drazin inverse

#pragma once

#include <vector>

#include "dqpt/fock.hpp"
#include "dqpt/gaussian.hpp"

namespace dqpt {

struct ChiMatrix {
    Mat chi;                       // dM/dg
    double fd_step{0.0};           // step used for the model derivative
    double richardson_change{0.0}; // relative change of chi when the step is halved
    double roundoff_floor{0.0};    // largest relative change under k 2^-10 step perturbations, k = 1..4
};

// Default derivative step 1e-6 * max(1, |g|)
double default_fd_step(double g);

// dM/dg. dW/dg and dY/dg come from central differences of the model matrices;
// dTheta/dg from the differentiated Lyapunov equation; dM from the Frechet
// derivative of acoth. Throws SolveFailure if halving the step changes chi by
// more than richardson_tol (relative, max-norm) plus ten times the rounding
// floor; near g_c the evaluation itself loses digits, ~6e-6 at g_c - g = 1e-6.
ChiMatrix chi_matrix(const ModelFamily& family, double g, double fd_step = 0.0,
                     double richardson_tol = 1e-6);

// Plain central difference of theta_to_M(steady_state(.)) at g +- fd_step.
ChiMatrix chi_matrix_fd(const ModelFamily& family, double g, double fd_step);

// dTheta for a steady state under a perturbation (dW, dY) of the drift/diffusion
Mat steady_state_derivative(const DriftDiffusion& dd, const Mat& theta, const Mat& dW, const Mat& dY);

// Frechet derivative of Theta -> M at the given state
Mat exponent_derivative(const CovarianceState& state, const Mat& dtheta);

double qfi_kmb_gaussian(const CovarianceState& state, const ChiMatrix& chi);

// sum_ij |<i|drho|j>|^2 k(p_i, p_j), k the logarithmic-mean kernel
double qfi_kmb_density_matrix(const CMat& rho, const CMat& drho, double floor = 1e-14);

// d log rho for a given d rho (Frechet derivative of the matrix log)
CMat log_derivative(const CMat& rho, const CMat& drho, double floor = 1e-14);

// <A, B>_rho = int_0^1 ds Tr[rho^s A^dag rho^(1-s) B]
cplx kmb_inner(const CMat& rho, const CMat& A, const CMat& B, double floor = 1e-14);

// Linear jump operators L_i = c_i^T R of a quadratic model (loss and gain).
std::vector<CVec> jump_coefficients(const QuadraticModel& model);

// A_drift = Omega (H_R - Im sum_i c_i c_i^dag)
Mat drift_from_jumps(const Mat& H_R, const std::vector<CVec>& jumps);

// zeta = 1/2 Tr[I(chi) (Theta - i Omega/2) F(chi) (Theta + i Omega/2)] with
// A^T F + F A = -chi and A = -W.
double metric_gaussian(const CovarianceState& state, const DriftDiffusion& dd, const ChiMatrix& chi);
// Same, with A assembled from H_R and explicit jump coefficients.
double metric_gaussian(const CovarianceState& state, const Mat& H_R, const std::vector<CVec>& jumps,
                       const ChiMatrix& chi);

struct MetricPoint {
    double g{0.0};
    double zeta{0.0};
    double qfi_kmb{0.0};
    double tau_g{0.0};
};

MetricPoint metric_point(const ModelFamily& family, double g, double fd_step = 0.0);

// Drazin inverse applied spectrally: sum_{n>0} (w_n^dag x) r_n / lambda_n.
// MultipleSteadyStates if more than one |lambda| < 1e-10.
CVec drazin_apply(const BiorthogonalSpectrum& spectrum, const CVec& x);
CVec drazin_apply(const FockLiouvillian& L, const CVec& pi, const CVec& x);

// Same operator by a bordered sparse LU solve: L y = x - pi Tr x, Tr y = 0.
CVec drazin_solve(const FockLiouvillian& L, const CVec& pi, const CVec& x);

enum class DrazinMethod { Spectral, Solve };

// zeta = -Tr[dlogpi L^+(dpi)]
double metric_drazin(const FockLiouvillian& L, const CMat& pi, const CMat& dpi, const CMat& dlogpi,
                     DrazinMethod method = DrazinMethod::Solve);

} // namespace dqpt
