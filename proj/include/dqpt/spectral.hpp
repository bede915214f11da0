// Biorthogonal eigenanalysis of drift matrices and Liouvillians

#pragma once

#include <vector>

#include "dqpt/gaussian.hpp"

namespace dqpt {

struct BiorthogonalSpectrum {
    CVec eigenvalues;
    CMat right_vectors;  // columns v_i, unit norm
    CMat left_vectors;   // columns w_i with w_j^dag v_i = delta_ij
    double condition_estimate{1.0};
};

BiorthogonalSpectrum biorthogonal_decompose(const CMat& matrix, double max_condition = 1e12);

// min over spec(W) of |Re w|; UnstableDrift unless all Re w > 0
double liouvillian_gap(const DriftDiffusion& dd);

struct GapCurve {
    std::vector<double> g_values;
    std::vector<double> gaps;
    std::vector<double> d_gap_dg;
};

GapCurve gap_curve(const ModelFamily& family, const std::vector<double>& g_values);

// Central-difference dDelta/dg with step h (both points must be stable).
double gap_derivative(const ModelFamily& family, double g, double h);

// Index of the eigenvalue closest to zero (the steady-state mode).
Eigen::Index zero_mode_index(const BiorthogonalSpectrum& s);

// tau = -sum_{n>0} a_n b_n / lambda_n / sum_{n>0} a_n b_n with a_n = w_n^dag F and
// b_n = <F, r_n>_pi supplied by the caller.
double integral_relaxation_time(const BiorthogonalSpectrum& spectrum, const CVec& F,
                                const CVec& kmb_overlaps);

struct SoftMode {
    cplx lambda_s;        // soft eigenvalue of W
    Mat theta_s;          // 2x2 covariance in the canonical soft subspace
    double nu_s{0.0};     // sqrt(det theta_s)
    double theta_proj{0}; // w_s^dag Theta w_s
    double y_proj{0};     // w_s^dag Y w_s
    double identity_ratio{0};  // theta_proj * 2 Re(lambda_s) / y_proj
};

// If check_identity, throws SolveFailure when |identity_ratio - 1| > 1e-6
// (meaningful only for steady states).
SoftMode soft_mode_projection(const DriftDiffusion& dd, const CovarianceState& theta,
                              bool check_identity = true);

} // namespace dqpt
