// Truncated Fock-space Lindblad machinery. Vectorization is column stacking:
// vec(X rho Y) = (Y^T (x) X) vec(rho).

#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "dqpt/spectral.hpp"

namespace dqpt {

using SpMat = Eigen::SparseMatrix<cplx>;

struct Jump {
    CMat op;
    double rate{0.0};
};

struct FockOperatorSet {
    int cutoff{0};
    CMat a, a_dagger, number, identity;

    static FockOperatorSet make(int cutoff);
};

struct FockLiouvillian {
    SpMat matrix;
    int cutoff{0};
    std::string vectorization{"column-stacking"};

    CMat dense() const { return CMat(matrix); }
};

CVec vectorize(const CMat& rho);
CMat unvectorize(const CVec& v, int dim);

FockLiouvillian build_liouvillian(const CMat& H, const std::vector<Jump>& jumps);

struct FockSteadyOptions {
    bool check_leakage{true};
    double leakage_tol{1e-8};
};

// Population in the top 10% (at least one) of Fock levels.
double top_population(const CMat& rho);

CMat fock_steady_state(const FockLiouvillian& L, const FockSteadyOptions& opts = {});

struct FockSpectrum {
    BiorthogonalSpectrum spectrum;
    double gap{0.0};
    Eigen::Index zero_index{0};
};

// Dense eigensolve, done block by block over the connected components of the
// sparsity graph (symmetry sectors); vectors are embedded back into the full space.
FockSpectrum fock_gap_and_spectrum(const FockLiouvillian& L, bool with_vectors = true);

double fock_entropy(const CMat& rho, double floor = 1e-14);
double fock_relative_entropy(const CMat& rho, const CMat& sigma, double floor = 1e-14);

using LiouvillianSchedule = std::function<FockLiouvillian(double t)>;

struct FockEvolveOptions {
    double rtol{1e-9};
    double atol{1e-12};
    double initial_dt{1e-3};
    bool check_leakage{false};
    double leakage_tol{1e-8};
};

std::vector<CMat> fock_evolve(const LiouvillianSchedule& L_of_t, const CMat& rho0,
                              const std::vector<double>& t_grid, const FockEvolveOptions& opts = {});

// One-mode zero-mean Gaussian state in the Fock basis: rho = exp(-1/2 R^T M R)/Z
// built on an enlarged basis and truncated to `cutoff` levels.
CMat gaussian_to_fock(const CovarianceState& state, int cutoff, int padding = 60);

// Quadratic Hamiltonian and linear jumps of a one-mode QuadraticModel in the Fock basis.
void quadratic_model_to_fock(const QuadraticModel& model, int cutoff, CMat& H, std::vector<Jump>& jumps);

} // namespace dqpt
