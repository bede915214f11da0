// Small dense linear-algebra helpers: symplectic form, Lyapunov solver

#pragma once

#include <Eigen/Dense>

namespace dqpt {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

// Omega = (i sigma_y) (x) 1_n = [[0, 1],[-1, 0]] blocks, ordering (q_1..q_n, p_1..p_n)
Mat symplectic_form(int n_modes);

// Solves A X + X A^H = C by Bartels-Stewart on the complex Schur form of A.
// Throws SolveFailure if lambda_i + conj(lambda_j) vanishes for some pair.
CMat solve_lyapunov(const CMat& A, const CMat& C);

// Real convenience overload: A X + X A^T = C with real data.
Mat solve_lyapunov(const Mat& A, const Mat& C);

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }
inline CMat hermitize(const CMat& m) { return 0.5 * (m + m.adjoint()); }

} // namespace dqpt
