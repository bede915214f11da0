#include "dqpt/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "dqpt/errors.hpp"

namespace dqpt {

Mat symplectic_form(int n_modes)
{
    const int n = n_modes;
    Mat om = Mat::Zero(2 * n, 2 * n);
    om.topRightCorner(n, n) = Mat::Identity(n, n);
    om.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return om;
}

CMat solve_lyapunov(const CMat& A, const CMat& C)
{
    const Eigen::Index n = A.rows();
    if (A.cols() != n || C.rows() != n || C.cols() != n)
        throw std::invalid_argument("solve_lyapunov: shape mismatch");
    Eigen::ComplexSchur<CMat> schur(A);
    if (schur.info() != Eigen::Success) throw SolveFailure("complex Schur decomposition failed");
    const CMat& T = schur.matrixT();
    const CMat& U = schur.matrixU();
    const CMat Ct = U.adjoint() * C * U;

    // T X + X T^H = Ct, T upper triangular; column j couples to columns k > j
    CMat X = CMat::Zero(n, n);
    for (Eigen::Index j = n - 1; j >= 0; --j) {
        CVec rhs = Ct.col(j);
        for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(T(j, k)) * X.col(k);
        CMat Tj = T;
        Tj.diagonal().array() += std::conj(T(j, j));
        for (Eigen::Index i = 0; i < n; ++i) {
            if (Tj(i, i) == cplx(0.0, 0.0))
                throw SolveFailure("Lyapunov operator singular (lambda_i + conj(lambda_j) = 0)");
        }
        X.col(j) = Tj.triangularView<Eigen::Upper>().solve(rhs);
    }
    if (!X.allFinite()) throw SolveFailure("Lyapunov solution not finite");
    return U * X * U.adjoint();
}

Mat solve_lyapunov(const Mat& A, const Mat& C)
{
    const CMat X = solve_lyapunov(CMat(A.cast<cplx>()), CMat(C.cast<cplx>()));
    return X.real();
}

} // namespace dqpt
