#include "dqpt/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

#include "dqpt/errors.hpp"

namespace dqpt {

namespace {

CMat kron2c(const CMat& s, const CMat& x)
{
    const Eigen::Index n = x.rows();
    CMat out(2 * n, 2 * n);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) out.block(a * n, b * n, n, n) = s(a, b) * x;
    return out;
}

bool is_diagonal_nonneg(const Mat& m, double tol)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i == j && m(i, j) < -tol) return false;
            if (i != j && std::abs(m(i, j)) > tol) return false;
        }
    return true;
}

// s(nu) = (nu + 1/2) log(nu + 1/2) - (nu - 1/2) log(nu - 1/2)
double entropy_term(double nu)
{
    const double a = nu + 0.5, b = nu - 0.5;
    double s = a * std::log(a);
    if (b > 0) s -= b * std::log(b);
    return s;
}

} // namespace

void QuadraticModel::validate(double tol) const
{
    const Eigen::Index n = n_modes;
    if (n < 1) throw std::invalid_argument("QuadraticModel: n_modes must be positive");
    if (A.rows() != n || A.cols() != n || B.rows() != n || B.cols() != n ||
        gamma_minus.rows() != n || gamma_minus.cols() != n ||
        gamma_plus.rows() != n || gamma_plus.cols() != n)
        throw std::invalid_argument("QuadraticModel: matrix shapes do not match n_modes");
    const double scale = std::max(1.0, std::max(A.cwiseAbs().maxCoeff(), B.cwiseAbs().maxCoeff()));
    if ((A - A.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
        throw NonHermitianInput("A is not Hermitian");
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > tol * scale)
        throw NonHermitianInput("B is not symmetric");
    if (!is_diagonal_nonneg(gamma_minus, tol) || !is_diagonal_nonneg(gamma_plus, tol))
        throw std::invalid_argument("QuadraticModel: rate matrices must be diagonal and nonnegative");
}

DriftDiffusion build_drift_diffusion(const QuadraticModel& model)
{
    model.validate();
    const int n = model.n_modes;
    const cplx I(0.0, 1.0);
    CMat s0 = CMat::Identity(2, 2);
    CMat sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, -I, I, 0;
    sz << 1, 0, 0, -1;

    const CMat& A = model.A;
    const CMat& B = model.B;
    CMat HR = 0.5 * (kron2c(s0, A + A.transpose()) + kron2c(sz, B + B.conjugate()) +
                     kron2c(sy, A.transpose() - A) - I * kron2c(sx, B - B.conjugate()));
    const double imag_res = HR.imag().cwiseAbs().maxCoeff();
    if (imag_res > 1e-12 * std::max(1.0, HR.cwiseAbs().maxCoeff()))
        throw NonHermitianInput("quadrature Hamiltonian has imaginary residue " + std::to_string(imag_res));

    DriftDiffusion dd;
    dd.Omega = symplectic_form(n);
    dd.H_R = symmetrize(HR.real());
    const Mat Gamma = model.gamma_minus - model.gamma_plus;
    const Mat one2 = Mat::Identity(2, 2);
    dd.W = -dd.Omega * dd.H_R + 0.5 * kron2c(one2.cast<cplx>(), Gamma.cast<cplx>()).real();
    dd.Y = 0.5 * kron2c(one2.cast<cplx>(), (model.gamma_plus + model.gamma_minus).cast<cplx>()).real();
    return dd;
}

void require_stable(const DriftDiffusion& dd, const char* where)
{
    Eigen::EigenSolver<Mat> es(dd.W, false);
    const double min_re = es.eigenvalues().real().minCoeff();
    if (!(min_re > 0.0)) {
        std::ostringstream os;
        os << where << ": drift has eigenvalue with Re = " << min_re << " (need > 0)";
        throw UnstableDrift(os.str());
    }
}

Mat lyapunov_rhs(const DriftDiffusion& dd, const Mat& theta)
{
    return -(dd.W * theta + theta * dd.W.transpose()) + dd.Y;
}

double lyapunov_backward_residual(const DriftDiffusion& dd, const Mat& theta)
{
    const Mat R = dd.W * theta + theta * dd.W.transpose() - dd.Y;
    const double scale = dd.Y.norm() + 2.0 * dd.W.norm() * theta.norm();
    return scale > 0 ? R.norm() / scale : R.norm();
}

double lyapunov_relative_residual(const DriftDiffusion& dd, const Mat& theta)
{
    const Mat R = dd.W * theta + theta * dd.W.transpose() - dd.Y;
    const double scale = dd.Y.norm();
    return scale > 0 ? R.norm() / scale : R.norm();
}

CovarianceState steady_state(const DriftDiffusion& dd)
{
    require_stable(dd, "steady_state");
    Mat theta = symmetrize(solve_lyapunov(dd.W, dd.Y));
    const double res = lyapunov_backward_residual(dd, theta);
    if (!(res <= 1e-10)) throw SolveFailure("Lyapunov residual " + std::to_string(res));
    return CovarianceState(theta, dd.n_modes());
}

std::vector<CovarianceState> evolve_covariance(const DriftSchedule& dd_of_t,
                                               const CovarianceState& theta0,
                                               const std::vector<double>& t_grid,
                                               const EvolveOptions& opts)
{
    namespace ode = boost::numeric::odeint;
    using state_t = std::vector<double>;
    if (t_grid.empty()) return {};
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("evolve_covariance: t_grid not increasing");

    const Eigen::Index dim = theta0.theta.rows();
    state_t x(theta0.theta.data(), theta0.theta.data() + dim * dim);

    auto rhs = [&](const state_t& y, state_t& dy, double t) {
        Eigen::Map<const Mat> th(y.data(), dim, dim);
        Eigen::Map<Mat> d(dy.data(), dim, dim);
        d = lyapunov_rhs(dd_of_t(t), th);
    };

    std::vector<CovarianceState> out;
    out.reserve(t_grid.size());
    auto observer = [&](const state_t& y, double) {
        Eigen::Map<const Mat> th(y.data(), dim, dim);
        out.emplace_back(symmetrize(th), theta0.n_modes);
    };

    auto stepper = ode::make_dense_output(opts.atol, opts.rtol, ode::runge_kutta_dopri5<state_t>());
    try {
        if (t_grid.size() == 1) {
            observer(x, t_grid[0]);
            return out;
        }
        const double dt0 = std::min(opts.initial_dt, t_grid.back() - t_grid.front());
        ode::integrate_times(stepper, rhs, x, t_grid.begin(), t_grid.end(), dt0, observer,
                             ode::max_step_checker(50000000));
    } catch (const ode::odeint_error& e) {
        throw ToleranceFailure(std::string("covariance integration: ") + e.what());
    }
    return out;
}

WilliamsonFactor WilliamsonFactor::of(const Mat& theta)
{
    WilliamsonFactor f;
    const Eigen::Index dim = theta.rows();
    Eigen::LLT<Mat> llt(symmetrize(theta));
    if (llt.info() != Eigen::Success) throw NonPhysical("covariance matrix is not positive definite");
    f.L = llt.matrixL();
    const CMat iOm = cplx(0.0, 1.0) * symplectic_form(static_cast<int>(dim / 2)).cast<cplx>();
    CMat K = 2.0 * f.L.transpose().cast<cplx>() * iOm * f.L.cast<cplx>();
    K = hermitize(K);
    Eigen::SelfAdjointEigenSolver<CMat> es(K);
    if (es.info() != Eigen::Success) throw SolveFailure("Hermitian eigensolver failed");
    f.U = es.eigenvectors();
    f.d = es.eigenvalues();
    std::vector<double> pos;
    for (Eigen::Index i = 0; i < dim; ++i) pos.push_back(std::abs(f.d(i)) / 2.0);
    // eigenvalues are sorted ascending: the n largest are +2 nu_k
    std::vector<double> nu(pos.begin() + dim / 2, pos.end());
    std::sort(nu.begin(), nu.end(), std::greater<>());
    f.nu = Eigen::Map<Vec>(nu.data(), static_cast<Eigen::Index>(nu.size()));
    return f;
}

std::vector<double> symplectic_eigenvalues(const CovarianceState& state, double tol)
{
    const WilliamsonFactor f = WilliamsonFactor::of(state.theta);
    std::vector<double> nu(f.nu.data(), f.nu.data() + f.nu.size());
    if (nu.back() < 0.5 - tol) {
        std::ostringstream os;
        os << "symplectic eigenvalue " << nu.back() << " < 1/2";
        throw NonPhysical(os.str());
    }
    return nu;
}

double log_partition(const WilliamsonFactor& f)
{
    double s = 0.0;
    for (Eigen::Index k = 0; k < f.nu.size(); ++k) s += std::log(f.nu(k) - 0.5) + std::log(f.nu(k) + 0.5);
    return 0.5 * s;
}

namespace {

void require_nonsingular(const WilliamsonFactor& f, double eps_nu, const char* what)
{
    if (f.nu(f.nu.size() - 1) <= 0.5 + eps_nu) {
        std::ostringstream os;
        os << what << ": symplectic eigenvalue " << f.nu(f.nu.size() - 1) << " within eps of 1/2";
        throw SingularState(os.str());
    }
}

// phi(x) = x acoth(x), even, > 1 for |x| > 1
Vec phi_of(const Vec& d)
{
    Vec p(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) p(i) = d(i) * std::atanh(1.0 / d(i));
    return p;
}

} // namespace

GaussianExponentForm theta_to_M(const CovarianceState& state, double eps_nu)
{
    const WilliamsonFactor f = WilliamsonFactor::of(state.theta);
    require_nonsingular(f, eps_nu, "theta_to_M");
    // M = 2 i Omega L acoth(K) L^-1 = (L^-T U) phi(d) (L^-T U)^dag
    const CMat B = CMat(f.L.transpose().cast<cplx>()).triangularView<Eigen::Upper>().solve(f.U);
    const CMat Mc = B * phi_of(f.d).cast<cplx>().asDiagonal() * B.adjoint();
    GaussianExponentForm out;
    out.M = symmetrize(Mc.real());
    out.logZ = log_partition(f);
    return out;
}

CovarianceState M_to_theta(const Mat& M)
{
    const Eigen::Index dim = M.rows();
    Eigen::LLT<Mat> llt(symmetrize(M));
    if (llt.info() != Eigen::Success) throw NonPhysical("exponent matrix is not positive definite");
    const Mat C = llt.matrixL();
    const CMat iOm = cplx(0.0, 1.0) * symplectic_form(static_cast<int>(dim / 2)).cast<cplx>();
    CMat J = 0.5 * C.transpose().cast<cplx>() * iOm * C.cast<cplx>();
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(J));
    // Theta = (C^-T Q) psi(e) (C^-T Q)^dag, psi(x) = x coth(x)
    Vec psi(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double e = es.eigenvalues()(i);
        psi(i) = std::abs(e) < 1e-8 ? 1.0 + e * e / 3.0 : e / std::tanh(e);
    }
    const CMat B = CMat(C.transpose().cast<cplx>()).triangularView<Eigen::Upper>().solve(es.eigenvectors());
    const CMat th = B * psi.cast<cplx>().asDiagonal() * B.adjoint();
    return CovarianceState(symmetrize(th.real()), static_cast<int>(dim / 2));
}

double gaussian_entropy(const CovarianceState& state)
{
    const auto nu = symplectic_eigenvalues(state);
    double s = 0.0;
    for (double v : nu) s += entropy_term(std::max(v, 0.5));
    return s;
}

double trace_M_times(const WilliamsonFactor& f, const Mat& X, double eps_nu)
{
    require_nonsingular(f, eps_nu, "trace_M_times");
    // Tr[M X] = sum_k phi_k (U^dag L^-1 X L^-T U)_kk
    const auto Lv = f.L.triangularView<Eigen::Lower>();
    Mat Z = Lv.solve(X);
    Z = Lv.solve(Z.transpose()).transpose();
    const CMat G = f.U.adjoint() * Z.cast<cplx>() * f.U;
    const Vec p = phi_of(f.d);
    double s = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) s += p(k) * G(k, k).real();
    return s;
}

double relative_entropy(const CovarianceState& rho, const CovarianceState& sigma)
{
    WilliamsonFactor fs;
    try {
        fs = WilliamsonFactor::of(sigma.theta);
        require_nonsingular(fs, kEpsNu, "relative_entropy reference");
    } catch (const NumericalError& e) {
        throw SingularReference(e.what());
    }
    // D = -S(rho) - Tr[rho log sigma] = -S(rho) + 1/2 Tr[N Theta_rho] + log Z_sigma
    const double s_rho = gaussian_entropy(rho);
    return -s_rho + 0.5 * trace_M_times(fs, rho.theta) + log_partition(fs);
}

} // namespace dqpt
