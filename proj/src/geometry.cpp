#include "dqpt/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "dqpt/errors.hpp"

namespace dqpt {

namespace {

// atanh(u)/u
double atanhc(double u)
{
    if (std::abs(u) < 1e-4) {
        const double u2 = u * u;
        return 1.0 + u2 / 3.0 + u2 * u2 / 5.0;
    }
    return std::atanh(u) / u;
}

// f(z) = (e^z - 1)/z, series below |z| < 1e-6
cplx expm1c(cplx z)
{
    if (std::abs(z) < 1e-6) {
        cplx term = 1.0, sum = 1.0;
        for (int k = 2; k <= 7; ++k) {
            term *= z / static_cast<double>(k);
            sum += term;
        }
        return sum;
    }
    return (std::exp(z) - 1.0) / z;
}

// (ln a - ln b)/(a - b) for a, b > 0
double log_kernel(double a, double b)
{
    if (a == b) return 1.0 / a;
    const double x = (a - b) / b;
    if (std::abs(x) < 1e-8) return (1.0 - x / 2.0 + x * x / 3.0) / b;
    return std::log1p(x) / (a - b);
}

struct FlooredEig {
    Vec p;
    CMat V;
};

FlooredEig floored(const CMat& rho, double floor)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(rho));
    FlooredEig f;
    f.V = es.eigenvectors();
    f.p = es.eigenvalues();
    if (f.p.minCoeff() < -1e-8) {
        std::ostringstream os;
        os << "density matrix has eigenvalue " << f.p.minCoeff();
        throw RankDeficient(os.str());
    }
    f.p = f.p.cwiseMax(floor);
    f.p /= f.p.sum();
    return f;
}

struct GaussianKernel {
    WilliamsonFactor f;
    CMat UB;      // eigenvectors of i Omega M
    CMat UB_inv;
    CVec e;       // eigenvalues of i Omega M
    CMat Theta_c; // Theta + i Omega / 2
};

GaussianKernel gaussian_kernel(const CovarianceState& state)
{
    GaussianKernel k;
    k.f = WilliamsonFactor::of(state.theta);
    if (k.f.nu(k.f.nu.size() - 1) <= 0.5 + kEpsNu) throw SingularState("state is pure in some direction");
    const Eigen::Index dim = state.theta.rows();
    // i Omega M = 2 acoth(2 Theta i Omega) = L U 2acoth(d) U^dag L^-1
    k.UB = k.f.L.cast<cplx>() * k.f.U;
    const CMat P = CMat(k.f.L.transpose().cast<cplx>()).triangularView<Eigen::Upper>().solve(k.f.U);
    k.UB_inv = P.adjoint();
    k.e.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) k.e(i) = 2.0 * std::atanh(1.0 / k.f.d(i));
    const CMat iOm = cplx(0.0, 1.0) * symplectic_form(static_cast<int>(dim / 2)).cast<cplx>();
    k.Theta_c = state.theta.cast<cplx>() + 0.5 * iOm;
    return k;
}

// I(chi) = int_0^1 S^T chi S ds, S = exp(s i Omega M)
CMat s_integral(const GaussianKernel& k, const Mat& chi)
{
    const Eigen::Index dim = chi.rows();
    CMat C = k.UB.transpose() * chi.cast<cplx>() * k.UB;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) C(i, j) *= expm1c(k.e(i) + k.e(j));
    return k.UB_inv.transpose() * C * k.UB_inv;
}

} // namespace

double default_fd_step(double g)
{
    return 1e-6 * std::max(1.0, std::abs(g));
}

Mat steady_state_derivative(const DriftDiffusion& dd, const Mat& theta, const Mat& dW, const Mat& dY)
{
    const Mat rhs = dY - dW * theta - theta * dW.transpose();
    return symmetrize(solve_lyapunov(dd.W, rhs));
}

Mat exponent_derivative(const CovarianceState& state, const Mat& dtheta)
{
    const WilliamsonFactor f = WilliamsonFactor::of(state.theta);
    if (f.nu(f.nu.size() - 1) <= 0.5 + kEpsNu) throw SingularState("state is pure in some direction");
    const Eigen::Index dim = state.theta.rows();
    const auto Lv = f.L.triangularView<Eigen::Lower>();
    Mat Z = Lv.solve(dtheta);
    Z = Lv.solve(Z.transpose()).transpose();
    CMat G = f.U.adjoint() * Z.cast<cplx>() * f.U;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double a = f.d(i), b = f.d(j);
            const double ab = a * b;
            const double u = (a - b) / (ab - 1.0);
            G(i, j) *= -ab * atanhc(u) / (ab - 1.0);
        }
    const CMat P = CMat(f.L.transpose().cast<cplx>()).triangularView<Eigen::Upper>().solve(f.U);
    return symmetrize((P * G * P.adjoint()).real());
}

namespace {

Mat chi_at_step(const ModelFamily& family, double g, double h, const DriftDiffusion& dd0,
                const CovarianceState& st)
{
    const DriftDiffusion up = build_drift_diffusion(family(g + h));
    const DriftDiffusion dn = build_drift_diffusion(family(g - h));
    const Mat dW = (up.W - dn.W) / (2.0 * h);
    const Mat dY = (up.Y - dn.Y) / (2.0 * h);
    const Mat dth = steady_state_derivative(dd0, st.theta, dW, dY);
    return exponent_derivative(st, dth);
}

double rel_change(const Mat& a, const Mat& b)
{
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    if (scale == 0.0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

} // namespace

ChiMatrix chi_matrix(const ModelFamily& family, double g, double fd_step, double richardson_tol)
{
    const double h = fd_step > 0 ? fd_step : default_fd_step(g);
    const DriftDiffusion dd0 = build_drift_diffusion(family(g));
    const CovarianceState st = steady_state(dd0);
    ChiMatrix out;
    out.fd_step = h;
    out.chi = chi_at_step(family, g, h, dd0, st);
    const Mat half = chi_at_step(family, g, h / 2.0, dd0, st);
    out.richardson_change = rel_change(out.chi, half);
    // steps perturbed by k 2^-10 leave the truncation error unchanged, so the
    // spread measures the rounding noise of the evaluation itself
    out.roundoff_floor = 0.0;
    for (int k = 1; k <= 4; ++k) {
        const double f = 1.0 + k * 0x1p-10;
        out.roundoff_floor = std::max(out.roundoff_floor, rel_change(out.chi, chi_at_step(family, g, h * f, dd0, st)));
        out.roundoff_floor = std::max(out.roundoff_floor, rel_change(half, chi_at_step(family, g, h * f / 2.0, dd0, st)));
    }
    if (!(out.richardson_change <= richardson_tol + 10.0 * out.roundoff_floor)) {
        std::ostringstream os;
        os << "Richardson check failed at g = " << g << ": relative change " << out.richardson_change
           << " (rounding floor " << out.roundoff_floor << ")";
        throw SolveFailure(os.str());
    }
    return out;
}

ChiMatrix chi_matrix_fd(const ModelFamily& family, double g, double fd_step)
{
    auto M_at = [&](double x) { return theta_to_M(steady_state(build_drift_diffusion(family(x)))).M; };
    ChiMatrix out;
    out.fd_step = fd_step;
    out.chi = symmetrize((M_at(g + fd_step) - M_at(g - fd_step)) / (2.0 * fd_step));
    const Mat half = symmetrize((M_at(g + fd_step / 2) - M_at(g - fd_step / 2)) / fd_step);
    out.richardson_change = rel_change(out.chi, half);
    return out;
}

double qfi_kmb_gaussian(const CovarianceState& state, const ChiMatrix& chi)
{
    if (chi.chi.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    const GaussianKernel k = gaussian_kernel(state);
    const CMat Int = s_integral(k, chi.chi);
    const cplx v = 0.5 * (chi.chi.cast<cplx>() * k.Theta_c * Int * k.Theta_c.transpose()).trace();
    return v.real();
}

double qfi_kmb_density_matrix(const CMat& rho, const CMat& drho, double floor)
{
    const FlooredEig f = floored(rho, floor);
    const CMat D = f.V.adjoint() * drho * f.V;
    const Eigen::Index n = f.p.size();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) s += std::norm(D(i, j)) * log_kernel(f.p(i), f.p(j));
    return s;
}

CMat log_derivative(const CMat& rho, const CMat& drho, double floor)
{
    const FlooredEig f = floored(rho, floor);
    CMat D = f.V.adjoint() * drho * f.V;
    const Eigen::Index n = f.p.size();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) D(i, j) *= log_kernel(f.p(i), f.p(j));
    return f.V * D * f.V.adjoint();
}

cplx kmb_inner(const CMat& rho, const CMat& A, const CMat& B, double floor)
{
    const FlooredEig f = floored(rho, floor);
    const CMat Ap = f.V.adjoint() * A * f.V;
    const CMat Bp = f.V.adjoint() * B * f.V;
    const Eigen::Index n = f.p.size();
    cplx s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) s += std::conj(Ap(j, i)) * Bp(j, i) / log_kernel(f.p(i), f.p(j));
    return s;
}

std::vector<CVec> jump_coefficients(const QuadraticModel& model)
{
    const int n = model.n_modes;
    std::vector<CVec> out;
    const cplx I(0.0, 1.0);
    for (int k = 0; k < n; ++k) {
        const double gm = model.gamma_minus(k, k), gp = model.gamma_plus(k, k);
        if (gm > 0) {
            CVec c = CVec::Zero(2 * n);
            c(k) = std::sqrt(gm / 2.0);
            c(n + k) = I * std::sqrt(gm / 2.0);
            out.push_back(c);
        }
        if (gp > 0) {
            CVec c = CVec::Zero(2 * n);
            c(k) = std::sqrt(gp / 2.0);
            c(n + k) = -I * std::sqrt(gp / 2.0);
            out.push_back(c);
        }
    }
    return out;
}

Mat drift_from_jumps(const Mat& H_R, const std::vector<CVec>& jumps)
{
    const Eigen::Index dim = H_R.rows();
    CMat CC = CMat::Zero(dim, dim);
    for (const auto& c : jumps) CC += c * c.adjoint();
    return symplectic_form(static_cast<int>(dim / 2)) * (H_R - CC.imag());
}

namespace {

double metric_with_drift(const CovarianceState& state, const Mat& A, const ChiMatrix& chi)
{
    if (chi.chi.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    Eigen::EigenSolver<Mat> es(A, false);
    const double max_re = es.eigenvalues().real().maxCoeff();
    if (!(max_re < 0.0)) {
        std::ostringstream os;
        os << "A_drift not Hurwitz (max Re = " << max_re << ")";
        throw NonConvergentF(os.str());
    }
    const GaussianKernel k = gaussian_kernel(state);
    const CMat Int = s_integral(k, chi.chi);
    // A^T F + F A = -chi
    const Mat F = symmetrize(solve_lyapunov(Mat(A.transpose()), Mat(-chi.chi)));
    const cplx v = 0.5 * (Int * k.Theta_c.transpose() * F.cast<cplx>() * k.Theta_c).trace();
    return v.real();
}

} // namespace

double metric_gaussian(const CovarianceState& state, const DriftDiffusion& dd, const ChiMatrix& chi)
{
    return metric_with_drift(state, -dd.W, chi);
}

double metric_gaussian(const CovarianceState& state, const Mat& H_R, const std::vector<CVec>& jumps,
                       const ChiMatrix& chi)
{
    return metric_with_drift(state, drift_from_jumps(H_R, jumps), chi);
}

MetricPoint metric_point(const ModelFamily& family, double g, double fd_step)
{
    const DriftDiffusion dd = build_drift_diffusion(family(g));
    const CovarianceState st = steady_state(dd);
    const ChiMatrix chi = chi_matrix(family, g, fd_step);
    MetricPoint p;
    p.g = g;
    p.qfi_kmb = qfi_kmb_gaussian(st, chi);
    p.zeta = metric_gaussian(st, dd, chi);
    p.tau_g = p.qfi_kmb > 0 ? p.zeta / p.qfi_kmb : 0.0;
    return p;
}

CVec drazin_apply(const BiorthogonalSpectrum& spectrum, const CVec& x)
{
    const Eigen::Index n = spectrum.eigenvalues.size();
    int zeros = 0;
    for (Eigen::Index k = 0; k < n; ++k)
        if (std::abs(spectrum.eigenvalues(k)) < 1e-10) ++zeros;
    if (zeros > 1) throw MultipleSteadyStates(std::to_string(zeros) + " eigenvalues within 1e-10 of zero");
    const Eigen::Index z = zero_mode_index(spectrum);
    CVec a = spectrum.left_vectors.adjoint() * x;
    for (Eigen::Index k = 0; k < n; ++k) a(k) = k == z ? cplx(0.0, 0.0) : a(k) / spectrum.eigenvalues(k);
    return spectrum.right_vectors * a;
}

CVec drazin_apply(const FockLiouvillian& L, const CVec& pi, const CVec& x)
{
    (void)pi;
    const FockSpectrum fs = fock_gap_and_spectrum(L, true);
    return drazin_apply(fs.spectrum, x);
}

CVec drazin_solve(const FockLiouvillian& L, const CVec& pi, const CVec& x)
{
    const int n = L.cutoff;
    const Eigen::Index dim = static_cast<Eigen::Index>(n) * n;
    cplx tr = 0.0;
    for (int i = 0; i < n; ++i) tr += x(static_cast<Eigen::Index>(i) * (n + 1));
    CVec b = x - pi * tr;
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(L.matrix.nonZeros() + n);
    for (Eigen::Index c = 0; c < L.matrix.outerSize(); ++c)
        for (SpMat::InnerIterator it(L.matrix, c); it; ++it)
            if (it.row() != 0) trip.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n; ++i) trip.emplace_back(0, static_cast<Eigen::Index>(i) * (n + 1), cplx(1.0, 0.0));
    SpMat A(dim, dim);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw MultipleSteadyStates("bordered Liouvillian is singular");
    b(0) = 0.0;
    const CVec y = lu.solve(b);
    if (!y.allFinite()) throw SolveFailure("Drazin solve produced non-finite values");
    return y;
}

double metric_drazin(const FockLiouvillian& L, const CMat& pi, const CMat& dpi, const CMat& dlogpi,
                     DrazinMethod method)
{
    if (dpi.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    const CVec piv = vectorize(pi);
    const CVec y = method == DrazinMethod::Spectral ? drazin_apply(L, piv, vectorize(dpi))
                                                    : drazin_solve(L, piv, vectorize(dpi));
    const CMat Y = unvectorize(y, L.cutoff);
    return -(dlogpi * Y).trace().real();
}

} // namespace dqpt
