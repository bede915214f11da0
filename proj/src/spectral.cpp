#include "dqpt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dqpt/errors.hpp"

namespace dqpt {

BiorthogonalSpectrum biorthogonal_decompose(const CMat& matrix, double max_condition)
{
    const Eigen::Index n = matrix.rows();
    if (matrix.cols() != n) throw std::invalid_argument("biorthogonal_decompose: matrix not square");
    Eigen::ComplexEigenSolver<CMat> es(matrix, true);
    if (es.info() != Eigen::Success) throw DefectiveMatrix("eigensolver did not converge");

    BiorthogonalSpectrum out;
    out.eigenvalues = es.eigenvalues();
    out.right_vectors = es.eigenvectors();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double nrm = out.right_vectors.col(i).norm();
        if (!(nrm > 0)) throw DefectiveMatrix("zero right eigenvector");
        out.right_vectors.col(i) /= nrm;
    }
    Eigen::PartialPivLU<CMat> lu(out.right_vectors);
    const CMat inv = lu.inverse();
    if (!inv.allFinite()) throw DefectiveMatrix("eigenvector matrix is singular (Jordan block)");
    // 1-norm condition number of the eigenvector matrix
    auto norm1 = [](const CMat& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); };
    out.condition_estimate = norm1(out.right_vectors) * norm1(inv);
    if (!(out.condition_estimate < max_condition)) {
        std::ostringstream os;
        os << "eigenvector condition number " << out.condition_estimate << " exceeds " << max_condition;
        throw DefectiveMatrix(os.str());
    }
    out.left_vectors = inv.adjoint();
    const double err = (out.left_vectors.adjoint() * out.right_vectors - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (err > 1e-8) throw DefectiveMatrix("biorthonormality violated by " + std::to_string(err));
    return out;
}

double liouvillian_gap(const DriftDiffusion& dd)
{
    require_stable(dd, "liouvillian_gap");
    Eigen::EigenSolver<Mat> es(dd.W, false);
    return es.eigenvalues().real().cwiseAbs().minCoeff();
}

GapCurve gap_curve(const ModelFamily& family, const std::vector<double>& g_values)
{
    GapCurve c;
    c.g_values = g_values;
    const std::size_t n = g_values.size();
    c.gaps.resize(n);
    c.d_gap_dg.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            c.gaps[i] = liouvillian_gap(build_drift_diffusion(family(g_values[i])));
        } catch (const UnstableDrift& e) {
            std::ostringstream os;
            os << "g = " << g_values[i] << ": " << e.what();
            throw UnstableDrift(os.str());
        }
    }
    if (n >= 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i == 0 ? 0 : i - 1;
            const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
            c.d_gap_dg[i] = (c.gaps[hi] - c.gaps[lo]) / (g_values[hi] - g_values[lo]);
        }
    }
    return c;
}

double gap_derivative(const ModelFamily& family, double g, double h)
{
    const double up = liouvillian_gap(build_drift_diffusion(family(g + h)));
    const double dn = liouvillian_gap(build_drift_diffusion(family(g - h)));
    return (up - dn) / (2.0 * h);
}

Eigen::Index zero_mode_index(const BiorthogonalSpectrum& s)
{
    Eigen::Index idx = 0;
    s.eigenvalues.cwiseAbs().minCoeff(&idx);
    return idx;
}

double integral_relaxation_time(const BiorthogonalSpectrum& spectrum, const CVec& F,
                                const CVec& kmb_overlaps)
{
    const Eigen::Index n = spectrum.eigenvalues.size();
    if (F.size() != spectrum.right_vectors.rows() || kmb_overlaps.size() != n)
        throw std::invalid_argument("integral_relaxation_time: size mismatch");
    const Eigen::Index z = zero_mode_index(spectrum);
    const CVec a = spectrum.left_vectors.adjoint() * F;
    cplx num = 0.0, den = 0.0;
    double scale = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (k == z) continue;
        const cplx ab = a(k) * kmb_overlaps(k);
        num += ab / spectrum.eigenvalues(k);
        den += ab;
        scale += std::abs(ab);
    }
    if (std::abs(den) < 1e-12 * scale || scale == 0.0)
        throw DegenerateOverlap("denominator of the relaxation-time ratio vanishes");
    return -(num / den).real();
}

SoftMode soft_mode_projection(const DriftDiffusion& dd, const CovarianceState& theta, bool check_identity)
{
    const BiorthogonalSpectrum sp = biorthogonal_decompose(dd.W.cast<cplx>());
    const Eigen::Index n = sp.eigenvalues.size();
    Eigen::Index s = 0;
    sp.eigenvalues.real().minCoeff(&s);
    const cplx ls = sp.eigenvalues(s);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == s) continue;
        const cplx lj = sp.eigenvalues(j);
        const bool tie = std::abs(lj.real() - ls.real()) <= 1e-10;
        const bool partner = std::abs(lj - std::conj(ls)) <= 1e-10 && std::abs(ls.imag()) > 1e-10;
        if (tie && !partner) {
            std::ostringstream os;
            os << "eigenvalues " << ls << " and " << lj << " tie for the gap";
            throw DegenerateSoftMode(os.str());
        }
    }

    SoftMode out;
    out.lambda_s = ls;
    // left eigenvector of W as a functional on R: w^dag W = lambda w^dag
    CVec w = sp.left_vectors.col(s);
    const cplx norm = w.adjoint() * sp.right_vectors.col(s);
    w /= std::conj(norm);
    const CMat th = theta.theta.cast<cplx>();
    out.theta_proj = (w.adjoint() * th * w)(0, 0).real();
    out.y_proj = (w.adjoint() * dd.Y.cast<cplx>() * w)(0, 0).real();
    out.identity_ratio = out.theta_proj * 2.0 * ls.real() / out.y_proj;
    if (check_identity && !(std::abs(out.identity_ratio - 1.0) <= 1e-6)) {
        std::ostringstream os;
        os << "soft-mode Lyapunov identity ratio " << out.identity_ratio;
        throw SolveFailure(os.str());
    }

    // Williamson modes: z = sqrt(2 nu) L^-T u for K u = -2 nu u; a = Re z, b = Im z
    const WilliamsonFactor f = WilliamsonFactor::of(theta.theta);
    const Eigen::Index dim = theta.theta.rows();
    const Eigen::Index nm = dim / 2;
    Mat basis(dim, dim);
    std::vector<double> nus;
    Eigen::Index col = 0;
    for (Eigen::Index k = 0; k < dim; ++k) {
        if (f.d(k) >= 0) continue;
        const double nu = -f.d(k) / 2.0;
        const CVec z = std::sqrt(2.0 * nu) *
                       CMat(f.L.transpose().cast<cplx>()).triangularView<Eigen::Upper>().solve(CVec(f.U.col(k)));
        basis.col(col) = z.real();
        basis.col(col + nm) = z.imag();
        nus.push_back(nu);
        ++col;
    }
    if (col != nm) throw NonPhysical("symplectic spectrum is not paired");
    const CVec c = basis.cast<cplx>().partialPivLu().solve(w);
    Eigen::Index best = 0;
    double best_w = -1.0;
    for (Eigen::Index k = 0; k < nm; ++k) {
        const double wt = std::norm(c(k)) + std::norm(c(k + nm));
        if (wt > best_w) {
            best_w = wt;
            best = k;
        }
    }
    Mat ab(dim, 2);
    ab.col(0) = basis.col(best);
    ab.col(1) = basis.col(best + nm);
    out.theta_s = symmetrize(ab.transpose() * theta.theta * ab);
    out.nu_s = std::sqrt(out.theta_s.determinant());
    return out;
}

} // namespace dqpt
