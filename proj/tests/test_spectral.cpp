// Biorthogonal spectra, drift-matrix gaps, relaxation times, soft-mode projection

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dqpt/errors.hpp"
#include "dqpt/fock.hpp"
#include "dqpt/models.hpp"
#include "dqpt/spectral.hpp"

using namespace dqpt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

QuadraticModel single_mode(double omega, double kappa)
{
    QuadraticModel m;
    m.n_modes = 1;
    m.A = CMat::Constant(1, 1, omega);
    m.B = CMat::Zero(1, 1);
    m.gamma_minus = Mat::Constant(1, 1, kappa);
    m.gamma_plus = Mat::Zero(1, 1);
    return m;
}

void check_biorthonormal(const BiorthogonalSpectrum& s)
{
    const Eigen::Index n = s.eigenvalues.size();
    const CMat G = s.left_vectors.adjoint() * s.right_vectors;
    REQUIRE((G - CMat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-8);
    const CMat P = s.right_vectors * s.left_vectors.adjoint();
    REQUIRE((P - CMat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-7);
}

} // namespace

TEST_CASE("Hermitian matrices have orthonormal eigenvectors", "[spectral]")
{
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    CMat h(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) h(i, j) = cplx(nd(rng), nd(rng));
    h = hermitize(h);
    const auto s = biorthogonal_decompose(h);
    check_biorthonormal(s);
    REQUIRE(s.condition_estimate < 10.0);
    REQUIRE((s.left_vectors - s.right_vectors).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Jordan block is defective", "[spectral]")
{
    CMat j = CMat::Zero(2, 2);
    j(0, 1) = 1.0;
    REQUIRE_THROWS_AS(biorthogonal_decompose(j), DefectiveMatrix);
}

TEST_CASE("random non-normal matrices decompose biorthonormally", "[spectral][property]")
{
    std::mt19937 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 6;
        CMat m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = cplx(nd(rng), nd(rng));
        const auto s = biorthogonal_decompose(m);
        check_biorthonormal(s);
        REQUIRE((m * s.right_vectors - s.right_vectors * s.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("Dicke drift spectrum at g = 0.3", "[spectral]")
{
    DickeParams p;
    p.g = 0.3;
    const auto dd = build_drift_diffusion(dicke_model(p));
    const auto s = biorthogonal_decompose(dd.W.cast<cplx>());
    check_biorthonormal(s);
    for (Eigen::Index i = 0; i < 4; ++i) {
        REQUIRE(s.eigenvalues(i).real() > 0);
        // conjugate partner present
        double best = 1e9;
        for (Eigen::Index j = 0; j < 4; ++j) best = std::min(best, std::abs(s.eigenvalues(j) - std::conj(s.eigenvalues(i))));
        REQUIRE(best < 1e-12);
    }
    // roots of the characteristic polynomial det(W - x) from its coefficients
    Eigen::MatrixXd Wm = dd.W;
    double c1 = -Wm.trace();
    REQUIRE_THAT(s.eigenvalues.sum().real(), WithinAbs(-c1, 1e-12));
    REQUIRE_THAT(s.eigenvalues.prod().real(), WithinRel(Wm.determinant(), 1e-10));
}

TEST_CASE("single-mode and decoupled Dicke gaps", "[spectral]")
{
    REQUIRE_THAT(liouvillian_gap(build_drift_diffusion(single_mode(1.0, 0.2))), WithinRel(0.1, 1e-12));
    DickeParams p;
    p.g = 0.0;
    // the atom is undamped at g = 0, so the drift is only marginally stable
    REQUIRE_THROWS_AS(liouvillian_gap(build_drift_diffusion(dicke_model(p))), UnstableDrift);
    p.g = 1e-3;
    REQUIRE_THAT(liouvillian_gap(build_drift_diffusion(dicke_model(p))), WithinAbs(0.0, 1e-4));
}

TEST_CASE("gap curve of a constant family", "[spectral]")
{
    auto fam = [](double g) {
        auto m = single_mode(1.0, 0.2);
        m.g = g;
        return m;
    };
    const auto c = gap_curve(fam, {0.0, 0.1, 0.2, 0.3});
    for (double d : c.d_gap_dg) REQUIRE(std::abs(d) < 1e-12);
    for (double gp : c.gaps) REQUIRE_THAT(gp, WithinRel(0.1, 1e-12));
}

TEST_CASE("gap curve reports the offending coupling", "[spectral]")
{
    const auto fam = dicke_family(DickeParams{});
    try {
        gap_curve(fam, {0.3, 0.4, 0.7});
        FAIL("expected UnstableDrift");
    } catch (const UnstableDrift& e) {
        REQUIRE(std::string(e.what()).find("0.7") != std::string::npos);
    }
}

TEST_CASE("Dicke gap is positive and decreasing before the critical point", "[spectral][property]")
{
    const DickeParams p;
    const double gc = dicke_critical_coupling(p);
    std::vector<double> gs;
    for (double d = 1e-2; d > 1e-7; d /= 1.02) gs.push_back(gc - d);
    const auto c = gap_curve(dicke_family(p), gs);
    for (std::size_t i = 0; i < gs.size(); ++i) {
        REQUIRE(c.gaps[i] > 0);
        if (i > 0) REQUIRE(c.gaps[i] <= c.gaps[i - 1] * (1 + 1e-12));
    }
}

TEST_CASE("Fock Liouvillian spectrum is built from the drift spectrum", "[spectral][fock][property]")
{
    const auto m = single_mode(1.0, 0.2);
    const auto dd = build_drift_diffusion(m);
    Eigen::EigenSolver<Mat> es(dd.W);
    const cplx l1 = es.eigenvalues()(0), l2 = es.eigenvalues()(1);
    CMat H;
    std::vector<Jump> jumps;
    quadratic_model_to_fock(m, 30, H, jumps);
    const auto fs = fock_gap_and_spectrum(build_liouvillian(H, jumps), false);
    REQUIRE_THAT(fs.gap, WithinRel(liouvillian_gap(dd), 1e-6));
    // every predicted low-lying eigenvalue -(k1 l1 + k2 l2), k_i in {0,1,2}, is present
    for (int k1 = 0; k1 <= 2; ++k1)
        for (int k2 = 0; k2 <= 2; ++k2) {
            const cplx target = -(static_cast<double>(k1) * l1 + static_cast<double>(k2) * l2);
            double best = 1e9;
            for (Eigen::Index i = 0; i < fs.spectrum.eigenvalues.size(); ++i)
                best = std::min(best, std::abs(fs.spectrum.eigenvalues(i) - target));
            INFO("k = (" << k1 << "," << k2 << ")");
            REQUIRE(best <= 1e-6 * std::max(1.0, std::abs(target)));
        }
}

TEST_CASE("integral relaxation time", "[spectral]")
{
    BiorthogonalSpectrum s;
    s.eigenvalues = CVec(3);
    s.eigenvalues << 0.0, -1.0, -10.0;
    s.right_vectors = CMat::Identity(3, 3);
    s.left_vectors = CMat::Identity(3, 3);
    CVec F(3), b(3);
    F << 0.0, 1.0, 1.0;
    b << 0.0, 1.0, 1.0;
    REQUIRE_THAT(integral_relaxation_time(s, F, b), WithinRel(0.55, 1e-14));
    F << 0.0, 1.0, 0.0;
    b << 0.0, 2.0, 0.0;
    REQUIRE_THAT(integral_relaxation_time(s, F, b), WithinRel(1.0, 1e-14));
    F << 1.0, 0.0, 0.0;
    REQUIRE_THROWS_AS(integral_relaxation_time(s, F, b), DegenerateOverlap);
}

TEST_CASE("soft mode of decoupled modes", "[spectral]")
{
    // mode 1 strongly damped, mode 2 weakly damped and thermally pumped
    QuadraticModel m;
    m.n_modes = 2;
    m.A = CMat::Zero(2, 2);
    m.A(0, 0) = 1.0;
    m.A(1, 1) = 0.8;
    m.B = CMat::Zero(2, 2);
    m.gamma_minus = Mat::Zero(2, 2);
    m.gamma_minus(0, 0) = 1.0;
    m.gamma_minus(1, 1) = 0.01;
    m.gamma_plus = Mat::Zero(2, 2);
    m.gamma_plus(1, 1) = 0.005;
    const auto dd = build_drift_diffusion(m);
    const auto th = steady_state(dd);
    const auto sm = soft_mode_projection(dd, th);
    REQUIRE_THAT(sm.lambda_s.real(), WithinRel(0.0025, 1e-10));
    // thermal block with nbar = 0.005 / 0.005 = 1
    REQUIRE_THAT(sm.nu_s, WithinRel(1.5, 1e-10));
    REQUIRE_THAT(sm.identity_ratio, WithinAbs(1.0, 1e-10));
}

TEST_CASE("soft-mode identity across the Dicke sweep", "[spectral][property]")
{
    const DickeParams p;
    const double gc = dicke_critical_coupling(p);
    for (double d : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
        DickeParams q = p;
        q.g = gc - d;
        const auto dd = build_drift_diffusion(dicke_model(q));
        const auto sm = soft_mode_projection(dd, steady_state(dd));
        INFO("d = " << d);
        REQUIRE_THAT(sm.identity_ratio, WithinAbs(1.0, 1e-6));
        REQUIRE(sm.nu_s >= 0.5);
    }
}

TEST_CASE("tied soft modes are an error", "[spectral]")
{
    QuadraticModel m;
    m.n_modes = 2;
    m.A = CMat::Zero(2, 2);
    m.A(0, 0) = 1.0;
    m.A(1, 1) = 2.0;
    m.B = CMat::Zero(2, 2);
    m.gamma_minus = 0.4 * Mat::Identity(2, 2);
    m.gamma_plus = Mat::Zero(2, 2);
    const auto dd = build_drift_diffusion(m);
    REQUIRE_THROWS_AS(soft_mode_projection(dd, steady_state(dd)), DegenerateSoftMode);
}
