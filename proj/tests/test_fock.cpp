// Truncated Fock space: Liouvillian assembly, steady states, spectra, evolution, entropies

#include <catch_amalgamated.hpp>

#include <cmath>

#include "dqpt/errors.hpp"
#include "dqpt/fock.hpp"
#include "dqpt/models.hpp"

using namespace dqpt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CMat qubit_lowering()
{
    CMat s = CMat::Zero(2, 2);
    s(0, 1) = 1.0;
    return s;
}

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("ladder operators", "[fock]")
{
    const auto ops = FockOperatorSet::make(12);
    const CMat comm = ops.a * ops.a_dagger - ops.a_dagger * ops.a;
    for (int i = 0; i < 11; ++i) REQUIRE_THAT(comm(i, i).real(), WithinAbs(1.0, 1e-14));
    REQUIRE(max_abs(ops.a_dagger * ops.a - ops.number) < 1e-14);
}

TEST_CASE("vectorization is column stacking", "[fock]")
{
    CMat x(2, 2);
    x << 1.0, 2.0, 3.0, 4.0;
    const CVec v = vectorize(x);
    REQUIRE(v(1) == cplx(3.0));
    REQUIRE(v(2) == cplx(2.0));
    REQUIRE(max_abs(unvectorize(v, 2) - x) == 0.0);
    // vec(A X B) = (B^T (x) A) vec(X)
    const auto L = build_liouvillian(CMat::Zero(2, 2), {Jump{qubit_lowering(), 1.0}});
    REQUIRE(L.vectorization == "column-stacking");
}

TEST_CASE("trace preservation and pure decay", "[fock]")
{
    const int n = 15;
    const auto ops = FockOperatorSet::make(n);
    const auto L = build_liouvillian(CMat::Zero(n, n), {Jump{ops.a, 0.7}});
    const CVec id = vectorize(ops.identity);
    REQUIRE((L.matrix.adjoint() * id).cwiseAbs().maxCoeff() < 1e-10);
    const CMat rho = fock_steady_state(L);
    REQUIRE_THAT(rho(0, 0).real(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("non-Hermitian Hamiltonian is rejected", "[fock]")
{
    CMat h = CMat::Zero(2, 2);
    h(0, 1) = 1.0;
    REQUIRE_THROWS_AS(build_liouvillian(h, {}), NonHermitianH);
}

TEST_CASE("amplitude-damped qubit spectrum", "[fock]")
{
    const double k = 0.6;
    const auto L = build_liouvillian(CMat::Zero(2, 2), {Jump{qubit_lowering(), k}});
    const auto fs = fock_gap_and_spectrum(L);
    std::vector<double> re;
    for (Eigen::Index i = 0; i < 4; ++i) {
        REQUIRE(std::abs(fs.spectrum.eigenvalues(i).imag()) < 1e-14);
        re.push_back(fs.spectrum.eigenvalues(i).real());
    }
    std::sort(re.begin(), re.end());
    REQUIRE_THAT(re[0], WithinAbs(-k, 1e-14));
    REQUIRE_THAT(re[1], WithinAbs(-k / 2, 1e-14));
    REQUIRE_THAT(re[2], WithinAbs(-k / 2, 1e-14));
    REQUIRE_THAT(re[3], WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(fs.gap, WithinRel(k / 2, 1e-12));
}

TEST_CASE("thermally pumped mode reaches detailed balance", "[fock]")
{
    const int n = 80;
    const double km = 1.0, kp = 0.3;
    const auto ops = FockOperatorSet::make(n);
    const auto L = build_liouvillian(ops.number, {Jump{ops.a, km}, Jump{ops.a_dagger, kp}});
    const CMat rho = fock_steady_state(L);
    const double nbar = kp / (km - kp);
    REQUIRE_THAT((rho * ops.number).trace().real(), WithinRel(nbar, 1e-9));
    for (int i = 0; i < 10; ++i)
        REQUIRE_THAT(rho(i, i).real(), WithinRel(std::pow(nbar, i) / std::pow(nbar + 1, i + 1), 1e-8));
}

TEST_CASE("truncation leakage is detected", "[fock]")
{
    const int n = 10;
    const auto ops = FockOperatorSet::make(n);
    const auto L = build_liouvillian(ops.number, {Jump{ops.a, 1.0}, Jump{ops.a_dagger, 0.5}});
    REQUIRE_THROWS_AS(fock_steady_state(L), CutoffTooSmall);
    FockSteadyOptions o;
    o.check_leakage = false;
    REQUIRE_NOTHROW(fock_steady_state(L, o));
}

TEST_CASE("Kerr steady state", "[fock][models]")
{
    KerrParams p;
    p.detuning = -2.5;
    p.kerr_U = 0.1;
    const int n = 50;
    const auto k = kerr_model(p, n);
    REQUIRE(max_abs(k.H - k.H.adjoint()) == 0.0);
    const auto L = build_liouvillian(k.H, k.jumps);
    const CMat rho = fock_steady_state(L);
    const double lscale = L.matrix.coeffs().cwiseAbs().maxCoeff();
    REQUIRE((L.matrix * vectorize(rho)).norm() <= 1e-10 * lscale);
    Eigen::SelfAdjointEigenSolver<CMat> es(rho);
    REQUIRE(es.eigenvalues().minCoeff() >= -1e-10);
    REQUIRE_THAT(rho.trace().real(), WithinAbs(1.0, 1e-12));
    // weak Z2 symmetry: the steady state commutes with photon parity
    const CMat P = parity_operator(n);
    REQUIRE(max_abs(P * rho - rho * P) <= 1e-10);
}

TEST_CASE("Kerr Liouvillian splits into parity sectors", "[fock][models]")
{
    KerrParams p;
    p.detuning = -1.0;
    p.kerr_U = 0.3;
    const int n = 20;
    const auto k = kerr_model(p, n);
    const CMat P = parity_operator(n);
    REQUIRE(max_abs(P * k.H - k.H * P) == 0.0);
    // the jump flips parity, so the dissipator maps parity sectors onto themselves
    const CMat a = k.jumps[0].op;
    REQUIRE(max_abs(P * a + a * P) == 0.0);
    // gap from the block-diagonal solve agrees with a dense solve of the whole matrix
    const auto L = build_liouvillian(k.H, k.jumps);
    const auto fs = fock_gap_and_spectrum(L, false);
    Eigen::ComplexEigenSolver<CMat> es(L.dense(), false);
    std::vector<double> re;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) re.push_back(-es.eigenvalues()(i).real());
    std::sort(re.begin(), re.end());
    REQUIRE_THAT(re[1], WithinRel(fs.gap, 1e-8));
    REQUIRE(std::abs(re[0]) < 1e-9);
}

TEST_CASE("Kerr mean photon number grows towards the thermodynamic limit", "[fock][models]")
{
    KerrParams p;
    p.detuning = 0.0;
    double last = 0.0;
    for (double inv_u : {2.0, 4.0, 8.0}) {
        p.kerr_U = 1.0 / inv_u;
        const auto k = kerr_model(p, 60);
        const CMat rho = fock_steady_state(build_liouvillian(k.H, k.jumps));
        const double nb = (rho * FockOperatorSet::make(60).number).trace().real();
        REQUIRE(nb > last);
        last = nb;
    }
}

TEST_CASE("Gaussian single-mode spectrum and gap", "[fock][spectral]")
{
    QuadraticModel m;
    m.n_modes = 1;
    m.A = CMat::Constant(1, 1, 1.0);
    m.B = CMat::Constant(1, 1, 0.3);
    m.gamma_minus = Mat::Constant(1, 1, 1.0);
    m.gamma_plus = Mat::Zero(1, 1);
    CMat H;
    std::vector<Jump> jumps;
    quadratic_model_to_fock(m, 30, H, jumps);
    const auto fs = fock_gap_and_spectrum(build_liouvillian(H, jumps), false);
    REQUIRE_THAT(fs.gap, WithinRel(liouvillian_gap(build_drift_diffusion(m)), 1e-6));
}

TEST_CASE("Gaussian states in the Fock basis", "[fock]")
{
    const double nbar = 1.5;
    const CMat rho = gaussian_to_fock(CovarianceState((nbar + 0.5) * Mat::Identity(2, 2), 1), 60);
    for (int i = 0; i < 8; ++i)
        REQUIRE_THAT(rho(i, i).real(), WithinRel(std::pow(nbar, i) / std::pow(nbar + 1, i + 1), 1e-9));
    // squeezed steady state of a one-mode model matches the Fock steady state
    QuadraticModel m;
    m.n_modes = 1;
    m.A = CMat::Constant(1, 1, 1.0);
    m.B = CMat::Constant(1, 1, 0.4);
    m.gamma_minus = Mat::Constant(1, 1, 0.5);
    m.gamma_plus = Mat::Zero(1, 1);
    const auto dd = build_drift_diffusion(m);
    const auto th = steady_state(dd);
    CMat H;
    std::vector<Jump> jumps;
    quadratic_model_to_fock(m, 60, H, jumps);
    const CMat pf = fock_steady_state(build_liouvillian(H, jumps));
    REQUIRE(max_abs(gaussian_to_fock(th, 60) - pf) < 1e-9);
}

TEST_CASE("entropies and relative entropies", "[fock]")
{
    CMat r = CMat::Zero(3, 3), s = CMat::Zero(3, 3);
    r.diagonal() << 0.5, 0.3, 0.2;
    s.diagonal() << 0.2, 0.2, 0.6;
    double kl = 0.0;
    for (int i = 0; i < 3; ++i) kl += r(i, i).real() * std::log(r(i, i).real() / s(i, i).real());
    REQUIRE_THAT(fock_relative_entropy(r, s), WithinRel(kl, 1e-13));
    REQUIRE_THAT(fock_relative_entropy(r, r), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(fock_entropy(r), WithinRel(-(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2)), 1e-13));
}

TEST_CASE("relative entropy matches the Gaussian closed form", "[fock][gaussian]")
{
    const CovarianceState a(1.5 * Mat::Identity(2, 2), 1), b(2.5 * Mat::Identity(2, 2), 1);
    const double dg = relative_entropy(a, b);
    const double df = fock_relative_entropy(gaussian_to_fock(a, 60), gaussian_to_fock(b, 60));
    REQUIRE_THAT(df, WithinRel(dg, 1e-6));
    // squeezed, rotated pair
    Mat ta(2, 2), tb(2, 2);
    ta << 1.2, 0.3, 0.3, 0.6;
    tb << 0.9, -0.2, -0.2, 1.1;
    const CovarianceState c(ta, 1), d(tb, 1);
    REQUIRE_THAT(fock_relative_entropy(gaussian_to_fock(c, 60), gaussian_to_fock(d, 60)),
                 WithinRel(relative_entropy(c, d), 1e-6));
    // the reference must be the warmer state: otherwise the tail of rho sits where
    // sigma's eigenvalues fall below the 1e-14 floor
    Mat te(2, 2);
    te << 2.1, 0.4, 0.4, 1.3;
    const CovarianceState e(te, 1);
    REQUIRE_THAT(fock_relative_entropy(gaussian_to_fock(d, 60), gaussian_to_fock(e, 60)),
                 WithinRel(relative_entropy(d, e), 1e-6));
}

TEST_CASE("evolution: decay, fixed point, trace and Hermiticity", "[fock][property]")
{
    const int n = 6;
    const double k = 0.8;
    const auto ops = FockOperatorSet::make(n);
    const auto L = build_liouvillian(0.3 * ops.number, {Jump{ops.a, k}});
    CMat rho0 = CMat::Zero(n, n);
    rho0(1, 1) = 1.0;
    std::vector<double> ts{0.0, 0.5, 1.0, 2.0, 4.0};
    const auto traj = fock_evolve([&](double) { return L; }, rho0, ts);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        REQUIRE_THAT(traj[i](1, 1).real(), WithinAbs(std::exp(-k * ts[i]), 1e-8));
        REQUIRE_THAT(traj[i].trace().real(), WithinAbs(1.0, 1e-9));
        REQUIRE(max_abs(traj[i] - traj[i].adjoint()) <= 1e-9);
    }
    KerrParams p;
    p.detuning = -2.0;
    p.kerr_U = 0.5;
    const auto kk = kerr_model(p, 20);
    const auto LK = build_liouvillian(kk.H, kk.jumps);
    FockSteadyOptions so;
    so.check_leakage = false;
    const CMat pi = fock_steady_state(LK, so);
    const auto fixed = fock_evolve([&](double) { return LK; }, pi, {0.0, 1.0, 5.0});
    for (const auto& r : fixed) REQUIRE(max_abs(r - pi) < 1e-8);
}
