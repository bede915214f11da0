#include "dqpt/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include "dqpt/errors.hpp"

namespace dqpt {

namespace {

std::vector<std::vector<Eigen::Index>> sparsity_components(const SpMat& m)
{
    const Eigen::Index n = m.rows();
    std::vector<Eigen::Index> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](Eigen::Index x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (Eigen::Index c = 0; c < m.outerSize(); ++c)
        for (SpMat::InnerIterator it(m, c); it; ++it) {
            const Eigen::Index a = find(it.row()), b = find(it.col());
            if (a != b) parent[a] = b;
        }
    std::vector<Eigen::Index> label(n, -1);
    std::vector<std::vector<Eigen::Index>> comps;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index r = find(i);
        if (label[r] < 0) {
            label[r] = static_cast<Eigen::Index>(comps.size());
            comps.emplace_back();
        }
        comps[label[r]].push_back(i);
    }
    return comps;
}

} // namespace

FockOperatorSet FockOperatorSet::make(int cutoff)
{
    if (cutoff < 2) throw std::invalid_argument("Fock cutoff must be at least 2");
    FockOperatorSet s;
    s.cutoff = cutoff;
    s.a = CMat::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) s.a(n - 1, n) = std::sqrt(static_cast<double>(n));
    s.a_dagger = s.a.adjoint();
    s.number = CMat::Zero(cutoff, cutoff);
    for (int n = 0; n < cutoff; ++n) s.number(n, n) = static_cast<double>(n);
    s.identity = CMat::Identity(cutoff, cutoff);
    return s;
}

CVec vectorize(const CMat& rho)
{
    return Eigen::Map<const CVec>(rho.data(), rho.size());
}

CMat unvectorize(const CVec& v, int dim)
{
    return Eigen::Map<const CMat>(v.data(), dim, dim);
}

FockLiouvillian build_liouvillian(const CMat& H, const std::vector<Jump>& jumps)
{
    const Eigen::Index n = H.rows();
    const double hscale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * hscale)
        throw NonHermitianH("Hamiltonian is not Hermitian");
    const cplx I(0.0, 1.0);
    SpMat Id(n, n);
    Id.setIdentity();
    const SpMat Hs = H.sparseView();
    const SpMat HsT = CMat(H.transpose()).sparseView();
    SpMat L = -I * (SpMat(Eigen::kroneckerProduct(Id, Hs)) - SpMat(Eigen::kroneckerProduct(HsT, Id)));
    for (const auto& j : jumps) {
        if (j.rate < 0) throw std::invalid_argument("jump rate must be nonnegative");
        if (j.rate == 0) continue;
        const SpMat Ls = j.op.sparseView();
        const SpMat Lc = CMat(j.op.conjugate()).sparseView();
        const CMat LdL = j.op.adjoint() * j.op;
        const SpMat LdLs = LdL.sparseView();
        const SpMat LdLT = CMat(LdL.transpose()).sparseView();
        L += j.rate * (SpMat(Eigen::kroneckerProduct(Lc, Ls)) - 0.5 * SpMat(Eigen::kroneckerProduct(Id, LdLs)) -
                       0.5 * SpMat(Eigen::kroneckerProduct(LdLT, Id)));
    }
    L.prune(cplx(0.0, 0.0));
    L.makeCompressed();
    FockLiouvillian out;
    out.matrix = L;
    out.cutoff = static_cast<int>(n);
    return out;
}

double top_population(const CMat& rho)
{
    const Eigen::Index n = rho.rows();
    const Eigen::Index k = std::max<Eigen::Index>(1, n / 10);
    double s = 0.0;
    for (Eigen::Index i = n - k; i < n; ++i) s += rho(i, i).real();
    return s;
}

CMat fock_steady_state(const FockLiouvillian& L, const FockSteadyOptions& opts)
{
    const int n = L.cutoff;
    const Eigen::Index dim = static_cast<Eigen::Index>(n) * n;
    // The steady state lives in the symmetry block containing the (0,0) entry
    // (all populations); solve there when the block holds every diagonal index.
    const auto comps = sparsity_components(L.matrix);
    std::vector<Eigen::Index> local(dim, -1);
    const std::vector<Eigen::Index>* block = nullptr;
    for (const auto& c : comps)
        if (std::find(c.begin(), c.end(), Eigen::Index(0)) != c.end()) block = &c;
    bool restrict_ok = true;
    for (Eigen::Index i = 0; i < dim; ++i) local[i] = -1;
    for (std::size_t k = 0; k < block->size(); ++k) local[(*block)[k]] = static_cast<Eigen::Index>(k);
    for (int i = 0; i < n; ++i)
        if (local[static_cast<Eigen::Index>(i) * (n + 1)] < 0) restrict_ok = false;
    if (!restrict_ok)
        for (Eigen::Index i = 0; i < dim; ++i) local[i] = i;
    const Eigen::Index m = restrict_ok ? static_cast<Eigen::Index>(block->size()) : dim;
    const Eigen::Index row0 = local[0];

    // replace the (0,0) population equation by the trace condition
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(L.matrix.nonZeros() + n);
    for (Eigen::Index c = 0; c < L.matrix.outerSize(); ++c)
        for (SpMat::InnerIterator it(L.matrix, c); it; ++it) {
            const Eigen::Index r = local[it.row()], cc = local[it.col()];
            if (r >= 0 && cc >= 0 && r != row0) trip.emplace_back(r, cc, it.value());
        }
    for (int i = 0; i < n; ++i) trip.emplace_back(row0, local[static_cast<Eigen::Index>(i) * (n + 1)], cplx(1.0, 0.0));
    SpMat A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();

    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw MultipleSteadyStates("bordered Liouvillian is singular: " + lu.lastErrorMessage());
    CVec b = CVec::Zero(m);
    b(row0) = 1.0;
    const CVec vloc = lu.solve(b);
    if (lu.info() != Eigen::Success || !vloc.allFinite()) throw MultipleSteadyStates("steady-state solve failed");
    CVec v = CVec::Zero(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        if (local[i] >= 0) v(i) = vloc(local[i]);

    CMat rho = hermitize(unvectorize(v, n));
    rho /= rho.trace();
    const double lscale = std::max(1.0, L.matrix.coeffs().cwiseAbs().maxCoeff());
    const double res = (L.matrix * vectorize(rho)).norm();
    if (!(res <= 1e-10 * lscale)) {
        std::ostringstream os;
        os << "steady-state residual " << res;
        throw SolveFailure(os.str());
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) {
        std::ostringstream os;
        os << "steady state has eigenvalue " << es.eigenvalues().minCoeff();
        throw SolveFailure(os.str());
    }
    if (opts.check_leakage) {
        const double top = top_population(rho);
        if (top > opts.leakage_tol) {
            std::ostringstream os;
            os << "top-10% population " << top << " at cutoff " << n;
            throw CutoffTooSmall(os.str());
        }
    }
    return rho;
}


FockSpectrum fock_gap_and_spectrum(const FockLiouvillian& L, bool with_vectors)
{
    const Eigen::Index dim = L.matrix.rows();
    const auto comps = sparsity_components(L.matrix);
    const CMat full = with_vectors ? L.dense() : CMat();

    FockSpectrum out;
    auto& sp = out.spectrum;
    sp.eigenvalues.resize(dim);
    if (with_vectors) {
        sp.right_vectors = CMat::Zero(dim, dim);
        sp.left_vectors = CMat::Zero(dim, dim);
    }
    sp.condition_estimate = 1.0;
    Eigen::Index offset = 0;
    for (const auto& comp : comps) {
        const Eigen::Index m = static_cast<Eigen::Index>(comp.size());
        CMat block(m, m);
        if (with_vectors) {
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < m; ++j) block(i, j) = full(comp[i], comp[j]);
        } else {
            block.setZero();
            std::vector<Eigen::Index> pos(dim, -1);
            for (Eigen::Index i = 0; i < m; ++i) pos[comp[i]] = i;
            for (Eigen::Index j = 0; j < m; ++j)
                for (SpMat::InnerIterator it(L.matrix, comp[j]); it; ++it) block(pos[it.row()], j) = it.value();
        }
        if (with_vectors) {
            const BiorthogonalSpectrum bs = biorthogonal_decompose(block, 1e14);
            sp.condition_estimate = std::max(sp.condition_estimate, bs.condition_estimate);
            for (Eigen::Index k = 0; k < m; ++k) {
                sp.eigenvalues(offset + k) = bs.eigenvalues(k);
                for (Eigen::Index i = 0; i < m; ++i) {
                    sp.right_vectors(comp[i], offset + k) = bs.right_vectors(i, k);
                    sp.left_vectors(comp[i], offset + k) = bs.left_vectors(i, k);
                }
            }
        } else {
            Eigen::ComplexEigenSolver<CMat> es(block, false);
            if (es.info() != Eigen::Success) throw DefectiveMatrix("eigensolver did not converge");
            sp.eigenvalues.segment(offset, m) = es.eigenvalues();
        }
        offset += m;
    }
    out.zero_index = zero_mode_index(sp);
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < dim; ++k)
        if (k != out.zero_index) gap = std::min(gap, -sp.eigenvalues(k).real());
    out.gap = gap;
    return out;
}

namespace {

struct FlooredEig {
    Vec p;
    CMat V;
};

FlooredEig floored_eig(const CMat& rho, double floor)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(rho));
    FlooredEig f;
    f.V = es.eigenvectors();
    f.p = es.eigenvalues().cwiseMax(floor);
    f.p /= f.p.sum();
    return f;
}

} // namespace

double fock_entropy(const CMat& rho, double floor)
{
    const auto f = floored_eig(rho, floor);
    double s = 0.0;
    for (Eigen::Index i = 0; i < f.p.size(); ++i) s -= f.p(i) * std::log(f.p(i));
    return s;
}

double fock_relative_entropy(const CMat& rho, const CMat& sigma, double floor)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(sigma), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) throw RankDeficient("reference state has negative eigenvalues");
    const auto fr = floored_eig(rho, floor);
    const auto fs = floored_eig(sigma, floor);
    double plogp = 0.0;
    for (Eigen::Index i = 0; i < fr.p.size(); ++i) plogp += fr.p(i) * std::log(fr.p(i));
    const CMat rho_f = fr.V * fr.p.cast<cplx>().asDiagonal() * fr.V.adjoint();
    const CMat rs = fs.V.adjoint() * rho_f * fs.V;
    double cross = 0.0;
    for (Eigen::Index k = 0; k < fs.p.size(); ++k) cross += std::log(fs.p(k)) * rs(k, k).real();
    return plogp - cross;
}

std::vector<CMat> fock_evolve(const LiouvillianSchedule& L_of_t, const CMat& rho0,
                              const std::vector<double>& t_grid, const FockEvolveOptions& opts)
{
    namespace ode = boost::numeric::odeint;
    using state_t = std::vector<cplx>;
    if (t_grid.empty()) return {};
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("fock_evolve: t_grid not increasing");
    const int n = static_cast<int>(rho0.rows());
    const Eigen::Index dim = rho0.size();
    state_t x(rho0.data(), rho0.data() + dim);

    auto rhs = [&](const state_t& y, state_t& dy, double t) {
        const FockLiouvillian L = L_of_t(t);
        Eigen::Map<const CVec> yv(y.data(), dim);
        Eigen::Map<CVec> dv(dy.data(), dim);
        dv = L.matrix * yv;
    };
    std::vector<CMat> out;
    auto observer = [&](const state_t& y, double t) {
        CMat r = Eigen::Map<const CMat>(y.data(), n, n);
        r = hermitize(r);
        const double tr_err = std::abs(r.trace() - cplx(1.0, 0.0));
        if (tr_err > 1e-9) {
            std::ostringstream os;
            os << "trace drifted by " << tr_err << " at t = " << t;
            throw ToleranceFailure(os.str());
        }
        if (opts.check_leakage && top_population(r) > opts.leakage_tol) {
            std::ostringstream os;
            os << "top-10% population " << top_population(r) << " at t = " << t;
            throw CutoffTooSmall(os.str());
        }
        out.push_back(std::move(r));
    };
    try {
        if (t_grid.size() == 1) {
            observer(x, t_grid[0]);
            return out;
        }
        auto stepper = ode::make_dense_output(opts.atol, opts.rtol, ode::runge_kutta_dopri5<state_t>());
        const double dt0 = std::min(opts.initial_dt, t_grid.back() - t_grid.front());
        ode::integrate_times(stepper, rhs, x, t_grid.begin(), t_grid.end(), dt0, observer,
                             ode::max_step_checker(50000000));
    } catch (const ode::odeint_error& e) {
        throw ToleranceFailure(std::string("Fock integration: ") + e.what());
    }
    return out;
}

CMat gaussian_to_fock(const CovarianceState& state, int cutoff, int padding)
{
    if (state.theta.rows() != 2) throw std::invalid_argument("gaussian_to_fock: one-mode states only");
    const GaussianExponentForm ef = theta_to_M(state);
    const int N = cutoff + padding;
    const auto ops = FockOperatorSet::make(N);
    const double s2 = std::sqrt(2.0);
    const cplx I(0.0, 1.0);
    const CMat q = (ops.a + ops.a_dagger) / s2;
    const CMat p = I * (ops.a_dagger - ops.a) / s2;
    const Mat& M = ef.M;
    const CMat h = 0.5 * (M(0, 0) * q * q + M(1, 1) * p * p + M(0, 1) * (q * p + p * q));
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(h));
    const Vec e = es.eigenvalues();
    Vec w = (-(e.array() - e.minCoeff())).exp();
    CMat rho = es.eigenvectors() * w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    CMat out = rho.topLeftCorner(cutoff, cutoff);
    out = hermitize(out);
    return out / out.trace();
}

void quadratic_model_to_fock(const QuadraticModel& model, int cutoff, CMat& H, std::vector<Jump>& jumps)
{
    if (model.n_modes != 1) throw std::invalid_argument("quadratic_model_to_fock: one-mode models only");
    const auto ops = FockOperatorSet::make(cutoff);
    const cplx A = model.A(0, 0), B = model.B(0, 0);
    H = A * ops.number + 0.5 * (B * ops.a_dagger * ops.a_dagger + std::conj(B) * ops.a * ops.a);
    H = hermitize(H);
    jumps.clear();
    if (model.gamma_minus(0, 0) > 0) jumps.push_back({ops.a, model.gamma_minus(0, 0)});
    if (model.gamma_plus(0, 0) > 0) jumps.push_back({ops.a_dagger, model.gamma_plus(0, 0)});
}

} // namespace dqpt
