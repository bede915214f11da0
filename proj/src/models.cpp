#include "dqpt/models.hpp"

#include <cmath>
#include <sstream>

#include "dqpt/errors.hpp"
#include "dqpt/geometry.hpp"

namespace dqpt {

void DickeParams::validate() const
{
    if (!(omega_c > 0) || !(omega_z > 0)) throw std::invalid_argument("Dicke frequencies must be positive");
    if (!(kappa >= 0)) throw std::invalid_argument("Dicke kappa must be nonnegative");
}

QuadraticModel dicke_model(const DickeParams& p)
{
    p.validate();
    QuadraticModel m;
    m.n_modes = 2;
    m.g = p.g;
    m.A = CMat(2, 2);
    m.A << p.omega_c, p.g, p.g, p.omega_z;
    m.B = CMat(2, 2);
    m.B << 0.0, p.g, p.g, 0.0;
    m.gamma_minus = Mat::Zero(2, 2);
    m.gamma_minus(0, 0) = 2.0 * p.kappa;
    m.gamma_plus = Mat::Zero(2, 2);
    return m;
}

ModelFamily dicke_family(DickeParams p)
{
    return [p](double g) {
        DickeParams q = p;
        q.g = g;
        return dicke_model(q);
    };
}

double dicke_critical_coupling(const DickeParams& p)
{
    p.validate();
    const double gc = 0.5 * std::sqrt((p.omega_c * p.omega_c + p.kappa * p.kappa) / p.omega_c * p.omega_z);
    DickeParams q = p;
    q.g = gc;
    const double det = build_drift_diffusion(dicke_model(q)).W.determinant();
    if (std::abs(det) > 1e-8) {
        std::ostringstream os;
        os << "det W(g_c) = " << det;
        throw SolveFailure(os.str());
    }
    return gc;
}

void KerrParams::validate() const
{
    if (!(kerr_U > 0)) throw std::invalid_argument("Kerr U must be positive");
    if (!(kappa > 0)) throw std::invalid_argument("Kerr kappa must be positive");
    if (control != "detuning" && control != "drive")
        throw std::invalid_argument("Kerr control must be 'detuning' or 'drive', got '" + control + "'");
}

KerrParams KerrParams::with_control(double value) const
{
    KerrParams q = *this;
    if (control == "detuning")
        q.detuning = value;
    else
        q.drive_G = std::polar(value, std::arg(drive_G));
    return q;
}

double KerrParams::control_value() const
{
    return control == "detuning" ? detuning : std::abs(drive_G);
}

KerrOperators kerr_model(const KerrParams& p, int cutoff)
{
    p.validate();
    const auto ops = FockOperatorSet::make(cutoff);
    const CMat ad2 = ops.a_dagger * ops.a_dagger;
    const CMat a2 = ops.a * ops.a;
    KerrOperators k;
    k.H = -p.detuning * ops.number + 0.5 * p.kerr_U * ad2 * a2 + 0.5 * (p.drive_G * ad2 + std::conj(p.drive_G) * a2);
    k.H = hermitize(k.H);
    k.jumps = {Jump{ops.a, p.kappa}};
    return k;
}

CMat parity_operator(int cutoff)
{
    CMat P = CMat::Zero(cutoff, cutoff);
    for (int n = 0; n < cutoff; ++n) P(n, n) = n % 2 == 0 ? 1.0 : -1.0;
    return P;
}

double kerr_critical_detuning(const KerrParams& p)
{
    const double G2 = std::norm(p.drive_G);
    const double q = G2 - p.kappa * p.kappa / 4.0;
    if (!(q > 0)) throw std::invalid_argument("Kerr model has no parametric instability for |G| <= kappa/2");
    return -std::sqrt(q);
}

namespace {

double kerr_critical_control(const KerrParams& p)
{
    if (p.control == "detuning") return kerr_critical_detuning(p);
    return std::sqrt(p.detuning * p.detuning + p.kappa * p.kappa / 4.0);
}

} // namespace

QuadraticModel kerr_gaussian_limit(const KerrParams& p)
{
    QuadraticModel m;
    m.n_modes = 1;
    m.g = p.control_value();
    m.A = CMat::Constant(1, 1, -p.detuning);
    m.B = CMat::Constant(1, 1, p.drive_G);
    m.gamma_minus = Mat::Constant(1, 1, p.kappa);
    m.gamma_plus = Mat::Zero(1, 1);
    return m;
}

std::vector<KerrSweepPoint> kerr_control_sweep(const KerrParams& params, const std::vector<double>& control_values,
                                               const KerrSweepOptions& opts)
{
    params.validate();
    const double cc = kerr_critical_control(params);
    std::vector<KerrSweepPoint> out;
    int cutoff = opts.cutoff;
    auto steady_at = [&](double c, int n, bool check) {
        const KerrOperators k = kerr_model(params.with_control(c), n);
        FockSteadyOptions so;
        so.check_leakage = check;
        so.leakage_tol = opts.leakage_tol;
        return fock_steady_state(build_liouvillian(k.H, k.jumps), so);
    };
    for (double c : control_values) {
        CMat rho;
        for (;;) {
            try {
                rho = steady_at(c, cutoff, true);
                break;
            } catch (const CutoffTooSmall& e) {
                if (!opts.adaptive_cutoff || cutoff >= opts.max_cutoff) {
                    std::ostringstream os;
                    os << "1/U = " << 1.0 / params.kerr_U << ", control = " << c << ": " << e.what();
                    throw CutoffTooSmall(os.str());
                }
                cutoff = std::min(opts.max_cutoff, cutoff + std::max(10, cutoff / 5));
            }
        }
        const CMat rp = steady_at(c + opts.fd_step, cutoff, false);
        const CMat rm = steady_at(c - opts.fd_step, cutoff, false);
        KerrSweepPoint pt;
        pt.control = c;
        pt.distance = std::abs(c - cc);
        pt.cutoff = cutoff;
        pt.qfi = qfi_kmb_density_matrix(rho, (rp - rm) / (2.0 * opts.fd_step));
        pt.leakage = top_population(rho);
        const auto ops = FockOperatorSet::make(cutoff);
        pt.mean_photons = (rho * ops.number).trace().real();
        if (opts.compute_gap) {
            const KerrOperators k = kerr_model(params.with_control(c), cutoff);
            pt.gap = fock_gap_and_spectrum(build_liouvillian(k.H, k.jumps), false).gap;
        }
        if (opts.keep_states) pt.rho = rho;
        out.push_back(std::move(pt));
    }
    return out;
}

} // namespace dqpt
