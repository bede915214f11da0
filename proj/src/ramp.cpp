#include "dqpt/ramp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "dqpt/errors.hpp"
#include "dqpt/fit.hpp"
#include "dqpt/geometry.hpp"
#include "dqpt/spectral.hpp"

namespace dqpt {

void RampProtocol::validate() const
{
    if (!(tau_q > 0) || !std::isfinite(tau_q)) throw ConfigError("ramp tau_q must be positive and finite");
    if (!std::isfinite(g0) || !std::isfinite(gf) || g0 == gf) throw ConfigError("ramp needs finite g0 != gf");
}

namespace {

double gap_at(const ModelFamily& family, double g)
{
    return liouvillian_gap(build_drift_diffusion(family(g)));
}

double resolve_gc(double requested, const RampProtocol& p)
{
    return requested > 0 ? requested : p.gf;
}

std::string at_time(double t)
{
    std::ostringstream os;
    os.precision(17);
    os << "t = " << t;
    return os.str();
}

} // namespace

FreezeOut find_freeze_out(const ModelFamily& family, const RampProtocol& protocol, const FreezeOutOptions& opts)
{
    protocol.validate();
    const double tau = protocol.tau_q;
    const double gdot = std::abs(protocol.g_dot());

    auto h_of_t = [&](double t) {
        const double g = protocol.g_at(t);
        const double step = 1e-3 * std::abs(protocol.gf - g);
        const double gap = gap_at(family, g);
        return std::abs(gap_derivative(family, g, step)) * gdot - gap * gap;
    };

    // scan in s = tau - t, which resolves the approach to gf
    std::vector<double> s = log_ratio_grid(tau * 1e-12, tau, opts.scan_ratio);
    std::vector<double> ts;
    for (auto it = s.rbegin(); it != s.rend(); ++it) ts.push_back(tau - *it);
    if (ts.front() > 0) ts.insert(ts.begin(), 0.0);
    std::vector<double> hs(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        try {
            hs[i] = h_of_t(ts[i]);
        } catch (const NumericalError&) {
            rethrow_with_context("freeze-out scan at " + at_time(ts[i]));
        }
    }

    std::size_t k = ts.size();
    for (std::size_t i = ts.size() - 1; i-- > 0;)
        if (hs[i] < 0 && hs[i + 1] >= 0) {
            k = i;
            break;
        }
    if (k == ts.size()) {
        std::ostringstream os;
        os << "|dDelta/dg| |g_dot| = Delta^2 not met in (0, " << tau << ")";
        throw NoCrossing(os.str());
    }

    double a = ts[k], b = ts[k + 1];
    while (b - a > opts.rel_tol * std::max(std::abs(b), 1e-300)) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        (h_of_t(m) < 0 ? a : b) = m;
    }
    FreezeOut fo;
    fo.t_star = 0.5 * (a + b);
    fo.g_star = protocol.g_at(fo.t_star);
    fo.impulse_duration = tau - fo.t_star;
    fo.delta_g = std::abs(fo.g_star - resolve_gc(opts.g_c, protocol));
    return fo;
}

double sigma_na_rate_exact(const CovarianceState& state, const Mat& theta_dot, const CovarianceState& pi_g)
{
    WilliamsonFactor fr, fp;
    try {
        fr = WilliamsonFactor::of(state.theta);
    } catch (const NonPhysical& e) {
        throw SingularState(e.what());
    }
    try {
        fp = WilliamsonFactor::of(pi_g.theta);
    } catch (const NonPhysical& e) {
        throw SingularReference(e.what());
    }
    const Mat td = 0.5 * (theta_dot + theta_dot.transpose());
    return 0.5 * (trace_M_times(fr, td) - trace_M_times(fp, td));
}

double sigma_na_rate_metric(double g_dot, double zeta)
{
    return g_dot * zeta * g_dot;
}

double quasiadiabatic_action(const std::function<double(double)>& zeta_of_g, const RampProtocol& protocol,
                             double g_star, double g_c, double tol)
{
    const double sgn = g_c > protocol.g0 ? 1.0 : -1.0;
    auto integrand = [&](double u) {
        const double e = std::exp(u);
        return zeta_of_g(g_c - sgn * e) * e;
    };
    const double u0 = std::log(std::abs(g_c - protocol.g0));
    const double us = std::log(std::abs(g_c - g_star));
    using boost::math::quadrature::gauss_kronrod;
    const double integral = gauss_kronrod<double, 31>::integrate(integrand, us, u0, 15, tol);
    return std::abs(protocol.g_dot()) * integral;
}

std::vector<double> ramp_output_grid(double tau_q, double t_star, const RampOptions& opts)
{
    std::vector<double> t;
    const int nl = std::max(opts.linear_points, 2);
    for (int i = 0; i < nl; ++i) t.push_back(tau_q * i / (nl - 1));
    const double tbar = tau_q - t_star;
    const double per = std::pow(10.0, 1.0 / std::max(opts.points_per_decade, 1));
    if (tbar > 0 && opts.points_per_decade > 0) {
        // distances from t* on both sides
        const double half = 0.5 * opts.log_span_decades;
        const double lo = tbar * std::pow(10.0, -half);
        for (double d : log_ratio_grid(lo, std::min(t_star, tbar * std::pow(10.0, half)), per)) t.push_back(t_star - d);
        for (double d : log_ratio_grid(lo, tbar, per)) t.push_back(t_star + d);
        // approach to tau_q
        for (double s : log_ratio_grid(tbar * std::pow(10.0, -opts.log_span_decades), tbar, per)) t.push_back(tau_q - s);
    }
    t.push_back(t_star);
    std::vector<double> out;
    for (double x : t)
        if (x >= 0 && x <= tau_q) out.push_back(x);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [&](double x, double y) { return y - x <= 1e-14 * tau_q; }),
              out.end());
    // keep t* and tau_q exactly
    out.back() = tau_q;
    auto it = std::min_element(out.begin(), out.end(),
                               [&](double x, double y) { return std::abs(x - t_star) < std::abs(y - t_star); });
    *it = t_star;
    return out;
}

RampResult run_ramp(const ModelFamily& family, const RampProtocol& protocol, const RampOptions& opts)
{
    namespace ode = boost::numeric::odeint;
    using state_t = std::vector<double>;
    protocol.validate();
    const double gc = resolve_gc(opts.g_c, protocol);
    const double gdot = protocol.g_dot();

    RampResult r;
    r.protocol = protocol;
    FreezeOutOptions fo_opts;
    fo_opts.g_c = gc;
    r.freeze_out = find_freeze_out(family, protocol, fo_opts);
    r.t_grid = ramp_output_grid(protocol.tau_q, r.freeze_out.t_star, opts);

    CovarianceState theta0;
    try {
        theta0 = steady_state(build_drift_diffusion(family(protocol.g0)));
    } catch (const NumericalError&) {
        rethrow_with_context("initial steady state at " + at_time(0.0));
    }
    const int n = theta0.n_modes;
    const Eigen::Index dim = theta0.theta.rows();
    const std::size_t nth = static_cast<std::size_t>(dim * dim);

    auto theta_dot_at = [&](double t, const Mat& th, CovarianceState* pi_out) {
        const DriftDiffusion dd = build_drift_diffusion(family(protocol.g_at(t)));
        if (pi_out) *pi_out = steady_state(dd);
        return Mat(lyapunov_rhs(dd, th));
    };
    auto rate_at = [&](double t, const Mat& th, Mat* td_out) {
        CovarianceState pi;
        const Mat td = theta_dot_at(t, th, &pi);
        if (td_out) *td_out = td;
        return sigma_na_rate_exact(CovarianceState(th, n), td, pi);
    };

    auto rhs = [&](const state_t& y, state_t& dy, double t) {
        Eigen::Map<const Mat> th(y.data(), dim, dim);
        Eigen::Map<Mat> d(dy.data(), dim, dim);
        try {
            Mat td;
            dy[nth] = rate_at(t, Mat(th), &td);
            d = td;
        } catch (const NumericalError&) {
            rethrow_with_context("ramp at " + at_time(t));
        }
    };

    state_t x(nth + 1, 0.0);
    std::copy(theta0.theta.data(), theta0.theta.data() + nth, x.begin());
    auto observer = [&](const state_t& y, double t) {
        Eigen::Map<const Mat> th(y.data(), dim, dim);
        r.g_of_t.push_back(protocol.g_at(t));
        r.theta_of_t.push_back(symmetrize(th));
        r.sigma_na_cumulative.push_back(y[nth]);
    };
    auto stepper = ode::make_dense_output(opts.evolve.atol, opts.evolve.rtol, ode::runge_kutta_dopri5<state_t>());
    try {
        const double dt0 = std::min(opts.evolve.initial_dt, protocol.tau_q);
        ode::integrate_times(stepper, rhs, x, r.t_grid.begin(), r.t_grid.end(), dt0, observer,
                             ode::max_step_checker(50000000));
    } catch (const ode::odeint_error& e) {
        throw ToleranceFailure(std::string("ramp integration: ") + e.what());
    }

    const std::size_t nt = r.t_grid.size();
    r.sigma_na_rate_exact.resize(nt);
    r.sigma_na_rate_metric.assign(nt, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < nt; ++i) {
        const double t = r.t_grid[i];
        try {
            r.sigma_na_rate_exact[i] = rate_at(t, r.theta_of_t[i], nullptr);
        } catch (const NumericalError&) {
            rethrow_with_context("ramp output at " + at_time(t));
        }
        if (opts.compute_metric) {
            try {
                r.sigma_na_rate_metric[i] = sigma_na_rate_metric(gdot, metric_point(family, r.g_of_t[i]).zeta);
            } catch (const NumericalError&) {
                // chi or F unreliable this close to g_c; left as NaN
            }
        }
    }

    r.index_t_star = static_cast<std::size_t>(
        std::find(r.t_grid.begin(), r.t_grid.end(), r.freeze_out.t_star) - r.t_grid.begin());
    if (r.index_t_star >= nt) throw SolveFailure("t* missing from the output grid");
    r.rate_at_freeze_out = r.sigma_na_rate_exact[r.index_t_star];
    r.metric_rate_at_freeze_out = r.sigma_na_rate_metric[r.index_t_star];

    r.split.total = r.sigma_na_cumulative.back();
    r.split.quasiadiabatic = r.sigma_na_cumulative[r.index_t_star];
    r.split.impulse = r.split.total - r.split.quasiadiabatic;

    if (opts.compute_routes) {
        auto zeta = [&](double g) {
            try {
                return metric_point(family, g).zeta;
            } catch (const NumericalError&) {
                rethrow_with_context("metric quadrature at g = " + std::to_string(g));
            }
        };
        r.split.quasiadiabatic_metric = quasiadiabatic_action(zeta, protocol, r.freeze_out.g_star, gc, opts.quad_tol);

        try {
            const CovarianceState pif = steady_state(build_drift_diffusion(family(protocol.gf)));
            r.split.impulse_relative_entropy =
                relative_entropy(CovarianceState(r.theta_of_t[r.index_t_star], n), pif) -
                relative_entropy(CovarianceState(r.theta_of_t.back(), n), pif);
        } catch (const NumericalError&) {
            rethrow_with_context("impulse relative entropy");
        }
    }
    return r;
}

} // namespace dqpt
