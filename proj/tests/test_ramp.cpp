// Ramps: freeze-out, exact and metric entropy-production rates, split of the integral

#include <catch_amalgamated.hpp>

#include <cmath>

#include "dqpt/errors.hpp"
#include "dqpt/fit.hpp"
#include "dqpt/models.hpp"
#include "dqpt/ramp.hpp"

using namespace dqpt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Single mode whose gap is exactly c (g_c - g)
ModelFamily linear_gap_family(double c, double gc)
{
    return [=](double g) {
        QuadraticModel m;
        m.n_modes = 1;
        m.g = g;
        m.A = CMat::Constant(1, 1, 1.0);
        m.B = CMat::Zero(1, 1);
        m.gamma_minus = Mat::Constant(1, 1, 2.0 * c * (gc - g));
        m.gamma_plus = Mat::Zero(1, 1);
        return m;
    };
}

QuadraticModel thermal_mode(double omega, double loss, double gain)
{
    QuadraticModel m;
    m.n_modes = 1;
    m.A = CMat::Constant(1, 1, omega);
    m.B = CMat::Zero(1, 1);
    m.gamma_minus = Mat::Constant(1, 1, loss);
    m.gamma_plus = Mat::Constant(1, 1, gain);
    return m;
}

struct DickeRamp {
    DickeParams p;
    double gc;
    ModelFamily family;
    DickeRamp() : p(), gc(dicke_critical_coupling(p)), family(dicke_family(p)) {}
    RampProtocol protocol(double tau_q) const { return {gc - 1e-2, gc - 1e-15, tau_q}; }
};

const RampResult& dicke_ramp_1e3()
{
    static const RampResult r = [] {
        DickeRamp d;
        RampOptions o;
        o.g_c = d.gc;
        return run_ramp(d.family, d.protocol(1e3), o);
    }();
    return r;
}

} // namespace

TEST_CASE("freeze-out of a linear-gap toy matches the closed form", "[ramp]")
{
    const double c = 2.0, gc = 1.0, g0 = 0.9;
    const auto family = linear_gap_family(c, gc);
    FreezeOutOptions o;
    o.g_c = gc;
    std::vector<double> taus, dgs, tbars;
    for (double tau : log_space(1e2, 1e6, 9)) {
        const RampProtocol pr{g0, gc - 1e-13, tau};
        const FreezeOut fo = find_freeze_out(family, pr, o);
        // c |g_dot| = c^2 dg^2
        const double expected = std::sqrt(std::abs(pr.g_dot()) / c);
        CHECK_THAT(fo.delta_g, WithinRel(expected, 1e-7));
        CHECK(fo.t_star > 0);
        CHECK(fo.t_star < tau);
        CHECK_THAT(fo.impulse_duration, WithinRel(tau - fo.t_star, 1e-12));
        taus.push_back(tau);
        dgs.push_back(fo.delta_g);
        tbars.push_back(fo.impulse_duration);
    }
    CHECK_THAT(fit_power_law(taus, dgs, 0, kNoBound).exponent, WithinAbs(-0.5, 1e-3));
}

TEST_CASE("freeze-out fails when the ramp never becomes fast", "[ramp]")
{
    const auto family = linear_gap_family(1.0, 1.0);
    FreezeOutOptions o;
    o.g_c = 1.0;
    try {
        find_freeze_out(family, {0.0, 0.5, 1e6}, o);
        FAIL("expected NoCrossing");
    } catch (const NoCrossing& e) {
        CHECK(std::string(e.what()).find("NoCrossing") == 0);
    }
}

TEST_CASE("Dicke freeze-out distance shrinks with ramp duration", "[ramp]")
{
    const DickeRamp d;
    FreezeOutOptions o;
    o.g_c = d.gc;
    double prev = 1.0;
    for (double tau : {1e2, 1e3, 1e4, 1e5}) {
        const FreezeOut fo = find_freeze_out(d.family, d.protocol(tau), o);
        CHECK(fo.delta_g < prev);
        CHECK(fo.delta_g > 0);
        prev = fo.delta_g;
    }
}

TEST_CASE("exact rate vanishes on the steady-state manifold", "[ramp]")
{
    const DickeRamp d;
    const DriftDiffusion dd = build_drift_diffusion(d.family(0.3));
    const CovarianceState pi = steady_state(dd);
    const Mat td = lyapunov_rhs(dd, pi.theta);
    CHECK_THAT(sigma_na_rate_exact(pi, td, pi), WithinAbs(0.0, 1e-12));
}

TEST_CASE("exact rate equals minus the time derivative of the relative entropy", "[ramp]")
{
    // relaxation from a hot thermal state towards a fixed thermal NESS
    const DriftDiffusion dd = build_drift_diffusion(thermal_mode(1.0, 0.5, 0.2));
    const CovarianceState pi = steady_state(dd);
    const CovarianceState rho0(Mat::Identity(2, 2) * 3.0, 1);
    EvolveOptions eo;
    eo.rtol = 1e-12;
    eo.atol = 1e-14;
    for (double t : {0.5, 2.0, 6.0}) {
        const double h = 1e-4;
        const auto states = evolve_covariance([&](double) { return dd; }, rho0, {0.0, t - h, t, t + h}, eo);
        const double fd = -(relative_entropy(states[3], pi) - relative_entropy(states[1], pi)) / (2 * h);
        const double rate = sigma_na_rate_exact(states[2], lyapunov_rhs(dd, states[2].theta), pi);
        CHECK(rate > 0);
        CHECK_THAT(rate, WithinRel(fd, 1e-5));
    }
}

TEST_CASE("metric rate is g_dot^2 zeta", "[ramp]")
{
    CHECK(sigma_na_rate_metric(0.0, 5.0) == 0.0);
    const RampProtocol pr{0.1, 0.4, 250.0};
    const double zeta = 7.0;
    CHECK_THAT(sigma_na_rate_metric(pr.g_dot(), zeta), WithinRel(zeta * 0.3 * 0.3 / (250.0 * 250.0), 1e-14));
}

TEST_CASE("quasiadiabatic action: power-law and logarithmic cases", "[ramp]")
{
    const double c = 1.0, gc = 1.0, g0 = 0.9, dg0 = gc - g0;
    std::vector<double> taus, q_log, q_pow;
    for (double tau : log_space(1e2, 1e12, 11)) {
        const RampProtocol pr{g0, gc, tau};
        const double dg = std::sqrt(dg0 / (c * tau));
        // zeta ~ |g - g_c|^-1 (gamma + alpha = 1): closed form dg0/tau * ln(dg0/dg)
        const double ql = quasiadiabatic_action([&](double g) { return 1.0 / (gc - g); }, pr, gc - dg, gc);
        CHECK_THAT(ql, WithinRel(dg0 / tau * std::log(dg0 / dg), 1e-9));
        // zeta ~ |g - g_c|^-3 (gamma = 1, alpha = 2): dg0/tau * (dg^-2 - dg0^-2)/2
        const double qp = quasiadiabatic_action([&](double g) { return std::pow(gc - g, -3.0); }, pr, gc - dg, gc);
        CHECK_THAT(qp, WithinRel(dg0 / tau * 0.5 * (1.0 / (dg * dg) - 1.0 / (dg0 * dg0)), 1e-9));
        taus.push_back(tau);
        q_log.push_back(ql * tau);
        q_pow.push_back(qp);
    }
    // tau * Q grows linearly in ln tau with slope dg0 / 2
    std::vector<double> ln_tau;
    for (double t : taus) ln_tau.push_back(std::log(t));
    double sxx = 0, sxy = 0, mx = 0, my = 0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        mx += ln_tau[i] / taus.size();
        my += q_log[i] / taus.size();
    }
    for (std::size_t i = 0; i < taus.size(); ++i) {
        sxx += (ln_tau[i] - mx) * (ln_tau[i] - mx);
        sxy += (ln_tau[i] - mx) * (q_log[i] - my);
    }
    CHECK_THAT(sxy / sxx, WithinRel(dg0 / 2, 1e-9));
    // alpha + gamma = 3: tau-independent at large tau
    CHECK_THAT(fit_power_law(taus, q_pow, 1e5, kNoBound).exponent, WithinAbs(0.0, 1e-3));
}

TEST_CASE("output grid contains 0, t* and tau_q and is increasing", "[ramp]")
{
    RampOptions o;
    const auto t = ramp_output_grid(1e3, 987.0, o);
    CHECK(t.front() == 0.0);
    CHECK(t.back() == 1e3);
    CHECK(std::find(t.begin(), t.end(), 987.0) != t.end());
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
}

TEST_CASE("Dicke ramp: positivity, split and state tracking", "[ramp]")
{
    const RampResult& r = dicke_ramp_1e3();
    const std::size_t n = r.t_grid.size();
    REQUIRE(r.sigma_na_cumulative.size() == n);
    REQUIRE(r.theta_of_t.size() == n);
    CHECK(r.sigma_na_cumulative.front() == 0.0);
    for (std::size_t i = 1; i < n; ++i) CHECK(r.sigma_na_cumulative[i] >= r.sigma_na_cumulative[i - 1] - 1e-9);
    for (double rate : r.sigma_na_rate_exact) CHECK(rate >= -1e-9);
    CHECK_THAT(r.split.quasiadiabatic + r.split.impulse, WithinRel(r.split.total, 1e-8));
    CHECK(r.split.quasiadiabatic > 0);
    CHECK(r.split.impulse > 0);
    CHECK(r.split.quasiadiabatic_metric > 0);
    CHECK(r.split.impulse_relative_entropy > 0);
    CHECK(r.t_grid[r.index_t_star] == r.freeze_out.t_star);

    // close to the instantaneous NESS well before t*, far from it at the end
    const DickeRamp d;
    auto departure = [&](std::size_t i) {
        const CovarianceState pi = steady_state(build_drift_diffusion(d.family(r.g_of_t[i])));
        return (r.theta_of_t[i] - pi.theta).norm() / pi.theta.norm();
    };
    std::size_t half = 0;
    while (r.t_grid[half] < 0.5 * r.freeze_out.t_star) ++half;
    CHECK(departure(half) < 5e-2);
    CHECK(departure(n - 1) > 0.5);
}

TEST_CASE("Dicke ramp: exact rate matches finite differences of the relative entropy", "[ramp]")
{
    const RampResult& r = dicke_ramp_1e3();
    const DickeRamp d;
    const RampProtocol pr = r.protocol;
    auto schedule = [&](double t) { return build_drift_diffusion(d.family(pr.g_at(t))); };
    EvolveOptions eo;
    eo.rtol = 1e-12;
    eo.atol = 1e-14;
    const double ts = r.freeze_out.t_star;
    for (double frac : {0.2, 0.5, 0.8, 0.95, 0.99}) {
        std::size_t i = 0;
        while (r.t_grid[i] < frac * ts) ++i;
        const double t0 = r.t_grid[i];
        const double h = 1e-6 * t0;
        const auto st = evolve_covariance(schedule, CovarianceState(r.theta_of_t[i], 2), {t0, t0 + h, t0 + 2 * h}, eo);
        const CovarianceState pi = steady_state(schedule(t0 + h));
        const double fd = -(relative_entropy(st[2], pi) - relative_entropy(st[0], pi)) / (2 * h);
        const double rate = sigma_na_rate_exact(st[1], lyapunov_rhs(schedule(t0 + h), st[1].theta), pi);
        CHECK_THAT(rate, WithinRel(fd, 1e-4));
    }
}

TEST_CASE("metric rate is reported before freeze-out", "[ramp]")
{
    const RampResult& r = dicke_ramp_1e3();
    for (std::size_t i = 0; i <= r.index_t_star; ++i) CHECK(std::isfinite(r.sigma_na_rate_metric[i]));
    CHECK(r.metric_rate_at_freeze_out > 0);
}
