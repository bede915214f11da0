#include "dqpt/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <toml.hpp>

#include "dqpt/errors.hpp"
#include "dqpt/geometry.hpp"
#include "dqpt/parallel.hpp"
#include "dqpt/ramp.hpp"
#include "dqpt/spectral.hpp"

namespace dqpt {

const char* const kVersion = DQPT_VERSION;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RowResult {
    std::vector<double> values;
    std::string error;
};

// Evaluates fn(i) for every index; numerical failures become NaN rows.
template <class Fn>
void fill_table(Table& t, std::size_t n, int jobs, Fn fn, const std::function<std::vector<double>(std::size_t)>& keys)
{
    const auto rows = parallel_map<RowResult>(n, jobs, [&](std::size_t i) {
        try {
            return RowResult{fn(i), {}};
        } catch (const NumericalError& e) {
            std::vector<double> v = keys(i);
            v.resize(t.columns.size(), kNaN);
            return RowResult{v, e.what()};
        }
    });
    for (const auto& r : rows) t.add_row(r.values, r.error);
}

void add_fit(ExperimentOutput& out, FitSpec spec)
{
    FitRecord rec;
    rec.spec = std::move(spec);
    try {
        rec.fit = fit_table(out.table(rec.spec.table), rec.spec);
    } catch (const NumericalError& e) {
        rec.error = e.what();
    }
    out.fits.push_back(std::move(rec));
}

void add_window_fits(ExperimentOutput& out, const ExperimentConfig& c, const std::string& name, const std::string& table,
                     const std::string& x, const std::string& y, const std::string& window_column)
{
    add_fit(out, {name, table, x, y, window_column, c.fit.window_lo, c.fit.window_hi});
    for (std::size_t k = 0; k < c.fit.extra_windows.size(); ++k)
        add_fit(out, {name + "_window" + std::to_string(k + 1), table, x, y, window_column,
                      c.fit.extra_windows[k].first, c.fit.extra_windows[k].second});
}

nlohmann::json fit_json(const PowerLawFit& f)
{
    nlohmann::json j;
    j["exponent"] = f.exponent;
    j["exponent_stderr"] = f.exponent_stderr;
    j["prefactor"] = f.prefactor;
    j["prefactor_stderr"] = f.prefactor_stderr;
    j["r_squared"] = f.r_squared;
    j["window_lo"] = f.window_lo;
    j["window_hi"] = std::isfinite(f.window_hi) ? nlohmann::json(f.window_hi) : nlohmann::json(nullptr);
    j["n_points"] = f.n_points;
    return j;
}

// ---- Dicke sweeps ------------------------------------------------------------

struct DickeSetup {
    DickeParams params;
    double gc;
    ModelFamily family;
    explicit DickeSetup(const DickeParams& p) : params(p), gc(dicke_critical_coupling(p)), family(dicke_family(p)) {}
};

ExperimentOutput gap_sweep(const ExperimentConfig& c, int jobs)
{
    const DickeSetup s(c.model.dicke);
    const auto d = c.sweep.distances();
    Table t("gap", {"distance", "g", "gap", "d_gap_dg"},
            {"g_c - g, dimensionless", "coupling, units of omega_c", "Liouvillian gap, units of omega_c",
             "dGap/dg, units of omega_c"});
    fill_table(
        t, d.size(), jobs,
        [&](std::size_t i) {
            const double g = s.gc - d[i];
            const double gap = liouvillian_gap(build_drift_diffusion(s.family(g)));
            return std::vector<double>{d[i], g, gap, gap_derivative(s.family, g, 1e-3 * d[i])};
        },
        [&](std::size_t i) { return std::vector<double>{d[i], s.gc - d[i]}; });
    ExperimentOutput out;
    out.tables.push_back(std::move(t));
    add_window_fits(out, c, "gap", "gap", "distance", "gap", "distance");
    out.derived["g_c"] = s.gc;
    if (out.fit("gap").error.empty()) {
        out.derived["gamma"] = out.fit("gap").fit.exponent;
        out.derived["gamma_stderr"] = out.fit("gap").fit.exponent_stderr;
    }
    return out;
}

ExperimentOutput qfi_sweep(const ExperimentConfig& c, int jobs)
{
    const DickeSetup s(c.model.dicke);
    const auto d = c.sweep.distances();
    Table t("qfi", {"distance", "g", "qfi", "chi_richardson_change", "chi_roundoff_floor"},
            {"g_c - g, dimensionless", "coupling, units of omega_c", "KMB quantum Fisher information, 1/g^2",
             "relative, dimensionless", "relative, dimensionless"});
    fill_table(
        t, d.size(), jobs,
        [&](std::size_t i) {
            const double g = s.gc - d[i];
            const CovarianceState st = steady_state(build_drift_diffusion(s.family(g)));
            const ChiMatrix chi = chi_matrix(s.family, g, c.sweep.fd_step);
            return std::vector<double>{d[i], g, qfi_kmb_gaussian(st, chi), chi.richardson_change, chi.roundoff_floor};
        },
        [&](std::size_t i) { return std::vector<double>{d[i], s.gc - d[i]}; });
    ExperimentOutput out;
    out.tables.push_back(std::move(t));
    add_window_fits(out, c, "qfi", "qfi", "distance", "qfi", "distance");
    out.derived["g_c"] = s.gc;
    if (out.fit("qfi").error.empty()) {
        const auto& f = out.fit("qfi").fit;
        out.derived["alpha"] = -f.exponent;
        out.derived["alpha_stderr"] = f.exponent_stderr;
        out.derived["qfi_prefactor"] = f.prefactor;
        out.derived["qfi_prefactor_stderr"] = f.prefactor_stderr;
    }
    return out;
}

ExperimentOutput metric_sweep(const ExperimentConfig& c, int jobs)
{
    const DickeSetup s(c.model.dicke);
    const auto d = c.sweep.distances();
    Table t("metric", {"distance", "g", "zeta", "qfi", "tau_g"},
            {"g_c - g, dimensionless", "coupling, units of omega_c", "thermodynamic metric, time/g^2",
             "KMB quantum Fisher information, 1/g^2", "integral relaxation time, 1/omega_c"});
    fill_table(
        t, d.size(), jobs,
        [&](std::size_t i) {
            const double g = s.gc - d[i];
            const MetricPoint m = metric_point(s.family, g, c.sweep.fd_step);
            return std::vector<double>{d[i], g, m.zeta, m.qfi_kmb, m.tau_g};
        },
        [&](std::size_t i) { return std::vector<double>{d[i], s.gc - d[i]}; });
    ExperimentOutput out;
    out.tables.push_back(std::move(t));
    add_window_fits(out, c, "metric", "metric", "distance", "zeta", "distance");
    add_window_fits(out, c, "tau_g", "metric", "distance", "tau_g", "distance");
    out.derived["g_c"] = s.gc;
    if (out.fit("metric").error.empty()) {
        out.derived["metric_exponent"] = out.fit("metric").fit.exponent;
        out.derived["metric_exponent_stderr"] = out.fit("metric").fit.exponent_stderr;
    }
    return out;
}

ExperimentOutput softmode_sweep(const ExperimentConfig& c, int jobs)
{
    const DickeSetup s(c.model.dicke);
    const auto d = c.sweep.distances();
    Table t("softmode", {"distance", "g", "gap", "inv_sqrt_gap", "nu_s", "identity_ratio"},
            {"g_c - g, dimensionless", "coupling, units of omega_c", "Liouvillian gap, units of omega_c",
             "gap^(-1/2), units of omega_c^(-1/2)", "soft symplectic eigenvalue, dimensionless",
             "soft-mode Lyapunov identity, dimensionless"});
    fill_table(
        t, d.size(), jobs,
        [&](std::size_t i) {
            const double g = s.gc - d[i];
            const DriftDiffusion dd = build_drift_diffusion(s.family(g));
            const CovarianceState st = steady_state(dd);
            const double gap = liouvillian_gap(dd);
            const SoftMode sm = soft_mode_projection(dd, st);
            return std::vector<double>{d[i], g, gap, 1.0 / std::sqrt(gap), sm.nu_s, sm.identity_ratio};
        },
        [&](std::size_t i) { return std::vector<double>{d[i], s.gc - d[i]}; });
    ExperimentOutput out;
    out.tables.push_back(std::move(t));
    add_window_fits(out, c, "softmode", "softmode", "inv_sqrt_gap", "nu_s", "distance");
    out.derived["g_c"] = s.gc;
    const Table& tab = out.table("softmode");
    double gmin = kNoBound, gmax = 0.0;
    for (std::size_t r = 0; r < tab.rows.size(); ++r) {
        const double dist = tab.rows[r][0], gap = tab.rows[r][2];
        if (!tab.errors[r].empty() || dist < c.fit.window_lo || dist > c.fit.window_hi) continue;
        gmin = std::min(gmin, gap);
        gmax = std::max(gmax, gap);
    }
    if (gmax > 0) out.derived["gap_decades"] = std::log10(gmax / gmin);
    if (out.fit("softmode").error.empty()) {
        out.derived["softmode_slope"] = out.fit("softmode").fit.exponent;
        out.derived["softmode_slope_stderr"] = out.fit("softmode").fit.exponent_stderr;
    }
    return out;
}

// ---- ramps -------------------------------------------------------------------

RampProtocol dicke_protocol(const DickeSetup& s, const RampConfig& r, double tau)
{
    return {s.gc - r.g0_offset, s.gc - r.gf_offset, tau};
}

ExperimentOutput freezeout_scaling(const ExperimentConfig& c, int jobs)
{
    const DickeSetup s(c.model.dicke);
    const auto taus = c.ramp.durations();
    Table t("freezeout", {"tau_q", "t_star", "g_star", "delta_g", "impulse_duration"},
            {"ramp duration, 1/omega_c", "freeze-out time, 1/omega_c", "coupling at freeze-out, units of omega_c",
             "|g* - g_c|, dimensionless", "tau_q - t*, 1/omega_c"});
    fill_table(
        t, taus.size(), jobs,
        [&](std::size_t i) {
            FreezeOutOptions o;
            o.g_c = s.gc;
            const FreezeOut f = find_freeze_out(s.family, dicke_protocol(s, c.ramp, taus[i]), o);
            return std::vector<double>{taus[i], f.t_star, f.g_star, f.delta_g, f.impulse_duration};
        },
        [&](std::size_t i) { return std::vector<double>{taus[i]}; });
    ExperimentOutput out;
    out.tables.push_back(std::move(t));
    add_window_fits(out, c, "delta_g", "freezeout", "tau_q", "delta_g", "tau_q");
    add_window_fits(out, c, "impulse_duration", "freezeout", "tau_q", "impulse_duration", "tau_q");
    out.derived["g_c"] = s.gc;
    return out;
}

struct RampRun {
    RowResult summary;
    Table series;
};

ExperimentOutput ramp_sweep(const ExperimentConfig& c, int jobs)
{
    const DickeSetup s(c.model.dicke);
    const auto taus = c.ramp.durations();
    const std::vector<std::string> cols = {"tau_q",
                                           "t_star",
                                           "g_star",
                                           "delta_g",
                                           "impulse_duration",
                                           "rate_exact_t_star",
                                           "rate_metric_t_star",
                                           "sigma_total",
                                           "sigma_quasiadiabatic",
                                           "sigma_impulse",
                                           "sigma_quasiadiabatic_metric",
                                           "sigma_impulse_relative_entropy",
                                           "max_rel_dev_before_t_star"};
    const std::vector<std::string> units = {"ramp duration, 1/omega_c",
                                            "freeze-out time, 1/omega_c",
                                            "coupling at freeze-out, units of omega_c",
                                            "|g* - g_c|, dimensionless",
                                            "tau_q - t*, 1/omega_c",
                                            "exact nonadiabatic EP rate at t*, omega_c (nats)",
                                            "g_dot^2 zeta at t*, omega_c (nats)",
                                            "Sigma_na(0, tau_q), nats",
                                            "Sigma_na(0, t*), nats",
                                            "Sigma_na(t*, tau_q), nats",
                                            "g_dot^2 int_0^t* zeta dt, nats",
                                            "D(rho_t* || pi_gf) - D(rho_tau_q || pi_gf), nats",
                                            "max over t < t* of |exact - metric| / metric, dimensionless"};
    auto runs = parallel_map<RampRun>(taus.size(), jobs, [&](std::size_t i) {
        RampRun run;
        run.series = Table("ramp_series_" + std::to_string(i),
                           {"t", "g", "distance", "rate_exact", "rate_metric", "sigma_cumulative"},
                           {"time, 1/omega_c", "coupling, units of omega_c", "g_c - g, dimensionless",
                            "exact nonadiabatic EP rate, omega_c (nats)", "g_dot^2 zeta, omega_c (nats); nan if unavailable",
                            "Sigma_na(0, t), nats"});
        try {
            RampOptions o;
            o.g_c = s.gc;
            o.evolve.rtol = c.ramp.rtol;
            o.evolve.atol = c.ramp.atol;
            o.linear_points = c.ramp.linear_points;
            o.points_per_decade = c.ramp.points_per_decade;
            o.log_span_decades = c.ramp.log_span_decades;
            o.compute_metric = c.ramp.metric;
            const RampResult r = run_ramp(s.family, dicke_protocol(s, c.ramp, taus[i]), o);
            double max_dev = kNaN;
            for (std::size_t k = 0; k < r.index_t_star; ++k) {
                const double m = r.sigma_na_rate_metric[k];
                if (!(m > 0)) continue;
                const double dev = std::abs(r.sigma_na_rate_exact[k] - m) / m;
                if (!(dev <= max_dev)) max_dev = dev;
            }
            const FreezeOut& f = r.freeze_out;
            run.summary.values = {taus[i],
                                  f.t_star,
                                  f.g_star,
                                  f.delta_g,
                                  f.impulse_duration,
                                  r.rate_at_freeze_out,
                                  r.metric_rate_at_freeze_out,
                                  r.split.total,
                                  r.split.quasiadiabatic,
                                  r.split.impulse,
                                  r.split.quasiadiabatic_metric,
                                  r.split.impulse_relative_entropy,
                                  max_dev};
            if (c.ramp.write_series)
                for (std::size_t k = 0; k < r.t_grid.size(); ++k)
                    run.series.add_row({r.t_grid[k], r.g_of_t[k], s.gc - r.g_of_t[k], r.sigma_na_rate_exact[k],
                                        r.sigma_na_rate_metric[k], r.sigma_na_cumulative[k]});
        } catch (const NumericalError& e) {
            run.summary.values.assign(cols.size(), kNaN);
            run.summary.values[0] = taus[i];
            run.summary.error = e.what();
        }
        return run;
    });

    ExperimentOutput out;
    Table t("ramp_summary", cols, units);
    for (auto& run : runs) t.add_row(run.summary.values, run.summary.error);
    out.tables.push_back(std::move(t));
    if (c.ramp.write_series)
        for (auto& run : runs) out.tables.push_back(std::move(run.series));
    for (const char* y : {"delta_g", "impulse_duration", "rate_exact_t_star", "sigma_total", "sigma_quasiadiabatic",
                          "sigma_impulse", "sigma_quasiadiabatic_metric", "sigma_impulse_relative_entropy"})
        add_window_fits(out, c, y, "ramp_summary", "tau_q", y, "tau_q");
    out.derived["g_c"] = s.gc;
    return out;
}

// ---- Kerr finite-size scaling ------------------------------------------------

ExperimentOutput kerr_fss(const ExperimentConfig& c, int jobs)
{
    const KerrParams base = c.model.kerr;
    const double dc = kerr_critical_detuning(base);
    const auto d = c.sweep.distances();
    const auto& invu = c.sweep.inv_U;
    const std::size_t nd = d.size(), nu = invu.size();

    auto options = [&](std::size_t k) {
        KerrSweepOptions o;
        o.cutoff = c.sweep.cutoffs.empty() ? c.sweep.cutoff : c.sweep.cutoffs[k];
        o.max_cutoff = std::max(c.sweep.max_cutoff, o.cutoff);
        o.leakage_tol = c.sweep.leakage_tol;
        o.fd_step = c.sweep.fd_step > 0 ? c.sweep.fd_step : 1e-4;
        return o;
    };
    auto params = [&](std::size_t k) {
        KerrParams p = base;
        p.control = "detuning";
        p.kerr_U = 1.0 / invu[k];
        return p;
    };
    const std::vector<std::string> units = {"1/U, dimensionless", "Delta_c - Delta, units of kappa",
                                            "detuning Delta, units of kappa", "KMB quantum Fisher information, 1/kappa^2",
                                            "Fock cutoff used", "population of the top 10% Fock levels",
                                            "mean photon number"};
    const std::vector<std::string> cols = {"inv_U", "distance", "detuning", "qfi", "cutoff", "leakage", "mean_photons"};

    // sweep points, then one critical point per 1/U
    const std::size_t n = nu * nd + nu;
    auto point = [&](std::size_t i) {
        const std::size_t k = i < nu * nd ? i / nd : i - nu * nd;
        const double dist = i < nu * nd ? d[i % nd] : 0.0;
        const double ctrl = dc - dist;
        const KerrSweepPoint pt = kerr_control_sweep(params(k), {ctrl}, options(k)).front();
        return std::vector<double>{invu[k], dist, ctrl, pt.qfi, static_cast<double>(pt.cutoff), pt.leakage,
                                   pt.mean_photons};
    };
    Table all("kerr_all", cols, units);
    fill_table(all, n, jobs, point, [&](std::size_t i) {
        const std::size_t k = i < nu * nd ? i / nd : i - nu * nd;
        const double dist = i < nu * nd ? d[i % nd] : 0.0;
        return std::vector<double>{invu[k], dist, dc - dist};
    });

    Table sweep("kerr_qfi", cols, units), crit("kerr_critical", cols, units);
    for (std::size_t i = 0; i < n; ++i) (i < nu * nd ? sweep : crit).add_row(all.rows[i], all.errors[i]);

    ExperimentOutput out;
    out.derived["detuning_c"] = dc;
    std::vector<CollapseCurve> curves;
    for (std::size_t k = 0; k < nu; ++k) {
        CollapseCurve cc;
        cc.size = invu[k];
        for (std::size_t j = 0; j < nd; ++j) {
            const std::size_t r = k * nd + j;
            if (!sweep.errors[r].empty()) continue;
            cc.distance.push_back(sweep.rows[r][1]);
            cc.value.push_back(sweep.rows[r][3]);
        }
        cc.critical_value = crit.errors[k].empty() ? crit.rows[k][3] : 0.0;
        curves.push_back(std::move(cc));
    }

    Table collapse("kerr_collapse", {"inv_U", "x", "y"},
                   {"1/U, dimensionless", "(1/U) d^nu*, dimensionless", "QFI d^alpha_A, dimensionless"});
    try {
        const CollapseResult res = finite_size_collapse(curves, linear_grid(c.fit.alpha_min, c.fit.alpha_max, c.fit.alpha_step),
                                                        linear_grid(c.fit.nu_min, c.fit.nu_max, c.fit.nu_step));
        out.derived["alpha_A"] = res.alpha_A;
        out.derived["nu_star"] = res.nu_star;
        out.derived["collapse_quality"] = res.collapse_quality;
        out.derived["neighbour_quality"] = res.neighbour_quality;
        if (res.critical_fitted) {
            out.derived["critical_fit"] = fit_json(res.critical_fit);
            out.derived["alpha_over_nu"] = res.critical_fit.exponent;
        }
        for (const auto& rc : res.curves)
            for (std::size_t j = 0; j < rc.x.size(); ++j) collapse.add_row({rc.size, rc.x[j], rc.y[j]});
    } catch (const NumericalError& e) {
        out.derived["collapse_error"] = e.what();
    }
    out.tables.push_back(std::move(sweep));
    out.tables.push_back(std::move(crit));
    out.tables.push_back(std::move(collapse));
    return out;
}

} // namespace

const Table& ExperimentOutput::table(const std::string& name) const
{
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw std::invalid_argument("no table named " + name);
}

const FitRecord& ExperimentOutput::fit(const std::string& name) const
{
    for (const auto& f : fits)
        if (f.spec.name == name) return f;
    throw std::invalid_argument("no fit named " + name);
}

std::size_t ExperimentOutput::failed_points() const
{
    std::size_t n = 0;
    for (const auto& t : tables) n += t.failed_rows();
    return n;
}

std::size_t ExperimentOutput::failed_fits() const
{
    std::size_t n = derived.contains("collapse_error") ? 1 : 0;
    for (const auto& f : fits) n += f.error.empty() ? 0 : 1;
    return n;
}

ExperimentOutput run_experiment(const ExperimentConfig& config, int jobs)
{
    switch (config.kind) {
    case ExperimentKind::GapSweep: return gap_sweep(config, jobs);
    case ExperimentKind::QfiSweep: return qfi_sweep(config, jobs);
    case ExperimentKind::MetricSweep: return metric_sweep(config, jobs);
    case ExperimentKind::SoftmodeSweep: return softmode_sweep(config, jobs);
    case ExperimentKind::RampSweep: return ramp_sweep(config, jobs);
    case ExperimentKind::FreezeoutScaling: return freezeout_scaling(config, jobs);
    case ExperimentKind::KerrFss: return kerr_fss(config, jobs);
    }
    throw ConfigError("unhandled experiment kind");
}

nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentOutput& out)
{
    nlohmann::json j;
    j["kind"] = kind_name(config.kind);
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& f : out.fits) {
        nlohmann::json e;
        e["name"] = f.spec.name;
        e["table"] = f.spec.table;
        e["x"] = f.spec.x;
        e["y"] = f.spec.y;
        e["window_column"] = f.spec.window_column;
        if (f.error.empty()) {
            e["fit"] = fit_json(f.fit);
        } else {
            e["error"] = f.error;
            e["window_lo"] = f.spec.lo;
            e["window_hi"] = std::isfinite(f.spec.hi) ? nlohmann::json(f.spec.hi) : nlohmann::json(nullptr);
        }
        fits.push_back(e);
    }
    j["fits"] = fits;
    j["derived"] = out.derived;
    nlohmann::json failures = nlohmann::json::object();
    for (const auto& t : out.tables)
        if (t.failed_rows() > 0) failures[t.name] = t.failed_rows();
    j["failed_points"] = failures;
    return j;
}

nlohmann::json provenance_json(const ExperimentConfig& config, double wall_clock_seconds, int jobs)
{
    nlohmann::json j;
    j["kind"] = kind_name(config.kind);
    j["version"] = kVersion;
    j["config_file"] = config.source_name;
    j["config_text"] = config.source_text;
    try {
        std::ostringstream os;
        os << toml::json_formatter{toml::parse(config.source_text, config.source_name)};
        j["config"] = nlohmann::json::parse(os.str());
    } catch (const std::exception&) {
        j["config"] = nullptr;
    }
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["jobs"] = jobs;
    j["seeds"] = nullptr;
    j["compiler"] = __VERSION__;
    return j;
}

void write_bundle(const ExperimentConfig& config, const ExperimentOutput& out, const std::string& dir,
                  double wall_clock_seconds, int jobs)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& t : out.tables) write_csv(t, (fs::path(dir) / (t.name + ".csv")).string());
    auto dump = [&](const nlohmann::json& j, const char* name) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw std::runtime_error(std::string("cannot write ") + name);
        f << j.dump(2) << '\n';
    };
    dump(summary_json(config, out), "summary.json");
    dump(provenance_json(config, wall_clock_seconds, jobs), "provenance.json");
}

} // namespace dqpt
