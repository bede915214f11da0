#include "dqpt/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "dqpt/errors.hpp"
#include "dqpt/fit.hpp"

namespace dqpt {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>>& kind_table()
{
    static const std::vector<std::pair<ExperimentKind, std::string>> t = {
        {ExperimentKind::GapSweep, "gap-sweep"},
        {ExperimentKind::QfiSweep, "qfi-sweep"},
        {ExperimentKind::MetricSweep, "metric-sweep"},
        {ExperimentKind::SoftmodeSweep, "softmode-sweep"},
        {ExperimentKind::RampSweep, "ramp-sweep"},
        {ExperimentKind::FreezeoutScaling, "freezeout-scaling"},
        {ExperimentKind::KerrFss, "kerr-fss"},
    };
    return t;
}

// Typed access to one section with field diagnostics
class Section {
public:
    Section(const toml::table* tbl, std::string name, std::set<std::string> allowed)
        : tbl_(tbl), name_(std::move(name))
    {
        if (!tbl_) return;
        for (const auto& [k, v] : *tbl_) {
            const std::string key(k.str());
            if (!allowed.count(key)) fail(key, v.source().begin.line, "unknown field");
        }
    }

    [[noreturn]] void fail(const std::string& key, std::size_t line, const std::string& what) const
    {
        std::ostringstream os;
        os << "[" << name_ << "]." << key;
        if (line > 0) os << " (line " << line << ")";
        os << ": " << what;
        throw ConfigError(os.str());
    }

    const toml::node* node(const std::string& key) const { return tbl_ ? tbl_->get(key) : nullptr; }
    std::size_t line(const std::string& key) const
    {
        const auto* n = node(key);
        return n ? n->source().begin.line : 0;
    }

    void number(const std::string& key, double& out, const std::function<bool(double)>& ok = {},
                const char* requirement = "out of range") const
    {
        const auto* n = node(key);
        if (!n) return;
        if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) {
            out = *v;
        } else {
            fail(key, line(key), "expected a number");
        }
        if (!std::isfinite(out) || (ok && !ok(out))) fail(key, line(key), requirement);
    }

    void integer(const std::string& key, int& out, const std::function<bool(int)>& ok = {},
                 const char* requirement = "out of range") const
    {
        const auto* n = node(key);
        if (!n) return;
        if (!n->is_integer()) fail(key, line(key), "expected an integer");
        out = static_cast<int>(*n->value<int64_t>());
        if (ok && !ok(out)) fail(key, line(key), requirement);
    }

    void boolean(const std::string& key, bool& out) const
    {
        const auto* n = node(key);
        if (!n) return;
        if (!n->is_boolean()) fail(key, line(key), "expected true or false");
        out = *n->value<bool>();
    }

    void string(const std::string& key, std::string& out) const
    {
        const auto* n = node(key);
        if (!n) return;
        if (!n->is_string()) fail(key, line(key), "expected a string");
        out = *n->value<std::string>();
    }

    void numbers(const std::string& key, std::vector<double>& out, const std::function<bool(double)>& ok = {},
                 const char* requirement = "out of range") const
    {
        const auto* n = node(key);
        if (!n) return;
        const auto* arr = n->as_array();
        if (!arr) fail(key, line(key), "expected an array of numbers");
        out.clear();
        for (const auto& e : *arr) {
            auto v = e.value<double>();
            if (!v || !(e.is_floating_point() || e.is_integer())) fail(key, line(key), "expected an array of numbers");
            if (!std::isfinite(*v) || (ok && !ok(*v))) fail(key, line(key), requirement);
            out.push_back(*v);
        }
    }

    void integers(const std::string& key, std::vector<int>& out, const std::function<bool(int)>& ok = {},
                  const char* requirement = "out of range") const
    {
        const auto* n = node(key);
        if (!n) return;
        const auto* arr = n->as_array();
        if (!arr) fail(key, line(key), "expected an array of integers");
        out.clear();
        for (const auto& e : *arr) {
            if (!e.is_integer()) fail(key, line(key), "expected an array of integers");
            const int v = static_cast<int>(*e.value<int64_t>());
            if (ok && !ok(v)) fail(key, line(key), requirement);
            out.push_back(v);
        }
    }

    void windows(const std::string& key, std::vector<std::pair<double, double>>& out) const
    {
        const auto* n = node(key);
        if (!n) return;
        const auto* arr = n->as_array();
        if (!arr) fail(key, line(key), "expected an array of [lo, hi] pairs");
        out.clear();
        for (const auto& e : *arr) {
            const auto* p = e.as_array();
            if (!p || p->size() != 2) fail(key, line(key), "expected an array of [lo, hi] pairs");
            auto lo = (*p)[0].value<double>(), hi = (*p)[1].value<double>();
            if (!lo || !hi || !(*lo >= 0) || !(*hi > *lo)) fail(key, line(key), "each window needs 0 <= lo < hi");
            out.emplace_back(*lo, *hi);
        }
    }

private:
    const toml::table* tbl_;
    std::string name_;
};

const toml::table* section_table(const toml::table& root, const std::string& name)
{
    const auto* n = root.get(name);
    if (!n) return nullptr;
    const auto* t = n->as_table();
    if (!t) {
        std::ostringstream os;
        os << "[" << name << "] (line " << n->source().begin.line << "): expected a table";
        throw ConfigError(os.str());
    }
    return t;
}

auto positive = [](double v) { return v > 0; };
auto nonnegative = [](double v) { return v >= 0; };

bool is_dicke_kind(ExperimentKind k)
{
    return k != ExperimentKind::KerrFss;
}

bool is_ramp_kind(ExperimentKind k)
{
    return k == ExperimentKind::RampSweep || k == ExperimentKind::FreezeoutScaling;
}

void apply_kind_defaults(ExperimentConfig& c)
{
    switch (c.kind) {
    case ExperimentKind::SoftmodeSweep:
        c.sweep.distance_min = 1e-7;
        c.sweep.distance_max = 1e-3;
        break;
    case ExperimentKind::KerrFss:
        c.model.name = "kerr";
        c.sweep.distance_min = 1e-3;
        c.sweep.distance_max = 1e-1;
        c.sweep.points = 21;
        c.sweep.fd_step = 1e-4;
        break;
    default:
        break;
    }
    if (is_ramp_kind(c.kind)) {
        c.fit.window_lo = 1e2;
        c.fit.window_hi = 1e5;
    } else if (c.kind == ExperimentKind::KerrFss) {
        c.fit.window_lo = 0.0;
        c.fit.window_hi = kNoBound;
    } else {
        c.fit.window_lo = c.sweep.distance_min;
        c.fit.window_hi = c.sweep.distance_max;
    }
}

} // namespace

ExperimentKind parse_kind(const std::string& name)
{
    for (const auto& [k, n] : kind_table())
        if (n == name) return k;
    throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string kind_name(ExperimentKind kind)
{
    for (const auto& [k, n] : kind_table())
        if (k == kind) return n;
    return "unknown";
}

const std::vector<std::string>& kind_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& kn : kind_table()) v.push_back(kn.second);
        return v;
    }();
    return names;
}

std::vector<double> SweepConfig::distances() const
{
    if (points > 0) return log_space(distance_min, distance_max, points);
    return log_ratio_grid(distance_min, distance_max, ratio);
}

std::vector<double> RampConfig::durations() const
{
    if (!tau_q.empty()) return tau_q;
    const int decades_points = static_cast<int>(std::lround(std::log10(tau_max / tau_min) * tau_per_decade));
    return log_space(tau_min, tau_max, decades_points + 1);
}

ExperimentConfig parse_config(const std::string& text, ExperimentKind kind, const std::string& source_name)
{
    toml::table root;
    try {
        root = toml::parse(text, source_name);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source_name << " line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }
    for (const auto& [k, v] : root) {
        const std::string key(k.str());
        static const std::set<std::string> sections = {"model", "sweep", "ramp", "fit", "output"};
        if (!sections.count(key)) {
            std::ostringstream os;
            os << key << " (line " << v.source().begin.line << "): unknown section";
            throw ConfigError(os.str());
        }
    }

    ExperimentConfig c;
    c.kind = kind;
    c.source_text = text;
    c.source_name = source_name;
    apply_kind_defaults(c);

    const Section model(section_table(root, "model"), "model",
                        {"name", "omega_c", "omega_z", "kappa", "detuning", "drive_G", "kerr_U"});
    model.string("name", c.model.name);
    if (c.model.name != "dicke" && c.model.name != "kerr") model.fail("name", model.line("name"), "expected 'dicke' or 'kerr'");
    if (is_dicke_kind(kind) && c.model.name != "dicke")
        model.fail("name", model.line("name"), kind_name(kind) + " needs the dicke model");
    if (!is_dicke_kind(kind) && c.model.name != "kerr")
        model.fail("name", model.line("name"), kind_name(kind) + " needs the kerr model");
    if (c.model.name == "dicke") {
        model.number("omega_c", c.model.dicke.omega_c, positive, "must be positive");
        model.number("omega_z", c.model.dicke.omega_z, positive, "must be positive");
        model.number("kappa", c.model.dicke.kappa, nonnegative, "must be nonnegative");
        for (const char* k : {"detuning", "drive_G", "kerr_U"})
            if (model.node(k)) model.fail(k, model.line(k), "not a dicke parameter");
    } else {
        model.number("kappa", c.model.kerr.kappa, positive, "must be positive");
        double G = c.model.kerr.drive_G.real();
        model.number("drive_G", G, [&](double g) { return g > c.model.kerr.kappa / 2; },
                     "must exceed kappa/2 for a parametric transition");
        c.model.kerr.drive_G = G;
        model.number("detuning", c.model.kerr.detuning);
        model.number("kerr_U", c.model.kerr.kerr_U, positive, "must be positive");
        for (const char* k : {"omega_c", "omega_z"})
            if (model.node(k)) model.fail(k, model.line(k), "not a kerr parameter");
    }

    const Section sweep(section_table(root, "sweep"), "sweep",
                        {"distance_min", "distance_max", "ratio", "points", "fd_step", "inv_U", "cutoffs", "cutoff",
                         "max_cutoff", "leakage_tol"});
    sweep.number("distance_min", c.sweep.distance_min, positive, "must be positive");
    sweep.number("distance_max", c.sweep.distance_max, [&](double v) { return v > c.sweep.distance_min; },
                 "must exceed distance_min");
    sweep.number("ratio", c.sweep.ratio, [](double v) { return v > 1; }, "must exceed 1");
    sweep.integer("points", c.sweep.points, [](int v) { return v == 0 || v >= 2; }, "must be 0 or at least 2");
    sweep.number("fd_step", c.sweep.fd_step, nonnegative, "must be nonnegative");
    sweep.numbers("inv_U", c.sweep.inv_U, positive, "entries must be positive");
    sweep.integers("cutoffs", c.sweep.cutoffs, [](int v) { return v >= 4; }, "entries must be at least 4");
    sweep.integer("cutoff", c.sweep.cutoff, [](int v) { return v >= 4; }, "must be at least 4");
    sweep.integer("max_cutoff", c.sweep.max_cutoff, [&](int v) { return v >= c.sweep.cutoff; },
                  "must be at least cutoff");
    sweep.number("leakage_tol", c.sweep.leakage_tol, positive, "must be positive");
    if (!c.sweep.cutoffs.empty() && c.sweep.cutoffs.size() != c.sweep.inv_U.size())
        sweep.fail("cutoffs", sweep.line("cutoffs"), "needs one entry per inv_U value");
    if (kind == ExperimentKind::KerrFss && c.sweep.inv_U.size() < 3)
        sweep.fail("inv_U", sweep.line("inv_U"), "finite-size collapse needs at least 3 values");

    const Section ramp(section_table(root, "ramp"), "ramp",
                       {"tau_q", "tau_min", "tau_max", "tau_per_decade", "g0_offset", "gf_offset", "rtol", "atol",
                        "linear_points", "points_per_decade", "log_span_decades", "metric", "write_series"});
    ramp.numbers("tau_q", c.ramp.tau_q, positive, "entries must be positive");
    ramp.number("tau_min", c.ramp.tau_min, positive, "must be positive");
    ramp.number("tau_max", c.ramp.tau_max, [&](double v) { return v > c.ramp.tau_min; }, "must exceed tau_min");
    ramp.integer("tau_per_decade", c.ramp.tau_per_decade, [](int v) { return v >= 1; }, "must be at least 1");
    ramp.number("g0_offset", c.ramp.g0_offset, positive, "must be positive");
    ramp.number("gf_offset", c.ramp.gf_offset, [&](double v) { return v > 0 && v < c.ramp.g0_offset; },
                "must be positive and below g0_offset");
    ramp.number("rtol", c.ramp.rtol, positive, "must be positive");
    ramp.number("atol", c.ramp.atol, positive, "must be positive");
    ramp.integer("linear_points", c.ramp.linear_points, [](int v) { return v >= 2; }, "must be at least 2");
    ramp.integer("points_per_decade", c.ramp.points_per_decade, [](int v) { return v >= 0; }, "must be nonnegative");
    ramp.number("log_span_decades", c.ramp.log_span_decades, positive, "must be positive");
    ramp.boolean("metric", c.ramp.metric);
    ramp.boolean("write_series", c.ramp.write_series);

    const Section fit(section_table(root, "fit"), "fit",
                      {"window_lo", "window_hi", "extra_windows", "alpha_min", "alpha_max", "alpha_step", "nu_min",
                       "nu_max", "nu_step"});
    if (!fit.node("window_lo") && !is_ramp_kind(kind) && kind != ExperimentKind::KerrFss)
        c.fit.window_lo = c.sweep.distance_min;
    if (!fit.node("window_hi") && !is_ramp_kind(kind) && kind != ExperimentKind::KerrFss)
        c.fit.window_hi = c.sweep.distance_max;
    fit.number("window_lo", c.fit.window_lo, nonnegative, "must be nonnegative");
    fit.number("window_hi", c.fit.window_hi, [&](double v) { return v > c.fit.window_lo; }, "must exceed window_lo");
    fit.windows("extra_windows", c.fit.extra_windows);
    fit.number("alpha_min", c.fit.alpha_min);
    fit.number("alpha_max", c.fit.alpha_max, [&](double v) { return v >= c.fit.alpha_min; }, "must be >= alpha_min");
    fit.number("alpha_step", c.fit.alpha_step, positive, "must be positive");
    fit.number("nu_min", c.fit.nu_min, positive, "must be positive");
    fit.number("nu_max", c.fit.nu_max, [&](double v) { return v >= c.fit.nu_min; }, "must be >= nu_min");
    fit.number("nu_step", c.fit.nu_step, positive, "must be positive");

    const Section output(section_table(root, "output"), "output", {"dir"});
    output.string("dir", c.output.dir);
    if (c.output.dir.empty()) output.fail("dir", output.line("dir"), "must not be empty");
    return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentKind kind)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), kind, path);
}

} // namespace dqpt
