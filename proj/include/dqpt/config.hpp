// Experiment configuration: [model], [sweep], [ramp], [fit], [output]

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dqpt/models.hpp"

namespace dqpt {

enum class ExperimentKind { GapSweep, QfiSweep, MetricSweep, SoftmodeSweep, RampSweep, FreezeoutScaling, KerrFss };

// "gap-sweep" etc.; ConfigError for an unknown name
ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);
const std::vector<std::string>& kind_names();

struct ModelConfig {
    std::string name{"dicke"};  // dicke | kerr
    DickeParams dicke{};
    KerrParams kerr{};
};

struct SweepConfig {
    // distance to the critical point, log-spaced
    double distance_min{1e-6};
    double distance_max{1e-2};
    double ratio{1.02};  // grid ratio, used when points == 0
    int points{0};       // log-spaced count including both ends
    double fd_step{0.0}; // derivative step in the control; 0 picks the default
    // Kerr only
    std::vector<double> inv_U{32.0, 64.0, 128.0, 256.0, 512.0};
    std::vector<int> cutoffs;  // starting cutoff per 1/U; empty means `cutoff` for all
    int cutoff{60};
    int max_cutoff{240};
    double leakage_tol{1e-8};

    std::vector<double> distances() const;
};

struct RampConfig {
    std::vector<double> tau_q;   // explicit list; empty means the log grid below
    double tau_min{1e2};
    double tau_max{1e5};
    int tau_per_decade{4};
    double g0_offset{1e-2};      // g0 = g_c - g0_offset
    double gf_offset{1e-15};     // gf = g_c - gf_offset
    double rtol{1e-9};
    double atol{1e-12};
    int linear_points{1000};
    int points_per_decade{400};
    double log_span_decades{8.0};
    bool metric{true};
    bool write_series{true};

    std::vector<double> durations() const;
};

struct FitConfig {
    double window_lo{0.0};
    double window_hi{0.0};
    std::vector<std::pair<double, double>> extra_windows;
    double alpha_min{1.0}, alpha_max{3.0}, alpha_step{0.02};
    double nu_min{1.0}, nu_max{3.5}, nu_step{0.02};
};

struct OutputConfig {
    std::string dir{"out"};
};

struct ExperimentConfig {
    ExperimentKind kind{ExperimentKind::GapSweep};
    ModelConfig model;
    SweepConfig sweep;
    RampConfig ramp;
    FitConfig fit;
    OutputConfig output;
    std::string source_text;  // the config file as read
    std::string source_name;
};

// Parses TOML text. Sweep ranges and fit windows default per kind:
// softmode-sweep uses [1e-7, 1e-3], other Dicke sweeps [1e-6, 1e-2], ramps fit
// over tau_q in [1e2, 1e5]. ConfigError names the field and line.
ExperimentConfig parse_config(const std::string& text, ExperimentKind kind, const std::string& source_name = "config");
ExperimentConfig load_config(const std::string& path, ExperimentKind kind);

} // namespace dqpt
