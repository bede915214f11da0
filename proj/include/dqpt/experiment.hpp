// Experiment dispatch: sweeps, ramps and Kerr finite-size scaling, producing
// CSV tables, fits and the JSON summary/provenance bundle

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dqpt/config.hpp"
#include "dqpt/table.hpp"

namespace dqpt {

struct FitRecord {
    FitSpec spec;
    PowerLawFit fit;
    std::string error;  // set when the fit could not be done
};

struct ExperimentOutput {
    std::vector<Table> tables;
    std::vector<FitRecord> fits;
    nlohmann::json derived = nlohmann::json::object();  // kind-specific results (exponents, collapse)

    const Table& table(const std::string& name) const;
    const FitRecord& fit(const std::string& name) const;
    std::size_t failed_points() const;
    std::size_t failed_fits() const;
};

// Runs one experiment with up to `jobs` worker threads. Per-point numerical
// failures are recorded in the error column; other errors propagate.
ExperimentOutput run_experiment(const ExperimentConfig& config, int jobs = 1);

nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentOutput& out);
nlohmann::json provenance_json(const ExperimentConfig& config, double wall_clock_seconds, int jobs);

// Writes every table as <dir>/<name>.csv plus summary.json and provenance.json.
void write_bundle(const ExperimentConfig& config, const ExperimentOutput& out, const std::string& dir,
                  double wall_clock_seconds, int jobs);

extern const char* const kVersion;

} // namespace dqpt
