// dqpt <experiment-kind> --config FILE [--jobs N] [--out DIR]
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "dqpt/errors.hpp"
#include "dqpt/experiment.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Dissipative phase transition sweeps, ramps and finite-size scaling"};
    app.set_version_flag("--version", std::string(dqpt::kVersion));
    std::string kind, config_path, out_dir;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("kind", kind, "experiment kind")->required()->check(CLI::IsMember(dqpt::kind_names()));
    app.add_option("--config", config_path, "TOML configuration file")->required();
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory (overrides [output].dir)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        const dqpt::ExperimentConfig cfg = dqpt::load_config(config_path, dqpt::parse_kind(kind));
        const std::string dir = out_dir.empty() ? cfg.output.dir : out_dir;
        const dqpt::ExperimentOutput out = dqpt::run_experiment(cfg, jobs);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        dqpt::write_bundle(cfg, out, dir, secs, jobs);
        if (out.failed_points() > 0 || out.failed_fits() > 0) {
            std::cerr << "dqpt: " << out.failed_points() << " failed points, " << out.failed_fits()
                      << " failed fits; see the error columns and summary.json in " << dir << '\n';
            return 3;
        }
        std::cout << "dqpt: " << kind << " wrote " << out.tables.size() << " tables to " << dir << '\n';
        return 0;
    } catch (const dqpt::ConfigError& e) {
        std::cerr << "dqpt: " << e.what() << '\n';
        return 2;
    } catch (const dqpt::NumericalError& e) {
        std::cerr << "dqpt: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "dqpt: " << e.what() << '\n';
        return 1;
    }
}
