// Configuration parsing, deterministic output, CSV round trip and CLI exit codes

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "dqpt/errors.hpp"
#include "dqpt/experiment.hpp"

using namespace dqpt;
namespace fs = std::filesystem;

namespace {

const char* const kGapConfig = R"(
[model]
name = "dicke"

[sweep]
distance_min = 1e-5
distance_max = 1e-2
ratio = 1.2

[fit]
window_lo = 1e-5
window_hi = 1e-2
)";

const char* const kKerrConfig = R"(
[model]
name = "kerr"
drive_G = 1.5
kappa = 1.0

[sweep]
inv_U = [4, 6, 8]
cutoff = 24
cutoffs = [24, 28, 32]
max_cutoff = 48
leakage_tol = 1e-6
distance_min = 1e-2
distance_max = 1e-1
points = 9
fd_step = 1e-4

[fit]
alpha_min = 1.0
alpha_max = 3.0
alpha_step = 0.1
nu_min = 1.0
nu_max = 3.0
nu_step = 0.1
)";

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "dqpt_test_cli";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string("\"") + DQPT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("tables are byte-identical across worker counts", "[cli][property]")
{
    for (auto [text, kind] : {std::pair{kGapConfig, ExperimentKind::GapSweep},
                              std::pair{kGapConfig, ExperimentKind::QfiSweep},
                              std::pair{kKerrConfig, ExperimentKind::KerrFss}}) {
        const ExperimentConfig c = parse_config(text, kind);
        const auto serial = run_experiment(c, 1);
        const auto threaded = run_experiment(c, 4);
        REQUIRE(serial.tables.size() == threaded.tables.size());
        for (std::size_t i = 0; i < serial.tables.size(); ++i) REQUIRE(to_csv(serial.tables[i]) == to_csv(threaded.tables[i]));
        REQUIRE(summary_json(c, serial).dump() == summary_json(c, threaded).dump());
    }
}

TEST_CASE("refitting a written table reproduces the summary", "[cli]")
{
    const ExperimentConfig c = parse_config(kGapConfig, ExperimentKind::GapSweep);
    const auto out = run_experiment(c, 2);
    const fs::path dir = scratch("refit");
    write_bundle(c, out, dir.string(), 0.0, 2);
    const Table t = read_csv((dir / "gap.csv").string());
    REQUIRE(to_csv(t) == to_csv(out.table("gap")));
    const FitRecord& rec = out.fit("gap");
    const PowerLawFit refit = fit_table(t, rec.spec);
    REQUIRE_THAT(refit.exponent, Catch::Matchers::WithinRel(rec.fit.exponent, 1e-12));
    REQUIRE_THAT(refit.prefactor, Catch::Matchers::WithinRel(rec.fit.prefactor, 1e-12));

    const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
    const auto prov = nlohmann::json::parse(read_file(dir / "provenance.json"));
    REQUIRE(prov.contains("config"));
    REQUIRE(prov.contains("version"));
    REQUIRE(prov.contains("wall_clock_seconds"));
    REQUIRE(summary.dump().find("exponent_stderr") != std::string::npos);

    // header, unit lines, then one row per sweep point in input order
    std::istringstream csv(read_file(dir / "gap.csv"));
    std::string line;
    std::getline(csv, line);
    REQUIRE(line.rfind("distance,", 0) == 0);
    std::getline(csv, line);
    REQUIRE(line.rfind("# ", 0) == 0);
    const auto d = t.column("distance");
    for (std::size_t i = 1; i < d.size(); ++i) REQUIRE(d[i] > d[i - 1]);
}

TEST_CASE("configuration errors name the field", "[cli][config]")
{
    SECTION("unknown field")
    {
        const std::string text = std::string(kGapConfig) + "\n[output]\ndirr = \"x\"\n";
        try {
            parse_config(text, ExperimentKind::GapSweep);
            FAIL("accepted an unknown field");
        } catch (const ConfigError& e) {
            REQUIRE(std::string(e.what()).find("dirr") != std::string::npos);
        }
    }
    SECTION("out-of-range value")
    {
        const std::string text = "[model]\nname = \"dicke\"\n[sweep]\ndistance_min = -1.0\n";
        try {
            parse_config(text, ExperimentKind::GapSweep);
            FAIL("accepted a negative distance");
        } catch (const ConfigError& e) {
            REQUIRE(std::string(e.what()).find("distance_min") != std::string::npos);
        }
    }
    SECTION("syntax error")
    {
        REQUIRE_THROWS_AS(parse_config("[model\nname = 1", ExperimentKind::GapSweep), ConfigError);
    }
}

TEST_CASE("command-line exit codes", "[cli]")
{
    const fs::path bad = scratch("bad.toml");
    write_file(bad, "[model]\nname = \"dicke\"\n[sweep]\nratio = 0.5\n");
    const fs::path log = scratch("log.txt");
    REQUIRE(run_cli("gap-sweep --config \"" + bad.string() + "\"", log) == 2);
    REQUIRE(read_file(log).find("ratio") != std::string::npos);

    REQUIRE(run_cli("no-such-kind --config \"" + bad.string() + "\"", log) == 2);
    REQUIRE(run_cli("gap-sweep --config \"" + scratch("missing.toml").string() + "\"", log) == 2);

    const fs::path good = scratch("good.toml");
    write_file(good, kGapConfig);
    const fs::path out = scratch("cli_out");
    REQUIRE(run_cli("gap-sweep --config \"" + good.string() + "\" --jobs 2 --out \"" + out.string() + "\"", log) == 0);
    REQUIRE(fs::exists(out / "gap.csv"));
    REQUIRE(fs::exists(out / "summary.json"));
    REQUIRE(fs::exists(out / "provenance.json"));
}
