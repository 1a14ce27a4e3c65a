#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <csphere/experiment.hpp>

using namespace csphere;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config(const std::string& out) {
    ExperimentConfig c;
    c.n = 2;
    c.grid = 4000;
    c.starts = 8;
    c.iterate_schedule = {1, 2, 4};
    c.seed = 11;
    c.output_dir = out;
    return c;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config json round trip") {
    ExperimentConfig c = tiny_config("/tmp/x");
    const ExperimentConfig parsed = ExperimentConfig::from_json(c.to_json());
    REQUIRE(parsed.n == c.n);
    REQUIRE(parsed.a == c.a);
    REQUIRE(parsed.b == c.b);
    REQUIRE(parsed.grid == c.grid);
    REQUIRE(parsed.starts == c.starts);
    REQUIRE(parsed.seed == c.seed);
    REQUIRE(parsed.iterate_schedule == c.iterate_schedule);
    REQUIRE(parsed.tolerances.bisection == c.tolerances.bisection);
    REQUIRE(parsed.output_dir == c.output_dir);
}

TEST_CASE("config rejects unknown keys") {
    Json j = tiny_config("/tmp/x").to_json();
    j["grid_size"] = 5;
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);

    Json j2 = tiny_config("/tmp/x").to_json();
    j2["tolerances"]["bissection"] = 1e-10;
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(j2), std::invalid_argument);
}

TEST_CASE("config validates its invariants") {
    auto expect_throw = [](auto&& mutate) {
        ExperimentConfig c = tiny_config("/tmp/x");
        mutate(c);
        REQUIRE_THROWS_AS(c.validate(), std::invalid_argument);
    };
    expect_throw([](ExperimentConfig& c) { c.a = 1.5; });
    expect_throw([](ExperimentConfig& c) { c.b = 0.0; });
    expect_throw([](ExperimentConfig& c) { c.n = 1; });
    expect_throw([](ExperimentConfig& c) { c.grid = 10; });
    expect_throw([](ExperimentConfig& c) { c.starts = 0; });
    expect_throw([](ExperimentConfig& c) { c.iterate_schedule = {}; });
    expect_throw([](ExperimentConfig& c) { c.iterate_schedule = {0}; });
    expect_throw([](ExperimentConfig& c) { c.tolerances.residual = -1.0; });
}

TEST_CASE("unknown suite names are rejected") {
    REQUIRE_THROWS_AS(run_suite("decays", tiny_config("/tmp/x"), false), std::invalid_argument);
}

TEST_CASE("suite subsets fill only their report sections") {
    ExperimentConfig c = tiny_config("/tmp/unused");
    c.grid = 2000;

    const PipelineReport verify = run_suite("verify", c, false);
    REQUIRE(verify.verify.has_value());
    REQUIRE_FALSE(verify.spectrum.has_value());
    REQUIRE(verify.decay.empty());
    REQUIRE(verify.verify->phi_residual <= 1e-9);
    REQUIRE(verify.verify->sigma_residual <= 1e-9);
    REQUIRE(verify.verify->psi_residual <= 1e-9);

    const PipelineReport circle = run_suite("circle", c, false);
    REQUIRE(circle.circle.has_value());
    REQUIRE(circle.circle->min_zero_count >= 2);
    REQUIRE(circle.circle->max_quadrature_error <= 1e-6);

    const PipelineReport ham = run_suite("hamiltonian", c, false);
    REQUIRE(ham.hamiltonian.has_value());
    REQUIRE(ham.hamiltonian->critical_all_translated);
    REQUIRE(ham.hamiltonian->critical_max_defect <= 1e-10);
    REQUIRE(ham.hamiltonian->noncritical_probe_defect >= 1e-2);
}

TEST_CASE("full pipeline writes the expected artifacts") {
    TempDir dir("csphere_pipeline_test");
    ExperimentConfig c = tiny_config(dir.path.string());
    const PipelineReport report = run_counterexample(c);

    REQUIRE(fs::exists(dir.path / "report.json"));
    REQUIRE(fs::exists(dir.path / "decay.csv"));
    REQUIRE(fs::exists(dir.path / "defect.csv"));
    for (int n : c.iterate_schedule) {
        REQUIRE(fs::exists(dir.path / ("zeroset_" + std::to_string(n) + ".csv")));
    }

    REQUIRE(report.verify.has_value());
    REQUIRE(report.spectrum.has_value());
    REQUIRE(report.conjugator.has_value());
    REQUIRE(report.decay.size() == c.iterate_schedule.size());
    REQUIRE(report.searches.size() == c.iterate_schedule.size());
    REQUIRE(report.certificates.size() == c.iterate_schedule.size());
    REQUIRE(report.conclusion.has_value());

    // the exit-code contract is a pure function of the outcome label
    const int code = conclusion_exit_code(report);
    if (report.conclusion->outcome == "no-translated-points-evidence") {
        REQUIRE(code == 0);
    } else if (report.conclusion->outcome == "translated-point-found") {
        REQUIRE(code == 2);
    } else {
        REQUIRE(code == 1);
    }

    // small schedules keep translated points around: n = 1 must report one
    REQUIRE(report.searches.front().report.min_total <= 1e-6);

    // decay.csv carries exactly the four documented columns
    std::ifstream decay(dir.path / "decay.csv");
    std::string header;
    std::getline(decay, header);
    REQUIRE(header == "n,sup_dist_sigma_to_p,sup_dist_image_to_q,sample_size");

    std::ifstream defect_csv(dir.path / "defect.csv");
    std::getline(defect_csv, header);
    REQUIRE(header == "n,min_total,g_component,fiber_component,starts");
}

TEST_CASE("pipeline reports are bit-identical across runs") {
    TempDir dir_a("csphere_det_a");
    TempDir dir_b("csphere_det_b");
    ExperimentConfig c = tiny_config(dir_a.path.string());
    c.iterate_schedule = {1, 2};
    c.grid = 3000;
    run_counterexample(c);
    c.output_dir = dir_b.path.string();
    run_counterexample(c);

    const std::string report_a = slurp(dir_a.path / "report.json");
    std::string report_b = slurp(dir_b.path / "report.json");
    // the config echo contains the output directory; neutralize that one field
    const std::string needle_b = dir_b.path.string(), needle_a = dir_a.path.string();
    for (std::size_t pos = report_b.find(needle_b); pos != std::string::npos;
         pos = report_b.find(needle_b, pos)) {
        report_b.replace(pos, needle_b.size(), needle_a);
    }
    REQUIRE(report_a == report_b);

    REQUIRE(slurp(dir_a.path / "decay.csv") == slurp(dir_b.path / "decay.csv"));
    REQUIRE(slurp(dir_a.path / "defect.csv") == slurp(dir_b.path / "defect.csv"));
}

TEST_CASE("the command line driver honors the config file and exit contract") {
    TempDir dir("csphere_cli_test");
    ExperimentConfig c = tiny_config((dir.path / "out").string());
    c.iterate_schedule = {1};
    c.grid = 2000;
    c.starts = 4;
    {
        std::ofstream out(dir.path / "config.json");
        out << c.to_json().dump(2) << "\n";
    }

    const std::string base = std::string(CSPHERE_CLI_PATH);
    const std::string cmd = base + " run --config " + (dir.path / "config.json").string() +
                            " > " + (dir.path / "stdout.txt").string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    REQUIRE(raw != -1);
    const int code = WEXITSTATUS(raw);
    // schedule {1}: the first iterate still has translated points
    REQUIRE(code == 2);
    REQUIRE(fs::exists(dir.path / "out" / "report.json"));

    const int bad = std::system((base + " nonsense > /dev/null 2>&1").c_str());
    REQUIRE(WEXITSTATUS(bad) != 0);

    const int spectrum = std::system(
        (base + " spectrum --out " + (dir.path / "spec").string() + " > /dev/null 2>&1").c_str());
    REQUIRE(WEXITSTATUS(spectrum) == 0);
    REQUIRE(fs::exists(dir.path / "spec" / "report.json"));
}
