// Experiment driver for the contact-sphere library: builds the canonical
// contactomorphisms, runs the translated-point search pipeline and the
// auxiliary circle/Hamiltonian checks, and emits JSON/CSV reports.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <csphere/experiment.hpp>

namespace {

struct CliOverrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid;
    std::optional<std::string> out;
    std::optional<int> n;
    std::optional<double> a;
    std::optional<double> b;
};

csphere::ExperimentConfig resolve_config(const CliOverrides& o) {
    csphere::ExperimentConfig config;
    if (o.config_path) config = csphere::ExperimentConfig::load(*o.config_path);
    if (o.seed) config.seed = *o.seed;
    if (o.grid) config.grid = *o.grid;
    if (o.out) config.output_dir = *o.out;
    if (o.n) config.n = *o.n;
    if (o.a) config.a = *o.a;
    if (o.b) config.b = *o.b;
    config.validate();
    return config;
}

void add_common_flags(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--grid", o.grid, "grid size for sampling stages");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--n", o.n, "complex dimension (sphere S^{2n-1})");
    cmd->add_option("--a", o.a, "parameter of the north-south map, in (0,1)");
    cmd->add_option("--b", o.b, "parameter of the conjugator, in (0,1)");
}

void print_summary(const csphere::PipelineReport& report) {
    if (report.verify) {
        std::cout << "contact residuals: phi " << report.verify->phi_residual << ", sigma "
                  << report.verify->sigma_residual << ", psi " << report.verify->psi_residual
                  << "\n";
    }
    if (report.spectrum) {
        const auto& [rep, att] = *report.spectrum;
        std::cout << "spectrum: repelling (" << rep.reeb_multiplier << ", "
                  << rep.contact_multiplier << "), attracting (" << att.reeb_multiplier << ", "
                  << att.contact_multiplier << ")\n";
    }
    for (const auto& row : report.decay) {
        std::cout << "decay n=" << row.n << ": sup dist to p " << row.sup_dist_to_p
                  << ", image sup dist to q " << row.sup_image_dist_to_q << " ("
                  << row.sample_size << " points" << (row.flagged ? ", flagged" : "") << ")\n";
    }
    for (const auto& s : report.searches) {
        std::cout << "search n=" << s.n << ": min defect " << s.report.min_total
                  << " (g " << s.report.g_component << ", fiber " << s.report.fiber_component
                  << ")\n";
    }
    for (const auto& c : report.certificates) {
        std::cout << "certificate n=" << c.n << ": "
                  << (c.report.certified ? "holds" : ("fails: " + c.report.failed))
                  << ", fiber margin " << c.report.fiber_margin << "\n";
    }
    if (report.circle) {
        std::cout << "circle: " << report.circle->maps << " maps, min zeros "
                  << report.circle->min_zero_count << ", quadrature error "
                  << report.circle->max_quadrature_error << "\n";
    }
    if (report.hamiltonian) {
        std::cout << "hamiltonian: critical max defect " << report.hamiltonian->critical_max_defect
                  << ", noncritical probe " << report.hamiltonian->noncritical_probe_defect
                  << "\n";
    }
    if (report.conclusion) {
        std::cout << "conclusion at n=" << report.conclusion->largest_n << ": "
                  << report.conclusion->outcome << " (min defect " << report.conclusion->min_total
                  << ", certificate " << (report.conclusion->certified ? "true" : "false")
                  << ")\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical contact geometry on the standard sphere"};
    app.require_subcommand(1);

    CliOverrides overrides;
    std::string suite;

    CLI::App* run = app.add_subcommand("run", "full counterexample pipeline");
    add_common_flags(run, overrides);
    for (const char* name : {"verify", "spectrum", "decay", "search", "certify", "circle",
                             "hamiltonian"}) {
        CLI::App* cmd = app.add_subcommand(name, std::string("run the ") + name + " stage");
        add_common_flags(cmd, overrides);
        cmd->callback([&suite, name] { suite = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const csphere::ExperimentConfig config = resolve_config(overrides);
        csphere::PipelineReport report;
        if (run->parsed()) {
            report = csphere::run_counterexample(config);
            print_summary(report);
            return csphere::conclusion_exit_code(report);
        }
        report = csphere::run_suite(suite, config);
        print_summary(report);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
