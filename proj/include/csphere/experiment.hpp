#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csphere/circle_map.hpp"
#include "csphere/contact_map.hpp"
#include "csphere/invariant_hamiltonian.hpp"
#include "csphere/moebius.hpp"
#include "csphere/sphere.hpp"
#include "csphere/translated_points.hpp"

namespace csphere {

using Json = nlohmann::json;

struct Tolerances {
    double bisection = 1e-10;
    double refinement = 1e-10;
    double residual = 1e-9;
};

/// Full experiment configuration; mirrors the JSON config file one-to-one
/// and rejects unknown keys so typos cannot silently change a run.
struct ExperimentConfig {
    int n = 2;
    double a = 0.5;
    double b = 0.5;
    std::vector<int> iterate_schedule{1, 2, 4, 8, 16, 32, 64};
    int grid = 200000;
    int starts = 64;
    std::uint64_t seed = 1;
    Tolerances tolerances;
    std::string output_dir = ".";

    void validate() const {
        if (n < 2) throw std::invalid_argument("config: n must be >= 2");
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("config: a must be in (0,1)");
        if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("config: b must be in (0,1)");
        if (grid < 1000) throw std::invalid_argument("config: grid must be >= 1000");
        if (starts < 1) throw std::invalid_argument("config: starts must be >= 1");
        if (iterate_schedule.empty()) throw std::invalid_argument("config: empty iterate_schedule");
        for (int k : iterate_schedule) {
            if (k < 1) throw std::invalid_argument("config: iterate_schedule entries must be >= 1");
        }
        if (!(tolerances.bisection > 0 && tolerances.refinement > 0 && tolerances.residual > 0)) {
            throw std::invalid_argument("config: tolerances must be positive");
        }
    }

    Json to_json() const {
        return Json{{"n", n},
                    {"a", a},
                    {"b", b},
                    {"iterate_schedule", iterate_schedule},
                    {"grid", grid},
                    {"starts", starts},
                    {"seed", seed},
                    {"tolerances",
                     Json{{"bisection", tolerances.bisection},
                          {"refinement", tolerances.refinement},
                          {"residual", tolerances.residual}}},
                    {"output_dir", output_dir}};
    }

    static ExperimentConfig from_json(const Json& j) {
        static const std::vector<std::string> known{"n",     "a",    "b",    "iterate_schedule",
                                                    "grid",  "starts", "seed", "tolerances",
                                                    "output_dir"};
        static const std::vector<std::string> tol_known{"bisection", "refinement", "residual"};
        for (const auto& [key, value] : j.items()) {
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw std::invalid_argument("config: unknown key '" + key + "'");
            }
        }
        ExperimentConfig c;
        if (j.contains("n")) c.n = j.at("n").get<int>();
        if (j.contains("a")) c.a = j.at("a").get<double>();
        if (j.contains("b")) c.b = j.at("b").get<double>();
        if (j.contains("iterate_schedule")) {
            c.iterate_schedule = j.at("iterate_schedule").get<std::vector<int>>();
        }
        if (j.contains("grid")) c.grid = j.at("grid").get<int>();
        if (j.contains("starts")) c.starts = j.at("starts").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("tolerances")) {
            const Json& t = j.at("tolerances");
            for (const auto& [key, value] : t.items()) {
                if (std::find(tol_known.begin(), tol_known.end(), key) == tol_known.end()) {
                    throw std::invalid_argument("config: unknown tolerance key '" + key + "'");
                }
            }
            if (t.contains("bisection")) c.tolerances.bisection = t.at("bisection").get<double>();
            if (t.contains("refinement")) {
                c.tolerances.refinement = t.at("refinement").get<double>();
            }
            if (t.contains("residual")) c.tolerances.residual = t.at("residual").get<double>();
        }
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.validate();
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        Json j = Json::parse(in);
        return from_json(j);
    }
};

// --- report sections -------------------------------------------------------

struct VerifySection {
    double phi_residual;
    double sigma_residual;
    double psi_residual;
    int sample;
};

struct ConjugatorSection {
    SpherePoint p;
    SpherePoint q;
    double fiber_margin;
};

struct SearchRow {
    int n;
    DefectReport report;
};

struct CertificateRow {
    int n;
    SeparationReport report;
};

struct Conclusion {
    int largest_n;
    double min_total;
    bool certified;
    double evidence_threshold = 1e-3;
    double translated_threshold = 1e-8;
    std::string outcome;  // "no-translated-points-evidence" | "translated-point-found" | "inconclusive"
};

/// Empirical surrogates of the localization argument's constants, measured
/// a posteriori and reported for illustration: M bounds |g|, g stays above
/// delta on the ball at p and below -delta on the ball at q, and N is the
/// first iterate that maps the sampled complement of B(p, r_p) into
/// B(q, r_q).
struct LocalizationConstants {
    double sup_abs_scaling;     // M
    double ball_scaling_margin; // delta
    int first_capture_iterate;  // N; -1 when not reached on the schedule
};

struct CircleSection {
    int maps;
    int min_zero_count;
    double max_quadrature_error;
};

struct HamiltonianSection {
    std::vector<double> weights;
    std::vector<double> times;
    double critical_max_defect;
    bool critical_all_translated;
    double noncritical_probe_defect;
};

/// Everything a run produced. Wall-clock timings are logged to the console
/// only; report.json stays bit-identical across repeated runs of one config.
struct PipelineReport {
    ExperimentConfig config;
    std::optional<VerifySection> verify;
    std::optional<std::pair<FixedPointSpectrum, FixedPointSpectrum>> spectrum;
    std::optional<ConjugatorSection> conjugator;
    std::vector<DecayRow> decay;
    std::vector<SearchRow> searches;
    std::vector<CertificateRow> certificates;
    std::optional<LocalizationConstants> constants;
    std::optional<Conclusion> conclusion;
    std::optional<CircleSection> circle;
    std::optional<HamiltonianSection> hamiltonian;
    std::vector<std::pair<std::string, double>> timings;

    Json to_json() const;
};

namespace detail {

inline Json point_to_json(const SpherePoint& z) {
    Json arr = Json::array();
    for (int i = 0; i < z.dim(); ++i) {
        arr.push_back(z[i].real());
        arr.push_back(z[i].imag());
    }
    return arr;
}

}  // namespace detail

inline Json PipelineReport::to_json() const {
    Json j;
    j["config"] = config.to_json();
    if (verify) {
        j["contact_verification"] = Json{{"phi_max_residual", verify->phi_residual},
                                         {"sigma_max_residual", verify->sigma_residual},
                                         {"psi_max_residual", verify->psi_residual},
                                         {"sample", verify->sample}};
    }
    if (spectrum) {
        auto spec_json = [](const FixedPointSpectrum& s) {
            return Json{{"point", detail::point_to_json(s.point)},
                        {"reeb_multiplier", s.reeb_multiplier},
                        {"contact_multiplier", s.contact_multiplier}};
        };
        j["spectrum"] = Json{{"repelling", spec_json(spectrum->first)},
                             {"attracting", spec_json(spectrum->second)}};
    }
    if (conjugator) {
        j["conjugator"] = Json{{"p", detail::point_to_json(conjugator->p)},
                               {"q", detail::point_to_json(conjugator->q)},
                               {"fiber_margin", conjugator->fiber_margin}};
    }
    if (!decay.empty()) {
        Json rows = Json::array();
        for (const auto& r : decay) {
            rows.push_back(Json{{"n", r.n},
                                {"sup_dist_sigma_to_p", r.sup_dist_to_p},
                                {"sup_dist_image_to_q", r.sup_image_dist_to_q},
                                {"sample_size", r.sample_size},
                                {"max_residual", r.max_residual},
                                {"flagged", r.flagged}});
        }
        j["decay"] = rows;
    }
    if (!searches.empty()) {
        Json rows = Json::array();
        for (const auto& s : searches) {
            rows.push_back(Json{{"n", s.n},
                                {"min_total", s.report.min_total},
                                {"g_component", s.report.g_component},
                                {"fiber_component", s.report.fiber_component},
                                {"argmin", detail::point_to_json(s.report.argmin)},
                                {"starts", s.report.starts},
                                {"grid", s.report.grid_size},
                                {"refinement_tolerance", s.report.refinement_tolerance},
                                {"converged", s.report.converged},
                                {"certified", s.report.certified}});
        }
        j["search"] = rows;
    }
    if (!certificates.empty()) {
        Json rows = Json::array();
        for (const auto& c : certificates) {
            rows.push_back(Json{{"n", c.n},
                                {"certified", c.report.certified},
                                {"zero_set_localized", c.report.zero_set_localized},
                                {"image_localized", c.report.image_localized},
                                {"fibers_separated", c.report.fibers_separated},
                                {"scaling_margin", c.report.scaling_margin},
                                {"image_margin", c.report.image_margin},
                                {"fiber_margin", c.report.fiber_margin},
                                {"sampled_fiber_inf", c.report.sampled_fiber_inf},
                                {"lipschitz", c.report.lipschitz},
                                {"failed", c.report.failed}});
        }
        j["certificates"] = rows;
    }
    if (constants) {
        j["localization_constants"] =
            Json{{"sup_abs_scaling", constants->sup_abs_scaling},
                 {"ball_scaling_margin", constants->ball_scaling_margin},
                 {"first_capture_iterate", constants->first_capture_iterate}};
    }
    if (conclusion) {
        j["conclusion"] = Json{{"largest_n", conclusion->largest_n},
                               {"min_total", conclusion->min_total},
                               {"certified", conclusion->certified},
                               {"evidence_threshold", conclusion->evidence_threshold},
                               {"translated_threshold", conclusion->translated_threshold},
                               {"outcome", conclusion->outcome}};
    }
    if (circle) {
        j["circle"] = Json{{"maps", circle->maps},
                           {"min_zero_count", circle->min_zero_count},
                           {"max_quadrature_error", circle->max_quadrature_error}};
    }
    if (hamiltonian) {
        j["hamiltonian"] = Json{{"weights", hamiltonian->weights},
                                {"times", hamiltonian->times},
                                {"critical_max_defect", hamiltonian->critical_max_defect},
                                {"critical_all_translated", hamiltonian->critical_all_translated},
                                {"noncritical_probe_defect", hamiltonian->noncritical_probe_defect}};
    }
    return j;
}

/// Exit-code contract: 0 evidence of no translated points at the largest
/// scheduled iterate (min defect above threshold and certificate true),
/// 2 a translated point was found there, 1 error or inconclusive.
inline int conclusion_exit_code(const PipelineReport& report) {
    if (!report.conclusion) return 1;
    if (report.conclusion->outcome == "no-translated-points-evidence") return 0;
    if (report.conclusion->outcome == "translated-point-found") return 2;
    return 1;
}

// --- file output -------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_decay_csv(const std::vector<DecayRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "n,sup_dist_sigma_to_p,sup_dist_image_to_q,sample_size\n";
    for (const auto& r : rows) {
        out << r.n << ',' << detail::format_double(r.sup_dist_to_p) << ','
            << detail::format_double(r.sup_image_dist_to_q) << ',' << r.sample_size << '\n';
    }
}

inline void write_defect_csv(const std::vector<SearchRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "n,min_total,g_component,fiber_component,starts\n";
    for (const auto& r : rows) {
        out << r.n << ',' << detail::format_double(r.report.min_total) << ','
            << detail::format_double(r.report.g_component) << ','
            << detail::format_double(r.report.fiber_component) << ',' << r.report.starts << '\n';
    }
}

inline void write_zeroset_csv(const ZeroSetSample& sample, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    const int n = sample.points.empty() ? 0 : sample.points.front().dim();
    for (int i = 1; i <= n; ++i) out << "z" << i << "_re,z" << i << "_im,";
    out << "residual\n";
    for (std::size_t k = 0; k < sample.points.size(); ++k) {
        for (int i = 0; i < n; ++i) {
            out << detail::format_double(sample.points[k][i].real()) << ','
                << detail::format_double(sample.points[k][i].imag()) << ',';
        }
        out << detail::format_double(sample.residuals[k]) << '\n';
    }
}

inline void write_report_json(const PipelineReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << report.to_json().dump(2) << '\n';
}

// --- pipeline ----------------------------------------------------------------

struct StageSelection {
    bool verify = false;
    bool spectrum = false;
    bool decay = false;
    bool search = false;
    bool certify = false;
    bool circle = false;
    bool hamiltonian = false;
    bool conclude = false;

    static StageSelection counterexample() {
        return StageSelection{true, true, true, true, true, false, false, true};
    }
    static StageSelection everything() {
        return StageSelection{true, true, true, true, true, true, true, true};
    }
};

/// Chordal radii of the separation-certificate balls. With the default
/// conjugator (b = 1/2) the fiber margin stays above 0.8 rad at 0.2/0.2.
inline constexpr double kCertificateRadiusP = 0.2;
inline constexpr double kCertificateRadiusQ = 0.2;

inline PipelineReport run_stages(const ExperimentConfig& config, const StageSelection& stages,
                                 bool write_files = true) {
    config.validate();
    PipelineReport report;
    report.config = config;

    const bool needs_maps =
        stages.verify || stages.spectrum || stages.decay || stages.search || stages.certify;

    namespace fs = std::filesystem;
    if (write_files) fs::create_directories(config.output_dir);
    auto out_path = [&](const std::string& name) {
        return (fs::path(config.output_dir) / name).string();
    };

    auto timed = [&](const std::string& stage, auto&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const std::exception& e) {
            throw std::runtime_error("stage " + stage + ": " + e.what());
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.timings.emplace_back(stage, dt);
        std::cout << "[csphere] " << stage << " finished in " << dt << " s\n";
    };

    ZeroSetOptions zero_opts;
    zero_opts.residual_tol = config.tolerances.bisection;

    std::optional<ContactMap> phi, psi;
    std::optional<Conjugator> conj;
    if (needs_maps) {
        timed("build", [&] {
            phi = canonical_moebius(config.a, config.n, 1);
            conj = build_conjugator(config.b, config.n);
            psi = conjugate(*phi, conj->sigma);
            report.conjugator = ConjugatorSection{conj->p, conj->q, conj->fiber_margin};
        });
    }

    if (stages.verify) {
        timed("verify", [&] {
            const int sample_count = 1000;
            const auto pts = sample_sphere(config.n, sample_count, config.seed ^ 0xc2b2ae35ULL);
            double worst_phi = 0.0, worst_sigma = 0.0, worst_psi = 0.0;
            for (const auto& z : pts) {
                worst_phi = std::max(worst_phi, verify_contact(*phi, z));
                worst_sigma = std::max(worst_sigma, verify_contact(conj->sigma, z));
                worst_psi = std::max(worst_psi, verify_contact(*psi, z));
            }
            report.verify = VerifySection{worst_phi, worst_sigma, worst_psi, sample_count};
            if (worst_phi > config.tolerances.residual || worst_sigma > config.tolerances.residual ||
                worst_psi > config.tolerances.residual) {
                throw std::runtime_error("contact residual above tolerance");
            }
        });
    }

    if (stages.spectrum) {
        timed("spectrum", [&] { report.spectrum = fixed_point_spectrum(*phi); });
    }

    std::vector<ZeroSetSample> samples;
    if (stages.decay) {
        timed("decay", [&] {
            require_north_south(*psi, conj->p, conj->q, config.seed);
            for (int n : config.iterate_schedule) {
                samples.push_back(extract_zero_set(*psi, n, config.grid, config.seed, zero_opts));
                report.decay.push_back(decay_row(*psi, conj->p, conj->q, samples.back()));
            }
            if (write_files) {
                write_decay_csv(report.decay, out_path("decay.csv"));
                for (const auto& s : samples) {
                    write_zeroset_csv(
                        s, out_path("zeroset_" + std::to_string(s.iterate_index) + ".csv"));
                }
            }
        });
    }

    if (stages.search) {
        timed("search", [&] {
            for (int n : config.iterate_schedule) {
                DefectReport r = search_translated(iterate(*psi, n), config.starts, config.grid,
                                                   config.seed, config.tolerances.refinement);
                report.searches.push_back(SearchRow{n, r});
            }
            if (write_files) write_defect_csv(report.searches, out_path("defect.csv"));
        });
    }

    if (stages.certify) {
        timed("certify", [&] {
            for (int n : config.iterate_schedule) {
                SeparationReport r = separation_certificate(
                    *psi, n, conj->p, conj->q, kCertificateRadiusP, kCertificateRadiusQ,
                    config.grid, config.seed, zero_opts);
                report.certificates.push_back(CertificateRow{n, r});
                for (auto& s : report.searches) {
                    if (s.n == n) s.report.certified = r.certified;
                }
            }
            if (write_files && !report.searches.empty()) {
                write_defect_csv(report.searches, out_path("defect.csv"));
            }

            // measured surrogates of the localization constants
            LocalizationConstants constants{0.0, 0.0, -1};
            const auto pts = sample_sphere(config.n, config.grid, config.seed);
            std::vector<SpherePoint> complement;
            for (const auto& z : pts) {
                constants.sup_abs_scaling =
                    std::max(constants.sup_abs_scaling, std::abs(psi->scaling(z)));
                if (complement.size() < 2000 &&
                    ambient_distance(z, conj->p) > kCertificateRadiusP) {
                    complement.push_back(z);
                }
            }
            double delta = std::numeric_limits<double>::infinity();
            for (const auto& z :
                 sample_cap(conj->p, kCertificateRadiusP, 2000, config.seed ^ 0x27d4eb2fULL)) {
                delta = std::min(delta, psi->scaling(z));
            }
            for (const auto& z :
                 sample_cap(conj->q, kCertificateRadiusQ, 2000, config.seed ^ 0x165667b1ULL)) {
                delta = std::min(delta, -psi->scaling(z));
            }
            constants.ball_scaling_margin = delta;
            const int max_n = *std::max_element(config.iterate_schedule.begin(),
                                                config.iterate_schedule.end());
            for (int k = 1; k <= max_n && constants.first_capture_iterate < 0; ++k) {
                bool captured = true;
                for (auto& z : complement) {
                    z = (*psi)(z);
                    captured = captured && ambient_distance(z, conj->q) <= kCertificateRadiusQ;
                }
                if (captured) constants.first_capture_iterate = k;
            }
            report.constants = constants;
        });
    }

    if (stages.circle) {
        timed("circle", [&] {
            std::mt19937_64 rng(config.seed ^ 0x85ebca6bULL);
            const int maps = 100;
            const int resolution = 512;
            int min_zeros = std::numeric_limits<int>::max();
            double worst_quadrature = 0.0;
            const double two_pi = 2.0 * std::numbers::pi;
            for (int m = 0; m < maps; ++m) {
                CircleMap cm = random_circle_map(rng);
                auto zeros = circle_zero_count(cm, resolution);
                min_zeros = std::min(min_zeros, zeros.count);
                double integral = 0.0;
                for (int i = 0; i < resolution; ++i) {
                    integral += cm.derivative(two_pi * i / resolution);
                }
                integral *= two_pi / resolution;
                worst_quadrature = std::max(worst_quadrature, std::abs(integral - two_pi));
            }
            report.circle = CircleSection{maps, min_zeros, worst_quadrature};
        });
    }

    if (stages.hamiltonian) {
        timed("hamiltonian", [&] {
            std::vector<double> weights(config.n);
            for (int i = 0; i < config.n; ++i) weights[i] = i + 1.0;
            InvariantHamiltonian h(weights);
            const std::vector<double> times{0.1, 1.0, std::numbers::pi};
            auto critical = critical_points_are_translated(h, times, 1e-10, 16, config.seed);
            CVector probe = CVector::Zero(config.n);
            probe(0) = probe(1) = Complex(1.0, 0.0);
            const double probe_defect =
                defect(invariant_flow(h, 1.0), SpherePoint(std::move(probe))).total;
            report.hamiltonian = HamiltonianSection{weights, times, critical.max_defect,
                                                    critical.all_translated, probe_defect};
        });
    }

    if (stages.conclude) {
        timed("conclude", [&] {
            if (report.searches.empty()) {
                throw std::runtime_error("conclusion requires the search stage");
            }
            const auto& last = report.searches.back();
            Conclusion c;
            c.largest_n = last.n;
            c.min_total = last.report.min_total;
            c.certified = last.report.certified;
            if (c.min_total <= c.translated_threshold) {
                c.outcome = "translated-point-found";
            } else if (c.min_total >= c.evidence_threshold && c.certified) {
                c.outcome = "no-translated-points-evidence";
            } else {
                c.outcome = "inconclusive";
            }
            report.conclusion = c;
        });
    }

    if (write_files) write_report_json(report, out_path("report.json"));
    return report;
}

/// The end-to-end counterexample pipeline: build φ_a, verify, spectra,
/// conjugate to ψ, localization table over the schedule, translated-point
/// search and separation certificate per scheduled iterate, conclusion.
inline PipelineReport run_counterexample(const ExperimentConfig& config, bool write_files = true) {
    return run_stages(config, StageSelection::counterexample(), write_files);
}

/// Named sub-suites of the pipeline; `all` also runs the auxiliary circle
/// and Hamiltonian checks.
inline PipelineReport run_suite(const std::string& which, const ExperimentConfig& config,
                                bool write_files = true) {
    StageSelection stages;
    if (which == "verify") {
        stages.verify = true;
    } else if (which == "spectrum") {
        stages.spectrum = true;
    } else if (which == "decay") {
        stages.decay = true;
    } else if (which == "search") {
        stages.search = true;
    } else if (which == "certify") {
        stages.certify = true;
    } else if (which == "circle") {
        stages.circle = true;
    } else if (which == "hamiltonian") {
        stages.hamiltonian = true;
    } else if (which == "all") {
        stages = StageSelection::everything();
    } else {
        throw std::invalid_argument("run_suite: unknown suite '" + which + "'");
    }
    return run_stages(config, stages, write_files);
}

}  // namespace csphere
