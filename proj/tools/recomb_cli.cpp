#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "recomb/cubature.hpp"
#include "recomb/driver.hpp"
#include "recomb/error.hpp"
#include "recomb/io.hpp"
#include "recomb/polybasis.hpp"
#include "recomb/recombine.hpp"

namespace {

using namespace recomb;

std::vector<int> parse_k_list(const std::string& text) {
    std::vector<int> ks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const int k = std::stoi(item, &used);
        if (used != item.size() || k < 1) throw ConfigError("bad --k entry '" + item + "'");
        ks.push_back(k);
    }
    if (ks.empty()) throw ConfigError("--k is empty");
    return ks;
}

void write_json(const nlohmann::json& j, const std::string& file) {
    if (file.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file);
    out << j.dump(2) << '\n';
}

int reduce_cmd(const std::string& input, const std::string& output, const std::string& report_file, int degree,
               const std::string& center, int algorithm) {
    const ParticleMeasure mu = read_particles(input);
    std::vector<double> c(mu.dim(), 0.0);
    if (center == "com") c = center_of_mass(mu);
    double scale = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < mu.dim(); ++j) scale = std::max(scale, std::abs(mu.point(i)[j] - c[j]));
    if (scale == 0.0) scale = 1.0;
    const MonomialBasis basis = build_basis(mu.dim(), degree, c, scale);
    const Reduction red =
        reduce_measure(mu, basis, algorithm == 1 ? Algorithm::elimination : Algorithm::hierarchical);
    if (output.empty())
        write_particles(std::cout, red.measure);
    else
        write_particles(std::filesystem::path(output), red.measure);
    nlohmann::json report = to_json(red.report);
    report["support"] = red.support;
    if (!report_file.empty() || !output.empty()) write_json(report, report_file);
    return 0;
}

int verify_cmd(const std::string& file, double tol) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open " + file);
    std::stringstream buf;
    buf << in.rdbuf();
    const CubatureFormula f = formula_from_json(buf.str());
    const CubatureCheck check = verify_cubature(f, tol);
    std::string word;
    for (int l : check.worst_word) word += std::to_string(l);
    nlohmann::json out{{"d", f.d}, {"m", f.m}, {"paths", f.paths.size()},
                       {"max_abs_deviation", check.max_abs_deviation}, {"worst_word", word},
                       {"passed", check.passed}};
    std::cout << out.dump(2) << '\n';
    return check.passed ? 0 : 1;
}

int run_cmd(const std::string& config_file, const std::string& diag_file, const std::string& summary_file,
            const std::string& particles_file, bool vanilla) {
    const RunConfig config = load_run_config(config_file);
    const RunResult result = vanilla ? run_vanilla_klv(config) : run_recombining_klv(config);
    if (diag_file.empty()) {
        write_diagnostics(std::cout, result.diagnostics);
    } else {
        std::ofstream out(diag_file);
        if (!out) throw Error("cannot write " + diag_file);
        write_diagnostics(out, result.diagnostics);
    }
    if (!particles_file.empty()) write_particles(std::filesystem::path(particles_file), result.final_measure);
    nlohmann::json summary = to_json(result, config);
    summary["method"] = vanilla ? "vanilla" : "recombining";
    if (summary_file.empty())
        std::cerr << summary.dump(2) << '\n';
    else
        write_json(summary, summary_file);
    return 0;
}

int convergence_cmd(const std::string& config_file, const std::string& k_text, const std::string& summary_file,
                    double vanilla_limit) {
    const RunConfig config = load_run_config(config_file);
    const ConvergenceTable table = convergence_study(config, parse_k_list(k_text), vanilla_limit);
    write_convergence(std::cout, table);
    if (summary_file.empty())
        std::cerr << "slope " << table.fit.slope << " (r^2 " << table.fit.r_squared << ")\n";
    else
        write_json(to_json(table), summary_file);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Moment-preserving recombination of particle measures and recombining KLV cubature"};
    app.require_subcommand(1);

    std::string input, output, report;
    int degree = 2;
    std::string center = "com";
    int algorithm = 2;
    auto* reduce = app.add_subcommand("reduce", "Reduce a particle CSV against all monomials up to --degree");
    reduce->add_option("input", input, "particle CSV (x1,...,xN,weight)")->required()->check(CLI::ExistingFile);
    reduce->add_option("-o,--output", output, "reduced particle CSV (stdout if omitted)");
    reduce->add_option("--report", report, "JSON report file (stdout if omitted and --output given)");
    reduce->add_option("--degree", degree, "polynomial degree r")->check(CLI::NonNegativeNumber);
    reduce->add_option("--center", center, "basis centre")->check(CLI::IsMember({"com", "origin"}));
    reduce->add_option("--algorithm", algorithm, "1: sequential elimination, 2: hierarchical")
        ->check(CLI::IsMember({1, 2}));

    std::string formula_file;
    double tol = 1e-10;
    auto* verify = app.add_subcommand("verify-cubature", "Check a cubature formula file against Brownian moments");
    verify->add_option("formula", formula_file, "formula JSON")->required()->check(CLI::ExistingFile);
    verify->add_option("--tol", tol, "absolute tolerance");

    std::string config_file, diag_file, summary_file, particles_file;
    bool vanilla = false;
    auto* run = app.add_subcommand("run", "Run the KLV iteration described by a run.json");
    run->add_option("--config", config_file, "run.json")->required()->check(CLI::ExistingFile);
    run->add_option("--diagnostics", diag_file, "per-step CSV (stdout if omitted)");
    run->add_option("--summary", summary_file, "JSON summary (stderr if omitted)");
    run->add_option("--particles", particles_file, "final particle CSV");
    run->add_flag("--vanilla", vanilla, "disable recombination and expand the full tree");

    std::string k_text = "2,4,8,16,32";
    double vanilla_limit = 1e6;
    auto* conv = app.add_subcommand("convergence", "Error against the closed form for a list of k");
    conv->add_option("--config", config_file, "run.json")->required()->check(CLI::ExistingFile);
    conv->add_option("--k", k_text, "comma separated step counts");
    conv->add_option("--summary", summary_file, "JSON summary (slope to stderr if omitted)");
    conv->add_option("--vanilla-limit", vanilla_limit, "largest n^k for which the vanilla tree is also run");

    double D = 0, delta = 0, nhat = 0;
    std::size_t N = 0;
    int r = 0;
    auto* cost = app.add_subcommand("cost", "Operation estimate of a localised reduction");
    cost->add_option("--D", D, "support diameter")->required();
    cost->add_option("--delta", delta, "patch size")->required();
    cost->add_option("--N", N, "state dimension")->required();
    cost->add_option("--r", r, "polynomial degree")->required();
    cost->add_option("--nhat", nhat, "number of particles")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*reduce) return reduce_cmd(input, output, report, degree, center, algorithm);
        if (*verify) return verify_cmd(formula_file, tol);
        if (*run) return run_cmd(config_file, diag_file, summary_file, particles_file, vanilla);
        if (*conv) return convergence_cmd(config_file, k_text, summary_file, vanilla_limit);
        if (*cost) {
            std::cout << std::setprecision(10) << cost_model(D, delta, N, r, nhat) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
