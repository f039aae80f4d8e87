#include "recomb/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "recomb/error.hpp"

namespace recomb {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& s, std::size_t row) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ParseError("particle CSV row " + std::to_string(row) + ": bad number '" + s + "'");
    return v;
}

std::string number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

ParticleMeasure read_particles(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("particle CSV: missing header");
    const auto header = split(line);
    if (header.size() < 2 || header.back() != "weight")
        throw ParseError("particle CSV: header must be x1,...,xN,weight");
    for (std::size_t j = 0; j + 1 < header.size(); ++j)
        if (header[j] != "x" + std::to_string(j + 1))
            throw ParseError("particle CSV: unexpected column '" + header[j] + "'");
    const std::size_t dim = header.size() - 1;

    std::vector<double> coords, weights;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split(line);
        if (cells.size() != dim + 1)
            throw ParseError("particle CSV row " + std::to_string(row) + ": expected " + std::to_string(dim + 1) +
                             " fields");
        for (std::size_t j = 0; j < dim; ++j) coords.push_back(parse_number(cells[j], row));
        const double w = parse_number(cells[dim], row);
        if (!(w > 0.0)) throw ParseError("particle CSV row " + std::to_string(row) + ": weight must be positive");
        weights.push_back(w);
    }
    if (weights.empty()) throw ParseError("particle CSV: no particles");
    return ParticleMeasure(dim, std::move(coords), std::move(weights));
}

ParticleMeasure read_particles(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open " + file.string());
    return read_particles(in);
}

void write_particles(std::ostream& out, const ParticleMeasure& mu) {
    for (std::size_t j = 0; j < mu.dim(); ++j) out << 'x' << j + 1 << ',';
    out << "weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double v : mu.point(i)) out << number(v) << ',';
        out << number(mu.weight(i)) << '\n';
    }
}

void write_particles(const std::filesystem::path& file, const ParticleMeasure& mu) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    write_particles(out, mu);
}

void write_diagnostics(std::ostream& out, const std::vector<StepDiagnostics>& diagnostics) {
    out << "step,s_j,u_j,particles_before,particles_after,patches,wall_ms\n";
    for (const auto& d : diagnostics) {
        out << d.step << ',' << number(d.s) << ',' << (d.u ? number(*d.u) : std::string()) << ','
            << d.particles_before << ',' << d.particles_after << ',' << d.patches << ',' << d.wall_ms << '\n';
    }
}

void write_convergence(std::ostream& out, const ConvergenceTable& table) {
    out << "k,estimate,abs_error,max_particles,vanilla_estimate,vanilla_abs_error,vanilla_particles\n";
    for (const auto& r : table.rows) {
        out << r.k << ',' << number(r.estimate) << ',' << number(r.abs_error) << ',' << r.max_particles << ','
            << (r.vanilla_estimate ? number(*r.vanilla_estimate) : std::string()) << ','
            << (r.vanilla_abs_error ? number(*r.vanilla_abs_error) : std::string()) << ','
            << (r.vanilla_particles ? std::to_string(*r.vanilla_particles) : std::string()) << '\n';
    }
}

nlohmann::json to_json(const ReductionReport& report) {
    return {{"input_support", report.input_support},
            {"output_support", report.output_support},
            {"procedure_a_calls", report.procedure_a_calls},
            {"elimination_steps", report.elimination_steps},
            {"max_moment_error", report.max_moment_error}};
}

nlohmann::json to_json(const RunResult& result, const RunConfig& config) {
    nlohmann::json j;
    j["model"] = config.model.name;
    j["T"] = config.T;
    j["k"] = config.k;
    j["gamma"] = config.gamma;
    j["m"] = config.cubature.degree();
    j["r"] = config.r;
    j["estimate"] = result.estimate;
    if (const auto exact = config.model.exact_value(config.payoff, config.x0, config.T)) {
        j["exact"] = *exact;
        j["abs_error"] = std::abs(result.estimate - *exact);
    }
    j["final_particles"] = result.final_measure.size();
    j["max_particles"] = result.max_particles;
    j["ode_solves"] = result.ode_solves;
    double wall = 0.0;
    for (const auto& d : result.diagnostics) wall += d.wall_ms;
    j["wall_ms"] = wall;
    return j;
}

nlohmann::json to_json(const ConvergenceTable& table) {
    nlohmann::json j;
    j["exact"] = table.exact;
    j["slope"] = table.fit.slope;
    j["r_squared"] = table.fit.r_squared;
    if (table.vanilla_fit) j["vanilla_slope"] = table.vanilla_fit->slope;
    auto rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        nlohmann::json row{{"k", r.k}, {"estimate", r.estimate}, {"abs_error", r.abs_error},
                           {"max_particles", r.max_particles}};
        if (r.vanilla_estimate) {
            row["vanilla_estimate"] = *r.vanilla_estimate;
            row["vanilla_abs_error"] = *r.vanilla_abs_error;
            row["vanilla_particles"] = *r.vanilla_particles;
        }
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

}  // namespace recomb
