#include "recomb/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "recomb/parallel.hpp"

namespace recomb {

namespace {

constexpr double kMassTol = 1e-10;

double support_diameter(const ParticleMeasure& mu) {
    double sq = 0.0;
    for (std::size_t j = 0; j < mu.dim(); ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            lo = std::min(lo, mu.point(i)[j]);
            hi = std::max(hi, mu.point(i)[j]);
        }
        sq += (hi - lo) * (hi - lo);
    }
    return std::sqrt(sq);
}

void check_stage(const ParticleMeasure& mu, double mass, int step) {
    const double m = total_mass(mu);
    if (std::abs(m - mass) > kMassTol * mass)
        throw Error("step " + std::to_string(step) + ": total mass drifted to " + std::to_string(m));
    for (double w : mu.weights())
        if (!(w > 0.0)) throw Error("step " + std::to_string(step) + ": non-positive weight");
}

double expectation(const ParticleMeasure& mu, const Payoff& f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) sum += mu.weight(i) * f(mu.point(i));
    return sum;
}

std::vector<double> radii_for(const RunConfig& c, const Partition& part) {
    const int k = c.k;
    const int m = c.cubature.degree();
    switch (c.radius_rule) {
        case RadiusRule::example1:
            return radius_schedule_example1(part.steps, c.hormander_step(), m);
        case RadiusRule::example2:
            return radius_schedule_example2(part, c.T, m, c.r, c.hormander_step());
        case RadiusRule::fixed:
            return std::vector<double>(static_cast<std::size_t>(std::max(k - 2, 0)), c.fixed_radius);
        case RadiusRule::none:
            return {};
    }
    return {};
}

bool recombination_pays(const RunConfig& c, const ParticleMeasure& q, double u, double diameter) {
    const std::size_t N = q.dim();
    const double nhat = static_cast<double>(q.size());
    const double basis = static_cast<double>(binomial(N + static_cast<std::size_t>(c.r), N));
    const double cells = std::pow(diameter / u * std::sqrt(static_cast<double>(N)) / 2.0 + 1.0,
                                  static_cast<double>(N));
    const double expected_after = std::min(nhat, cells * basis);
    const double saved = (nhat - expected_after) * static_cast<double>(c.cubature.size()) * c.ode_cost_ops;
    return cost_model(std::max(diameter, u), u, N, c.r, nhat) <= saved;
}

RunResult iterate(const RunConfig& c, bool recombine) {
    if (c.k < 1) throw ConfigError("k must be >= 1");
    if (!(c.T > 0.0)) throw ConfigError("T must be positive");
    if (c.x0.size() != c.model.state_dim) throw ConfigError("x0 dimension does not match the model");
    if (c.cubature.d() != c.model.drive_dim) throw ConfigError("cubature d does not match the model");
    set_threads(c.threads);

    const Partition part = make_partition(c.T, c.k, c.gamma);
    const std::vector<double> radii = recombine ? radii_for(c, part) : std::vector<double>{};
    const bool active = recombine && c.radius_rule != RadiusRule::none;

    RunResult result;
    ParticleMeasure q = ParticleMeasure::dirac(c.x0);
    for (int j = 1; j <= c.k; ++j) {
        const auto start = std::chrono::steady_clock::now();
        StepDiagnostics diag;
        diag.step = j;
        diag.s = part.steps[static_cast<std::size_t>(j - 1)];
        try {
            q = klv_transition(q, diag.s, c.cubature, c.model, c.ode_tol);
        } catch (const Error& e) {
            throw Error("step " + std::to_string(j) + ": " + e.what());
        }
        result.ode_solves += q.size();
        diag.particles_before = q.size();
        result.max_particles = std::max(result.max_particles, q.size());
        check_stage(q, 1.0, j);

        // No recombination after the first and the last step.
        if (active && j >= 2 && j <= c.k - 1) {
            double u = radii[static_cast<std::size_t>(j - 2)];
            const double diameter = support_diameter(q);
            if (c.radius_rule == RadiusRule::example2 && diameter > 0.0) u = std::min(u, diameter);
            if (!c.skip_unprofitable || recombination_pays(c, q, u, diameter)) {
                LocalizedReduction red;
                try {
                    red = reduce_localized(q, u, c.r, c.algorithm, c.patch_centre);
                } catch (const Error& e) {
                    throw Error("step " + std::to_string(j) + ": " + e.what());
                }
                for (std::size_t i = 0; i < red.support.size(); ++i) {
                    if (red.support[i] >= q.size())
                        throw Error("step " + std::to_string(j) + ": reduced support outside the measure");
                }
                diag.u = u;
                diag.patches = red.patch_count;
                q = std::move(red.measure);
                check_stage(q, 1.0, j);
            }
        }
        diag.particles_after = q.size();
        diag.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        result.diagnostics.push_back(diag);
    }
    result.estimate = expectation(q, c.payoff);
    result.final_measure = std::move(q);
    return result;
}

}  // namespace

Partition make_partition(double T, int k, double gamma) {
    if (k < 1) throw ConfigError("make_partition: k must be >= 1");
    if (!(gamma > 0.0)) throw ConfigError("make_partition: gamma must be positive");
    if (!(T > 0.0)) throw ConfigError("make_partition: T must be positive");
    Partition p;
    p.times.resize(static_cast<std::size_t>(k) + 1);
    for (int j = 0; j <= k; ++j)
        p.times[static_cast<std::size_t>(j)] = T * (1.0 - std::pow(1.0 - static_cast<double>(j) / k, gamma));
    p.times.front() = 0.0;
    p.times.back() = T;
    for (int j = 1; j <= k; ++j)
        p.steps.push_back(p.times[static_cast<std::size_t>(j)] - p.times[static_cast<std::size_t>(j - 1)]);
    return p;
}

std::vector<double> radius_schedule_example1(const std::vector<double>& s, int p, int m) {
    if (p < 1 || m < 1) throw ConfigError("radius_schedule_example1: p and m must be >= 1");
    const int ceil_mp = (m + p - 1) / p;
    const double a = static_cast<double>(p - 1) / (2.0 * (ceil_mp + 1));
    const double exponent = p / 2.0 - a;
    std::vector<double> u;
    for (std::size_t j = 2; j + 1 <= s.size(); ++j) u.push_back(std::pow(s[j - 1], exponent));
    return u;
}

std::vector<double> radius_schedule_example2(const Partition& partition, double T, int m, int r, int p) {
    if (m != r) throw ConfigError("radius_schedule_example2: requires m == r");
    const std::size_t k = partition.steps.size();
    std::vector<double> u;
    for (std::size_t j = 2; j + 1 <= k; ++j) {
        const double s = partition.steps[j - 1];
        const double rest = T - partition.times[j];
        if (!(rest > 0.0)) throw ConfigError("radius_schedule_example2: t_j must be < T");
        const double ratio = std::pow(s, m + 1) / std::pow(rest, m - r * p);
        u.push_back(std::pow(ratio, 1.0 / (2.0 * (r + 1))));
    }
    return u;
}

double cost_model(double D, double delta, std::size_t N, int r, double nhat) {
    if (!(D > 0.0) || !(delta > 0.0) || N == 0 || r < 0 || !(nhat > 0.0))
        throw std::invalid_argument("cost_model: arguments must be positive");
    const double basis = static_cast<double>(binomial(static_cast<std::size_t>(r) + N, N));
    return std::pow(D / delta, static_cast<double>(N)) * std::pow(basis, 4) * std::log2(nhat) + nhat * basis;
}

double delta_for_error(double eps, int r, double c) {
    if (!(eps > 0.0) || r < 0 || !(c > 0.0)) throw std::invalid_argument("delta_for_error: arguments must be positive");
    return std::pow(eps * std::tgamma(r + 2.0) / c, 1.0 / (r + 1));
}

RunResult run_recombining_klv(const RunConfig& config) { return iterate(config, true); }

std::size_t vanilla_tree_nodes(std::size_t n, int k) {
    std::size_t nodes = 0;
    std::size_t level = 1;
    for (int j = 0; j <= k; ++j) {
        nodes += level;
        level *= n;
    }
    return nodes;
}

RunResult run_vanilla_klv(const RunConfig& config, double limit) {
    const double n = static_cast<double>(config.cubature.size());
    if (std::pow(n, config.k) > limit) throw TreeTooLarge("run_vanilla_klv: n^k exceeds the tree size guard");
    RunResult result = iterate(config, false);
    std::size_t expected = 1;
    for (const auto& d : result.diagnostics) {
        expected *= config.cubature.size();
        if (d.particles_after != expected) throw Error("run_vanilla_klv: particle count differs from n^j");
    }
    return result;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog: need two or more points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        const double dy = std::log(y[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

ConvergenceTable convergence_study(const RunConfig& config, const std::vector<int>& k_list, double vanilla_limit) {
    const auto exact = config.model.exact_value(config.payoff, config.x0, config.T);
    if (!exact) throw ConfigError("convergence_study: no closed-form value for this model and payoff");
    ConvergenceTable table;
    table.exact = *exact;
    std::vector<double> ks, errs, vks, verrs;
    for (int k : k_list) {
        RunConfig c = config;
        c.k = k;
        const RunResult rec = run_recombining_klv(c);
        ConvergenceRow row;
        row.k = k;
        row.estimate = rec.estimate;
        row.abs_error = std::abs(rec.estimate - *exact);
        row.max_particles = rec.max_particles;
        if (std::pow(static_cast<double>(c.cubature.size()), k) <= vanilla_limit) {
            const RunResult van = run_vanilla_klv(c, vanilla_limit);
            row.vanilla_estimate = van.estimate;
            row.vanilla_abs_error = std::abs(van.estimate - *exact);
            row.vanilla_particles = van.max_particles;
            vks.push_back(k);
            verrs.push_back(*row.vanilla_abs_error);
        }
        ks.push_back(k);
        errs.push_back(row.abs_error);
        table.rows.push_back(row);
    }
    if (ks.size() >= 2) table.fit = fit_loglog(ks, errs);
    if (vks.size() >= 2) table.vanilla_fit = fit_loglog(vks, verrs);
    return table;
}

namespace {

VectorFieldModel model_from_json(const std::string& name, const nlohmann::json& params) {
    if (name == "gbm") return gbm_model(params.value("sigma", 0.2), params.value("rate", 0.0));
    if (name == "heisenberg") return heisenberg_model();
    if (name == "constant") return constant_model(params.at("fields").get<std::vector<std::vector<double>>>());
    if (name == "linear") {
        std::vector<Eigen::MatrixXd> mats;
        for (const auto& jm : params.at("matrices")) {
            const auto rows = jm.get<std::vector<std::vector<double>>>();
            Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows.size()) throw ConfigError("linear model: matrices must be square");
                for (std::size_t j = 0; j < rows.size(); ++j)
                    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
            }
            mats.push_back(std::move(a));
        }
        return linear_model(std::move(mats));
    }
    throw ConfigError("unknown model '" + name + "'");
}

Payoff payoff_from_json(const std::string& name, const nlohmann::json& params) {
    Payoff f;
    if (name == "call") f.kind = PayoffKind::call;
    else if (name == "put") f.kind = PayoffKind::put;
    else if (name == "identity") f.kind = PayoffKind::identity;
    else if (name == "constant") f.kind = PayoffKind::constant;
    else throw ConfigError("unknown payoff '" + name + "'");
    f.strike = params.value("strike", params.value("K", 1.0));
    f.value = params.value("value", 1.0);
    f.component = params.value("component", std::size_t{0});
    return f;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base) {
    RunConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        const auto empty = nlohmann::json::object();
        c.model = model_from_json(j.value("model", std::string("gbm")), j.contains("model_params") ? j["model_params"] : empty);
        c.payoff = payoff_from_json(j.value("payoff", std::string("call")), j.contains("payoff_params") ? j["payoff_params"] : empty);
        c.x0 = j.contains("x0") ? j["x0"].get<std::vector<double>>() : std::vector<double>(c.model.state_dim, 1.0);
        c.T = j.value("T", 1.0);
        c.k = j.value("k", 8);
        c.gamma = j.value("gamma", 4.0);
        const std::string cub = j.value("cubature", std::string("degree3"));
        if (cub == "degree3") {
            c.cubature = degree3_formula(c.model.drive_dim);
        } else {
            std::filesystem::path file(cub);
            if (file.is_relative() && !base.empty()) file = base / file;
            c.cubature = load_formula(file);
        }
        c.r = j.value("r", 3);
        const std::string rule = j.value("radius_rule", std::string("example1"));
        if (rule == "example1") c.radius_rule = RadiusRule::example1;
        else if (rule == "example2") c.radius_rule = RadiusRule::example2;
        else if (rule == "none") c.radius_rule = RadiusRule::none;
        else if (rule == "fixed") {
            c.radius_rule = RadiusRule::fixed;
            c.fixed_radius = j.at("radius").get<double>();
        } else throw ConfigError("unknown radius_rule '" + rule + "'");
        if (j.contains("p")) c.p = j["p"].get<int>();
        c.ode_tol = j.value("ode_tol", 1e-10);
        c.seed = j.value("seed", std::uint64_t{0});
        c.threads = j.value("threads", 1);
        const int alg = j.value("algorithm", 2);
        if (alg != 1 && alg != 2) throw ConfigError("algorithm must be 1 or 2");
        c.algorithm = alg == 1 ? Algorithm::elimination : Algorithm::hierarchical;
        c.patch_centre = j.value("patch_centre", std::string("cell")) == "mass" ? PatchCentre::mass : PatchCentre::cell;
        c.skip_unprofitable = j.value("skip_unprofitable", false);
        c.ode_cost_ops = j.value("ode_cost_ops", 1000.0);
        if (j.value("recombine_first_last", false))
            throw ConfigError("recombine_first_last must be false");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    if (c.k < 1) throw ConfigError("run config: k must be >= 1");
    if (c.r < 1) throw ConfigError("run config: r must be >= 1");
    if (!(c.T > 0.0) || !(c.gamma > 0.0)) throw ConfigError("run config: T and gamma must be positive");
    if (c.x0.size() != c.model.state_dim) throw ConfigError("run config: x0 has the wrong dimension");
    return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), file.parent_path());
}

}  // namespace recomb
