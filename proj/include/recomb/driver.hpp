#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recomb/cubature.hpp"
#include "recomb/localize.hpp"
#include "recomb/measure.hpp"
#include "recomb/recombine.hpp"
#include "recomb/sde.hpp"

namespace recomb {

enum class RadiusRule { example1, example2, fixed, none };

struct RunConfig {
    VectorFieldModel model = gbm_model(0.2, 0.0);
    Payoff payoff{PayoffKind::call, 1.0, 1.0, 0};
    std::vector<double> x0{1.0};
    double T = 1.0;
    int k = 8;
    double gamma = 4.0;
    WienerCubature cubature = degree3_formula(1);
    int r = 3;
    RadiusRule radius_rule = RadiusRule::example1;
    double fixed_radius = 0.1;
    /// Hoermander step used by the radius rules; the model's when unset.
    std::optional<int> p;
    double ode_tol = 1e-10;
    Algorithm algorithm = Algorithm::hierarchical;
    PatchCentre patch_centre = PatchCentre::cell;
    /// Skip a recombination whose estimated cost exceeds the ODE work it saves.
    bool skip_unprofitable = false;
    /// Operation count charged per ODE solve by the skip rule.
    double ode_cost_ops = 1000.0;
    int threads = 1;
    std::uint64_t seed = 0;

    [[nodiscard]] int hormander_step() const { return p.value_or(model.hormander_step); }
};

struct StepDiagnostics {
    int step = 0;
    double s = 0.0;
    /// Localisation radius, when this step recombined.
    std::optional<double> u;
    std::size_t particles_before = 0;
    std::size_t particles_after = 0;
    std::size_t patches = 0;
    double wall_ms = 0.0;
};

struct RunResult {
    double estimate = 0.0;
    std::vector<StepDiagnostics> diagnostics;
    ParticleMeasure final_measure;
    /// ODE solves performed (one per particle per step).
    std::size_t ode_solves = 0;
    std::size_t max_particles = 0;
};

struct Partition {
    std::vector<double> times;  ///< t_0 = 0 < ... < t_k = T
    std::vector<double> steps;  ///< steps[j - 1] = s_j = t_j - t_{j-1}
};

/// t_j = T (1 - (1 - j/k)^gamma).
Partition make_partition(double T, int k, double gamma);

/// u_j = s_j^{p/2 - a}, a = (p - 1) / (2 (ceil(m/p) + 1)), for j = 2..k-1.
/// s holds s_1..s_k; the result holds u_2..u_{k-1}.
std::vector<double> radius_schedule_example1(const std::vector<double>& s, int p, int m);

/// u_j = (s_j^{m+1} / (T - t_j)^{m - r p})^{1 / (2 (r + 1))} for j = 2..k-1.
/// Requires m == r (ConfigError otherwise).
std::vector<double> radius_schedule_example2(const Partition& partition, double T, int m, int r, int p);

/// (D/delta)^N C(r+N, N)^4 log2(nhat) + nhat C(r+N, N).
double cost_model(double D, double delta, std::size_t N, int r, double nhat);

/// delta = (eps (r+1)! / c)^{1/(r+1)}.
double delta_for_error(double eps, int r, double c);

/// Iterated KLV from delta_{x0} with localised recombination after steps
/// 2..k-1, and the estimate of E f over the final measure.
RunResult run_recombining_klv(const RunConfig& config);

/// Same iteration without recombination. Throws TreeTooLarge if n^k > limit.
RunResult run_vanilla_klv(const RunConfig& config, double limit = 1e7);

/// Tree nodes of the vanilla method, root included: (n^{k+1} - 1) / (n - 1).
std::size_t vanilla_tree_nodes(std::size_t n, int k);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares line through (log x, log y).
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceRow {
    int k = 0;
    double estimate = 0.0;
    double abs_error = 0.0;
    std::size_t max_particles = 0;
    std::optional<double> vanilla_estimate;
    std::optional<double> vanilla_abs_error;
    std::optional<std::size_t> vanilla_particles;
};

struct ConvergenceTable {
    double exact = 0.0;
    std::vector<ConvergenceRow> rows;
    LogLogFit fit;
    std::optional<LogLogFit> vanilla_fit;
};

/// Runs the recombining method (and the vanilla one while n^k <= vanilla_limit)
/// for every k. Requires a closed-form value for the model and payoff.
ConvergenceTable convergence_study(const RunConfig& config, const std::vector<int>& k_list,
                                   double vanilla_limit = 1e6);

/// Parses a run.json document; relative cubature paths resolve against base.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base = {});
RunConfig load_run_config(const std::filesystem::path& file);

}  // namespace recomb
