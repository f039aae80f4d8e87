#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recomb/cubature.hpp"
#include "recomb/error.hpp"
#include "recomb/measure.hpp"

namespace recomb {

/// Writes V(x) into out; both have the state dimension.
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

enum class PayoffKind { call, put, identity, constant };

/// Test function f applied to one coordinate of the state.
struct Payoff {
    PayoffKind kind = PayoffKind::identity;
    double strike = 0.0;
    double value = 1.0;  ///< for constant
    std::size_t component = 0;

    [[nodiscard]] double operator()(std::span<const double> x) const;
};

/// Stratonovich SDE dX = V_0(X) dt + sum_i V_i(X) o dB^i.
struct VectorFieldModel {
    std::string name;
    std::size_t state_dim = 0;
    std::size_t drive_dim = 0;
    /// fields[0] is the drift V_0, fields[i] drives B^i.
    std::vector<VectorField> fields;
    /// Declared step of the uniform Hoermander condition.
    int hormander_step = 1;
    /// Uniform bound on the fields, if any.
    std::optional<double> field_bound;
    /// E f(X_T) started at x0, where known in closed form.
    std::function<std::optional<double>(const Payoff&, std::span<const double> x0, double T)> exact;

    [[nodiscard]] std::optional<double> exact_value(const Payoff& f, std::span<const double> x0, double T) const {
        if (!exact) return std::nullopt;
        return exact(f, x0, T);
    }
};

/// V_i constant: fields[i] = c[i].
VectorFieldModel constant_model(std::vector<std::vector<double>> c);
/// V_i(x) = A_i x.
VectorFieldModel linear_model(std::vector<Eigen::MatrixXd> a);
/// Black-Scholes: V_0(x) = (rate - sigma^2/2) x, V_1(x) = sigma x.
VectorFieldModel gbm_model(double sigma, double rate = 0.0);
/// N = 2, d = 1: V_0 = 0, V_1 = (1, x_1). Brackets span R^2, step 2.
VectorFieldModel heisenberg_model();

/// Undiscounted Black-Scholes call expectation E (S_T - K)^+.
double black_scholes_call_expectation(double s0, double strike, double sigma, double rate, double T);

/// Endpoint of y' = V_0(y) dt + sum_i V_i(y) dw^i along the path from x.
/// Each segment is integrated with classical RK4, doubling the substep count
/// until two successive results agree to ode_tol (1 + |y|).
/// Throws OdeDivergence if the state norm exceeds 1e12.
std::vector<double> solve_along_path(const VectorFieldModel& model, std::span<const double> x,
                                     const BVPath& path, double ode_tol = 1e-10);

/// sum_j sum_i mu_j lambda_i delta_{Phi_{s, x_j}(omega_{s, i})}; particle
/// j * n + i comes from parent j and path i.
ParticleMeasure klv_transition(const ParticleMeasure& mu, double s, const WienerCubature& formula,
                               const VectorFieldModel& model, double ode_tol = 1e-10);

}  // namespace recomb
