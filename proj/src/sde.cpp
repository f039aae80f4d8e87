#include "recomb/sde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "recomb/parallel.hpp"

namespace recomb {

namespace {

constexpr double kBlowUp = 1e12;
constexpr int kMaxDoublings = 20;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// E (Y - K)^+ for Y ~ N(mean, var).
double gaussian_call(double mean, double var, double strike) {
    if (var <= 0.0) return std::max(mean - strike, 0.0);
    const double sd = std::sqrt(var);
    const double z = (mean - strike) / sd;
    return (mean - strike) * normal_cdf(z) + sd * normal_pdf(z);
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void check_state(std::span<const double> y) {
    for (double v : y)
        if (!std::isfinite(v) || std::abs(v) > kBlowUp)
            throw OdeDivergence("solve_along_path: state norm exceeded 1e12");
}

// Classical RK4 with `steps` equal substeps on y' = F(y), tau in [0, 1],
// where F(y) = V_0(y) dt + sum_i V_i(y) dw^i.
std::vector<double> rk4(const VectorFieldModel& model, std::span<const double> x, const Segment& seg, int steps) {
    const std::size_t n = model.state_dim;
    std::vector<double> y(x.begin(), x.end());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), field(n);
    const double h = 1.0 / steps;

    auto rhs = [&](std::span<const double> state, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        model.fields[0](state, field);
        for (std::size_t j = 0; j < n; ++j) out[j] += seg.duration * field[j];
        for (std::size_t i = 0; i < model.drive_dim; ++i) {
            const double dw = seg.increment[i];
            if (dw == 0.0) continue;
            model.fields[i + 1](state, field);
            for (std::size_t j = 0; j < n; ++j) out[j] += dw * field[j];
        }
    };

    for (int s = 0; s < steps; ++s) {
        rhs(y, k1);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
        rhs(tmp, k2);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
        rhs(tmp, k3);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + h * k3[j];
        rhs(tmp, k4);
        for (std::size_t j = 0; j < n; ++j) y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        check_state(y);
    }
    return y;
}

}  // namespace

double Payoff::operator()(std::span<const double> x) const {
    switch (kind) {
        case PayoffKind::call:
            return std::max(x[component] - strike, 0.0);
        case PayoffKind::put:
            return std::max(strike - x[component], 0.0);
        case PayoffKind::identity:
            return x[component];
        case PayoffKind::constant:
            return value;
    }
    return 0.0;
}

double black_scholes_call_expectation(double s0, double strike, double sigma, double rate, double T) {
    const double forward = s0 * std::exp(rate * T);
    const double vol = sigma * std::sqrt(T);
    if (vol <= 0.0) return std::max(forward - strike, 0.0);
    const double d1 = (std::log(forward / strike) + 0.5 * vol * vol) / vol;
    const double d2 = d1 - vol;
    return forward * normal_cdf(d1) - strike * normal_cdf(d2);
}

VectorFieldModel constant_model(std::vector<std::vector<double>> c) {
    if (c.size() < 2) throw std::invalid_argument("constant_model: need V_0 and at least one driving field");
    VectorFieldModel m;
    m.name = "constant";
    m.state_dim = c[0].size();
    m.drive_dim = c.size() - 1;
    double bound = 0.0;
    for (const auto& v : c) {
        if (v.size() != m.state_dim) throw std::invalid_argument("constant_model: inconsistent dimensions");
        double sq = 0.0;
        for (double x : v) sq += x * x;
        bound = std::max(bound, std::sqrt(sq));
        m.fields.push_back([v](std::span<const double>, std::span<double> out) {
            std::copy(v.begin(), v.end(), out.begin());
        });
    }
    m.field_bound = bound;
    m.hormander_step = 1;
    m.exact = [c](const Payoff& f, std::span<const double> x0, double T) -> std::optional<double> {
        // X_T = x0 + c_0 T + sum_i c_i B^i_T is Gaussian.
        const std::size_t k = f.component;
        const double mean = x0[k] + c[0][k] * T;
        double var = 0.0;
        for (std::size_t i = 1; i < c.size(); ++i) var += c[i][k] * c[i][k] * T;
        switch (f.kind) {
            case PayoffKind::identity:
                return mean;
            case PayoffKind::constant:
                return f.value;
            case PayoffKind::call:
                return gaussian_call(mean, var, f.strike);
            case PayoffKind::put:
                return gaussian_call(mean, var, f.strike) - (mean - f.strike);
        }
        return std::nullopt;
    };
    return m;
}

VectorFieldModel linear_model(std::vector<Eigen::MatrixXd> a) {
    if (a.size() < 2) throw std::invalid_argument("linear_model: need A_0 and at least one driving matrix");
    VectorFieldModel m;
    m.name = "linear";
    m.state_dim = static_cast<std::size_t>(a[0].rows());
    m.drive_dim = a.size() - 1;
    for (const auto& mat : a) {
        if (mat.rows() != mat.cols() || static_cast<std::size_t>(mat.rows()) != m.state_dim)
            throw std::invalid_argument("linear_model: matrices must be square of equal size");
        m.fields.push_back([mat](std::span<const double> x, std::span<double> out) {
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
            Eigen::Map<Eigen::VectorXd> ov(out.data(), static_cast<Eigen::Index>(out.size()));
            ov.noalias() = mat * xv;
        });
    }
    m.hormander_step = 1;
    m.exact = [](const Payoff& f, std::span<const double>, double) -> std::optional<double> {
        if (f.kind == PayoffKind::constant) return f.value;
        return std::nullopt;
    };
    return m;
}

VectorFieldModel gbm_model(double sigma, double rate) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gbm_model: sigma must be positive");
    VectorFieldModel m;
    m.name = "gbm";
    m.state_dim = 1;
    m.drive_dim = 1;
    const double drift = rate - 0.5 * sigma * sigma;
    m.fields.push_back([drift](std::span<const double> x, std::span<double> out) { out[0] = drift * x[0]; });
    m.fields.push_back([sigma](std::span<const double> x, std::span<double> out) { out[0] = sigma * x[0]; });
    m.hormander_step = 1;
    m.exact = [sigma, rate](const Payoff& f, std::span<const double> x0, double T) -> std::optional<double> {
        const double s0 = x0[0];
        switch (f.kind) {
            case PayoffKind::call:
                return black_scholes_call_expectation(s0, f.strike, sigma, rate, T);
            case PayoffKind::put:
                return black_scholes_call_expectation(s0, f.strike, sigma, rate, T) - (s0 * std::exp(rate * T) - f.strike);
            case PayoffKind::identity:
                return s0 * std::exp(rate * T);
            case PayoffKind::constant:
                return f.value;
        }
        return std::nullopt;
    };
    return m;
}

VectorFieldModel heisenberg_model() {
    VectorFieldModel m;
    m.name = "heisenberg";
    m.state_dim = 2;
    m.drive_dim = 1;
    m.fields.push_back([](std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
        out[1] = 0.0;
    });
    m.fields.push_back([](std::span<const double> x, std::span<double> out) {
        out[0] = 1.0;
        out[1] = x[0];
    });
    m.hormander_step = 2;
    m.exact = [](const Payoff& f, std::span<const double> x0, double T) -> std::optional<double> {
        // X1 = x1 + B, X2 = x2 + x1 B + B^2 / 2.
        if (f.kind == PayoffKind::constant) return f.value;
        if (f.kind != PayoffKind::identity) return std::nullopt;
        return f.component == 0 ? x0[0] : x0[1] + 0.5 * T;
    };
    return m;
}

std::vector<double> solve_along_path(const VectorFieldModel& model, std::span<const double> x,
                                     const BVPath& path, double ode_tol) {
    if (!(ode_tol > 0.0)) throw std::invalid_argument("solve_along_path: ode_tol must be positive");
    if (x.size() != model.state_dim) throw std::invalid_argument("solve_along_path: state dimension mismatch");
    if (path.dim() != model.drive_dim) throw std::invalid_argument("solve_along_path: path dimension mismatch");

    std::vector<double> y(x.begin(), x.end());
    for (const auto& seg : path.segments()) {
        int steps = 1;
        std::vector<double> coarse = rk4(model, y, seg, steps);
        for (int doubling = 0;; ++doubling) {
            std::vector<double> fine = rk4(model, y, seg, 2 * steps);
            double diff = 0.0;
            for (std::size_t j = 0; j < fine.size(); ++j) diff = std::max(diff, std::abs(fine[j] - coarse[j]));
            if (diff <= ode_tol * (1.0 + max_abs(fine)) || doubling == kMaxDoublings) {
                y = std::move(fine);
                break;
            }
            steps *= 2;
            coarse = std::move(fine);
        }
    }
    return y;
}

ParticleMeasure klv_transition(const ParticleMeasure& mu, double s, const WienerCubature& formula,
                               const VectorFieldModel& model, double ode_tol) {
    if (!(s > 0.0)) throw std::invalid_argument("klv_transition: s must be positive");
    if (formula.d() != model.drive_dim) throw std::invalid_argument("klv_transition: formula and model disagree on d");
    const std::vector<BVPath> paths = rescale(formula, s);
    const std::size_t n = paths.size();
    const std::size_t dim = mu.dim();
    const std::size_t total = mu.size() * n;

    std::vector<double> coords(total * dim);
    std::vector<double> weights(total);
    parallel_for(total, [&](std::size_t idx) {
        const std::size_t j = idx / n;
        const std::size_t i = idx % n;
        const auto end = solve_along_path(model, mu.point(j), paths[i], ode_tol);
        std::copy(end.begin(), end.end(), coords.begin() + static_cast<std::ptrdiff_t>(idx * dim));
        weights[idx] = mu.weight(j) * formula.weights()[i];
    });
    return ParticleMeasure(dim, std::move(coords), std::move(weights));
}

}  // namespace recomb
