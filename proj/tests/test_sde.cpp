#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "recomb/cubature.hpp"
#include "recomb/error.hpp"
#include "recomb/measure.hpp"
#include "recomb/parallel.hpp"
#include "recomb/sde.hpp"

using namespace recomb;

namespace {

BVPath make_path(std::vector<Segment> segments) { return BVPath(std::move(segments)); }

// E (S_T - K)^+ for log-normal S_T by composite Simpson over the Gaussian
// driver, from the exercise boundary to 12 standard deviations.
double lognormal_call_quadrature(double s0, double K, double sigma, double rate, double T) {
    const double mu = (rate - 0.5 * sigma * sigma) * T, sd = sigma * std::sqrt(T);
    const int n = 20000;
    const double a = (std::log(K / s0) - mu) / sd, b = 12.0, h = (b - a) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double z = a + i * h;
        const double v = (s0 * std::exp(mu + sd * z) - K) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        sum += v * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return sum * h / 3.0;
}

}  // namespace

TEST_CASE("payoffs") {
    const std::vector<double> x{1.5, -2.0};
    CHECK(Payoff{PayoffKind::call, 1.0, 1.0, 0}(x) == 0.5);
    CHECK(Payoff{PayoffKind::call, 2.0, 1.0, 0}(x) == 0.0);
    CHECK(Payoff{PayoffKind::put, 2.0, 1.0, 0}(x) == 0.5);
    CHECK(Payoff{PayoffKind::identity, 0.0, 1.0, 1}(x) == -2.0);
    CHECK(Payoff{PayoffKind::constant, 0.0, 3.0, 0}(x) == 3.0);
}

TEST_CASE("constant fields are transported exactly") {
    auto model = constant_model({{0.5, 0.0}, {1.0, 2.0}, {0.0, -1.0}});
    BVPath path({{0.3, {0.7, -0.2}}, {0.7, {0.1, 0.4}}});
    const std::vector<double> x{1.0, 1.0};
    auto y = solve_along_path(model, x, path);
    CHECK(y[0] == doctest::Approx(1.0 + 0.5 * 1.0 + 1.0 * 0.8).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(1.0 + 2.0 * 0.8 - 1.0 * 0.2).epsilon(1e-15));

    auto drift = solve_along_path(model, x, make_path({{2.0, {0.0, 0.0}}}));
    CHECK(drift[0] == doctest::Approx(2.0));
    CHECK(drift[1] == doctest::Approx(1.0));
}

TEST_CASE("linear field follows the exponential") {
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
    Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
    auto model = linear_model({zero, one});
    const std::vector<double> x{2.0};
    for (double s : {0.5, 1.0, -1.5}) {
        auto y = solve_along_path(model, x, make_path({{1.0, {s}}}));
        CHECK(std::abs(y[0] - 2.0 * std::exp(s)) <= 1e-9 * 2.0 * std::exp(s));
    }
    // Tighter tolerances do not get worse.
    double last = INFINITY;
    for (double tol : {1e-4, 1e-6, 1e-8, 1e-10, 1e-12}) {
        auto y = solve_along_path(model, x, make_path({{1.0, {2.0}}}), tol);
        const double err = std::abs(y[0] - 2.0 * std::exp(2.0));
        CHECK(err <= last * 1.0001 + 1e-13);
        last = err;
    }
}

TEST_CASE("GBM along a straight path") {
    const double sigma = 0.3, rate = 0.05;
    auto model = gbm_model(sigma, rate);
    const std::vector<double> x{1.2};
    double last = INFINITY;
    for (double tol : {1e-4, 1e-6, 1e-8, 1e-10}) {
        auto y = solve_along_path(model, x, make_path({{0.5, {0.8}}, {0.25, {-0.3}}}), tol);
        const double exact = 1.2 * std::exp((rate - 0.5 * sigma * sigma) * 0.75 + sigma * 0.5);
        const double err = std::abs(y[0] - exact);
        CHECK(err <= 10 * tol * (1 + exact));
        CHECK(err <= last * 1.0001 + 1e-13);
        last = err;
    }
}

TEST_CASE("Heisenberg model along a path") {
    auto model = heisenberg_model();
    CHECK(model.hormander_step == 2);
    const std::vector<double> x{0.5, -1.0};
    const double w = 0.9;
    auto y = solve_along_path(model, x, make_path({{1.0, {w}}}));
    CHECK(y[0] == doctest::Approx(0.5 + w));
    CHECK(y[1] == doctest::Approx(-1.0 + 0.5 * w + 0.5 * w * w).epsilon(1e-12));
}

TEST_CASE("blow-up is reported") {
    VectorFieldModel m;
    m.name = "square";
    m.state_dim = 1;
    m.drive_dim = 1;
    m.fields.push_back([](std::span<const double>, std::span<double> out) { out[0] = 0.0; });
    m.fields.push_back([](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0]; });
    const std::vector<double> x{1.0};
    CHECK_THROWS_AS(solve_along_path(m, x, make_path({{1.0, {2.0}}})), OdeDivergence);
}

TEST_CASE("closed-form prices") {
    for (double K : {0.8, 1.0, 1.3}) {
        for (double T : {0.25, 1.0, 2.0}) {
            CHECK(black_scholes_call_expectation(1.0, K, 0.2, 0.0, T) ==
                  doctest::Approx(lognormal_call_quadrature(1.0, K, 0.2, 0.0, T)).epsilon(1e-9));
            CHECK(black_scholes_call_expectation(1.0, K, 0.25, 0.03, T) ==
                  doctest::Approx(lognormal_call_quadrature(1.0, K, 0.25, 0.03, T)).epsilon(1e-9));
        }
    }
    auto c = constant_model({{0.0}, {0.5}});
    // Bachelier at the money: sd / sqrt(2 pi).
    CHECK(*c.exact_value(Payoff{PayoffKind::call, 1.0, 1.0, 0}, std::vector<double>{1.0}, 4.0) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    auto h = heisenberg_model();
    CHECK(*h.exact_value(Payoff{PayoffKind::identity, 0.0, 1.0, 1}, std::vector<double>{0.0, 2.0}, 3.0) == 3.5);
}

TEST_CASE("KLV transition") {
    auto f1 = degree3_formula(1);
    auto c = constant_model({{0.0}, {1.0}});
    auto mu = klv_transition(ParticleMeasure::dirac(std::vector<double>{2.0}), 1.0, f1, c);
    REQUIRE(mu.size() == 2);
    CHECK(mu.point(0)[0] == doctest::Approx(3.0));
    CHECK(mu.point(1)[0] == doctest::Approx(1.0));
    CHECK(mu.weight(0) == 0.5);

    auto gbm = gbm_model(0.2);
    auto g = klv_transition(ParticleMeasure::dirac(std::vector<double>{1.5}), 0.36, f1, gbm);
    const double drift = std::exp(-0.02 * 0.36);
    CHECK(g.point(0)[0] == doctest::Approx(1.5 * drift * std::exp(0.2 * 0.6)).epsilon(1e-10));
    CHECK(g.point(1)[0] == doctest::Approx(1.5 * drift * std::exp(-0.2 * 0.6)).epsilon(1e-10));

    // j-major ordering and product weights.
    ParticleMeasure two(1, {0.0, 10.0}, {0.25, 0.75});
    auto t = klv_transition(two, 1.0, f1, c);
    REQUIRE(t.size() == 4);
    CHECK(t.point(0)[0] == doctest::Approx(1.0));
    CHECK(t.point(1)[0] == doctest::Approx(-1.0));
    CHECK(t.point(2)[0] == doctest::Approx(11.0));
    CHECK(t.point(3)[0] == doctest::Approx(9.0));
    CHECK(t.weight(0) == 0.125);
    CHECK(t.weight(3) == 0.375);

    CHECK_THROWS(klv_transition(two, 0.0, f1, c));
    CHECK_THROWS(klv_transition(two, 1.0, degree3_formula(2), c));
}

TEST_CASE("KLV transition keeps mass and the formula's low moments") {
    for (std::size_t d = 1; d <= 3; ++d) {
        auto f = degree3_formula(d);
        std::vector<std::vector<double>> fields(d + 1, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < d; ++i) fields[i + 1][i] = 1.0;
        auto model = constant_model(fields);
        const double s = 0.7;
        auto mu = klv_transition(ParticleMeasure::dirac(std::vector<double>(d, 0.0), 2.0), s, f, model);
        CHECK(mu.size() == 2 * d);
        CHECK(std::abs(total_mass(mu) - 2.0) <= 2e-12);
        // Level one vanishes, level two gives the Brownian covariance s I.
        for (std::size_t a = 0; a < d; ++a) {
            double m1 = 0.0;
            for (std::size_t i = 0; i < mu.size(); ++i) m1 += mu.weight(i) * mu.point(i)[a];
            CHECK(std::abs(m1) < 1e-12);
            for (std::size_t b = 0; b < d; ++b) {
                double m2 = 0.0;
                for (std::size_t i = 0; i < mu.size(); ++i) m2 += mu.weight(i) * mu.point(i)[a] * mu.point(i)[b];
                CHECK(m2 / 2.0 == doctest::Approx(a == b ? s : 0.0).scale(1.0));
            }
        }
    }
}

TEST_CASE("KLV transition is independent of the thread count") {
    auto f = degree3_formula(2);
    Eigen::MatrixXd a0(2, 2), a1(2, 2), a2(2, 2);
    a0 << -0.1, 0.2, 0.0, -0.1;
    a1 << 0.3, 0.0, 0.1, 0.2;
    a2 << 0.0, -0.2, 0.25, 0.0;
    auto model = linear_model({a0, a1, a2});
    std::vector<double> c, w;
    for (int i = 0; i < 300; ++i) {
        c.push_back(std::sin(i));
        c.push_back(std::cos(3.0 * i));
        w.push_back(1.0 + 0.001 * i);
    }
    ParticleMeasure mu(2, c, w);
    set_threads(1);
    auto one = klv_transition(mu, 0.3, f, model);
    set_threads(4);
    auto four = klv_transition(mu, 0.3, f, model);
    set_threads(1);
    CHECK(one.coords() == four.coords());
    CHECK(one.weights() == four.weights());
}
