#include <cmath>
#include <vector>

#include "doctest.h"
#include "recomb/driver.hpp"
#include "recomb/error.hpp"

using namespace recomb;

TEST_CASE("partitions") {
    auto p = make_partition(2.0, 4, 1.0);
    for (int j = 0; j <= 4; ++j) CHECK(p.times[static_cast<std::size_t>(j)] == doctest::Approx(0.5 * j));
    auto q = make_partition(1.0, 8, 4.0);
    CHECK(q.times.front() == 0.0);
    CHECK(q.times.back() == 1.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < q.steps.size(); ++j) {
        sum += q.steps[j];
        CHECK(q.times[j + 1] == doctest::Approx(1.0 - std::pow(1.0 - (j + 1) / 8.0, 4.0)));
        if (j > 0) CHECK(q.steps[j] < q.steps[j - 1]);
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_partition(1.0, 0, 2.0), ConfigError);
    CHECK_THROWS_AS(make_partition(1.0, 4, 0.0), ConfigError);
}

TEST_CASE("radius schedules") {
    const std::vector<double> s{0.4, 0.3, 0.2, 0.1};
    auto u1 = radius_schedule_example1(s, 1, 3);
    REQUIRE(u1.size() == 2);
    CHECK(u1[0] == doctest::Approx(std::sqrt(0.3)));
    CHECK(u1[1] == doctest::Approx(std::sqrt(0.2)));
    auto u2 = radius_schedule_example1(s, 2, 3);
    CHECK(u2[0] == doctest::Approx(std::pow(0.3, 5.0 / 6.0)));
    auto ones = radius_schedule_example1({1.0, 1.0, 1.0}, 3, 5);
    CHECK(ones[0] == 1.0);

    // T = 1, m = r = 3, p = 1, s_2 = 1/4, T - t_2 = 1/2.
    Partition part{{0.0, 0.25, 0.5, 1.0}, {0.25, 0.25, 0.5}};
    auto e2 = radius_schedule_example2(part, 1.0, 3, 3, 1);
    REQUIRE(e2.size() == 1);
    CHECK(e2[0] == doctest::Approx(0.5));
    // m - r p = 0 gives s^(1/2).
    auto flat = make_partition(1.0, 6, 3.0);
    auto e3 = radius_schedule_example2(flat, 1.0, 2, 2, 1);
    for (std::size_t j = 0; j < e3.size(); ++j) CHECK(e3[j] == doctest::Approx(std::sqrt(flat.steps[j + 1])));
    CHECK_THROWS_AS(radius_schedule_example2(part, 1.0, 3, 2, 1), ConfigError);
}

TEST_CASE("cost model") {
    CHECK(cost_model(10, 1, 2, 2, 1000) == doctest::Approx(100.0 * 1296.0 * std::log2(1000.0) + 6000.0));
    CHECK(cost_model(10, 1, 2, 2, 1000) == doctest::Approx(1.2976e6).epsilon(1e-4));
    CHECK(cost_model(3, 3, 4, 2, 64) == doctest::Approx(std::pow(15.0, 4) * 6.0 + 64.0 * 15.0));
    CHECK(delta_for_error(1e-4, 1, 2.0) == doctest::Approx(0.01));
    CHECK_THROWS(cost_model(0, 1, 2, 2, 10));
    CHECK_THROWS(delta_for_error(-1, 1, 2.0));
}

TEST_CASE("vanilla tree") {
    RunConfig c;
    c.model = constant_model({{0.0}, {1.0}});
    c.payoff = {PayoffKind::identity, 0.0, 1.0, 0};
    c.x0 = {0.0};
    c.k = 3;
    c.gamma = 1.0;
    auto r = run_vanilla_klv(c);
    CHECK(r.final_measure.size() == 8);
    CHECK(vanilla_tree_nodes(2, 3) == 15);
    CHECK(r.ode_solves + 1 == vanilla_tree_nodes(2, 3));
    for (std::size_t j = 0; j < r.diagnostics.size(); ++j) CHECK(r.diagnostics[j].particles_after == (2u << j));

    c.k = 1;
    CHECK(run_vanilla_klv(c).final_measure.size() == 2);

    for (std::size_t n : {2, 3, 4}) {
        for (int k = 1; k <= 6; ++k) {
            std::size_t sum = 1, level = 1;
            for (int j = 1; j <= k; ++j) sum += (level *= n);
            CHECK(vanilla_tree_nodes(n, k) == sum);
            CHECK(vanilla_tree_nodes(n, k) * (n - 1) == std::pow(n, k + 1) - 1);
        }
    }

    c.k = 30;
    CHECK_THROWS_AS(run_vanilla_klv(c), TreeTooLarge);
}

TEST_CASE("constant fields compose additively") {
    RunConfig c;
    c.model = constant_model({{0.3, 0.0}, {1.0, 0.5}, {0.0, 2.0}});
    c.cubature = degree3_formula(2);
    c.x0 = {1.0, -1.0};
    c.payoff = {PayoffKind::identity, 0.0, 1.0, 1};
    c.k = 4;
    c.gamma = 2.0;
    auto r = run_vanilla_klv(c);
    CHECK(r.final_measure.size() == 256);
    CHECK(r.estimate == doctest::Approx(-1.0).epsilon(1e-12));
    c.payoff.component = 0;
    CHECK(run_vanilla_klv(c).estimate == doctest::Approx(1.3).epsilon(1e-12));
    // Every particle sits at x0 + c_0 T + sum of sampled increments.
    const auto& q = r.final_measure;
    double w = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        w += q.weight(i);
        CHECK(q.weight(i) == doctest::Approx(1.0 / 256));
    }
    CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("recombining run basics") {
    RunConfig c;
    c.k = 12;
    c.payoff = {PayoffKind::constant, 0.0, 1.0, 0};
    auto one = run_recombining_klv(c);
    CHECK(std::abs(one.estimate - 1.0) <= 1e-12);
    for (const auto& d : one.diagnostics) {
        CHECK(d.particles_after <= d.particles_before);
        if (d.step == 1 || d.step == c.k) CHECK_FALSE(d.u.has_value());
        else CHECK(d.u.has_value());
    }

    c.payoff = {PayoffKind::call, 1.0, 1.0, 0};
    c.radius_rule = RadiusRule::none;
    c.k = 8;
    auto off = run_recombining_klv(c);
    auto van = run_vanilla_klv(c);
    CHECK(off.estimate == van.estimate);
    CHECK(off.final_measure.coords() == van.final_measure.coords());

    // Identity payoff under GBM with r >= 1 is preserved by every reduction.
    c.radius_rule = RadiusRule::example1;
    c.payoff = {PayoffKind::identity, 0.0, 1.0, 0};
    auto rec = run_recombining_klv(c);
    CHECK(rec.estimate == doctest::Approx(run_vanilla_klv(c).estimate).epsilon(1e-10));
}

TEST_CASE("Heisenberg run with a fixed radius") {
    RunConfig c;
    c.model = heisenberg_model();
    c.x0 = {0.0, 0.0};
    c.payoff = {PayoffKind::identity, 0.0, 1.0, 1};
    c.k = 10;
    c.r = 2;
    c.radius_rule = RadiusRule::fixed;
    c.fixed_radius = 0.3;
    auto r = run_recombining_klv(c);
    // Degree 2 test functions keep E x2 = T/2 through each reduction.
    CHECK(r.estimate == doctest::Approx(0.5).epsilon(1e-9));
    bool reduced = false;
    for (const auto& d : r.diagnostics) reduced = reduced || d.particles_after < d.particles_before;
    CHECK(reduced);
}

TEST_CASE("example 2 radii and skipping") {
    RunConfig c;
    c.k = 10;
    c.radius_rule = RadiusRule::example2;
    auto r = run_recombining_klv(c);
    for (const auto& d : r.diagnostics)
        if (d.u) CHECK(*d.u > 0.0);
    c.r = 2;
    CHECK_THROWS_AS(run_recombining_klv(c), ConfigError);

    RunConfig s;
    s.k = 10;
    s.skip_unprofitable = true;
    s.ode_cost_ops = 1e-9;
    auto skipped = run_recombining_klv(s);
    for (const auto& d : skipped.diagnostics) CHECK_FALSE(d.u.has_value());
    s.ode_cost_ops = 1e12;
    auto kept = run_recombining_klv(s);
    bool any = false;
    for (const auto& d : kept.diagnostics) any = any || d.u.has_value();
    CHECK(any);
}

TEST_CASE("log-log fit") {
    std::vector<double> x{1, 2, 4, 8}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -1.5));
    auto fit = fit_loglog(x, y);
    CHECK(fit.slope == doctest::Approx(-1.5));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    CHECK_THROWS(fit_loglog({1.0}, {1.0}));
}

TEST_CASE("convergence study") {
    RunConfig c;
    auto table = convergence_study(c, {2, 4, 8}, 1e4);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.exact == doctest::Approx(black_scholes_call_expectation(1.0, 1.0, 0.2, 0.0, 1.0)));
    for (const auto& row : table.rows) {
        CHECK(row.vanilla_estimate.has_value());
        CHECK(row.abs_error == doctest::Approx(std::abs(row.estimate - table.exact)));
    }
    CHECK(table.vanilla_fit.has_value());

    RunConfig lin;
    lin.model = linear_model({Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1)});
    CHECK_THROWS_AS(convergence_study(lin, {2, 4}), ConfigError);
}

TEST_CASE("run configuration files") {
    auto c = parse_run_config(R"({"model":"gbm","model_params":{"sigma":0.3,"rate":0.01},
        "payoff":"call","payoff_params":{"strike":1.1},"x0":[1.0],"T":2.0,"k":6,"gamma":3.0,
        "cubature":"degree3","r":2,"radius_rule":"fixed","radius":0.05,"p":1,"ode_tol":1e-9,
        "seed":4,"threads":2,"algorithm":1})");
    CHECK(c.model.name == "gbm");
    CHECK(c.payoff.strike == 1.1);
    CHECK(c.T == 2.0);
    CHECK(c.k == 6);
    CHECK(c.gamma == 3.0);
    CHECK(c.r == 2);
    CHECK(c.radius_rule == RadiusRule::fixed);
    CHECK(c.fixed_radius == 0.05);
    CHECK(c.hormander_step() == 1);
    CHECK(c.ode_tol == 1e-9);
    CHECK(c.seed == 4);
    CHECK(c.threads == 2);
    CHECK(c.algorithm == Algorithm::elimination);

    auto h = parse_run_config(R"({"model":"heisenberg","payoff":"identity","payoff_params":{"component":1},
        "x0":[0,0],"radius_rule":"none"})");
    CHECK(h.model.state_dim == 2);
    CHECK(h.hormander_step() == 2);
    CHECK(h.cubature.d() == 1);

    auto l = parse_run_config(R"({"model":"linear","model_params":{"matrices":[[[0,0],[0,0]],[[1,0],[0,1]]]},
        "payoff":"constant","x0":[1,2]})");
    CHECK(l.model.state_dim == 2);

    CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"model":"nope"})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"payoff":"digital"})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"radius_rule":"wide"})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"x0":[1,2]})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"k":0})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"recombine_first_last":true})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"cubature":"missing.json"})"), ParseError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/run.json"), ConfigError);
}
