#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "recomb/polybasis.hpp"

using namespace recomb;

TEST_CASE("binomial") {
    CHECK(binomial(5, 2) == 10);
    CHECK(binomial(5, 0) == 1);
    CHECK(binomial(3, 5) == 0);
    CHECK(binomial(40, 20) == 137846528820ULL);
}

TEST_CASE("basis sizes") {
    CHECK(raw_basis(2, 3).size() == 9);
    CHECK(raw_basis(3, 2).size() == 9);
    CHECK(raw_basis(4, 0).size() == 0);
    CHECK(raw_basis(5, 2).size() == 20);
}

TEST_CASE("size formula and exponent set by enumeration") {
    for (std::size_t N = 1; N <= 10; ++N) {
        for (int r = 0; r <= 6; ++r) {
            const auto basis = raw_basis(N, r);
            CHECK(basis.size() == binomial(N + static_cast<std::size_t>(r), N) - 1);
            std::set<std::vector<int>> seen;
            int last_degree = 1;
            for (const auto& e : basis.exponents()) {
                int deg = 0;
                for (int v : e) deg += v;
                CHECK(deg >= 1);
                CHECK(deg <= r);
                CHECK(deg >= last_degree);
                last_degree = deg;
                seen.insert(e);
            }
            CHECK(seen.size() == basis.size());
        }
    }
}

TEST_CASE("evaluation examples") {
    auto a = raw_basis(1, 2).evaluate(std::vector<double>{3.0});
    CHECK(a == std::vector<double>{3, 9});

    auto b = raw_basis(2, 2).evaluate(std::vector<double>{1.0, 2.0});
    CHECK(b == std::vector<double>{1, 2, 1, 2, 4});

    for (int r = 0; r <= 4; ++r) {
        auto c = build_basis(1, r, {3.0}, 2.0).evaluate(std::vector<double>{3.0});
        for (double v : c) CHECK(v == 0.0);
    }
    auto z = build_basis(3, 3, {1.0, -2.0, 0.5}, 0.1).evaluate(std::vector<double>{1.0, -2.0, 0.5});
    for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("evaluation matches direct powers") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t N = 1 + static_cast<std::size_t>(trial % 4);
        const int r = 1 + trial % 5;
        std::vector<double> c(N), x(N);
        for (auto& v : c) v = u(rng);
        for (auto& v : x) v = u(rng);
        const double s = 0.5 + std::abs(u(rng));
        const auto basis = build_basis(N, r, c, s);
        const auto vals = basis.evaluate(x);
        REQUIRE(vals.size() == basis.size());
        for (std::size_t k = 0; k < basis.size(); ++k) {
            double direct = 1.0;
            for (std::size_t j = 0; j < N; ++j) direct *= std::pow((x[j] - c[j]) / s, basis.exponents()[k][j]);
            CHECK(vals[k] == doctest::Approx(direct).epsilon(1e-13));
        }
    }
}

TEST_CASE("invalid bases") {
    CHECK_THROWS(build_basis(0, 2, {}, 1.0));
    CHECK_THROWS(build_basis(2, -1, {0, 0}, 1.0));
    CHECK_THROWS(build_basis(2, 2, {0, 0}, 0.0));
    CHECK_THROWS(build_basis(2, 2, {0}, 1.0));
}
