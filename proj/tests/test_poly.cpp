#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "alflow/poly.hpp"

using alflow::Poly;

TEST_CASE("eval by Horner") {
    const Poly p{-1.72, 1.0};
    CHECK(p(1.0) == Catch::Approx(-0.72).margin(1e-15));

    const Poly zero{};
    CHECK(zero(3.7) == 0.0);

    const Poly f{-4.41, 8.88, -5.47, 1.0};
    CHECK(f(1.72) == Catch::Approx(-0.2304).margin(1e-12));
}

TEST_CASE("formal derivative") {
    const Poly p{2.43, -3.75, 1.0};
    const Poly d = p.derivative();
    REQUIRE(d.degree() == 1);
    CHECK(d.coeff(0) == Catch::Approx(-3.75));
    CHECK(d.coeff(1) == Catch::Approx(2.0));

    CHECK(Poly{0.48}.derivative().is_zero());

    const Poly A{3.0, -4.0, 1.0}; // (x-1)(x-3)
    CHECK(A.derivative()(1.0) == Catch::Approx(-2.0));
}

TEST_CASE("euclidean division") {
    SECTION("exact cubic split") {
        const Poly p{-4.1796, 8.88, -5.47, 1.0};
        const Poly d{-1.72, 1.0};
        const auto [q, r] = alflow::divmod(p, d);
        REQUIRE(q.degree() == 2);
        CHECK(q.coeff(0) == Catch::Approx(2.43).margin(1e-12));
        CHECK(q.coeff(1) == Catch::Approx(-3.75).margin(1e-12));
        CHECK(q.coeff(2) == Catch::Approx(1.0).margin(1e-12));
        CHECK(r.max_abs_coeff() <= 1e-12);
    }
    SECTION("p / p") {
        const Poly p{2.0, -3.0, 1.0};
        const auto [q, r] = alflow::divmod(p, p);
        REQUIRE(q.degree() == 0);
        CHECK(q.coeff(0) == Catch::Approx(1.0));
        CHECK(r.is_zero());
    }
    SECTION("nonzero remainder is returned, not dropped") {
        const auto [q, r] = alflow::divmod(Poly{1.0, 0.0, 1.0}, Poly{0.0, 1.0});
        CHECK(q.coeff(1) == Catch::Approx(1.0));
        CHECK(r.coeff(0) == Catch::Approx(1.0));
    }
    SECTION("zero divisor") {
        CHECK_THROWS_AS(alflow::divmod(Poly{1.0, 1.0}, Poly{}), std::invalid_argument);
    }
}

TEST_CASE("interpolation through nodes") {
    const std::vector<double> nodes{1.0, 3.0};
    SECTION("U from squared coordinates") {
        const Poly u = alflow::interpolate(nodes, std::vector<double>{-0.72, 1.28});
        REQUIRE(u.degree() == 1);
        CHECK(u.coeff(0) == Catch::Approx(-1.72).margin(1e-14));
        CHECK(u.coeff(1) == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("constant data collapses the degree") {
        const Poly v = alflow::interpolate(nodes, std::vector<double>{0.48, 0.48});
        REQUIRE(v.degree() == 0);
        CHECK(v.coeff(0) == Catch::Approx(0.48));
    }
    SECTION("Q from conserved constants") {
        const Poly q = alflow::interpolate(nodes, std::vector<double>{-0.47, 1.53});
        CHECK(q.coeff(0) == Catch::Approx(-1.47).margin(1e-14));
        CHECK(q.coeff(1) == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("duplicate nodes rejected") {
        CHECK_THROWS_AS(alflow::interpolate(std::vector<double>{1.0, 1.0},
                                            std::vector<double>{0.0, 1.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("real roots") {
    CHECK(alflow::real_roots(Poly{-1.72, 1.0}) == std::vector<double>{1.72});

    const auto r = alflow::real_roots(Poly{3.0, -4.0, 1.0});
    REQUIRE(r.size() == 2);
    CHECK(r[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(r[1] == Catch::Approx(3.0).margin(1e-12));

    CHECK(alflow::real_roots(Poly{1.0, 0.0, 1.0}).empty());
    CHECK_THROWS_AS(alflow::real_roots(Poly{0.7}), std::invalid_argument);
}

TEST_CASE("division recomposition on random inputs") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_int_distribution<int> degp(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const int dp = degp(rng);
        std::uniform_int_distribution<int> degd(0, dp);
        const int dd = degd(rng);
        std::vector<double> pc(static_cast<std::size_t>(dp) + 1), dc(static_cast<std::size_t>(dd) + 1);
        for (double& v : pc) v = coef(rng);
        for (double& v : dc) v = coef(rng);
        pc.back() = pc.back() < 0 ? pc.back() - 1.0 : pc.back() + 1.0;
        dc.back() = dc.back() < 0 ? dc.back() - 1.0 : dc.back() + 1.0;
        const Poly p(std::move(pc)), d(std::move(dc));
        const auto [q, r] = alflow::divmod(p, d);
        const Poly back = q * d + r;
        const double scale = std::max(1.0, p.max_abs_coeff());
        for (int k = 0; k <= p.degree(); ++k)
            REQUIRE(std::abs(back.coeff(k) - p.coeff(k)) <= 1e-12 * scale);
    }
}

TEST_CASE("interpolate reproduces its data") {
    // node counts and spans matching the library's regime: a few branch
    // points over a moderate interval (the monomial form's evaluation floor
    // grows with both)
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<int> count(1, 6);
        const int n = count(rng);
        std::vector<double> nodes, values;
        double x = -2.0;
        std::uniform_real_distribution<double> gap(0.1, 0.8);
        for (int i = 0; i < n; ++i) {
            x += gap(rng);
            nodes.push_back(x);
            values.push_back(val(rng));
        }
        const Poly p = alflow::interpolate(nodes, values);
        double vscale = 0.0;
        for (double v : values) vscale = std::max(vscale, std::abs(v));
        for (int i = 0; i < n; ++i)
            REQUIRE(std::abs(p(nodes[static_cast<std::size_t>(i)]) -
                             values[static_cast<std::size_t>(i)]) <=
                    1e-12 * std::max(1.0, vscale));
    }
}

TEST_CASE("roots of separated products are recovered") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> gap(0.1, 1.2);
    std::uniform_int_distribution<int> count(1, 6);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = count(rng);
        std::vector<double> roots;
        double x = -3.0;
        for (int i = 0; i < n; ++i) {
            x += gap(rng);
            roots.push_back(x);
        }
        const auto found = alflow::real_roots(Poly::from_roots(roots));
        REQUIRE(found.size() == roots.size());
        for (std::size_t i = 0; i < roots.size(); ++i)
            REQUIRE(std::abs(found[i] - roots[i]) <= 1e-9);
    }
}

TEST_CASE("product rule") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    std::uniform_int_distribution<int> deg(0, 5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> pc(static_cast<std::size_t>(deg(rng)) + 1),
            qc(static_cast<std::size_t>(deg(rng)) + 1);
        for (double& v : pc) v = coef(rng);
        for (double& v : qc) v = coef(rng);
        const Poly p(std::move(pc)), q(std::move(qc));
        const Poly lhs = (p * q).derivative();
        const Poly rhs = p.derivative() * q + p * q.derivative();
        const double scale = std::max(1.0, lhs.max_abs_coeff());
        for (int k = 0; k <= std::max(lhs.degree(), rhs.degree()); ++k)
            REQUIRE(std::abs(lhs.coeff(k) - rhs.coeff(k)) <= 1e-12 * scale);
    }
}

TEST_CASE("double root reported with multiplicity") {
    const auto r = alflow::real_roots(Poly{1.0, -2.0, 1.0}); // (x-1)^2
    REQUIRE(r.size() == 2);
    CHECK(r[0] == Catch::Approx(1.0).margin(1e-6));
    CHECK(r[1] == Catch::Approx(1.0).margin(1e-6));
}
