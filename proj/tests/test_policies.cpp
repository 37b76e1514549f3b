#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "ehpc/policies.hpp"
#include "ehpc/quadrature.hpp"
#include "ehpc/rng.hpp"

using namespace ehpc;

namespace {

// deterministic grid argmax over u in [0,b], step 1e-4*b, smaller u wins ties
double grid_argmax(const std::function<double(double)>& f, double b) {
    if (b <= 0.0) return 0.0;
    const double step = 1e-4 * b;
    double best_u = 0.0;
    double best = f(0.0);
    for (int i = 1; i <= 10000; ++i) {
        const double u = std::min(i * step, b);
        const double v = f(u);
        if (v > best) {
            best = v;
            best_u = u;
        }
    }
    return best_u;
}

// Lagrangian waterfilling oracle for the geometric-discounted allocation
// problem max sum beta^i log(1+u_i) subject to sum u_i = x, u_i >= 0:
// u_i = max(beta^i/lambda - 1, 0) with lambda chosen by bisection
double discounted_allocation_optimum(double x, double p) {
    const double beta = 1.0 - p;
    auto total = [&](double lambda) {
        double s = 0.0;
        double w = 1.0;
        for (int i = 0; i < 400; ++i) {
            if (w <= lambda) break;
            s += w / lambda - 1.0;
            w *= beta;
        }
        return s;
    };
    double lo = 1e-14, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) > x ? lo : hi) = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    double value = 0.0;
    double w = 1.0;
    for (int i = 0; i < 400; ++i) {
        if (w > lambda) value += w * std::log(w / lambda);
        w *= beta;
    }
    return value;
}

} // namespace

TEST_CASE("clipped_greedy") {
    CHECK(clipped_greedy(3.0, 1.0) == 1.0);
    CHECK(clipped_greedy(0.5, 1.0) == 0.5);
    CHECK(clipped_greedy(2.0, 2.0) == 2.0);
    CHECK_THROWS_AS(clipped_greedy(-1.0, 1.0), std::domain_error);
}

TEST_CASE("maximin_horizon") {
    // direct evaluation of the defining inequality
    auto holds = [](double x, double p, int i) {
        return (1.0 + p * (x + i)) * std::pow(1.0 - p, i) < 1.0;
    };
    CHECK_FALSE(holds(1.0, 0.5, 1));
    CHECK(holds(1.0, 0.5, 2));
    CHECK(maximin_horizon(1.0, 0.5) == 2);
    CHECK(holds(0.0, 0.9, 1));
    CHECK(maximin_horizon(0.0, 0.9) == 1);
    CHECK_THROWS_AS(maximin_horizon(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(maximin_horizon(1.0, 1.0), std::domain_error);

    // brute-scan cross-check on random inputs
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const double x = rng.uniform(20.0);
        const double p = rng.uniform(0.05, 0.95);
        const int m = maximin_horizon(x, p);
        REQUIRE(m >= 1);
        REQUIRE(holds(x, p, m));
        if (m > 1) REQUIRE_FALSE(holds(x, p, m - 1));
    }

    // the horizon grows without bound as x grows at small p
    CHECK(maximin_horizon(100.0, 0.01) > maximin_horizon(10.0, 0.01));
    CHECK(maximin_horizon(1000.0, 0.01) > maximin_horizon(100.0, 0.01));
}

TEST_CASE("maximin_policy") {
    CHECK(maximin_policy(1.0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(maximin_policy(0.0, 0.3) == 0.0);
    CHECK(maximin_policy(0.0, 0.9) == 0.0);
    // sigma(x)/x -> p as x -> infinity
    for (double p : {0.1, 0.5, 0.9}) {
        CHECK(maximin_policy(1e4, p) / 1e4 == doctest::Approx(p).epsilon(0.01));
    }
    Rng rng(7);
    for (int k = 0; k < 5000; ++k) {
        const double x = rng.uniform(50.0);
        const double p = rng.uniform(0.05, 0.95);
        const double u = maximin_policy(x, p);
        REQUIRE(u >= 0.0);
        REQUIRE(u <= x);
    }
}

TEST_CASE("h1 against its defining integral") {
    const double e = 1.3;
    CHECK(h1(e, e) == doctest::Approx(rate(e)).epsilon(1e-14));
    CHECK(h1(0.0, e) == 0.0);
    CHECK(h1(2.0 * e, e) == doctest::Approx(rate(e) + e / (1.0 + e)).epsilon(1e-12));
    // quadrature of r'(v ^ e) over [0, x], split at the kink
    for (double x : {0.4, 1.3, 2.6, 5.0}) {
        double oracle = 0.0;
        const auto lowr = gauss_legendre(128, 0.0, std::min(x, e));
        for (std::size_t i = 0; i < lowr.nodes.size(); ++i) {
            oracle += lowr.weights[i] * rate_slope(lowr.nodes[i]);
        }
        if (x > e) oracle += rate_slope(e) * (x - e);
        CHECK(h1(x, e) == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("h2 recursion, oracle, and slope identity") {
    CHECK(h2(0.0, 0.4) == 0.0);

    // recursion h2(x) = r(sigma(x)) + (1-p) h2(x - sigma(x))
    Rng rng(11);
    for (int k = 0; k < 300; ++k) {
        const double x = rng.uniform(0.01, 30.0);
        const double p = rng.uniform(0.05, 0.95);
        const double u = maximin_policy(x, p);
        CHECK(h2(x, p) ==
              doctest::Approx(rate(u) + (1.0 - p) * h2(x - u, p)).epsilon(1e-9));
    }

    // independent waterfilling optimum of the discounted allocation problem
    for (double x : {0.5, 1.0, 3.0, 10.0}) {
        for (double p : {0.2, 0.5, 0.8}) {
            CHECK(h2(x, p) ==
                  doctest::Approx(discounted_allocation_optimum(x, p)).epsilon(1e-7));
        }
    }

    // h2'(x) = r'(sigma(x)), central difference h = 1e-5
    for (int k = 0; k < 100; ++k) {
        const double x = rng.uniform(0.1, 20.0);
        const double p = rng.uniform(0.1, 0.9);
        const double h = 1e-5;
        const double numeric = (h2(x + h, p) - h2(x - h, p)) / (2.0 * h);
        CHECK(numeric ==
              doctest::Approx(rate_slope(maximin_policy(x, p))).epsilon(1e-4));
    }
}

TEST_CASE("rel_value") {
    CHECK(rel_value(3.0, {0.0, 2.0}) == doctest::Approx(6.0));
    CHECK(rel_value(0.0, {0.7, 1.3}) == 0.0);
    CHECK(rel_value(1.0, {1.0, 1.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    // continuity at q -> 0
    CHECK(rel_value(5.0, {1e-12, 2.0}) == doctest::Approx(10.0).epsilon(1e-6));
    // quadrature of the defining integrand gamma_hat/(1+gamma_hat*q*x)
    for (double q : {0.2, 0.6, 1.0}) {
        for (double g : {0.5, 1.0, 3.0}) {
            const double b = 2.5;
            const auto rule = gauss_legendre(128, 0.0, b);
            double oracle = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                oracle += rule.weights[i] * g / (1.0 + g * q * rule.nodes[i]);
            }
            CHECK(rel_value(b, {q, g}) == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
    // concave and nondecreasing in b
    const RelValueParams params{0.5, 1.7};
    double prev = 0.0, prev_diff = 1e300;
    for (int i = 1; i <= 300; ++i) {
        const double v = rel_value(0.05 * i, params);
        CHECK(v >= prev);
        CHECK(v - prev <= prev_diff + 1e-12);
        prev_diff = v - prev;
        prev = v;
    }
}

TEST_CASE("rel_value_ext") {
    CHECK(rel_value_ext(0.0, 2.0, {0.5, 1.0, 0.5}) == 0.0);
    // s = 0 reduces to rel_value with gamma_hat = gamma0
    for (double b : {0.5, 2.0, 7.0}) {
        for (double gamma : {0.1, 1.0, 4.0}) {
            CHECK(rel_value_ext(b, gamma, {0.3, 1.4, 0.0}) ==
                  rel_value(b, {0.3, 1.4}));
        }
    }
    CHECK(rel_value_ext(1.0, 2.0, {0.5, 1.0, 0.5}) == rel_value(1.0, {0.5, 2.0}));
    CHECK_THROWS_AS(rel_value_ext(1.0, 0.0, {0.5, 0.0, 0.5}), std::domain_error);
}

TEST_CASE("optimistic policy special cases") {
    // gamma = 0 returns the forced minimum b0
    CHECK(optimistic_policy(3.0, 0.0, 4.0, {2.0, 0.7, 1.3}) == doctest::Approx(1.0));
    CHECK(optimistic_policy(1.0, 0.0, 4.0, {2.0, 0.7, 1.3}) == 0.0);

    // offline-optimal recovery at (e, q=1, gamma_hat=1), gamma=1: b for b <= e,
    // else (b+e)/2, clipped at max(b+e-c, 0)
    Rng rng(17);
    for (int k = 0; k < 2000; ++k) {
        const double c = rng.uniform(1.0, 20.0);
        const double b = rng.uniform(c);
        const double e = rng.uniform(c);
        const double expected =
            clip(b <= e ? b : (b + e) / 2.0, lower_clip(b + e - c, 0.0), b);
        REQUIRE(optimistic_policy(b, 1.0, c, {e, 1.0, 1.0}) ==
                doctest::Approx(expected).epsilon(1e-12));
    }

    CHECK(optimistic_policy(3.0, 1.0, 10.0, {1.0, 1.0, 1.0}) == doctest::Approx(2.0));
}

TEST_CASE("robust policy special cases") {
    CHECK(robust_policy(3.0, 0.0, {0.4, 0.4, 1.0}) == 0.0);
    // two-piece fixed fraction recovery at p = q, gamma_hat = 1, gamma = 1
    Rng rng(19);
    for (int k = 0; k < 2000; ++k) {
        const double b = rng.uniform(25.0);
        const double p = rng.uniform(0.05, 0.95);
        REQUIRE(robust_policy(b, 1.0, {p, p, 1.0}) ==
                doctest::Approx(std::min(p * (b + 1.0), b)).epsilon(1e-12));
    }
    CHECK(robust_policy(2.0, 1.0, {0.5, 0.5, 1.0}) == doctest::Approx(1.5));
}

TEST_CASE("policies match the grid argmax of their objectives") {
    Rng rng(23);
    for (int k = 0; k < 250; ++k) {
        const double c = rng.uniform(0.5, 30.0);
        const double b = rng.uniform(0.01, c);
        const double gamma = rng.uniform(0.05, 5.0);
        OptimisticParams op{rng.uniform(c), rng.uniform(0.01, 1.0),
                            rng.uniform(0.1, 5.0)};
        const double u_policy = optimistic_policy(b, gamma, c, op);
        const double u_grid = grid_argmax(
            [&](double u) { return problem3_objective(u, b, gamma, c, op); }, b);
        REQUIRE(std::abs(u_policy - u_grid) <= 2.0 * 1e-4 * b);

        RobustParams rp{rng.uniform(0.0, 0.95), rng.uniform(0.01, 1.0),
                        rng.uniform(0.1, 5.0)};
        const double ur_policy = robust_policy(b, gamma, rp);
        const double ur_grid = grid_argmax(
            [&](double u) { return problem4_objective(u, b, gamma, rp); }, b);
        REQUIRE(std::abs(ur_policy - ur_grid) <= 2.0 * 1e-4 * b);
    }
}

TEST_CASE("objectives satisfy the interior stationarity conditions") {
    Rng rng(29);
    int interior3 = 0, interior4 = 0;
    for (int k = 0; k < 2000 && (interior3 < 50 || interior4 < 50); ++k) {
        const double c = rng.uniform(1.0, 20.0);
        const double b = rng.uniform(0.1, c);
        const double gamma = rng.uniform(0.2, 4.0);
        OptimisticParams op{rng.uniform(c), rng.uniform(0.05, 1.0),
                            rng.uniform(0.2, 4.0)};
        const double u3 = optimistic_policy(b, gamma, c, op);
        const double b0 = lower_clip(b + op.e - c, 0.0);
        if (u3 > b0 + 1e-6 && u3 < b - 1e-6) {
            ++interior3;
            const double lhs = gamma / (1.0 + gamma * u3);
            const double rhs = op.gamma_hat /
                               (1.0 + op.gamma_hat * op.q * (b - u3 + op.e));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
        }
        RobustParams rp{rng.uniform(0.0, 0.9), rng.uniform(0.05, 1.0),
                        rng.uniform(0.2, 4.0)};
        const double u4 = robust_policy(b, gamma, rp);
        if (u4 > 1e-6 && u4 < b - 1e-6) {
            ++interior4;
            const double lhs = gamma / (1.0 + gamma * u4);
            const double rhs = (1.0 - rp.p) * rp.gamma_hat /
                               (1.0 + rp.gamma_hat * rp.q * (b - u4));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
        }
    }
    CHECK(interior3 >= 50);
    CHECK(interior4 >= 50);
    CHECK_THROWS_AS(problem3_objective(2.0, 1.0, 1.0, 5.0, {0.5, 0.5, 1.0}),
                    std::domain_error);
    CHECK_THROWS_AS(problem4_objective(-0.1, 1.0, 1.0, {0.2, 0.5, 1.0}),
                    std::domain_error);
}

TEST_CASE("policy admissibility property") {
    Rng rng(31);
    for (int k = 0; k < 100000; ++k) {
        const double c = rng.uniform(0.01, 40.0);
        const double b = rng.uniform(c);
        const double gamma = rng.uniform(6.0);
        OptimisticParams op{rng.uniform(c), rng.uniform(1.0), rng.uniform(0.01, 6.0)};
        const double u3 = optimistic_policy(b, gamma, c, op);
        REQUIRE(u3 >= 0.0);
        REQUIRE(u3 <= b + 1e-15);
        RobustParams rp{rng.uniform(0.999), rng.uniform(1.0), rng.uniform(0.01, 6.0)};
        const double u4 = robust_policy(b, gamma, rp);
        REQUIRE(u4 >= 0.0);
        REQUIRE(u4 <= b);
    }
}

TEST_CASE("policy monotonicity in b and gamma") {
    const OptimisticParams op{1.0, 0.4, 1.5};
    const RobustParams rp{0.3, 0.4, 1.5};
    const double c = 10.0;
    double prev3 = 0.0, prev4 = 0.0;
    for (int i = 1; i <= 200; ++i) {
        const double b = 0.05 * i;
        const double u3 = optimistic_policy(b, 1.0, c, op);
        const double u4 = robust_policy(b, 1.0, rp);
        CHECK(u3 >= prev3 - 1e-12);
        CHECK(u4 >= prev4 - 1e-12);
        prev3 = u3;
        prev4 = u4;
    }
    prev3 = prev4 = 0.0;
    for (int i = 1; i <= 200; ++i) {
        const double gamma = 0.05 * i;
        const double u3 = optimistic_policy(4.0, gamma, c, op);
        const double u4 = robust_policy(4.0, gamma, rp);
        CHECK(u3 >= prev3 - 1e-12);
        CHECK(u4 >= prev4 - 1e-12);
        prev3 = u3;
        prev4 = u4;
    }
}

TEST_CASE("linear policy orbit") {
    CHECK(linear_policy_orbit(2.0, 0.5, 1.0, 0) == 2.0);
    CHECK(linear_policy_orbit(2.0, 0.5, 1.0, 7) == 2.0); // fixed point e/q
    // iterate phi numerically
    double x = 0.0;
    for (int i = 0; i < 10; ++i) x = 0.5 * x + 1.0;
    CHECK(linear_policy_orbit(0.0, 0.5, 1.0, 10) == doctest::Approx(x).epsilon(1e-14));
    CHECK(x == doctest::Approx(2.0 * (1.0 - std::pow(0.5, 10))).epsilon(1e-14));
    CHECK_THROWS_AS(linear_policy_orbit(1.0, 0.0, 1.0, 3), std::domain_error);

    // geometric convergence to e/q
    Rng rng(37);
    for (int k = 0; k < 100; ++k) {
        const double q = rng.uniform(0.05, 1.0);
        const double e = rng.uniform(5.0);
        const double x0 = rng.uniform(50.0);
        const double d1 = std::abs(linear_policy_orbit(x0, q, e, 5) - e / q);
        const double d2 = std::abs(linear_policy_orbit(x0, q, e, 6) - e / q);
        REQUIRE(d2 <= (1.0 - q) * d1 + 1e-12);
    }
}
