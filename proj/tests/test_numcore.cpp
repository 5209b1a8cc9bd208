#include <doctest.h>

#include <cmath>
#include <limits>

#include "mtlsched/numcore.hpp"

using namespace mtlsched;

TEST_CASE("dot computes the inner product") {
    CHECK(dot({1.0, 2.0, 3.0}, {4.0, -5.0, 6.0}) == doctest::Approx(12.0));
    CHECK(dot({}, {}) == 0.0);
    CHECK_THROWS_AS(dot({1.0}, {1.0, 2.0}), DimensionError);
}

TEST_CASE("softmax of zeros is uniform") {
    const ImportanceWeights w = softmax({0.0, 0.0, 0.0, 0.0});
    for (double x : w) CHECK(x == doctest::Approx(0.25));
}

TEST_CASE("softmax matches the analytic two-entry form") {
    const ImportanceWeights w = softmax({1.0, 0.0});
    const double expected = std::exp(1.0) / (std::exp(1.0) + 1.0);
    CHECK(w[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(1.0 - expected).epsilon(1e-12));
}

TEST_CASE("softmax survives large logits via max subtraction") {
    const ImportanceWeights w = softmax({1000.0, 999.0, 500.0});
    CHECK(all_finite(w));
    CHECK(is_simplex(w));
    CHECK(w[0] > w[1]);
    CHECK(w[1] > w[2]);
}

TEST_CASE("softmax output is strictly positive and simplex-valid on random logits") {
    Rng rng(42);
    std::normal_distribution<double> dist(0.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(1 + trial % 7);
        for (double& x : logits) x = dist(rng);
        const ImportanceWeights w = softmax(logits);
        CHECK(is_simplex(w));
        for (double x : w) CHECK(x > 0.0);
    }
}

TEST_CASE("finite_diff_grad recovers an analytic gradient") {
    const auto f = [](const ParamVector& x) {
        return x[0] * x[0] + 3.0 * x[1] + std::sin(x[2]);
    };
    const ParamVector x = {1.5, -2.0, 0.7};
    const ParamVector g = finite_diff_grad(f, x, 1e-6);
    CHECK(g[0] == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(g[2] == doctest::Approx(std::cos(0.7)).epsilon(1e-8));
}

TEST_CASE("finite_diff_grad rejects bad eps and non-finite evaluations") {
    const auto f = [](const ParamVector& x) { return x[0]; };
    CHECK_THROWS_AS(finite_diff_grad(f, {1.0}, 0.0), ArgumentError);
    CHECK_THROWS_AS(finite_diff_grad(f, {1.0}, -1e-6), ArgumentError);
    const auto bad = [](const ParamVector& x) { return std::log(x[0]); };
    CHECK_THROWS_AS(finite_diff_grad(bad, {0.0}, 1e-6), NumericError);
}

TEST_CASE("all_finite flags inf and nan") {
    CHECK(all_finite({0.0, -1.0, 1e300}));
    CHECK_FALSE(all_finite({0.0, std::numeric_limits<double>::infinity()}));
    CHECK_FALSE(all_finite({std::numeric_limits<double>::quiet_NaN()}));
}

TEST_CASE("is_simplex checks nonnegativity and the sum") {
    CHECK(is_simplex({0.25, 0.25, 0.25, 0.25}));
    CHECK(is_simplex({1.0}));
    CHECK(is_simplex({0.0, 1.0}));
    CHECK_FALSE(is_simplex({0.5, 0.4}));
    CHECK_FALSE(is_simplex({-0.1, 1.1}));
    CHECK_FALSE(is_simplex({0.5, std::numeric_limits<double>::quiet_NaN()}));
    CHECK_THROWS_AS(require_simplex({0.5, 0.4}, "weights"), ArgumentError);
    CHECK_NOTHROW(require_simplex({0.5, 0.5}, "weights"));
}

TEST_CASE("axpy accumulates a scaled vector") {
    ParamVector a = {1.0, 2.0};
    axpy(0.5, {4.0, -2.0}, a);
    CHECK(a[0] == doctest::Approx(3.0));
    CHECK(a[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(axpy(1.0, {1.0}, a), DimensionError);
}

TEST_CASE("split_seed separates streams deterministically") {
    CHECK(split_seed(1, 0) == split_seed(1, 0));
    CHECK(split_seed(1, 0) != split_seed(1, 1));
    CHECK(split_seed(1, 0) != split_seed(2, 0));

    Rng a = make_stream(7, 3);
    Rng b = make_stream(7, 3);
    CHECK(a() == b());
    CHECK(a() == b());

    Rng c = make_stream(7, 4);
    Rng d = make_stream(7, 3);
    CHECK(c() != d());
}
