#include "doctest.h"
#include "oracles.hpp"

#include "kssc/metrics.hpp"

#include <random>

using namespace kssc;

TEST_CASE("sce on small labelings") {
    const Labels truth{1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
    CHECK(sce(truth, truth) == 0.0);
    CHECK(sce(Labels{2, 2, 2, 2, 2, 1, 1, 1, 1, 1}, truth) == 0.0);
    CHECK(sce(Labels{1, 1, 1, 1, 2, 2, 2, 2, 2, 2}, truth) == doctest::Approx(10.0));
    CHECK(sce(Labels{7, 7, 7, 7, 7, 3, 3, 3, 3, 3}, truth) == 0.0);
}

TEST_CASE("sce errors") {
    CHECK_THROWS_AS(sce(Labels{1, 2}, Labels{1}), ValidationError);
    CHECK_THROWS_AS(sce(Labels{}, Labels{}), ValidationError);
}

TEST_CASE("sce agrees with permutation enumeration") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> count(1, 5), size(1, 40);
        const int pc = count(rng), tc = count(rng), n = size(rng);
        std::uniform_int_distribution<int> pl(1, pc), tl(1, tc);
        Labels p(n), t(n);
        for (int i = 0; i < n; ++i) {
            p[i] = pl(rng) * 3;  // arbitrary ids
            t[i] = tl(rng);
        }
        const double expected = oracle::sce_bruteforce(p, t);
        CHECK(sce(p, t) == doctest::Approx(expected));
        CHECK(sce(t, p) == doctest::Approx(expected));
        CHECK(sce(p, t) >= 0.0);
        CHECK(sce(p, t) <= 100.0);
    }
}

TEST_CASE("hungarian assignment is optimal") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> unif(-5, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 7;
        Eigen::MatrixXd cost(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cost(i, j) = std::round(unif(rng));
        const auto assign = hungarian_assignment(cost);
        REQUIRE(assign.size() == static_cast<std::size_t>(n));
        double total = 0;
        std::vector<bool> used(n, false);
        for (int i = 0; i < n; ++i) {
            CHECK_FALSE(used[assign[i]]);
            used[assign[i]] = true;
            total += cost(i, assign[i]);
        }
        CHECK(total == doctest::Approx(oracle::assignment_bruteforce(cost)));
    }
}

TEST_CASE("psnr") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(10, 10);
    CHECK(std::isinf(psnr(a, a, 1.0)));
    Eigen::MatrixXd b = a.array() + 0.1;  // MSE 0.01
    CHECK(psnr(a, b, 1.0) == doctest::Approx(20.0));
    Eigen::MatrixXd c = a.array() + 1.0;  // MSE 1
    CHECK(psnr(a, c, 1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(psnr(a, Eigen::MatrixXd::Ones(3, 3), 1.0), ValidationError);
    CHECK_THROWS_AS(psnr(a, b, 0.0), ValidationError);
}

TEST_CASE("psnr falls as noise grows") {
    std::mt19937_64 rng(33);
    const Eigen::MatrixXd clean = oracle::gaussian(20, 20, rng);
    double previous = INFINITY;
    for (double sigma : {0.01, 0.03, 0.1, 0.3, 1.0}) {
        double mean = 0;
        for (int seed = 0; seed < 20; ++seed) {
            const Eigen::MatrixXd noisy = clean + sigma * oracle::gaussian(20, 20, rng);
            mean += psnr(clean, noisy, 1.0);
        }
        mean /= 20;
        CHECK(mean < previous);
        previous = mean;
    }
}

TEST_CASE("cost model rows") {
    const std::uint64_t n = 1000, d = 500, k = 10;
    CHECK(cost_model({n, d, k, Method::kssc_relaxed}).flops_per_iteration == 20560000);
    CHECK(cost_model({n, d, k, Method::kssc_relaxed}).floats == 40000);
    CHECK(cost_model({n, d, k, Method::ssc_relaxed}).flops_per_iteration == 2006500000);
    CHECK(cost_model({n, d, k, Method::ssc_relaxed}).floats == 4000000);
    CHECK(cost_model({n, d, k, Method::ssc_exact}).flops_per_iteration == 7 * n * n + 4 * d * n * n + 4 * d * n);
    CHECK(cost_model({n, d, k, Method::ssc_exact}).floats == 2 * n * n + d * n);
    CHECK(cost_model({n, d, k, Method::kssc_exact}).flops_per_iteration == 7 * k * n + 4 * k * d * n + 4 * d * n);
    CHECK(cost_model({n, d, k, Method::kssc_exact}).floats == 2 * k * n + d * n);
}

TEST_CASE("cost model ratio tends to k/N") {
    const std::uint64_t n = 1000, k = 10;
    const double ratio = static_cast<double>(cost_model({n, 10000000, k, Method::kssc_relaxed}).flops_per_iteration) /
                         static_cast<double>(cost_model({n, 10000000, k, Method::ssc_relaxed}).flops_per_iteration);
    CHECK(ratio == doctest::Approx(static_cast<double>(k) / n).epsilon(1e-3));
    // k = N - 1 brings the kSSC row within one column of the SSC row.
    const auto near_full = cost_model({n, 50, n - 1, Method::kssc_relaxed}).flops_per_iteration;
    const auto full = cost_model({n, 50, 0, Method::ssc_relaxed}).flops_per_iteration;
    CHECK(near_full < full);
    CHECK(static_cast<double>(near_full) > 0.99 * static_cast<double>(full));
}

TEST_CASE("cost model validation") {
    CHECK_THROWS_AS(cost_model({10, 5, 10, Method::kssc_relaxed}), ValidationError);
    CHECK_THROWS_AS(cost_model({0, 5, 1, Method::ssc_relaxed}), ValidationError);
    CHECK_NOTHROW(cost_model({10, 5, 0, Method::ssc_exact}));
    CHECK(method_from_string("kssc_exact") == Method::kssc_exact);
    CHECK_THROWS_AS(method_from_string("lsr"), ValidationError);
}
