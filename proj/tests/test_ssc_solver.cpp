#include "doctest.h"
#include "oracles.hpp"

#include "kssc/ssc_solver.hpp"

#include <random>

using namespace kssc;

namespace {

// Full SSC separates into one lasso per column over the other columns.
double column_oracle_total(const Eigen::MatrixXd& x, const std::vector<double>& lambdas) {
    double total = 0;
    for (Index i = 0; i < x.cols(); ++i) {
        Eigen::MatrixXd others(x.rows(), x.cols() - 1);
        for (Index j = 0, m = 0; j < x.cols(); ++j)
            if (j != i) others.col(m++) = x.col(j);
        const Eigen::VectorXd z = oracle::lasso_cd(others, x.col(i), lambdas[i]);
        total += oracle::lasso_objective(others, x.col(i), z, lambdas[i]);
    }
    return total;
}

}  // namespace

TEST_CASE("lambdas exclude the column itself") {
    Eigen::MatrixXd x(2, 3);
    x << 1, 0, 1, 0, 1, 1;
    SolverConfig cfg;
    cfg.lambda_scale = 1;
    const auto l = ssc_lambdas(x, cfg);
    CHECK(l[0] == doctest::Approx(1.0));
    CHECK(l[2] == doctest::Approx(1.0));
    cfg.lambda = 0.3;
    CHECK(ssc_lambdas(x, cfg)[1] == 0.3);
}

TEST_CASE("relaxed SSC matches per-column coordinate descent") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 3; ++trial) {
        const auto [x, labels] = oracle::subspace_samples(3, 2, 7, 10, rng);
        SolverConfig cfg;
        cfg.max_iters = 20000;
        const SscSolution sol = ssc_relaxed(x, cfg);
        CHECK(sol.report.converged);
        CHECK(sol.z.diagonal().isZero(0));
        const double reference = column_oracle_total(x, sol.report.lambdas);
        CHECK(std::abs(sol.report.objective - reference) / reference <= 1e-6);
    }
}

TEST_CASE("exact SSC matches per-column coordinate descent") {
    std::mt19937_64 rng(22);
    const auto [x, labels] = oracle::subspace_samples(2, 2, 8, 8, rng);
    const SscSolution sol = ssc_exact(x, SolverConfig{});
    CHECK(sol.z.diagonal().isZero(0));
    const double reference = column_oracle_total(x, sol.report.lambdas);
    CHECK(std::abs(sol.report.objective - reference) / reference <= 1e-4);
    if (sol.report.converged) {
        CHECK(sol.report.residual < 1e-6);
        CHECK(sol.report.q < 1e-6);
    }
    CHECK((x * sol.z + sol.e - x).norm() / x.norm() == doctest::Approx(sol.report.residual).epsilon(1e-6));
}

TEST_CASE("relaxed SSC trace is nonincreasing") {
    std::mt19937_64 rng(23);
    const auto [x, labels] = oracle::subspace_samples(2, 3, 10, 12, rng);
    SolverConfig cfg;
    cfg.record_trace = true;
    const SscSolution sol = ssc_relaxed(x, cfg);
    for (std::size_t i = 1; i < sol.report.trace.size(); ++i)
        CHECK(sol.report.trace[i] <= sol.report.trace[i - 1]);
}

TEST_CASE("core FLOP count per iteration equals the cost model") {
    std::mt19937_64 rng(24);
    const Eigen::MatrixXd x = oracle::gaussian(9, 14, rng).colwise().normalized();
    const auto n = static_cast<std::uint64_t>(x.cols()), d = static_cast<std::uint64_t>(x.rows());
    SolverConfig cfg;
    cfg.max_iters = 25;
    const SscSolution relaxed = ssc_relaxed(x, cfg);
    CHECK(relaxed.report.core_flops_per_iteration() ==
          cost_model({n, d, 0, Method::ssc_relaxed}).flops_per_iteration);
    CHECK(relaxed.report.flops.core % static_cast<std::uint64_t>(relaxed.report.iterations) == 0);

    cfg.admm_max_iters = 25;
    const SscSolution exact = ssc_exact(x, cfg);
    CHECK(exact.report.core_flops_per_iteration() == cost_model({n, d, 0, Method::ssc_exact}).flops_per_iteration);
    CHECK(exact.report.flops.overhead > 0);
}

TEST_CASE("memory guard refuses oversized problems") {
    SolverConfig cfg;
    cfg.memory_budget_bytes = 1000;
    CHECK_THROWS_AS(check_memory_budget(Method::ssc_relaxed, 100, 10, cfg), MemoryBudgetError);
    CHECK_NOTHROW(check_memory_budget(Method::ssc_relaxed, 5, 10, cfg));
    try {
        check_memory_budget(Method::ssc_exact, 100, 10, cfg);
        FAIL("expected MemoryBudgetError");
    } catch (const MemoryBudgetError& e) {
        // 2 N^2 + D N floats at 8 bytes.
        CHECK(e.required_bytes() == (2 * 100 * 100 + 10 * 100) * 8);
    }
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 200);
    CHECK_THROWS_AS(ssc_relaxed(x, cfg), MemoryBudgetError);
}

TEST_CASE("non-finite data is rejected") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
    x(1, 2) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ssc_relaxed(x, SolverConfig{}), ValidationError);
    CHECK_THROWS_AS(ssc_exact(x, SolverConfig{}), ValidationError);
}

TEST_CASE("budget exhaustion is reported") {
    std::mt19937_64 rng(25);
    const Eigen::MatrixXd x = oracle::gaussian(6, 12, rng);
    SolverConfig cfg;
    cfg.max_iters = 2;
    const SscSolution sol = ssc_relaxed(x, cfg);
    CHECK_FALSE(sol.report.converged);
    CHECK(sol.report.iterations == 2);
    CHECK_FALSE(sol.report.warnings.empty());
}
