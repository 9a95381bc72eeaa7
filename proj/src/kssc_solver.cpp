#include "kssc/kssc_solver.hpp"

#include "kssc/dataset.hpp"
#include "kssc/parallel.hpp"

#include <chrono>
#include <cmath>

namespace kssc {

std::string to_string(Variant v) { return v == Variant::relaxed ? "relaxed" : "exact"; }

Variant variant_from_string(const std::string& s) {
    if (s == "relaxed") return Variant::relaxed;
    if (s == "exact") return Variant::exact;
    throw ValidationError("unknown solver variant '" + s + "' (expected relaxed or exact)");
}

void SolverConfig::validate() const {
    auto positive = [](double v) { return v > 0 && std::isfinite(v); };
    if (lambda && !(*lambda >= 0 && std::isfinite(*lambda)))
        throw ValidationError("lambda must be finite and non-negative");
    if (!positive(lambda_scale)) throw ValidationError("lambda_scale must be positive");
    if (rho0 && !positive(*rho0)) throw ValidationError("rho0 must be positive");
    if (!(gamma > 1) || !std::isfinite(gamma)) throw ValidationError("gamma must exceed 1");
    if (!positive(eps)) throw ValidationError("eps must be positive");
    if (max_iters < 1 || admm_max_iters < 1) throw ValidationError("iteration limits must be positive");
    if (!positive(mu0) || !positive(mu_max) || mu0 > mu_max)
        throw ValidationError("need 0 < mu0 <= mu_max");
    if (!(gamma0 >= 1) || !std::isfinite(gamma0)) throw ValidationError("gamma0 must be at least 1");
    if (!positive(eps1) || !positive(eps2)) throw ValidationError("eps1 and eps2 must be positive");
}

KsscSolution solve_all(const DataMatrix& x, const NeighborSets& omega, const SolverConfig& cfg,
                       Variant variant) {
    validate_data(x);
    cfg.validate();
    omega.validate(x.cols());

    const auto start = std::chrono::steady_clock::now();
    const Index n = x.cols();
    std::vector<ColumnSolution<double>> columns(static_cast<std::size_t>(n));

    parallel_for(static_cast<std::size_t>(n), cfg.threads ? cfg.threads : default_thread_count(),
                 [&](std::size_t col) {
                     const auto& set = omega.omega[col];
                     Eigen::MatrixXd candidates(x.rows(), static_cast<Index>(set.size()));
                     for (std::size_t m = 0; m < set.size(); ++m)
                         candidates.col(static_cast<Index>(m)) = x.col(set[m]);
                     const auto xi = x.col(static_cast<Index>(col));
                     try {
                         columns[col] = variant == Variant::relaxed
                                            ? solve_column_relaxed(xi, candidates, cfg)
                                            : solve_column_exact(xi, candidates, cfg);
                     } catch (const DivergenceError& err) {
                         ColumnSolution<double> failed;
                         failed.z = Eigen::VectorXd::Zero(static_cast<Index>(set.size()));
                         if (variant == Variant::exact) failed.e = xi;
                         failed.report.failed = true;
                         failed.report.message = err.what();
                         columns[col] = std::move(failed);
                     }
                 });

    KsscSolution out;
    out.report.variant = variant;
    out.report.warnings = omega.warnings;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n * omega.k));
    if (variant == Variant::exact) out.e.resize(x.rows(), n);
    out.report.columns.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        auto& sol = columns[static_cast<std::size_t>(i)];
        const auto& set = omega.omega[static_cast<std::size_t>(i)];
        for (std::size_t m = 0; m < set.size(); ++m) {
            const double v = sol.z[static_cast<Index>(m)];
            if (v != 0) triplets.emplace_back(set[m], i, v);
        }
        if (variant == Variant::exact) out.e.col(i) = sol.e;
        if (sol.report.failed) {
            ++out.report.failed;
        } else {
            out.report.objective += sol.report.objective;
            if (!sol.report.converged) ++out.report.not_converged;
        }
        out.report.columns.push_back(std::move(sol.report));
    }
    out.z.resize(n, n);
    out.z.setFromTriplets(triplets.begin(), triplets.end());
    out.z.makeCompressed();
    out.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (out.report.failed > 0)
        out.report.warnings.push_back(std::to_string(out.report.failed) + " column(s) failed");
    if (out.report.failed * 10 > n)
        throw SolverFailure("solve_all: " + std::to_string(out.report.failed) + " of " +
                            std::to_string(n) + " columns failed");
    return out;
}

}  // namespace kssc
