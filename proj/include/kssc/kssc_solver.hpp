#pragma once

#include "kssc/common.hpp"
#include "kssc/neighbors.hpp"
#include "kssc/shrink.hpp"
#include "kssc/solver_config.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace kssc {

template <typename Scalar>
struct ColumnSolution {
    VectorX<Scalar> z;  // coefficients over the candidate columns, in their order
    VectorX<Scalar> e;  // fitting error; exact variant only
    ColumnReport report;
};

/// lambda_scale * ||X^T x||_inf unless the config pins a global lambda.
template <typename DerivedX, typename DerivedA>
typename DerivedX::Scalar column_lambda(const Eigen::MatrixBase<DerivedX>& x,
                                        const Eigen::MatrixBase<DerivedA>& candidates,
                                        const SolverConfig& cfg) {
    using Scalar = typename DerivedX::Scalar;
    if (cfg.lambda) return static_cast<Scalar>(*cfg.lambda);
    if (candidates.cols() == 0) return Scalar(0);
    return static_cast<Scalar>(cfg.lambda_scale) * (candidates.transpose() * x).cwiseAbs().maxCoeff();
}

namespace detail {

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
template <typename Scalar>
Scalar power_lipschitz(const MatrixX<Scalar>& gram, int iterations = 30) {
    const Index n = gram.rows();
    if (n == 0) return Scalar(0);
    VectorX<Scalar> v = VectorX<Scalar>::Ones(n) / std::sqrt(Scalar(n));
    // Break symmetry so a start orthogonal to the top eigenvector is unlikely.
    for (Index i = 0; i < n; ++i) v[i] += Scalar(1e-3) * Scalar(i % 7) / Scalar(n);
    Scalar estimate = 0;
    for (int it = 0; it < iterations; ++it) {
        VectorX<Scalar> w = gram * v;
        const Scalar norm = w.norm();
        if (!(norm > 0)) return Scalar(0);
        estimate = v.dot(w) / v.squaredNorm();
        v = w / norm;
    }
    return estimate;
}

template <typename Scalar>
Scalar condition_estimate(const MatrixX<Scalar>& gram) {
    if (gram.rows() == 0) return Scalar(1);
    Eigen::LDLT<MatrixX<Scalar>> ldlt(gram);
    const VectorX<Scalar> d = ldlt.vectorD().cwiseAbs();
    const Scalar lo = d.minCoeff();
    return lo > 0 ? d.maxCoeff() / lo : std::numeric_limits<Scalar>::infinity();
}

}  // namespace detail

/// Minimises lambda ||z||_1 + 1/2 ||x - X z||^2 by monotone FISTA with
/// backtracking. The candidate matrix holds the columns of Omega_i.
/// The objective sequence in the trace never increases. Throws
/// DivergenceError if the objective becomes non-finite.
template <typename DerivedX, typename DerivedA>
ColumnSolution<typename DerivedX::Scalar> solve_column_relaxed(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedA>& candidates,
    const SolverConfig& cfg, std::optional<typename DerivedX::Scalar> lambda_override = std::nullopt) {
    using Scalar = typename DerivedX::Scalar;
    using Vec = VectorX<Scalar>;
    if (x.rows() != candidates.rows())
        throw ValidationError("solve_column_relaxed: column and candidates differ in height");

    const Index k = candidates.cols();
    ColumnSolution<Scalar> out;
    ColumnReport& rep = out.report;
    const Scalar lambda = lambda_override ? *lambda_override : column_lambda(x, candidates, cfg);
    rep.lambda = static_cast<double>(lambda);

    const MatrixX<Scalar> gram = candidates.transpose() * candidates;
    const Vec corr = candidates.transpose() * x;
    const Scalar xx = x.squaredNorm();
    rep.condition_estimate = static_cast<double>(detail::condition_estimate(gram));

    auto objective = [&](const Vec& z) {
        const Scalar smooth = std::max(Scalar(0), Scalar(0.5) * xx - z.dot(corr) + Scalar(0.5) * z.dot(gram * z));
        return lambda * z.template lpNorm<1>() + smooth;
    };

    Scalar rho = cfg.rho0 ? static_cast<Scalar>(*cfg.rho0) : detail::power_lipschitz(gram);
    if (!(rho > 0)) rho = Scalar(1);
    const Scalar gamma = static_cast<Scalar>(cfg.gamma);
    const Scalar eps = static_cast<Scalar>(cfg.eps);

    Vec z = Vec::Zero(k);
    Vec j = z;
    Scalar alpha = 1;
    Scalar r = objective(z);
    for (int it = 1; it <= cfg.max_iters; ++it) {
        rep.iterations = it;
        const Vec grad = gram * j - corr;
        Vec u;
        for (;;) {
            u = shrink((j - grad / rho).eval(), lambda / rho);
            const Vec d = u - j;
            // Quadratic upper model holds iff d^T G d <= rho ||d||^2.
            if (d.dot(gram * d) <= rho * d.squaredNorm() * (1 + Scalar(1e-12))) break;
            rho *= gamma;
            ++rep.backtracks;
        }
        const Scalar ru = objective(u);
        if (!std::isfinite(static_cast<double>(ru)))
            throw DivergenceError("FISTA objective became non-finite at iteration " + std::to_string(it));

        const Scalar alpha_next = (1 + std::sqrt(1 + 4 * alpha * alpha)) / 2;
        const bool accepted = ru <= r;
        const Vec z_next = accepted ? u : z;
        j = z_next + (alpha / alpha_next) * (u - z_next) + ((alpha - 1) / alpha_next) * (z_next - z);
        const Scalar decrease = r - ru;
        z = z_next;
        alpha = alpha_next;
        if (accepted) r = ru;
        if (cfg.record_trace)
            rep.trace.push_back(static_cast<double>(lambda * z.template lpNorm<1>() +
                                                    Scalar(0.5) * (x - candidates * z).squaredNorm()));
        if (accepted && decrease <= eps * std::max(std::abs(ru), std::numeric_limits<Scalar>::min())) {
            rep.converged = true;
            break;
        }
    }
    rep.rho = static_cast<double>(rho);
    rep.objective = static_cast<double>(r);
    rep.residual = static_cast<double>((x - candidates * z).norm());
    out.z = std::move(z);
    return out;
}

/// Minimises lambda ||z||_1 + 1/2 ||e||^2 subject to x = X z + e by LADMPSAP
/// with an adaptive penalty. Converged means both stopping tests held:
/// ||X z + e - x|| / ||X||_F < eps1 and q < eps2. When the iteration budget
/// runs out, the iterate with the lowest objective is returned unconverged.
template <typename DerivedX, typename DerivedA>
ColumnSolution<typename DerivedX::Scalar> solve_column_exact(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedA>& candidates,
    const SolverConfig& cfg, std::optional<typename DerivedX::Scalar> lambda_override = std::nullopt) {
    using Scalar = typename DerivedX::Scalar;
    using Vec = VectorX<Scalar>;
    if (x.rows() != candidates.rows())
        throw ValidationError("solve_column_exact: column and candidates differ in height");

    const Index k = candidates.cols();
    ColumnSolution<Scalar> out;
    ColumnReport& rep = out.report;
    const Scalar lambda = lambda_override ? *lambda_override : column_lambda(x, candidates, cfg);
    rep.lambda = static_cast<double>(lambda);

    const Scalar xnorm = candidates.norm();
    if (!(xnorm > 0)) {
        // No usable candidates: the constraint forces e = x.
        out.z = Vec::Zero(k);
        out.e = x;
        rep.converged = true;
        rep.objective = static_cast<double>(Scalar(0.5) * x.squaredNorm());
        rep.condition_estimate = std::numeric_limits<double>::infinity();
        return out;
    }
    rep.condition_estimate =
        static_cast<double>(detail::condition_estimate<Scalar>(candidates.transpose() * candidates));

    const Scalar rho = xnorm;
    const Scalar sqrt_rho = std::sqrt(rho);
    const Scalar mu_max = static_cast<Scalar>(cfg.mu_max);
    const Scalar gamma0 = static_cast<Scalar>(cfg.gamma0);
    const Scalar eps1 = static_cast<Scalar>(cfg.eps1);
    const Scalar eps2 = static_cast<Scalar>(cfg.eps2);
    Scalar mu = static_cast<Scalar>(cfg.mu0);

    Vec z = Vec::Zero(k);
    Vec e = Vec::Zero(x.rows());
    Vec y = Vec::Zero(x.rows());
    Vec xz = Vec::Zero(x.rows());

    auto relaxed_objective = [&](const Vec& zz, const Vec& xzz) {
        return lambda * zz.template lpNorm<1>() + Scalar(0.5) * (x - xzz).squaredNorm();
    };
    Vec best_z = z, best_e = e;
    Scalar best_obj = relaxed_objective(z, xz);
    Scalar res = 0, q = 0;

    for (int it = 1; it <= cfg.admm_max_iters; ++it) {
        rep.iterations = it;
        const Vec target = x - e - y / mu;
        const Vec grad = mu * (candidates.transpose() * (xz - target));
        Vec z_next = shrink((z - grad / rho).eval(), lambda / rho);
        Vec e_next = (x - xz - y / mu) / (1 / mu + 1);

        q = mu * sqrt_rho / xnorm * std::max((z_next - z).norm(), (e_next - e).norm());
        const Vec xz_next = candidates * z_next;
        const Vec constraint = xz_next - x + e_next;
        res = constraint.norm() / xnorm;

        z = std::move(z_next);
        e = std::move(e_next);
        xz = xz_next;

        const Scalar obj = relaxed_objective(z, xz);
        if (!std::isfinite(static_cast<double>(obj)))
            throw DivergenceError("LADMPSAP iterate became non-finite at iteration " + std::to_string(it));
        if (cfg.record_trace) rep.trace.push_back(static_cast<double>(obj));
        if (obj < best_obj) {
            best_obj = obj;
            best_z = z;
            best_e = e;
        }
        if (res < eps1 && q < eps2) {
            rep.converged = true;
            break;
        }
        y += mu * constraint;
        const Scalar gamma = q < eps2 ? gamma0 : Scalar(1);
        mu = std::min(mu_max, gamma * mu);
    }

    if (!rep.converged) {
        z = best_z;
        e = best_e;
        rep.message = "iteration budget exhausted";
    }
    rep.rho = static_cast<double>(rho);
    rep.q = static_cast<double>(q);
    rep.residual = rep.converged ? static_cast<double>(res)
                                 : static_cast<double>((candidates * z + e - x).norm() / xnorm);
    rep.objective = static_cast<double>(relaxed_objective(z, candidates * z));
    out.z = std::move(z);
    out.e = std::move(e);
    return out;
}

struct KsscSolution {
    SparseCoefficients z;
    Eigen::MatrixXd e;  // D x N fitting error; exact variant only
    SolverReport report;
};

/// Solves every column against its candidate set and assembles the sparse
/// coefficient matrix. Columns run in parallel and independently. A column
/// that fails is left empty and recorded; more than 10% failures throws
/// SolverFailure.
KsscSolution solve_all(const DataMatrix& x, const NeighborSets& omega, const SolverConfig& cfg,
                       Variant variant);

}  // namespace kssc
