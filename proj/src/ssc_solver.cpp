#include "kssc/ssc_solver.hpp"

#include "kssc/dataset.hpp"
#include "kssc/shrink.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

// Per-element FLOP conventions for the core counts:
//   product X * A (D x N by N x N)           2 D N^2
//   relaxed: residual X - X J                D N
//            proximal step J - G / rho       2 N^2
//            soft threshold                  2 N^2
//            momentum combination            2 N^2
//   exact:   X - E - Y / mu, then X Z - .    4 D N
//            proximal step, soft threshold   4 N^2
//            ||Z_next - Z|| for q            3 N^2

namespace kssc {

namespace {

using Clock = std::chrono::steady_clock;

double lipschitz_estimate(const DataMatrix& x, int iterations = 50) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(x.cols()) / std::sqrt(static_cast<double>(x.cols()));
    for (Index i = 0; i < v.size(); ++i) v[i] += 1e-3 * static_cast<double>(i % 7) / v.size();
    double estimate = 0;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd w = x.transpose() * (x * v);
        const double norm = w.norm();
        if (!(norm > 0)) return 0;
        estimate = v.dot(w) / v.squaredNorm();
        v = w / norm;
    }
    return estimate;
}

/// Column-wise soft threshold with the diagonal projected to zero.
Eigen::MatrixXd shrink_columns(const Eigen::MatrixXd& b, const std::vector<double>& lambdas, double rho) {
    Eigen::MatrixXd out(b.rows(), b.cols());
    for (Index i = 0; i < b.cols(); ++i) out.col(i) = shrink(b.col(i), lambdas[i] / rho);
    out.diagonal().setZero();
    return out;
}

double l1_weighted(const Eigen::MatrixXd& z, const std::vector<double>& lambdas) {
    double total = 0;
    for (Index i = 0; i < z.cols(); ++i) total += lambdas[i] * z.col(i).lpNorm<1>();
    return total;
}

std::uint64_t u64(Index v) { return static_cast<std::uint64_t>(v); }

}  // namespace

void check_memory_budget(Method method, Index n, Index d, const SolverConfig& cfg) {
    const auto estimate = cost_model({u64(n), u64(d), is_kssc(method) ? u64(std::max<Index>(1, n - 1)) : 0, method});
    const std::uint64_t bytes = estimate.floats * sizeof(double);
    if (bytes > cfg.memory_budget_bytes) {
        std::ostringstream msg;
        msg << to_string(method) << " with N=" << n << ", D=" << d << " needs " << estimate.floats
            << " floats (" << bytes << " bytes), over the " << cfg.memory_budget_bytes << "-byte budget";
        throw MemoryBudgetError(msg.str(), bytes);
    }
}

std::vector<double> ssc_lambdas(const DataMatrix& x, const SolverConfig& cfg) {
    std::vector<double> out(static_cast<std::size_t>(x.cols()));
    for (Index i = 0; i < x.cols(); ++i) {
        if (cfg.lambda) {
            out[i] = *cfg.lambda;
            continue;
        }
        Eigen::VectorXd corr = x.transpose() * x.col(i);
        corr[i] = 0;
        out[i] = cfg.lambda_scale * (x.cols() > 1 ? corr.cwiseAbs().maxCoeff() : 0.0);
    }
    return out;
}

SscSolution ssc_relaxed(const DataMatrix& x, const SolverConfig& cfg) {
    validate_data(x);
    cfg.validate();
    const Index n = x.cols(), d = x.rows();
    check_memory_budget(Method::ssc_relaxed, n, d, cfg);
    const auto start = Clock::now();

    SscSolution out;
    SscReport& rep = out.report;
    rep.variant = Variant::relaxed;
    rep.lambdas = ssc_lambdas(x, cfg);
    FlopCounter& flops = rep.flops;
    flops.overhead += 2 * u64(d) * u64(n) * u64(n);

    double rho = cfg.rho0 ? *cfg.rho0 : lipschitz_estimate(x);
    if (!(rho > 0)) rho = 1;

    auto objective_of = [&](const Eigen::MatrixXd& z, const Eigen::MatrixXd& xz) {
        return l1_weighted(z, rep.lambdas) + 0.5 * (x - xz).squaredNorm();
    };

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd j = z;
    Eigen::MatrixXd xz = Eigen::MatrixXd::Zero(d, n);
    Eigen::MatrixXd xj = xz;
    double alpha = 1;
    double r = objective_of(z, xz);

    for (int it = 1; it <= cfg.max_iters; ++it) {
        rep.iterations = it;
        const Eigen::MatrixXd residual = x - xj;
        flops.core += u64(d) * u64(n);
        const Eigen::MatrixXd grad = -(x.transpose() * residual);
        flops.core += 2 * u64(d) * u64(n) * u64(n);

        Eigen::MatrixXd u, xu;
        for (bool first = true;; first = false) {
            u = shrink_columns(j - grad / rho, rep.lambdas, rho);
            xu.noalias() = x * u;
            (first ? flops.core : flops.overhead) += 4 * u64(n) * u64(n) + 2 * u64(d) * u64(n) * u64(n);
            const double lhs = (xu - xj).squaredNorm();
            flops.overhead += 4 * u64(d) * u64(n) + 3 * u64(n) * u64(n);
            if (lhs <= rho * (u - j).squaredNorm() * (1 + 1e-12)) break;
            rho *= cfg.gamma;
            ++rep.backtracks;
        }
        const double ru = objective_of(u, xu);
        flops.overhead += 3 * u64(d) * u64(n) + 2 * u64(n) * u64(n);
        if (!std::isfinite(ru))
            throw DivergenceError("ssc_relaxed: objective became non-finite at iteration " + std::to_string(it));

        const double alpha_next = (1 + std::sqrt(1 + 4 * alpha * alpha)) / 2;
        const bool accepted = ru <= r;
        const double decrease = r - ru;
        const double c_u = alpha / alpha_next;
        const double c_prev = (alpha - 1) / alpha_next;
        if (accepted) {
            // j = u + c_prev (u - z); X j follows by linearity.
            j = u + c_prev * (u - z);
            xj = xu + c_prev * (xu - xz);
            z = std::move(u);
            xz = std::move(xu);
            r = ru;
        } else {
            j = z + c_u * (u - z);
            xj = xz + c_u * (xu - xz);
        }
        flops.core += 2 * u64(n) * u64(n);
        flops.overhead += 3 * u64(d) * u64(n);
        alpha = alpha_next;
        if (cfg.record_trace) rep.trace.push_back(r);
        if (accepted && decrease <= cfg.eps * std::max(std::abs(ru), std::numeric_limits<double>::min())) {
            rep.converged = true;
            break;
        }
    }
    rep.rho = rho;
    rep.objective = r;
    rep.residual = (x - xz).norm();
    if (!rep.converged) rep.warnings.push_back("ssc_relaxed: iteration budget exhausted");
    out.z = std::move(z);
    rep.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

SscSolution ssc_exact(const DataMatrix& x, const SolverConfig& cfg) {
    validate_data(x);
    cfg.validate();
    const Index n = x.cols(), d = x.rows();
    check_memory_budget(Method::ssc_exact, n, d, cfg);
    const auto start = Clock::now();

    SscSolution out;
    SscReport& rep = out.report;
    rep.variant = Variant::exact;
    rep.lambdas = ssc_lambdas(x, cfg);
    FlopCounter& flops = rep.flops;
    flops.overhead += 2 * u64(d) * u64(n) * u64(n);

    const double xnorm = x.norm();
    const double rho = xnorm;
    const double sqrt_rho = std::sqrt(rho);
    double mu = cfg.mu0;

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, n);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(d, n);
    Eigen::MatrixXd xz = Eigen::MatrixXd::Zero(d, n);
    Eigen::MatrixXd best_z = z, best_e = e;
    double best_obj = std::numeric_limits<double>::infinity();
    double res = 0, q = 0;

    for (int it = 1; it <= cfg.admm_max_iters; ++it) {
        rep.iterations = it;
        const Eigen::MatrixXd target = x - e - y / mu;
        const Eigen::MatrixXd grad = mu * (x.transpose() * (xz - target));
        flops.core += 4 * u64(d) * u64(n) + 2 * u64(d) * u64(n) * u64(n);
        flops.overhead += u64(n) * u64(n);

        Eigen::MatrixXd z_next = shrink_columns(z - grad / rho, rep.lambdas, rho);
        Eigen::MatrixXd e_next = (target + e - xz) / (1 / mu + 1);
        flops.core += 4 * u64(n) * u64(n);
        flops.overhead += 3 * u64(d) * u64(n);

        const double dz = (z_next - z).norm();
        flops.core += 3 * u64(n) * u64(n);
        const double de = (e_next - e).norm();
        flops.overhead += 3 * u64(d) * u64(n);
        q = mu * sqrt_rho / xnorm * std::max(dz, de);

        Eigen::MatrixXd xz_next = x * z_next;
        flops.core += 2 * u64(d) * u64(n) * u64(n);
        const Eigen::MatrixXd constraint = xz_next - x + e_next;
        res = constraint.norm() / xnorm;
        flops.overhead += 4 * u64(d) * u64(n);

        z = std::move(z_next);
        e = std::move(e_next);
        xz = std::move(xz_next);

        const double obj = l1_weighted(z, rep.lambdas) + 0.5 * (x - xz).squaredNorm();
        flops.overhead += 3 * u64(d) * u64(n) + 2 * u64(n) * u64(n);
        if (!std::isfinite(obj))
            throw DivergenceError("ssc_exact: iterate became non-finite at iteration " + std::to_string(it));
        if (cfg.record_trace) rep.trace.push_back(obj);
        if (obj < best_obj) {
            best_obj = obj;
            best_z = z;
            best_e = e;
        }
        if (res < cfg.eps1 && q < cfg.eps2) {
            rep.converged = true;
            break;
        }
        y += mu * constraint;
        flops.overhead += 2 * u64(d) * u64(n);
        mu = std::min(cfg.mu_max, (q < cfg.eps2 ? cfg.gamma0 : 1.0) * mu);
    }
    if (!rep.converged) {
        z = std::move(best_z);
        e = std::move(best_e);
        rep.warnings.push_back("ssc_exact: iteration budget exhausted");
        res = (x * z + e - x).norm() / xnorm;
    }
    rep.rho = rho;
    rep.q = q;
    rep.residual = res;
    rep.objective = l1_weighted(z, rep.lambdas) + 0.5 * (x - x * z).squaredNorm();
    out.z = std::move(z);
    out.e = std::move(e);
    rep.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

}  // namespace kssc
