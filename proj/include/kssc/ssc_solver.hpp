#pragma once

#include "kssc/common.hpp"
#include "kssc/metrics.hpp"
#include "kssc/solver_config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kssc {

/// Operation counts gathered while a full-matrix solver runs. Core work is
/// what the cost model covers for one iteration: the two D x N x N products at
/// 2 FLOPs per multiply-add, the elementwise passes over D x N and N x N
/// arrays at the per-element costs listed in ssc_solver.cpp. Line-search
/// retries, objective evaluation and bookkeeping count as overhead.
struct FlopCounter {
    std::uint64_t core = 0;
    std::uint64_t overhead = 0;
};

struct SscReport {
    Variant variant = Variant::relaxed;
    int iterations = 0;
    double objective = 0;  // sum_i lambda_i ||z_i||_1 + 1/2 ||X - X Z||_F^2
    double residual = 0;   // exact: ||X Z + E - X||_F / ||X||_F
    double q = 0;
    double rho = 0;
    int backtracks = 0;
    bool converged = false;
    double seconds = 0;
    FlopCounter flops;
    std::vector<double> lambdas;
    std::vector<double> trace;
    std::vector<std::string> warnings;

    std::uint64_t core_flops_per_iteration() const {
        return iterations > 0 ? flops.core / static_cast<std::uint64_t>(iterations) : 0;
    }
};

/// Dense N x N self-expression with an exactly zero diagonal.
struct SscSolution {
    Eigen::MatrixXd z;
    Eigen::MatrixXd e;  // exact variant only
    SscReport report;
};

/// Resident bytes for the method's float count at 8 bytes per float. Throws
/// MemoryBudgetError when it exceeds cfg.memory_budget_bytes.
void check_memory_budget(Method method, Index n, Index d, const SolverConfig& cfg);

/// Full SSC, relaxed objective, by monotone FISTA on the whole matrix. The
/// diagonal is projected to zero after every proximal step.
SscSolution ssc_relaxed(const DataMatrix& x, const SolverConfig& cfg);

/// Full SSC, exact objective X = X Z + E, by LADMPSAP.
SscSolution ssc_exact(const DataMatrix& x, const SolverConfig& cfg);

/// Per-column l1 weights: the global lambda, or lambda_scale * max_{j != i} |x_j^T x_i|.
std::vector<double> ssc_lambdas(const DataMatrix& x, const SolverConfig& cfg);

}  // namespace kssc
