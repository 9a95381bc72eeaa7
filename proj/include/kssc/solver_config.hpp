#pragma once

#include "kssc/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kssc {

enum class Variant { relaxed, exact };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct SolverConfig {
    // Global l1 weight. When unset each column uses
    // lambda_scale * ||X_i^T x_i||_inf computed over its own candidate set.
    std::optional<double> lambda;
    double lambda_scale = 0.1;

    // FISTA. rho0 unset: power-iteration estimate of the Lipschitz constant.
    std::optional<double> rho0;
    double gamma = 2.0;
    double eps = 1e-12;  // relative objective decrease that ends the run
    int max_iters = 2000;

    // LADMPSAP.
    double mu0 = 0.1;
    double mu_max = 1.0;
    double gamma0 = 1.1;
    double eps1 = 1e-6;
    double eps2 = 1e-6;
    int admm_max_iters = 20000;

    bool record_trace = false;
    unsigned threads = 0;  // 0: hardware concurrency

    // Full-matrix SSC refuses to start when its resident floats exceed this.
    std::uint64_t memory_budget_bytes = std::uint64_t{8} << 30;

    /// Throws ValidationError on any out-of-range field.
    void validate() const;
};

struct ColumnReport {
    int iterations = 0;
    double lambda = 0;
    double objective = 0;   // lambda ||z||_1 + 1/2 ||x - X z||^2
    double residual = 0;    // relaxed: ||x - X z||; exact: ||X z + e - x|| / ||X||_F
    double q = 0;           // exact only: final change measure
    double rho = 0;         // final step parameter
    int backtracks = 0;
    double condition_estimate = 1;
    bool converged = false;
    bool failed = false;
    std::string message;
    std::vector<double> trace;  // objective per iteration when record_trace
};

struct SolverReport {
    Variant variant = Variant::relaxed;
    std::vector<ColumnReport> columns;
    double objective = 0;  // sum of column objectives
    double seconds = 0;
    Index failed = 0;
    Index not_converged = 0;
    std::vector<std::string> warnings;
};

}  // namespace kssc
