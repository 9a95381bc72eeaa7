#pragma once

#include "kssc/common.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace kssc {

/// Percentage of misclassified points under the best one-to-one matching of
/// predicted clusters to true clusters. Label values are arbitrary integers;
/// unequal cluster counts are handled by padding the confusion matrix.
double sce(const Labels& predicted, const Labels& truth);

/// Minimum-cost perfect assignment on a square cost matrix. Returns, for each
/// row, the column assigned to it.
std::vector<Index> hungarian_assignment(const Eigen::MatrixXd& cost);

/// 10 log10(peak^2 / MSE). +inf when the matrices are identical.
template <typename DerivedA, typename DerivedB>
double psnr(const Eigen::MatrixBase<DerivedA>& original, const Eigen::MatrixBase<DerivedB>& observed,
            double peak) {
    if (original.rows() != observed.rows() || original.cols() != observed.cols())
        throw ValidationError("psnr: shape mismatch");
    if (!(peak > 0)) throw ValidationError("psnr: peak must be positive");
    if (original.size() == 0) throw ValidationError("psnr: empty matrices");
    const double mse = static_cast<double>((original - observed).squaredNorm()) /
                       static_cast<double>(original.size());
    if (mse == 0) return std::numeric_limits<double>::infinity();
    return 10 * std::log10(peak * peak / mse);
}

enum class Method { ssc_exact, ssc_relaxed, kssc_exact, kssc_relaxed };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
inline bool is_kssc(Method m) { return m == Method::kssc_exact || m == Method::kssc_relaxed; }

struct CostModelInput {
    std::uint64_t n = 0;  // samples N
    std::uint64_t d = 0;  // ambient dimension D
    std::uint64_t k = 0;  // neighbours; ignored by the SSC rows
    Method method = Method::kssc_relaxed;

    void validate() const;
};

struct CostEstimate {
    std::uint64_t flops_per_iteration = 0;
    std::uint64_t floats = 0;
};

/// Per-iteration FLOPs and resident floats with respect to Z:
///   ssc_exact     7N^2 + 4DN^2 + 4DN     2N^2 + DN
///   ssc_relaxed   6N^2 + 4DN^2 + DN      4N^2
///   kssc_exact    7kN + 4kDN + 4DN       2kN + DN
///   kssc_relaxed  6kN + 4kDN + DN        4kN
CostEstimate cost_model(const CostModelInput& input);

}  // namespace kssc
