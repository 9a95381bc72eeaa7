#include "kssc/metrics.hpp"

#include <algorithm>
#include <map>

namespace kssc {

std::vector<Index> hungarian_assignment(const Eigen::MatrixXd& cost) {
    const Index n = cost.rows();
    if (cost.cols() != n) throw ValidationError("hungarian_assignment: cost matrix must be square");
    if (n == 0) return {};

    // Potentials-based O(n^3) method over 1-based arrays; index 0 is a sentinel.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0);
    std::vector<Index> match(n + 1, 0), way(n + 1, 0);
    for (Index row = 1; row <= n; ++row) {
        match[0] = row;
        Index col0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[col0] = 1;
            const Index row0 = match[col0];
            double delta = inf;
            Index col1 = 0;
            for (Index col = 1; col <= n; ++col) {
                if (used[col]) continue;
                const double reduced = cost(row0 - 1, col - 1) - u[row0] - v[col];
                if (reduced < minv[col]) {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if (minv[col] < delta) {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for (Index col = 0; col <= n; ++col) {
                if (used[col]) {
                    u[match[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
        } while (match[col0] != 0);
        do {
            const Index col1 = way[col0];
            match[col0] = match[col1];
            col0 = col1;
        } while (col0 != 0);
    }
    std::vector<Index> assignment(static_cast<std::size_t>(n));
    for (Index col = 1; col <= n; ++col) assignment[match[col] - 1] = col - 1;
    return assignment;
}

double sce(const Labels& predicted, const Labels& truth) {
    if (predicted.size() != truth.size()) throw ValidationError("sce: label vectors differ in length");
    if (predicted.empty()) throw ValidationError("sce: empty label vectors");

    auto index_of = [](const Labels& labels) {
        std::map<int, Index> ids;
        for (int l : labels) ids.emplace(l, 0);
        Index next = 0;
        for (auto& [label, id] : ids) id = next++;
        return ids;
    };
    const auto pred_ids = index_of(predicted);
    const auto true_ids = index_of(truth);
    const Index size = std::max<Index>(static_cast<Index>(pred_ids.size()), static_cast<Index>(true_ids.size()));

    Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(size, size);
    for (std::size_t i = 0; i < predicted.size(); ++i)
        confusion(pred_ids.at(predicted[i]), true_ids.at(truth[i])) += 1;

    const auto assignment = hungarian_assignment(-confusion);
    double matched = 0;
    for (Index r = 0; r < size; ++r) matched += confusion(r, assignment[r]);
    const double n = static_cast<double>(predicted.size());
    return 100.0 * (n - matched) / n;
}

std::string to_string(Method m) {
    switch (m) {
        case Method::ssc_exact: return "ssc_exact";
        case Method::ssc_relaxed: return "ssc_relaxed";
        case Method::kssc_exact: return "kssc_exact";
        case Method::kssc_relaxed: return "kssc_relaxed";
    }
    return "unknown";
}

Method method_from_string(const std::string& s) {
    for (Method m : {Method::ssc_exact, Method::ssc_relaxed, Method::kssc_exact, Method::kssc_relaxed})
        if (to_string(m) == s) return m;
    throw ValidationError("unknown method '" + s + "'");
}

void CostModelInput::validate() const {
    if (n == 0 || d == 0) throw ValidationError("cost model: n and d must be positive");
    if (is_kssc(method) && (k == 0 || k >= n))
        throw ValidationError("cost model: kSSC rows need 0 < k < n");
}

CostEstimate cost_model(const CostModelInput& in) {
    in.validate();
    const std::uint64_t n = in.n, d = in.d, k = in.k;
    switch (in.method) {
        case Method::ssc_exact: return {7 * n * n + 4 * d * n * n + 4 * d * n, 2 * n * n + d * n};
        case Method::ssc_relaxed: return {6 * n * n + 4 * d * n * n + d * n, 4 * n * n};
        case Method::kssc_exact: return {7 * k * n + 4 * k * d * n + 4 * d * n, 2 * k * n + d * n};
        case Method::kssc_relaxed: return {6 * k * n + 4 * k * d * n + d * n, 4 * k * n};
    }
    return {};
}

}  // namespace kssc
