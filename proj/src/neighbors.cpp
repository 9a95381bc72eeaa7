#include "kssc/neighbors.hpp"

#include "kssc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace kssc {

void NeighborSets::validate(Index n) const {
    if (size() != n)
        throw ValidationError("neighbour sets cover " + std::to_string(size()) + " columns, data has " +
                              std::to_string(n));
    for (Index i = 0; i < n; ++i) {
        std::unordered_set<Index> seen;
        for (Index j : omega[i]) {
            if (j < 0 || j >= n)
                throw ValidationError("neighbour index out of range in set " + std::to_string(i));
            if (j == i) throw ValidationError("column " + std::to_string(i) + " lists itself");
            if (!seen.insert(j).second)
                throw ValidationError("duplicate neighbour in set " + std::to_string(i));
        }
    }
}

NeighborSets knn_select(const DataMatrix& x, Index k, unsigned threads) {
    const Index n = x.cols();
    if (n < 2) throw ValidationError("knn_select needs at least two columns");
    if (k < 1) throw ValidationError("knn_select needs k >= 1");

    NeighborSets out;
    if (k > n - 1) {
        out.warnings.push_back("k=" + std::to_string(k) + " clamped to N-1=" + std::to_string(n - 1));
        k = n - 1;
    }
    out.k = k;
    out.omega.assign(static_cast<std::size_t>(n), {});

    parallel_for(static_cast<std::size_t>(n), threads ? threads : default_thread_count(),
                 [&](std::size_t col) {
                     const Index i = static_cast<Index>(col);
                     const Eigen::RowVectorXd dist = (x.colwise() - x.col(i)).colwise().squaredNorm();
                     std::vector<Index> order;
                     order.reserve(static_cast<std::size_t>(n - 1));
                     for (Index j = 0; j < n; ++j)
                         if (j != i) order.push_back(j);
                     auto closer = [&](Index a, Index b) {
                         return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                     };
                     std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
                     order.resize(static_cast<std::size_t>(k));
                     out.omega[col] = std::move(order);
                 });
    return out;
}

namespace {

void check_lengths(const NeighborSets& omega, const Labels& truth) {
    if (static_cast<std::size_t>(omega.size()) != truth.size())
        throw ValidationError("neighbour sets and labels differ in length");
}

}  // namespace

NeighborQuality neighbor_quality(const NeighborSets& omega, const Labels& truth) {
    check_lengths(omega, truth);
    NeighborQuality q;
    q.per_column.reserve(truth.size());
    for (Index i = 0; i < omega.size(); ++i) {
        const auto& set = omega.omega[i];
        if (set.empty()) {
            q.per_column.push_back(0);
            continue;
        }
        const auto hits = std::count_if(set.begin(), set.end(),
                                        [&](Index j) { return truth[j] == truth[i]; });
        q.per_column.push_back(static_cast<double>(hits) / static_cast<double>(set.size()));
    }
    q.true_positive = q.per_column.empty()
                          ? 0
                          : std::accumulate(q.per_column.begin(), q.per_column.end(), 0.0) /
                                static_cast<double>(q.per_column.size());
    q.false_positive = 1 - q.true_positive;
    return q;
}

std::vector<double> neighbor_quality_curve(const NeighborSets& omega, const Labels& truth) {
    check_lengths(omega, truth);
    std::vector<double> curve(static_cast<std::size_t>(omega.k), 0.0);
    if (omega.size() == 0) return curve;
    for (Index i = 0; i < omega.size(); ++i) {
        const auto& set = omega.omega[i];
        Index hits = 0;
        for (Index m = 0; m < omega.k && m < static_cast<Index>(set.size()); ++m) {
            hits += truth[set[m]] == truth[i];
            curve[m] += static_cast<double>(hits) / static_cast<double>(m + 1);
        }
    }
    for (auto& v : curve) v /= static_cast<double>(omega.size());
    return curve;
}

void TheoremBoundParams::validate(bool noisy) const {
    if (!(epsilon > 0) || !(t > 0) || !(k0 > 0) || !(C > 1) || d_min < 1 || d < 1 || !(n_other > 1))
        throw ValidationError("theorem bound: epsilon, t, k0 > 0, C > 1, dimensions >= 1, N_l > 1 required");
    if (!(affinity >= 0)) throw ValidationError("theorem bound: affinity must be non-negative");
    if (noisy && (!(delta > 0) || !(delta < 1) || !(sigma >= 0) || !(sub_gaussian_c > 0)))
        throw ValidationError("theorem bound: need 0 < delta < 1, sigma >= 0, c > 0");
}

TheoremBound check_theorem_bound(const TheoremBoundParams& p, bool noisy) {
    p.validate(noisy);
    TheoremBound out;
    // e^{-k0} (eC)^{k0/C} evaluated in log space to avoid overflow.
    const double concentration = std::exp(-p.k0 + (p.k0 / p.C) * (1 + std::log(p.C)));
    double raw = 1 - 2 * std::exp(-p.t) - concentration;
    double slack = 1 - p.epsilon * p.epsilon / 2;
    if (noisy) {
        if (p.sigma > 0) {
            raw -= 2 * std::exp(1 - p.sub_gaussian_c * p.delta * p.delta / (p.sigma * p.sigma));
            raw -= p.d * std::pow(p.sigma, 4) / (p.delta * p.delta);
        }
        slack -= 6 * p.delta;
    }
    out.raw_probability = raw;
    out.probability = std::clamp(raw, 0.0, 1.0);
    out.affinity_threshold = std::sqrt(static_cast<double>(p.d_min)) * slack /
                             (2 * std::sqrt(p.d * (p.t * std::log(p.n_other) + p.t * p.t)));
    out.condition_met = p.affinity <= out.affinity_threshold;
    return out;
}

std::optional<double> concentration_radius(double n, double k0, int d) {
    if (!(n > 0) || !(k0 > 0) || d < 1) return std::nullopt;
    auto required = [&](double eps) {
        return k0 / (eps * eps) * std::exp((d - 2) * eps * eps / 2);
    };
    // required(eps) decreases on (0, sqrt(2/(d-2))] and is unbounded near 0.
    // Geodesic distances on the unit sphere never exceed 2, hence the cap.
    double hi = d > 2 ? std::min(2.0, std::sqrt(2.0 / (d - 2))) : 2.0;
    if (required(hi) > n) return std::nullopt;
    double lo = 0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (required(mid) <= n ? hi : lo) = mid;
    }
    return hi;
}

void save_neighbors(const std::filesystem::path& path, const NeighborSets& omega) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    for (const auto& set : omega.omega) {
        for (std::size_t m = 0; m < set.size(); ++m) out << (m ? "," : "") << set[m] + 1;
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

NeighborSets load_neighbors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    NeighborSets out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<Index> set;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                set.push_back(static_cast<Index>(std::stoll(cell)) - 1);
            } catch (const std::exception&) {
                throw FormatError(path.string() + ": bad neighbour index '" + cell + "'");
            }
        }
        out.k = std::max<Index>(out.k, static_cast<Index>(set.size()));
        out.omega.push_back(std::move(set));
    }
    out.validate(out.size());
    return out;
}

}  // namespace kssc
