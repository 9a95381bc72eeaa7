#include "kssc/kmeans.hpp"

#include "kssc/rng.hpp"

#include <limits>
#include <numeric>

namespace kssc {

namespace {

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const Index n = points.rows();
    Eigen::MatrixXd centers(k, points.cols());
    std::uniform_int_distribution<Index> first(0, n - 1);
    centers.row(0) = points.row(first(rng));
    Eigen::VectorXd d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index chosen = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> unif(0.0, total);
            double target = unif(rng);
            for (chosen = 0; chosen < n - 1; ++chosen) {
                target -= d2[chosen];
                if (target < 0) break;
            }
        } else {
            chosen = first(rng);
        }
        centers.row(c) = points.row(chosen);
        d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts, int max_iters) {
    const Index n = points.rows();
    if (k < 1 || k > n) throw ValidationError("kmeans: need 1 <= k <= number of points");
    if (restarts < 1 || max_iters < 1) throw ValidationError("kmeans: restarts and max_iters must be positive");

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < restarts; ++attempt) {
        Rng rng(derive_seed({seed, static_cast<std::uint64_t>(attempt)}));
        Eigen::MatrixXd centers = seed_plus_plus(points, k, rng);
        std::vector<int> assign(static_cast<std::size_t>(n), -1);
        Eigen::VectorXd dist(n);
        int iterations = 0;
        for (int it = 0; it < max_iters; ++it) {
            iterations = it + 1;
            bool changed = false;
            for (Index i = 0; i < n; ++i) {
                Index best_c = 0;
                const double d = (centers.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best_c);
                dist[i] = d;
                if (assign[i] != static_cast<int>(best_c)) {
                    assign[i] = static_cast<int>(best_c);
                    changed = true;
                }
            }
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
            std::vector<Index> counts(static_cast<std::size_t>(k), 0);
            for (Index i = 0; i < n; ++i) {
                sums.row(assign[i]) += points.row(i);
                ++counts[assign[i]];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] > 0) {
                    centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
                    continue;
                }
                // Empty cluster: move its center onto the worst-served point.
                Index far = 0;
                dist.maxCoeff(&far);
                centers.row(c) = points.row(far);
                --counts[assign[far]];
                assign[far] = c;
                counts[c] = 1;
                dist[far] = 0;
                changed = true;
            }
            if (!changed) break;
        }
        double inertia = 0;
        for (Index i = 0; i < n; ++i) inertia += (points.row(i) - centers.row(assign[i])).squaredNorm();
        if (inertia < best.inertia) {
            best.assignment = std::move(assign);
            best.centers = std::move(centers);
            best.inertia = inertia;
            best.iterations = iterations;
        }
    }
    best.restarts = restarts;
    return best;
}

}  // namespace kssc
