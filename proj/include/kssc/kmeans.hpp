#pragma once

#include "kssc/common.hpp"

#include <cstdint>
#include <vector>

namespace kssc {

struct KMeansResult {
    std::vector<int> assignment;  // 0-based cluster per row
    Eigen::MatrixXd centers;      // k x dim
    double inertia = 0;           // sum of squared distances to assigned centers
    int restarts = 0;
    int iterations = 0;           // Lloyd iterations of the winning restart
};

/// Lloyd's algorithm on the rows of `points` with k-means++ seeding; keeps
/// the restart with the lowest inertia. Deterministic in `seed`.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts = 10,
                    int max_iters = 300);

}  // namespace kssc
