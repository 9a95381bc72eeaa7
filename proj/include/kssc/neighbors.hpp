#pragma once

#include "kssc/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kssc {

/// Candidate sets for each column. omega[i] lists 0-based column indices in
/// increasing distance from column i; i itself is never present.
struct NeighborSets {
    std::vector<std::vector<Index>> omega;
    Index k = 0;
    std::vector<std::string> warnings;

    Index size() const { return static_cast<Index>(omega.size()); }

    /// Throws ValidationError if an index is out of range, repeated, or equal
    /// to its own column.
    void validate(Index n) const;
};

/// Exact k nearest neighbours by Euclidean distance on the columns as given.
/// Ties go to the smaller index. k >= N is clamped to N - 1 with a warning.
NeighborSets knn_select(const DataMatrix& x, Index k, unsigned threads = 0);

struct NeighborQuality {
    double true_positive = 0;   // mean over columns of |same-label neighbours| / |omega_i|
    double false_positive = 0;  // 1 - true_positive
    std::vector<double> per_column;
};

NeighborQuality neighbor_quality(const NeighborSets& omega, const Labels& truth);

/// Mean true-positive rate for each prefix length 1..k of the ranked sets.
std::vector<double> neighbor_quality_curve(const NeighborSets& omega, const Labels& truth);

/// Root mean squared cosine of the principal angles between span(u1) and
/// span(u2). Both inputs must have orthonormal columns (within 1e-8).
template <typename Derived1, typename Derived2>
typename Derived1::Scalar affinity_between(const Eigen::MatrixBase<Derived1>& u1,
                                           const Eigen::MatrixBase<Derived2>& u2);

struct TheoremBoundParams {
    double epsilon = 0.1;  // patch radius
    double t = 1;          // tail parameter of the inner-product bound
    double k0 = 1;
    double C = 2;          // requires C > 1; kNN uses k = k0 / C
    double delta = 0.01;   // noise slack
    double sigma = 0;      // noise standard deviation
    double affinity = 0;   // affinity between the sample's subspace and another
    int d_min = 1;         // smallest subspace dimension
    int d = 1;             // min(d_1, d_l) in the inner-product bound
    double n_other = 2;    // N_l, sample count of the competing subspace
    double sub_gaussian_c = 0.125;

    void validate(bool noisy) const;
};

struct TheoremBound {
    double raw_probability = 0;
    double probability = 0;        // raw value clamped to [0, 1]
    double affinity_threshold = 0;
    bool condition_met = false;    // affinity <= affinity_threshold
};

/// Lower bound on the probability that kNN returns only same-subspace samples.
TheoremBound check_theorem_bound(const TheoremBoundParams& params, bool noisy);

/// Smallest patch radius epsilon with (k0 / eps^2) exp((d - 2) eps^2 / 2) <= n,
/// i.e. the radius at which n uniform samples on S^(d-1) meet the concentration
/// condition. Empty if no radius on the decreasing branch works.
std::optional<double> concentration_radius(double n, double k0, int d);

void save_neighbors(const std::filesystem::path& path, const NeighborSets& omega);
NeighborSets load_neighbors(const std::filesystem::path& path);

template <typename Derived1, typename Derived2>
typename Derived1::Scalar affinity_between(const Eigen::MatrixBase<Derived1>& u1,
                                           const Eigen::MatrixBase<Derived2>& u2) {
    using Scalar = typename Derived1::Scalar;
    auto check = [](const auto& u, const char* name) {
        if (u.cols() == 0 || u.cols() > u.rows())
            throw ValidationError(std::string("affinity_between: ") + name + " has bad shape");
        const MatrixX<Scalar> gram = u.transpose() * u;
        const Scalar dev =
            (gram - MatrixX<Scalar>::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
        if (!(dev <= Scalar(1e-8)))
            throw ValidationError(std::string("affinity_between: ") + name + " is not orthonormal");
    };
    check(u1, "first basis");
    check(u2, "second basis");
    if (u1.rows() != u2.rows()) throw ValidationError("affinity_between: ambient dimensions differ");
    const MatrixX<Scalar> cross = u1.transpose() * u2;
    const VectorX<Scalar> cosines = Eigen::JacobiSVD<MatrixX<Scalar>>(cross).singularValues();
    const Index m = std::min(u1.cols(), u2.cols());
    return std::sqrt(std::min(Scalar(1), cosines.squaredNorm() / Scalar(m)));
}

}  // namespace kssc
