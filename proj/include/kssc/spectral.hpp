#pragma once

#include "kssc/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kssc {

/// Undirected similarity graph W = |Z| + |Z|^T: symmetric, non-negative,
/// zero diagonal.
struct AffinityGraph {
    Eigen::SparseMatrix<double> w;
    Eigen::VectorXd degree;

    Index size() const { return w.rows(); }
};

AffinityGraph build_affinity(const SparseCoefficients& z);
AffinityGraph build_affinity(const Eigen::MatrixXd& z);

struct SegmentationOptions {
    int kmeans_restarts = 10;
    int kmeans_max_iters = 300;
    Index dense_limit = 2000;  // above this the iterative eigensolver is used
    double eig_tol = 1e-10;
};

struct SegmentationResult {
    Labels labels;               // 1..p
    Eigen::MatrixXd embedding;   // row-normalised spectral coordinates (isolated rows zero)
    Eigen::VectorXd eigenvalues; // smallest eigenvalues of the normalised Laplacian, ascending
    double inertia = 0;
    int restarts = 0;
    bool iterative = false;
    std::vector<std::string> warnings;
};

/// Normalised-cut segmentation: eigenvectors of the p smallest eigenvalues of
/// I - D^{-1/2} W D^{-1/2}, rows normalised, then k-means. Zero-degree
/// vertices become singleton clusters and are left out of k-means.
SegmentationResult ncut_segment(const AffinityGraph& graph, int p, std::uint64_t seed,
                                const SegmentationOptions& options = {});

/// eigen_gap and svd_gap read the spectrum of W itself. normalized_gap uses
/// D^{-1/2} W D^{-1/2}, whose top eigenvalue 1 has multiplicity equal to the
/// number of connected components whatever their sizes and weights.
enum class GapMethod { eigen_gap, svd_gap, normalized_gap };

GapMethod gap_method_from_string(const std::string& s);

/// Position of the largest gap in the descending spectrum selected by
/// `method`: argmax over i in [1, N-1] of delta_i - delta_{i+1}.
int estimate_p(const AffinityGraph& graph, GapMethod method);

struct EigenPairs {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // one column per value
    bool converged = false;
    int matvecs = 0;
};

/// Largest algebraic eigenpairs of a symmetric sparse matrix by block Krylov
/// iteration with full reorthogonalisation and Rayleigh-Ritz extraction. The
/// block is wider than `count`, so repeated eigenvalues up to that
/// multiplicity are resolved.
EigenPairs largest_eigenpairs(const Eigen::SparseMatrix<double>& m, int count, std::uint64_t seed,
                              double tol = 1e-10, int max_restarts = 60);

}  // namespace kssc
