#include "kssc/spectral.hpp"

#include "kssc/kmeans.hpp"
#include "kssc/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kssc {

namespace {

AffinityGraph finish_graph(Eigen::SparseMatrix<double> w) {
    w.prune([](Index r, Index c, double v) { return r != c && v != 0; });
    w.makeCompressed();
    AffinityGraph g;
    g.degree = Eigen::VectorXd::Zero(w.rows());
    for (Index c = 0; c < w.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(w, c); it; ++it) g.degree[c] += it.value();
    g.w = std::move(w);
    return g;
}

Eigen::MatrixXd random_block(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd b(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) b(i, j) = normal(rng);
    return b;
}

/// Orthonormalises `block` against the columns of `basis` and itself.
/// Columns that collapse are redrawn at random; the result may be narrower if
/// the space is exhausted.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& block, const Eigen::MatrixXd& basis, Rng& rng) {
    const Index n = block.rows();
    Eigen::MatrixXd out(n, block.cols());
    Index kept = 0;
    for (Index c = 0; c < block.cols() && basis.cols() + kept < n; ++c) {
        Eigen::VectorXd v = block.col(c);
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double before = v.norm();
            for (int pass = 0; pass < 2; ++pass) {
                if (basis.cols()) v -= basis * (basis.transpose() * v);
                if (kept) v -= out.leftCols(kept) * (out.leftCols(kept).transpose() * v);
            }
            const double after = v.norm();
            if (after > 1e-8 * before && after > 0) {
                out.col(kept++) = v / after;
                break;
            }
            v = random_block(n, 1, rng).col(0);
        }
    }
    return out.leftCols(kept);
}

struct RitzResult {
    Eigen::VectorXd values;
    Eigen::MatrixXd coords;  // basis coordinates, descending order
    Eigen::VectorXd residuals;
};

RitzResult rayleigh_ritz(const Eigen::MatrixXd& v, const Eigen::MatrixXd& av, Index count) {
    Eigen::MatrixXd h = v.transpose() * av;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    const Index m = h.rows();
    RitzResult r;
    r.values.resize(count);
    r.coords.resize(m, count);
    for (Index i = 0; i < count; ++i) {
        r.values[i] = eig.eigenvalues()[m - 1 - i];
        r.coords.col(i) = eig.eigenvectors().col(m - 1 - i);
    }
    const Eigen::MatrixXd resid = av * r.coords - v * r.coords * r.values.asDiagonal();
    r.residuals = resid.colwise().norm().transpose();
    return r;
}

}  // namespace

AffinityGraph build_affinity(const SparseCoefficients& z) {
    if (z.rows() != z.cols()) throw ValidationError("build_affinity: Z must be square");
    const Eigen::SparseMatrix<double> a = z.cwiseAbs();
    const Eigen::SparseMatrix<double> at = a.transpose();
    return finish_graph(a + at);
}

AffinityGraph build_affinity(const Eigen::MatrixXd& z) {
    if (z.rows() != z.cols()) throw ValidationError("build_affinity: Z must be square");
    const Eigen::MatrixXd a = z.cwiseAbs();
    const Eigen::MatrixXd w = a + a.transpose();
    return finish_graph(w.sparseView(0.0, 0.0));
}

EigenPairs largest_eigenpairs(const Eigen::SparseMatrix<double>& m, int count, std::uint64_t seed,
                              double tol, int max_restarts) {
    const Index n = m.rows();
    if (m.cols() != n) throw ValidationError("largest_eigenpairs: matrix must be square");
    if (count < 1 || count > n) throw ValidationError("largest_eigenpairs: need 1 <= count <= N");

    EigenPairs out;
    if (n <= 64) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(m)};
        out.values = eig.eigenvalues().tail(count).reverse();
        out.vectors = eig.eigenvectors().rightCols(count).rowwise().reverse();
        out.converged = true;
        return out;
    }

    Rng rng(seed);
    const Index block_width = std::min<Index>(n, count + 3);
    const Index max_dim = std::min<Index>(n, std::max<Index>(10 * block_width, 120));
    Eigen::MatrixXd start = random_block(n, block_width, rng);

    RitzResult ritz;
    Eigen::MatrixXd v, av;
    for (int restart = 0; restart <= max_restarts; ++restart) {
        v.resize(n, 0);
        av.resize(n, 0);
        Eigen::MatrixXd block = start;
        while (v.cols() < max_dim) {
            block = orthonormalize(block, v, rng);
            if (block.cols() == 0) break;
            if (v.cols() + block.cols() > max_dim) block.conservativeResize(Eigen::NoChange, max_dim - v.cols());
            const Eigen::MatrixXd ablock = m * block;
            out.matvecs += static_cast<int>(block.cols());
            v.conservativeResize(Eigen::NoChange, v.cols() + block.cols());
            v.rightCols(block.cols()) = block;
            av.conservativeResize(Eigen::NoChange, av.cols() + ablock.cols());
            av.rightCols(ablock.cols()) = ablock;
            block = ablock;
            if (v.cols() < count + block_width && v.cols() < n) continue;

            ritz = rayleigh_ritz(v, av, count);
            bool done = v.cols() == n;
            if (!done) {
                done = true;
                for (Index i = 0; i < count; ++i)
                    done = done && ritz.residuals[i] <= tol * std::max(1.0, std::abs(ritz.values[i]));
            }
            if (done) {
                out.values = ritz.values;
                out.vectors = v * ritz.coords;
                out.converged = true;
                return out;
            }
        }
        // Thick restart from the leading Ritz vectors.
        const RitzResult wide = rayleigh_ritz(v, av, std::min<Index>(block_width, v.cols()));
        start = v * wide.coords;
        ritz = rayleigh_ritz(v, av, count);
    }
    out.values = ritz.values;
    out.vectors = v * ritz.coords;
    out.converged = false;
    return out;
}

SegmentationResult ncut_segment(const AffinityGraph& graph, int p, std::uint64_t seed,
                                const SegmentationOptions& options) {
    const Index n = graph.size();
    if (n < 1) throw ValidationError("ncut_segment: empty graph");
    if (p < 1) throw ValidationError("ncut_segment: p must be positive");
    if (p > n) throw ValidationError("ncut_segment: p=" + std::to_string(p) + " exceeds N=" + std::to_string(n));

    SegmentationResult out;
    out.labels.assign(static_cast<std::size_t>(n), 1);
    out.embedding = Eigen::MatrixXd::Zero(n, p);
    if (p == n) {
        std::iota(out.labels.begin(), out.labels.end(), 1);
        return out;
    }
    if (p == 1) return out;

    std::vector<Index> active, isolated;
    for (Index i = 0; i < n; ++i) (graph.degree[i] > 0 ? active : isolated).push_back(i);
    const Index n_active = static_cast<Index>(active.size());
    Index p_active = p - static_cast<Index>(isolated.size());
    if (!isolated.empty())
        out.warnings.push_back(std::to_string(isolated.size()) + " isolated vertex(es) given singleton labels");
    if (p_active < 1 && n_active > 0) {
        out.warnings.push_back("isolated vertices outnumber clusters; labelling exceeds p");
        p_active = 1;
    }
    for (std::size_t m = 0; m < isolated.size(); ++m)
        out.labels[isolated[m]] = static_cast<int>(std::max<Index>(p_active, 0) + 1 + static_cast<Index>(m));
    if (n_active == 0) return out;
    if (p_active >= n_active) {
        for (Index a = 0; a < n_active; ++a) out.labels[active[a]] = static_cast<int>(a + 1);
        return out;
    }

    // Normalised adjacency restricted to the active vertices.
    std::vector<Index> position(static_cast<std::size_t>(n), -1);
    for (Index a = 0; a < n_active; ++a) position[active[a]] = a;
    Eigen::VectorXd inv_sqrt(n_active);
    for (Index a = 0; a < n_active; ++a) inv_sqrt[a] = 1.0 / std::sqrt(graph.degree[active[a]]);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(graph.w.nonZeros()));
    for (Index c = 0; c < graph.w.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(graph.w, c); it; ++it) {
            const Index r = position[it.row()], cc = position[c];
            if (r >= 0 && cc >= 0) triplets.emplace_back(r, cc, it.value() * inv_sqrt[r] * inv_sqrt[cc]);
        }
    Eigen::SparseMatrix<double> normalized(n_active, n_active);
    normalized.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::MatrixXd vectors;
    if (n_active <= options.dense_limit) {
        const Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n_active, n_active) - Eigen::MatrixXd(normalized);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
        out.eigenvalues = eig.eigenvalues().head(p_active);
        vectors = eig.eigenvectors().leftCols(p_active);
    } else {
        out.iterative = true;
        const EigenPairs pairs = largest_eigenpairs(normalized, static_cast<int>(p_active),
                                                    derive_seed({seed, 0x65696773ULL}), options.eig_tol);
        if (!pairs.converged) out.warnings.push_back("iterative eigensolver did not reach tolerance");
        out.eigenvalues = (1.0 - pairs.values.array()).matrix();
        vectors = pairs.vectors;
    }

    Eigen::MatrixXd embedding = vectors;
    for (Index a = 0; a < n_active; ++a) {
        const double norm = embedding.row(a).norm();
        if (norm > 0) embedding.row(a) /= norm;
    }
    const KMeansResult km = kmeans(embedding, static_cast<int>(p_active), seed, options.kmeans_restarts,
                                   options.kmeans_max_iters);
    out.inertia = km.inertia;
    out.restarts = km.restarts;

    std::vector<Index> sizes(static_cast<std::size_t>(p_active), 0);
    for (Index a = 0; a < n_active; ++a) {
        out.labels[active[a]] = km.assignment[a] + 1;
        ++sizes[km.assignment[a]];
        out.embedding.row(active[a]).head(p_active) = embedding.row(a);
    }
    if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end())
        out.warnings.push_back("degenerate clustering: at least one cluster is empty");
    return out;
}

GapMethod gap_method_from_string(const std::string& s) {
    if (s == "eigen_gap" || s == "eigen") return GapMethod::eigen_gap;
    if (s == "svd_gap" || s == "svd") return GapMethod::svd_gap;
    if (s == "normalized_gap" || s == "normalized") return GapMethod::normalized_gap;
    throw ValidationError("unknown gap method '" + s + "' (expected eigen_gap, svd_gap or normalized_gap)");
}

int estimate_p(const AffinityGraph& graph, GapMethod method) {
    const Index n = graph.size();
    if (n < 2) throw ValidationError("estimate_p: need at least two vertices");
    Eigen::MatrixXd w(graph.w);
    Eigen::VectorXd values;
    if (method == GapMethod::normalized_gap) {
        const Eigen::VectorXd inv_sqrt =
            graph.degree.unaryExpr([](double d) { return d > 0 ? 1.0 / std::sqrt(d) : 0.0; });
        w = inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
    }
    if (method != GapMethod::svd_gap) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w, Eigen::EigenvaluesOnly);
        values = eig.eigenvalues().reverse();
    } else {
        values = Eigen::BDCSVD<Eigen::MatrixXd>(w).singularValues();
    }
    Index best = 0;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i + 1 < n; ++i) {
        const double gap = values[i] - values[i + 1];
        if (gap > best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return static_cast<int>(best + 1);
}

}  // namespace kssc
