#pragma once

#include "kssc/common.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kssc {

struct UniformLaw {
    double low = -1.0;
    double high = 1.0;
};

/// Coordinates drawn i.i.d. N(mean, variance) before multiplication by the basis.
struct GaussianLaw {
    double mean = 0.0;
    double variance = 1.0;
};

using CoefficientLaw = std::variant<UniformLaw, GaussianLaw>;

struct SyntheticSpec {
    int num_subspaces = 1;
    std::vector<int> subspace_dims;
    std::vector<int> points_per_subspace;
    int ambient_dim = 1;
    CoefficientLaw coefficient_law = UniformLaw{};
    // Set (even to 0) to select the two-subspace pooled-basis mode, where
    // subspace 1 takes the first d columns of one orthonormal D x (2d - t)
    // basis and subspace 2 the last d.
    std::optional<int> shared_basis_count;
    std::optional<double> noise_psnr;
    std::uint64_t seed = 0;

    void validate() const;
    Index total_points() const;
};

struct LabeledData {
    DataMatrix x;
    Labels labels;
    std::vector<Eigen::MatrixXd> bases;  // orthonormal basis per subspace
};

/// Draws a union of subspaces. Deterministic in spec.seed. Noise is applied
/// when spec.noise_psnr is set, with the peak taken from the clean matrix.
LabeledData generate_union(const SyntheticSpec& spec);

/// Semi-synthetic variant: each subspace is spanned by `dim` distinct columns
/// picked at random from `library`; coefficients follow `law`.
LabeledData generate_from_library(const DataMatrix& library, int num_subspaces, int dim,
                                  const std::vector<int>& points_per_subspace,
                                  const CoefficientLaw& law, std::uint64_t seed);

/// D x n matrix with orthonormal columns: Q factor of a standard Gaussian draw.
template <typename Rng>
Eigen::MatrixXd random_orthonormal(Index rows, Index cols, Rng& rng);

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Adds Gaussian noise whose realised mean squared error is exactly
/// peak^2 / 10^(target_psnr / 10). target_psnr = +inf returns x unchanged.
DataMatrix add_noise(const DataMatrix& x, double target_psnr, double peak, std::uint64_t seed);

/// Largest absolute entry; the default peak for add_noise.
double peak_value(const DataMatrix& x);

/// Scales every column to unit l2 norm. Throws DegenerateInputError naming the
/// first zero column.
template <typename Derived>
MatrixX<typename Derived::Scalar> normalize_columns(const Eigen::MatrixBase<Derived>& x) {
    MatrixX<typename Derived::Scalar> out = x;
    for (Index j = 0; j < out.cols(); ++j) {
        const auto norm = out.col(j).norm();
        if (!(norm > 0))
            throw DegenerateInputError("normalize_columns: column " + std::to_string(j) +
                                           " has zero norm",
                                       j);
        out.col(j) /= norm;
    }
    return out;
}

/// Throws ValidationError unless the matrix is non-empty and finite.
void validate_data(const DataMatrix& x);

// Matrix IO. Binary: "KSSC", u32 version, u64 rows, u64 cols, then rows*cols
// little-endian doubles in column-major order. CSV: one line per matrix row.
enum class MatrixFormat { binary, csv };

MatrixFormat format_from_path(const std::filesystem::path& path);

void save_matrix(const std::filesystem::path& path, const DataMatrix& x, MatrixFormat format);
DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);

inline void save_matrix(const std::filesystem::path& path, const DataMatrix& x) {
    save_matrix(path, x, format_from_path(path));
}
inline DataMatrix load_matrix(const std::filesystem::path& path) {
    return load_matrix(path, format_from_path(path));
}

void save_labels(const std::filesystem::path& path, const Labels& labels);
Labels load_labels(const std::filesystem::path& path);

}  // namespace kssc

#include "kssc/detail/random_orthonormal.hpp"
