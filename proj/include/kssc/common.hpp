#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kssc {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// D x N matrix, one sample per column.
using DataMatrix = Eigen::MatrixXd;

/// Cluster ids, one per column. Generators and the segmenter emit ids in 1..p.
using Labels = std::vector<int>;

/// Column-major sparse N x N self-expression matrix; column i holds z_i.
using SparseCoefficients = Eigen::SparseMatrix<double, Eigen::ColMajor>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments, specs or shapes. The CLI maps this family to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

class InvalidSpecError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateInputError : public ValidationError {
public:
    DegenerateInputError(const std::string& what, Index column)
        : ValidationError(what), column_(column) {}

    Index column() const noexcept { return column_; }

private:
    Index column_;
};

class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MemoryBudgetError : public ValidationError {
public:
    MemoryBudgetError(const std::string& what, std::uint64_t required_bytes)
        : ValidationError(what), required_bytes_(required_bytes) {}

    std::uint64_t required_bytes() const noexcept { return required_bytes_; }

private:
    std::uint64_t required_bytes_;
};

/// Objective became non-finite.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Too many columns failed inside solve_all. The CLI maps this to exit code 3.
class SolverFailure : public Error {
public:
    using Error::Error;
};

}  // namespace kssc
