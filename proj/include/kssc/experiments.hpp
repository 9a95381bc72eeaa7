#pragma once

#include "kssc/dataset.hpp"
#include "kssc/metrics.hpp"
#include "kssc/solver_config.hpp"
#include "kssc/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kssc {

/// Named grid axis. Recognised names: num_subspaces, subspace_dim,
/// points_per_subspace, ambient_dim, coefficient_mean, coefficient_variance,
/// shared_basis, psnr.
struct GridAxis {
    std::string name;
    std::vector<double> values;
};

enum class Generator { orthonormal, library };

std::string to_string(Generator g);
Generator generator_from_string(const std::string& s);

struct ExperimentSpec {
    std::string name = "experiment";
    int num_subspaces = 5;
    int subspace_dim = 5;
    int points_per_subspace = 50;
    int ambient_dim = 50;
    CoefficientLaw coefficient_law = UniformLaw{};
    std::optional<int> shared_basis;
    std::optional<double> psnr;

    Generator generator = Generator::orthonormal;
    std::optional<std::filesystem::path> library_path;  // library generator; random orthonormal when absent
    int library_columns = 0;                            // 0: ambient_dim

    std::vector<GridAxis> axes;
    int instances_per_cell = 50;
    std::vector<Method> methods{Method::kssc_relaxed};
    std::string k_rule = "min(N_i/2, 1.5*D)";
    SolverConfig solver;
    SegmentationOptions segmentation;
    std::uint64_t seed = 0;
    bool normalize = true;
    unsigned threads = 1;

    void validate() const;
    std::size_t cell_count() const;
};

using CellCoordinates = std::map<std::string, double>;

/// Cartesian product of the axes in declaration order, last axis fastest.
std::vector<CellCoordinates> grid_cells(const ExperimentSpec& spec);

/// Generator parameters for one cell.
SyntheticSpec cell_synthetic_spec(const ExperimentSpec& spec, const CellCoordinates& cell, std::uint64_t seed);

std::uint64_t instance_seed(std::uint64_t base, std::size_t cell, int instance);

struct InstanceRecord {
    std::size_t cell = 0;
    int instance = 0;
    Method method = Method::kssc_relaxed;
    std::uint64_t seed = 0;
    Index n = 0;
    Index k = 0;
    double sce = 0;
    double knn_seconds = 0;
    double coefficient_seconds = 0;
    double segmentation_seconds = 0;
    double mean_iterations = 0;
    Index not_converged = 0;
    bool skipped = false;
    bool failed = false;
    std::string message;

    bool ok() const { return !skipped && !failed; }
};

struct CellAggregate {
    std::size_t cell = 0;
    Method method = Method::kssc_relaxed;
    int completed = 0;
    int skipped = 0;
    int failed = 0;
    double mean_sce = 0;
    double median_sce = 0;
    double min_sce = 0;
    double max_sce = 0;
    double mean_knn_seconds = 0;
    double mean_coefficient_seconds = 0;
    double mean_segmentation_seconds = 0;
    double mean_iterations = 0;
};

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<CellCoordinates> cells;
    std::vector<InstanceRecord> records;  // ordered by cell, instance, method
    std::vector<CellAggregate> aggregates;

    const CellAggregate& aggregate(std::size_t cell, Method method) const;
};

/// Runs every (cell, instance, method). Failures and memory-guard skips are
/// recorded per instance; the run itself only throws on an invalid spec.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// One instance of the pipeline: knn, coefficients, affinity, N-Cut, SCE.
InstanceRecord run_instance(const ExperimentSpec& spec, const LabeledData& data, Method method, Index k,
                            std::uint64_t seed);

std::vector<CellAggregate> aggregate_records(const std::vector<InstanceRecord>& records, std::size_t cells,
                                             const std::vector<Method>& methods);

/// Throws FormatError when the stored aggregates differ from those recomputed
/// from the per-instance records.
void check_consistency(const ExperimentResult& result);

enum class ReportFormat { json, csv };

void emit_report(const ExperimentResult& result, const std::filesystem::path& path, ReportFormat format);
ExperimentResult load_report(const std::filesystem::path& path);

struct PlotPoint {
    double x = 0;
    double mean_sce = 0;
    double median_sce = 0;
    double min_sce = 0;
    double max_sce = 0;
    double mean_coefficient_seconds = 0;
};

/// Per-cell aggregates of `method` against the coordinate on `axis`.
std::vector<PlotPoint> plot_data(const ExperimentResult& result, const std::string& axis, Method method);
void write_plot_csv(const std::filesystem::path& path, const std::vector<PlotPoint>& points);

}  // namespace kssc
