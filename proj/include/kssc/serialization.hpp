#pragma once

#include "kssc/dataset.hpp"
#include "kssc/experiments.hpp"
#include "kssc/kssc_solver.hpp"
#include "kssc/metrics.hpp"
#include "kssc/solver_config.hpp"
#include "kssc/ssc_solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <initializer_list>
#include <string>

namespace kssc {

using Json = nlohmann::json;

inline constexpr const char* kSyntheticSchema = "kssc.synthetic/1";
inline constexpr const char* kSolverSchema = "kssc.solver/1";
inline constexpr const char* kExperimentSchema = "kssc.experiment/1";
inline constexpr const char* kResultSchema = "kssc.experiment-result/1";
inline constexpr const char* kCoefficientsSchema = "kssc.coefficients/1";
inline constexpr const char* kCostSchema = "kssc.cost/1";
inline constexpr const char* kEvaluationSchema = "kssc.evaluation/1";

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

/// Throws InvalidSpecError unless doc["schema"] equals `expected`.
void require_schema(const Json& doc, const std::string& expected);

/// Throws InvalidSpecError on keys outside `allowed`.
void require_keys(const Json& doc, std::initializer_list<const char*> allowed, const std::string& context);

Json to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const Json& doc);

Json to_json(const SegmentationOptions& opts);
SegmentationOptions segmentation_options_from_json(const Json& doc);

Json to_json(const CoefficientLaw& law);
CoefficientLaw coefficient_law_from_json(const Json& doc);

Json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const Json& doc);

Json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const Json& doc);

Json to_json(const ExperimentResult& result);
ExperimentResult experiment_result_from_json(const Json& doc);

Json to_json(const CostModelInput& input, const CostEstimate& estimate);

/// Metadata written next to a triplet export.
Json coefficient_sidecar(const KsscSolution& solution, Index k);
Json coefficient_sidecar(const SscSolution& solution, double magnitude_floor);

/// Triplet CSV with header "row,col,value" and 1-based indices, plus the
/// sidecar at `<path>.json`.
void save_coefficients(const std::filesystem::path& path, const SparseCoefficients& z, Json sidecar);
void save_coefficients(const std::filesystem::path& path, const Eigen::MatrixXd& z, double magnitude_floor,
                       Json sidecar);
SparseCoefficients load_coefficients(const std::filesystem::path& path);

}  // namespace kssc
