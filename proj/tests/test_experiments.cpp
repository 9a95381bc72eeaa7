#include "doctest.h"

#include "kssc/experiments.hpp"
#include "kssc/expression.hpp"
#include "kssc/serialization.hpp"

#include <filesystem>
#include <fstream>
#include <set>

using namespace kssc;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "kssc_test_experiments";
    std::filesystem::create_directories(dir);
    return dir / name;
}

ExperimentSpec small_spec() {
    ExperimentSpec s;
    s.num_subspaces = 3;
    s.subspace_dim = 3;
    s.points_per_subspace = 15;
    s.ambient_dim = 12;
    s.instances_per_cell = 2;
    s.k_rule = "min(N_i/2, 1.5*D)";
    s.seed = 5;
    return s;
}

std::size_t count_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
}

}  // namespace

TEST_CASE("expression evaluation") {
    const Bindings b{{"N_i", 50}, {"D", 50}, {"d", 5}};
    CHECK(evaluate_expression("min(N_i/2, 1.5*D)", b) == 25);
    CHECK(evaluate_expression("min(N_i/2, 1.5·D)", b) == 25);
    CHECK(evaluate_expression("-(2 + 3) * 4 / 8", b) == -2.5);
    CHECK(evaluate_expression("max(1, 2, 3) + floor(2.7) + ceil(0.2)", b) == 6);
    CHECK(evaluate_expression("2 * d - 1", b) == 9);
    CHECK_THROWS_AS(evaluate_expression("N + 1", b), ValidationError);
    CHECK_THROWS_AS(evaluate_expression("min(1", b), ValidationError);
    CHECK_THROWS_AS(evaluate_expression("1 / 0", b), ValidationError);
    CHECK_THROWS_AS(evaluate_expression("3 3", b), ValidationError);
    CHECK_THROWS_AS(evaluate_expression("sqrt(4)", b), ValidationError);
}

TEST_CASE("k rule floors and clamps") {
    const Bindings b{{"N_i", 15}, {"D", 200}};
    CHECK(evaluate_k_rule("N_i/2", b, 30) == 7);
    CHECK(evaluate_k_rule("1000", b, 30) == 29);
    CHECK(evaluate_k_rule("0", b, 30) == 1);
}

TEST_CASE("grid cells are the Cartesian product, last axis fastest") {
    ExperimentSpec s = small_spec();
    s.axes = {{"subspace_dim", {2, 3}}, {"points_per_subspace", {10, 20, 30}}};
    const auto cells = grid_cells(s);
    REQUIRE(cells.size() == 6);
    CHECK(s.cell_count() == 6);
    CHECK(cells[0].at("subspace_dim") == 2);
    CHECK(cells[1].at("points_per_subspace") == 20);
    CHECK(cells[3].at("subspace_dim") == 3);
    const SyntheticSpec syn = cell_synthetic_spec(s, cells[5], 1);
    CHECK(syn.subspace_dims == std::vector<int>{3, 3, 3});
    CHECK(syn.points_per_subspace == std::vector<int>{30, 30, 30});
}

TEST_CASE("instance seeds are stable and distinct") {
    std::set<std::uint64_t> seen;
    for (std::size_t c = 0; c < 10; ++c)
        for (int i = 0; i < 10; ++i) seen.insert(instance_seed(7, c, i));
    CHECK(seen.size() == 100);
    CHECK(instance_seed(7, 3, 4) == instance_seed(7, 3, 4));
    CHECK(instance_seed(7, 3, 4) != instance_seed(8, 3, 4));
}

TEST_CASE("spec validation") {
    ExperimentSpec s = small_spec();
    s.instances_per_cell = 0;
    CHECK_THROWS_AS(s.validate(), InvalidSpecError);
    s = small_spec();
    s.axes = {{"colour", {1}}};
    CHECK_THROWS_AS(s.validate(), InvalidSpecError);
    s = small_spec();
    s.axes = {{"subspace_dim", {}}};
    CHECK_THROWS_AS(s.validate(), InvalidSpecError);
    s = small_spec();
    s.axes = {{"subspace_dim", {2.5}}};
    CHECK_THROWS_AS(s.validate(), InvalidSpecError);
    s = small_spec();
    s.axes = {{"coefficient_mean", {0, 1}}};
    CHECK_THROWS_AS(s.validate(), InvalidSpecError);
    s.coefficient_law = GaussianLaw{};
    CHECK_NOTHROW(s.validate());
    s = small_spec();
    s.methods.clear();
    CHECK_THROWS_AS(s.validate(), InvalidSpecError);
    s = small_spec();
    s.k_rule = "min(N_i/2";
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = small_spec();
    s.axes = {{"subspace_dim", {20}}};  // exceeds the ambient dimension
    CHECK_THROWS_AS(s.validate(), InvalidSpecError);
}

TEST_CASE("single cluster, single instance gives zero error") {
    ExperimentSpec s;
    s.num_subspaces = 1;
    s.subspace_dim = 2;
    s.points_per_subspace = 10;
    s.ambient_dim = 5;
    s.instances_per_cell = 1;
    const ExperimentResult r = run_experiment(s);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].ok());
    CHECK(r.records[0].sce == 0.0);
    CHECK(r.aggregates.at(0).mean_sce == 0.0);
}

TEST_CASE("runs are reproducible and aggregates consistent") {
    ExperimentSpec s = small_spec();
    s.axes = {{"subspace_dim", {2, 3}}};
    s.methods = {Method::kssc_relaxed, Method::ssc_relaxed};
    const ExperimentResult a = run_experiment(s);
    const ExperimentResult b = run_experiment(s);
    REQUIRE(a.records.size() == 2 * 2 * 2);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].ok());
        CHECK(a.records[i].sce == b.records[i].sce);
        CHECK(a.records[i].seed == b.records[i].seed);
    }
    CHECK_NOTHROW(check_consistency(a));
    CHECK(a.aggregate(1, Method::ssc_relaxed).completed == 2);

    ExperimentResult tampered = a;
    tampered.aggregates[0].mean_sce += 1;
    CHECK_THROWS_AS(check_consistency(tampered), FormatError);
    CHECK_THROWS_AS(emit_report(tampered, scratch("bad.json"), ReportFormat::json), FormatError);
}

TEST_CASE("cells seed independently of the grid around them") {
    ExperimentSpec one = small_spec();
    one.axes = {{"points_per_subspace", {15}}};
    ExperimentSpec two = small_spec();
    two.axes = {{"points_per_subspace", {15, 20}}};
    const ExperimentResult a = run_experiment(one);
    const ExperimentResult b = run_experiment(two);
    for (int i = 0; i < one.instances_per_cell; ++i) CHECK(a.records[i].sce == b.records[i].sce);
}

TEST_CASE("report round trip and CSV shape") {
    ExperimentSpec s = small_spec();
    s.axes = {{"points_per_subspace", {12, 16}}};
    s.instances_per_cell = 3;
    const ExperimentResult r = run_experiment(s);
    emit_report(r, scratch("r.json"), ReportFormat::json);
    emit_report(r, scratch("r.csv"), ReportFormat::csv);
    const ExperimentResult back = load_report(scratch("r.json"));
    REQUIRE(back.aggregates.size() == r.aggregates.size());
    for (std::size_t i = 0; i < r.aggregates.size(); ++i) {
        CHECK(back.aggregates[i].mean_sce == r.aggregates[i].mean_sce);
        CHECK(back.aggregates[i].median_sce == r.aggregates[i].median_sce);
        CHECK(back.aggregates[i].mean_coefficient_seconds == r.aggregates[i].mean_coefficient_seconds);
    }
    CHECK(back.records.size() == r.records.size());
    CHECK(back.spec.k_rule == s.k_rule);
    CHECK(count_lines(scratch("r.csv")) == 1 + 2 * 3);

    const Json doc = read_json_file(scratch("r.json"));
    CHECK(doc.at("schema") == kResultSchema);
    CHECK(doc.at("spec").at("schema") == kExperimentSchema);
}

TEST_CASE("plot data for a shared-basis sweep") {
    ExperimentSpec s;
    s.num_subspaces = 2;
    s.subspace_dim = 10;
    s.points_per_subspace = 20;
    s.ambient_dim = 30;
    s.instances_per_cell = 1;
    s.k_rule = "N_i/2";
    s.axes = {{"shared_basis", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}};
    const ExperimentResult r = run_experiment(s);
    const auto points = plot_data(r, "shared_basis", Method::kssc_relaxed);
    REQUIRE(points.size() == 11);
    for (std::size_t i = 0; i < points.size(); ++i) CHECK(points[i].x == static_cast<double>(i));
    CHECK(points.front().mean_sce == 0.0);
    write_plot_csv(scratch("plot.csv"), points);
    CHECK(count_lines(scratch("plot.csv")) == 12);
    CHECK_THROWS_AS(plot_data(r, "psnr", Method::kssc_relaxed), ValidationError);
}

TEST_CASE("memory guard skips SSC cells and the run continues") {
    ExperimentSpec s = small_spec();
    s.methods = {Method::kssc_relaxed, Method::ssc_relaxed};
    s.solver.memory_budget_bytes = 1024;
    const ExperimentResult r = run_experiment(s);
    const CellAggregate& ssc = r.aggregate(0, Method::ssc_relaxed);
    const CellAggregate& k = r.aggregate(0, Method::kssc_relaxed);
    CHECK(ssc.skipped == s.instances_per_cell);
    CHECK(ssc.completed == 0);
    CHECK(k.completed == s.instances_per_cell);
    CHECK_NOTHROW(check_consistency(r));
}

TEST_CASE("library generator, noise and gaussian axes") {
    ExperimentSpec s = small_spec();
    s.generator = Generator::library;
    s.library_columns = 12;
    s.coefficient_law = GaussianLaw{};
    s.axes = {{"psnr", {40}}, {"coefficient_mean", {0, 1}}};
    s.instances_per_cell = 1;
    const ExperimentResult r = run_experiment(s);
    CHECK(r.records.size() == 2);
    for (const auto& rec : r.records) CHECK(rec.ok());
}

TEST_CASE("experiment spec JSON") {
    ExperimentSpec s = small_spec();
    s.axes = {{"psnr", {20, 30}}};
    s.methods = {Method::kssc_exact};
    s.solver.lambda = 0.05;
    const ExperimentSpec back = experiment_spec_from_json(to_json(s));
    CHECK(back.axes.size() == 1);
    CHECK(back.axes[0].values == std::vector<double>{20, 30});
    CHECK(back.methods == std::vector<Method>{Method::kssc_exact});
    CHECK(back.solver.lambda == 0.05);
    CHECK(to_json(back) == to_json(s));

    Json bad = to_json(s);
    bad["schema"] = "kssc.experiment/0";
    CHECK_THROWS_AS(experiment_spec_from_json(bad), InvalidSpecError);
    bad = to_json(s);
    bad["colour"] = "red";
    CHECK_THROWS_AS(experiment_spec_from_json(bad), InvalidSpecError);
    bad = to_json(s);
    bad["instances_per_cell"] = "many";
    CHECK_THROWS_AS(experiment_spec_from_json(bad), InvalidSpecError);
    bad = to_json(s);
    bad.erase("schema");
    CHECK_THROWS_AS(experiment_spec_from_json(bad), InvalidSpecError);
}

TEST_CASE("synthetic spec and solver config JSON") {
    const Json doc = Json::parse(R"({"schema": "kssc.synthetic/1", "num_subspaces": 2, "subspace_dims": 3,
        "points_per_subspace": [4, 5], "ambient_dim": 10,
        "coefficients": {"law": "gaussian", "mean": 1, "variance": 2}, "noise_psnr": 25, "seed": 3})");
    const SyntheticSpec s = synthetic_spec_from_json(doc);
    CHECK(s.subspace_dims == std::vector<int>{3, 3});
    CHECK(s.points_per_subspace == std::vector<int>{4, 5});
    CHECK(std::get<GaussianLaw>(s.coefficient_law).variance == 2);
    CHECK(s.noise_psnr == 25.0);
    CHECK(synthetic_spec_from_json(to_json(s)).points_per_subspace == s.points_per_subspace);

    const SolverConfig c = solver_config_from_json(Json::parse(R"({"schema": "kssc.solver/1", "lambda": 0.2, "max_iters": 50})"));
    CHECK(c.lambda == 0.2);
    CHECK(c.max_iters == 50);
    CHECK_THROWS_AS(solver_config_from_json(Json::parse(R"({"gamma": 0.5})")), ValidationError);
    CHECK_THROWS_AS(solver_config_from_json(Json::parse(R"({"lamda": 0.5})")), InvalidSpecError);
}

TEST_CASE("coefficient triplets round trip") {
    SparseCoefficients z(4, 4);
    z.insert(1, 0) = 0.5;
    z.insert(3, 2) = -1.25;
    save_coefficients(scratch("z.csv"), z, Json{{"schema", kCoefficientsSchema}, {"k", 2}});
    const SparseCoefficients back = load_coefficients(scratch("z.csv"));
    CHECK(Eigen::MatrixXd(back) == Eigen::MatrixXd(z));
    const Json side = read_json_file(scratch("z.csv.json"));
    CHECK(side.at("nonzeros") == 2);

    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(3, 3);
    dense(0, 1) = 1e-13;
    dense(2, 0) = 0.75;
    save_coefficients(scratch("d.csv"), dense, 1e-12, Json{{"schema", kCoefficientsSchema}});
    CHECK(load_coefficients(scratch("d.csv")).nonZeros() == 1);
    CHECK(read_json_file(scratch("d.csv.json")).at("magnitude_floor") == 1e-12);
}
