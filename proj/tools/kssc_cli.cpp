// kssc: command-line front end for generation, clustering, evaluation, the
// FLOP model and experiment grids.
//
// Exit codes: 0 success, 2 invalid input, 3 solver non-convergence above the
// allowed fraction, 1 anything else.

#include "kssc/dataset.hpp"
#include "kssc/experiments.hpp"
#include "kssc/kssc_solver.hpp"
#include "kssc/metrics.hpp"
#include "kssc/neighbors.hpp"
#include "kssc/serialization.hpp"
#include "kssc/spectral.hpp"
#include "kssc/ssc_solver.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

using namespace kssc;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;

constexpr const char* kCostInputSchema = "kssc.cost-input/1";

struct GenerateArgs {
    std::string spec;
    std::string matrix;
    std::string labels;
    std::optional<std::uint64_t> seed;
};

struct ClusterArgs {
    std::string input;
    std::string labels;
    std::string method = "kssc_relaxed";
    std::optional<Index> k;
    std::optional<double> lambda;
    std::optional<std::string> variant;
    std::optional<int> p;
    std::optional<std::string> estimate_p;
    std::optional<std::string> config;
    std::optional<std::string> coefficients;
    std::optional<std::string> neighbors;
    std::optional<std::string> embedding;
    bool normalize = false;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    double max_nonconverged = 0.1;
    double magnitude_floor = 1e-12;
};

struct EvaluateArgs {
    std::string predicted;
    std::string truth;
};

struct FlopsArgs {
    std::optional<std::string> spec;
    std::optional<std::string> method;
    std::uint64_t n = 1000;
    std::uint64_t d = 500;
    std::uint64_t k = 10;
};

struct ExperimentArgs {
    std::string spec;
    std::string out;
    std::optional<std::string> csv;
    std::optional<std::string> plot_axis;
    std::optional<std::string> plot_out;
    std::optional<std::string> plot_method;
    std::optional<int> instances;
    std::optional<unsigned> threads;
};

int run_generate(const GenerateArgs& a) {
    SyntheticSpec spec = synthetic_spec_from_json(read_json_file(a.spec));
    if (a.seed) spec.seed = *a.seed;
    const LabeledData data = generate_union(spec);
    save_matrix(a.matrix, data.x);
    save_labels(a.labels, data.labels);
    std::cout << Json{{"schema", kSyntheticSchema},
                      {"rows", data.x.rows()},
                      {"cols", data.x.cols()},
                      {"matrix", a.matrix},
                      {"labels", a.labels}}
                     .dump(2)
              << '\n';
    return kExitOk;
}

int run_cluster(const ClusterArgs& a) {
    if (a.p.has_value() == a.estimate_p.has_value())
        throw ValidationError("give exactly one of --p and --estimate-p");
    SolverConfig cfg = a.config ? solver_config_from_json(read_json_file(*a.config)) : SolverConfig{};
    if (a.lambda) cfg.lambda = *a.lambda;
    cfg.threads = a.threads;
    cfg.validate();

    Method method = method_from_string(a.method);
    if (a.variant) {
        const Variant v = variant_from_string(*a.variant);
        if (is_kssc(method)) method = v == Variant::relaxed ? Method::kssc_relaxed : Method::kssc_exact;
        else method = v == Variant::relaxed ? Method::ssc_relaxed : Method::ssc_exact;
    }

    DataMatrix x = load_matrix(a.input);
    validate_data(x);
    if (a.normalize) x = normalize_columns(x);
    const Index n = x.cols();

    Json summary = {{"method", to_string(method)}, {"n", n}, {"d", x.rows()}};
    AffinityGraph graph;
    double nonconverged_fraction = 0;
    if (is_kssc(method)) {
        if (!a.k) throw ValidationError("kSSC methods need --k");
        const NeighborSets omega = knn_select(x, *a.k, cfg.threads);
        if (a.neighbors) save_neighbors(*a.neighbors, omega);
        const Variant variant = method == Method::kssc_relaxed ? Variant::relaxed : Variant::exact;
        const KsscSolution sol = solve_all(x, omega, cfg, variant);
        nonconverged_fraction = static_cast<double>(sol.report.not_converged) / static_cast<double>(n);
        const Json sidecar = coefficient_sidecar(sol, omega.k);
        summary["k"] = omega.k;
        summary["solver"] = sidecar.at("solver");
        for (const auto& w : omega.warnings) summary["warnings"].push_back(w);
        if (a.coefficients) save_coefficients(*a.coefficients, sol.z, sidecar);
        graph = build_affinity(sol.z);
    } else {
        check_memory_budget(method, n, x.rows(), cfg);
        const SscSolution sol = method == Method::ssc_relaxed ? ssc_relaxed(x, cfg) : ssc_exact(x, cfg);
        nonconverged_fraction = sol.report.converged ? 0.0 : 1.0;
        const Json sidecar = coefficient_sidecar(sol, a.magnitude_floor);
        summary["solver"] = sidecar.at("solver");
        if (a.coefficients) save_coefficients(*a.coefficients, sol.z, a.magnitude_floor, sidecar);
        graph = build_affinity(sol.z);
    }

    const int p = a.p ? *a.p : estimate_p(graph, gap_method_from_string(*a.estimate_p));
    const SegmentationResult seg = ncut_segment(graph, p, a.seed);
    save_labels(a.labels, seg.labels);
    if (a.embedding) save_matrix(*a.embedding, seg.embedding);
    summary["p"] = p;
    summary["labels"] = a.labels;
    for (const auto& w : seg.warnings) summary["warnings"].push_back(w);
    std::cout << summary.dump(2) << '\n';

    if (nonconverged_fraction > a.max_nonconverged) {
        std::cerr << "error: " << nonconverged_fraction * 100 << "% of the coefficient problems did not converge\n";
        return kExitNonConvergence;
    }
    return kExitOk;
}

int run_evaluate(const EvaluateArgs& a) {
    const Labels predicted = load_labels(a.predicted);
    const Labels truth = load_labels(a.truth);
    const double error = sce(predicted, truth);
    std::cout << Json{{"schema", kEvaluationSchema}, {"n", truth.size()}, {"sce", error}}.dump(2) << '\n';
    return kExitOk;
}

int run_flops(const FlopsArgs& a) {
    std::vector<CostModelInput> inputs;
    if (a.spec) {
        const Json doc = read_json_file(*a.spec);
        require_schema(doc, kCostInputSchema);
        require_keys(doc, {"schema", "method", "n", "d", "k"}, "cost input");
        try {
            CostModelInput in;
            in.method = method_from_string(doc.at("method").get<std::string>());
            in.n = doc.at("n").get<std::uint64_t>();
            in.d = doc.at("d").get<std::uint64_t>();
            in.k = doc.value("k", std::uint64_t{0});
            inputs.push_back(in);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidSpecError(std::string("cost input: ") + e.what());
        }
    } else if (a.method) {
        inputs.push_back({a.n, a.d, a.k, method_from_string(*a.method)});
    } else {
        for (Method m : {Method::ssc_exact, Method::ssc_relaxed, Method::kssc_exact, Method::kssc_relaxed})
            inputs.push_back({a.n, a.d, a.k, m});
    }
    Json rows = Json::array();
    for (const auto& in : inputs) rows.push_back(to_json(in, cost_model(in)));
    std::cout << (rows.size() == 1 ? rows[0] : rows).dump(2) << '\n';
    return kExitOk;
}

int run_experiment_cmd(const ExperimentArgs& a) {
    ExperimentSpec spec = experiment_spec_from_json(read_json_file(a.spec));
    if (a.instances) spec.instances_per_cell = *a.instances;
    if (a.threads) spec.threads = *a.threads;
    const ExperimentResult result = run_experiment(spec);
    emit_report(result, a.out, ReportFormat::json);
    if (a.csv) emit_report(result, *a.csv, ReportFormat::csv);
    if (a.plot_axis) {
        if (!a.plot_out) throw ValidationError("--plot-axis needs --plot-out");
        const Method m = a.plot_method ? method_from_string(*a.plot_method) : spec.methods.front();
        write_plot_csv(*a.plot_out, plot_data(result, *a.plot_axis, m));
    }
    Json summary = Json::array();
    for (const auto& agg : result.aggregates) {
        Json row = {{"cell", agg.cell},
                    {"method", to_string(agg.method)},
                    {"completed", agg.completed},
                    {"skipped", agg.skipped},
                    {"failed", agg.failed},
                    {"mean_sce", agg.mean_sce}};
        for (const auto& [name, value] : result.cells[agg.cell]) row[name] = value;
        summary.push_back(row);
    }
    std::cout << summary.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subspace clustering with k-nearest-neighbour filtered sparse self-expression"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Sample a union of subspaces from a synthetic spec");
    generate->add_option("--spec", gen.spec, "Synthetic spec JSON (schema kssc.synthetic/1)")->required();
    generate->add_option("--matrix", gen.matrix, "Output matrix (.bin or .csv)")->required();
    generate->add_option("--labels", gen.labels, "Output label CSV")->required();
    generate->add_option("--seed", gen.seed, "Override the spec seed");

    ClusterArgs cl;
    auto* cluster = app.add_subcommand("cluster", "Cluster the columns of a data matrix");
    cluster->add_option("--input", cl.input, "Data matrix, one sample per column (.bin or .csv)")->required();
    cluster->add_option("--labels", cl.labels, "Output label CSV")->required();
    cluster->add_option("--method", cl.method, "kssc_relaxed, kssc_exact, ssc_relaxed or ssc_exact");
    cluster->add_option("--variant", cl.variant, "relaxed or exact (overrides the method's variant)");
    cluster->add_option("--k", cl.k, "Neighbours per column");
    cluster->add_option("--lambda", cl.lambda, "Global l1 weight (default: per-column)");
    auto* p_opt = cluster->add_option("--p", cl.p, "Number of clusters");
    auto* est_opt = cluster->add_option("--estimate-p", cl.estimate_p, "eigen_gap, svd_gap or normalized_gap");
    p_opt->excludes(est_opt);
    cluster->add_option("--config", cl.config, "Solver config JSON (schema kssc.solver/1)");
    cluster->add_option("--coefficients", cl.coefficients, "Write Z as triplet CSV plus JSON sidecar");
    cluster->add_option("--neighbors", cl.neighbors, "Write the neighbour sets as CSV");
    cluster->add_option("--embedding", cl.embedding, "Write the spectral embedding");
    cluster->add_flag("--normalize", cl.normalize, "Scale columns to unit norm first");
    cluster->add_option("--seed", cl.seed, "k-means seed");
    cluster->add_option("--threads", cl.threads, "Worker threads (0: all cores)");
    cluster->add_option("--max-nonconverged", cl.max_nonconverged,
                        "Allowed fraction of non-converged problems before exit code 3");
    cluster->add_option("--magnitude-floor", cl.magnitude_floor, "Dense SSC export drops |z| at or below this");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Subspace clustering error of a labelling");
    evaluate->add_option("--predicted", ev.predicted, "Predicted label CSV")->required();
    evaluate->add_option("--truth", ev.truth, "Ground-truth label CSV")->required();

    FlopsArgs fl;
    auto* flops = app.add_subcommand("flops", "Per-iteration FLOPs and resident floats");
    flops->add_option("--spec", fl.spec, "Cost input JSON (schema kssc.cost-input/1)");
    flops->add_option("--method", fl.method, "One method; all four rows when omitted");
    flops->add_option("--n", fl.n, "Samples N");
    flops->add_option("--d", fl.d, "Ambient dimension D");
    flops->add_option("--k", fl.k, "Neighbours k");

    ExperimentArgs ex;
    auto* experiment = app.add_subcommand("experiment", "Run an experiment grid");
    experiment->add_option("--spec", ex.spec, "Experiment spec JSON (schema kssc.experiment/1)")->required();
    experiment->add_option("--out", ex.out, "Result JSON")->required();
    experiment->add_option("--csv", ex.csv, "Per-instance CSV");
    experiment->add_option("--plot-axis", ex.plot_axis, "Axis for the plot-data CSV");
    experiment->add_option("--plot-out", ex.plot_out, "Plot-data CSV");
    experiment->add_option("--plot-method", ex.plot_method, "Method for the plot-data CSV");
    experiment->add_option("--instances", ex.instances, "Override instances per cell");
    experiment->add_option("--threads", ex.threads, "Override worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*generate) return run_generate(gen);
        if (*cluster) return run_cluster(cl);
        if (*evaluate) return run_evaluate(ev);
        if (*flops) return run_flops(fl);
        if (*experiment) return run_experiment_cmd(ex);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const SolverFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}
