#include "kssc/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace kssc {

namespace {

template <typename F>
auto guarded(const std::string& context, F&& body) {
    try {
        return body();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpecError(context + ": " + e.what());
    }
}

template <typename T>
void read_optional(const Json& doc, const char* key, T& out) {
    if (doc.contains(key) && !doc.at(key).is_null()) out = doc.at(key).get<T>();
}

template <typename T>
void read_optional(const Json& doc, const char* key, std::optional<T>& out) {
    if (doc.contains(key) && !doc.at(key).is_null()) out = doc.at(key).get<T>();
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

Json cell_json(const CellCoordinates& cell) {
    Json j = Json::object();
    for (const auto& [name, value] : cell) j[name] = value;
    return j;
}

Json record_json(const InstanceRecord& r) {
    return {{"cell", r.cell},
            {"instance", r.instance},
            {"method", to_string(r.method)},
            {"seed", r.seed},
            {"n", r.n},
            {"k", r.k},
            {"sce", r.sce},
            {"knn_seconds", r.knn_seconds},
            {"coefficient_seconds", r.coefficient_seconds},
            {"segmentation_seconds", r.segmentation_seconds},
            {"mean_iterations", r.mean_iterations},
            {"not_converged", r.not_converged},
            {"skipped", r.skipped},
            {"failed", r.failed},
            {"message", r.message}};
}

InstanceRecord record_from_json(const Json& j) {
    InstanceRecord r;
    r.cell = j.at("cell").get<std::size_t>();
    r.instance = j.at("instance").get<int>();
    r.method = method_from_string(j.at("method").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.n = j.at("n").get<Index>();
    r.k = j.at("k").get<Index>();
    r.sce = j.at("sce").get<double>();
    r.knn_seconds = j.at("knn_seconds").get<double>();
    r.coefficient_seconds = j.at("coefficient_seconds").get<double>();
    r.segmentation_seconds = j.at("segmentation_seconds").get<double>();
    r.mean_iterations = j.at("mean_iterations").get<double>();
    r.not_converged = j.at("not_converged").get<Index>();
    r.skipped = j.at("skipped").get<bool>();
    r.failed = j.at("failed").get<bool>();
    r.message = j.at("message").get<std::string>();
    return r;
}

Json aggregate_json(const CellAggregate& a) {
    return {{"cell", a.cell},
            {"method", to_string(a.method)},
            {"completed", a.completed},
            {"skipped", a.skipped},
            {"failed", a.failed},
            {"mean_sce", a.mean_sce},
            {"median_sce", a.median_sce},
            {"min_sce", a.min_sce},
            {"max_sce", a.max_sce},
            {"mean_knn_seconds", a.mean_knn_seconds},
            {"mean_coefficient_seconds", a.mean_coefficient_seconds},
            {"mean_segmentation_seconds", a.mean_segmentation_seconds},
            {"mean_iterations", a.mean_iterations}};
}

CellAggregate aggregate_from_json(const Json& j) {
    CellAggregate a;
    a.cell = j.at("cell").get<std::size_t>();
    a.method = method_from_string(j.at("method").get<std::string>());
    a.completed = j.at("completed").get<int>();
    a.skipped = j.at("skipped").get<int>();
    a.failed = j.at("failed").get<int>();
    a.mean_sce = j.at("mean_sce").get<double>();
    a.median_sce = j.at("median_sce").get<double>();
    a.min_sce = j.at("min_sce").get<double>();
    a.max_sce = j.at("max_sce").get<double>();
    a.mean_knn_seconds = j.at("mean_knn_seconds").get<double>();
    a.mean_coefficient_seconds = j.at("mean_coefficient_seconds").get<double>();
    a.mean_segmentation_seconds = j.at("mean_segmentation_seconds").get<double>();
    a.mean_iterations = j.at("mean_iterations").get<double>();
    return a;
}

Json solver_summary(const SolverReport& rep) {
    int max_iters = 0;
    double total_iters = 0;
    for (const auto& c : rep.columns) {
        max_iters = std::max(max_iters, c.iterations);
        total_iters += c.iterations;
    }
    return {{"variant", to_string(rep.variant)},
            {"objective", rep.objective},
            {"seconds", rep.seconds},
            {"columns", rep.columns.size()},
            {"failed", rep.failed},
            {"not_converged", rep.not_converged},
            {"max_iterations", max_iters},
            {"mean_iterations", rep.columns.empty() ? 0.0 : total_iters / static_cast<double>(rep.columns.size())},
            {"warnings", rep.warnings}};
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

void require_schema(const Json& doc, const std::string& expected) {
    if (!doc.is_object()) throw InvalidSpecError("expected a JSON object with schema '" + expected + "'");
    if (!doc.contains("schema")) throw InvalidSpecError("missing schema field (expected '" + expected + "')");
    const Json& s = doc.at("schema");
    if (!s.is_string() || s.get<std::string>() != expected)
        throw InvalidSpecError("schema " + s.dump() + " is not supported (expected '" + expected + "')");
}

void require_keys(const Json& doc, std::initializer_list<const char*> allowed, const std::string& context) {
    if (!doc.is_object()) throw InvalidSpecError(context + ": expected a JSON object");
    for (const auto& item : doc.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return item.key() == a; });
        if (!known) throw InvalidSpecError(context + ": unknown key '" + item.key() + "'");
    }
}

Json to_json(const SolverConfig& c) {
    return {{"lambda", optional_json(c.lambda)},
            {"lambda_scale", c.lambda_scale},
            {"rho0", optional_json(c.rho0)},
            {"gamma", c.gamma},
            {"eps", c.eps},
            {"max_iters", c.max_iters},
            {"mu0", c.mu0},
            {"mu_max", c.mu_max},
            {"gamma0", c.gamma0},
            {"eps1", c.eps1},
            {"eps2", c.eps2},
            {"admm_max_iters", c.admm_max_iters},
            {"record_trace", c.record_trace},
            {"threads", c.threads},
            {"memory_budget_bytes", c.memory_budget_bytes}};
}

SolverConfig solver_config_from_json(const Json& doc) {
    return guarded("solver config", [&] {
        require_keys(doc,
                     {"schema", "lambda", "lambda_scale", "rho0", "gamma", "eps", "max_iters", "mu0", "mu_max",
                      "gamma0", "eps1", "eps2", "admm_max_iters", "record_trace", "threads",
                      "memory_budget_bytes"},
                     "solver config");
        if (doc.contains("schema")) require_schema(doc, kSolverSchema);
        SolverConfig c;
        read_optional(doc, "lambda", c.lambda);
        read_optional(doc, "lambda_scale", c.lambda_scale);
        read_optional(doc, "rho0", c.rho0);
        read_optional(doc, "gamma", c.gamma);
        read_optional(doc, "eps", c.eps);
        read_optional(doc, "max_iters", c.max_iters);
        read_optional(doc, "mu0", c.mu0);
        read_optional(doc, "mu_max", c.mu_max);
        read_optional(doc, "gamma0", c.gamma0);
        read_optional(doc, "eps1", c.eps1);
        read_optional(doc, "eps2", c.eps2);
        read_optional(doc, "admm_max_iters", c.admm_max_iters);
        read_optional(doc, "record_trace", c.record_trace);
        read_optional(doc, "threads", c.threads);
        read_optional(doc, "memory_budget_bytes", c.memory_budget_bytes);
        c.validate();
        return c;
    });
}

Json to_json(const SegmentationOptions& o) {
    return {{"kmeans_restarts", o.kmeans_restarts},
            {"kmeans_max_iters", o.kmeans_max_iters},
            {"dense_limit", o.dense_limit},
            {"eig_tol", o.eig_tol}};
}

SegmentationOptions segmentation_options_from_json(const Json& doc) {
    return guarded("segmentation options", [&] {
        require_keys(doc, {"kmeans_restarts", "kmeans_max_iters", "dense_limit", "eig_tol"}, "segmentation");
        SegmentationOptions o;
        read_optional(doc, "kmeans_restarts", o.kmeans_restarts);
        read_optional(doc, "kmeans_max_iters", o.kmeans_max_iters);
        read_optional(doc, "dense_limit", o.dense_limit);
        read_optional(doc, "eig_tol", o.eig_tol);
        if (o.kmeans_restarts < 1 || o.kmeans_max_iters < 1 || o.dense_limit < 0 || !(o.eig_tol > 0))
            throw InvalidSpecError("segmentation options out of range");
        return o;
    });
}

Json to_json(const CoefficientLaw& law) {
    if (const auto* u = std::get_if<UniformLaw>(&law)) return {{"law", "uniform"}, {"low", u->low}, {"high", u->high}};
    const auto& g = std::get<GaussianLaw>(law);
    return {{"law", "gaussian"}, {"mean", g.mean}, {"variance", g.variance}};
}

CoefficientLaw coefficient_law_from_json(const Json& doc) {
    return guarded("coefficient law", [&]() -> CoefficientLaw {
        const std::string name = doc.at("law").get<std::string>();
        if (name == "uniform") {
            require_keys(doc, {"law", "low", "high"}, "uniform law");
            UniformLaw u;
            read_optional(doc, "low", u.low);
            read_optional(doc, "high", u.high);
            return u;
        }
        if (name == "gaussian") {
            require_keys(doc, {"law", "mean", "variance"}, "gaussian law");
            GaussianLaw g;
            read_optional(doc, "mean", g.mean);
            read_optional(doc, "variance", g.variance);
            return g;
        }
        throw InvalidSpecError("unknown coefficient law '" + name + "'");
    });
}

Json to_json(const SyntheticSpec& s) {
    return {{"schema", kSyntheticSchema},
            {"num_subspaces", s.num_subspaces},
            {"subspace_dims", s.subspace_dims},
            {"points_per_subspace", s.points_per_subspace},
            {"ambient_dim", s.ambient_dim},
            {"coefficients", to_json(s.coefficient_law)},
            {"shared_basis_count", optional_json(s.shared_basis_count)},
            {"noise_psnr", optional_json(s.noise_psnr)},
            {"seed", s.seed}};
}

SyntheticSpec synthetic_spec_from_json(const Json& doc) {
    return guarded("synthetic spec", [&] {
        require_schema(doc, kSyntheticSchema);
        require_keys(doc,
                     {"schema", "num_subspaces", "subspace_dims", "points_per_subspace", "ambient_dim",
                      "coefficients", "shared_basis_count", "noise_psnr", "seed"},
                     "synthetic spec");
        SyntheticSpec s;
        s.num_subspaces = doc.at("num_subspaces").get<int>();
        s.ambient_dim = doc.at("ambient_dim").get<int>();
        // Scalars broadcast to every subspace.
        const auto per_subspace = [&](const char* key) {
            const Json& v = doc.at(key);
            if (v.is_array()) return v.get<std::vector<int>>();
            return std::vector<int>(static_cast<std::size_t>(std::max(s.num_subspaces, 0)), v.get<int>());
        };
        s.subspace_dims = per_subspace("subspace_dims");
        s.points_per_subspace = per_subspace("points_per_subspace");
        if (doc.contains("coefficients")) s.coefficient_law = coefficient_law_from_json(doc.at("coefficients"));
        read_optional(doc, "shared_basis_count", s.shared_basis_count);
        read_optional(doc, "noise_psnr", s.noise_psnr);
        read_optional(doc, "seed", s.seed);
        s.validate();
        return s;
    });
}

Json to_json(const ExperimentSpec& s) {
    Json axes = Json::array();
    for (const auto& a : s.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
    Json methods = Json::array();
    for (Method m : s.methods) methods.push_back(to_string(m));
    return {{"schema", kExperimentSchema},
            {"name", s.name},
            {"num_subspaces", s.num_subspaces},
            {"subspace_dim", s.subspace_dim},
            {"points_per_subspace", s.points_per_subspace},
            {"ambient_dim", s.ambient_dim},
            {"coefficients", to_json(s.coefficient_law)},
            {"shared_basis", optional_json(s.shared_basis)},
            {"psnr", optional_json(s.psnr)},
            {"generator", to_string(s.generator)},
            {"library_path", s.library_path ? Json(s.library_path->string()) : Json(nullptr)},
            {"library_columns", s.library_columns},
            {"axes", axes},
            {"instances_per_cell", s.instances_per_cell},
            {"methods", methods},
            {"k_rule", s.k_rule},
            {"solver", to_json(s.solver)},
            {"segmentation", to_json(s.segmentation)},
            {"seed", s.seed},
            {"normalize", s.normalize},
            {"threads", s.threads}};
}

ExperimentSpec experiment_spec_from_json(const Json& doc) {
    return guarded("experiment spec", [&] {
        require_schema(doc, kExperimentSchema);
        require_keys(doc,
                     {"schema", "name", "num_subspaces", "subspace_dim", "points_per_subspace", "ambient_dim",
                      "coefficients", "shared_basis", "psnr", "generator", "library_path", "library_columns",
                      "axes", "instances_per_cell", "methods", "k_rule", "solver", "segmentation", "seed",
                      "normalize", "threads"},
                     "experiment spec");
        ExperimentSpec s;
        read_optional(doc, "name", s.name);
        read_optional(doc, "num_subspaces", s.num_subspaces);
        read_optional(doc, "subspace_dim", s.subspace_dim);
        read_optional(doc, "points_per_subspace", s.points_per_subspace);
        read_optional(doc, "ambient_dim", s.ambient_dim);
        if (doc.contains("coefficients")) s.coefficient_law = coefficient_law_from_json(doc.at("coefficients"));
        read_optional(doc, "shared_basis", s.shared_basis);
        read_optional(doc, "psnr", s.psnr);
        if (doc.contains("generator")) s.generator = generator_from_string(doc.at("generator").get<std::string>());
        if (doc.contains("library_path") && !doc.at("library_path").is_null())
            s.library_path = doc.at("library_path").get<std::string>();
        read_optional(doc, "library_columns", s.library_columns);
        if (doc.contains("axes")) {
            for (const auto& a : doc.at("axes")) {
                require_keys(a, {"name", "values"}, "axis");
                s.axes.push_back({a.at("name").get<std::string>(), a.at("values").get<std::vector<double>>()});
            }
        }
        read_optional(doc, "instances_per_cell", s.instances_per_cell);
        if (doc.contains("methods")) {
            s.methods.clear();
            for (const auto& m : doc.at("methods")) s.methods.push_back(method_from_string(m.get<std::string>()));
        }
        read_optional(doc, "k_rule", s.k_rule);
        if (doc.contains("solver")) s.solver = solver_config_from_json(doc.at("solver"));
        if (doc.contains("segmentation")) s.segmentation = segmentation_options_from_json(doc.at("segmentation"));
        read_optional(doc, "seed", s.seed);
        read_optional(doc, "normalize", s.normalize);
        read_optional(doc, "threads", s.threads);
        s.validate();
        return s;
    });
}

Json to_json(const ExperimentResult& r) {
    Json cells = Json::array();
    for (const auto& c : r.cells) cells.push_back(cell_json(c));
    Json records = Json::array();
    for (const auto& rec : r.records) records.push_back(record_json(rec));
    Json aggregates = Json::array();
    for (const auto& a : r.aggregates) aggregates.push_back(aggregate_json(a));
    return {{"schema", kResultSchema},
            {"spec", to_json(r.spec)},
            {"cells", cells},
            {"records", records},
            {"aggregates", aggregates}};
}

ExperimentResult experiment_result_from_json(const Json& doc) {
    return guarded("experiment result", [&] {
        require_schema(doc, kResultSchema);
        ExperimentResult r;
        r.spec = experiment_spec_from_json(doc.at("spec"));
        for (const auto& c : doc.at("cells")) r.cells.push_back(c.get<CellCoordinates>());
        for (const auto& rec : doc.at("records")) r.records.push_back(record_from_json(rec));
        for (const auto& a : doc.at("aggregates")) r.aggregates.push_back(aggregate_from_json(a));
        return r;
    });
}

Json to_json(const CostModelInput& input, const CostEstimate& estimate) {
    Json j = {{"schema", kCostSchema},
              {"method", to_string(input.method)},
              {"n", input.n},
              {"d", input.d},
              {"flops_per_iteration", estimate.flops_per_iteration},
              {"floats", estimate.floats}};
    if (is_kssc(input.method)) j["k"] = input.k;
    return j;
}

Json coefficient_sidecar(const KsscSolution& solution, Index k) {
    const auto& rep = solution.report;
    std::vector<double> lambdas;
    lambdas.reserve(rep.columns.size());
    for (const auto& c : rep.columns) lambdas.push_back(c.lambda);
    return {{"schema", kCoefficientsSchema},
            {"method", rep.variant == Variant::relaxed ? "kssc_relaxed" : "kssc_exact"},
            {"k", k},
            {"lambda", lambdas},
            {"magnitude_floor", 0.0},
            {"solver", solver_summary(rep)}};
}

Json coefficient_sidecar(const SscSolution& solution, double magnitude_floor) {
    const auto& rep = solution.report;
    return {{"schema", kCoefficientsSchema},
            {"method", rep.variant == Variant::relaxed ? "ssc_relaxed" : "ssc_exact"},
            {"lambda", rep.lambdas},
            {"magnitude_floor", magnitude_floor},
            {"solver",
             {{"variant", to_string(rep.variant)},
              {"objective", rep.objective},
              {"iterations", rep.iterations},
              {"converged", rep.converged},
              {"residual", rep.residual},
              {"seconds", rep.seconds},
              {"warnings", rep.warnings}}}};
}

void save_coefficients(const std::filesystem::path& path, const SparseCoefficients& z, Json sidecar) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "row,col,value\n" << std::setprecision(17);
    for (Index c = 0; c < z.outerSize(); ++c)
        for (SparseCoefficients::InnerIterator it(z, c); it; ++it)
            out << it.row() + 1 << ',' << c + 1 << ',' << it.value() << '\n';
    if (!out) throw Error("write failed for " + path.string());
    sidecar["rows"] = z.rows();
    sidecar["cols"] = z.cols();
    sidecar["nonzeros"] = z.nonZeros();
    write_json_file(path.string() + ".json", sidecar);
}

void save_coefficients(const std::filesystem::path& path, const Eigen::MatrixXd& z, double magnitude_floor,
                       Json sidecar) {
    if (!(magnitude_floor >= 0)) throw ValidationError("magnitude floor must be non-negative");
    const SparseCoefficients sparse = z.sparseView(1.0, magnitude_floor);
    sidecar["magnitude_floor"] = magnitude_floor;
    save_coefficients(path, sparse, std::move(sidecar));
}

SparseCoefficients load_coefficients(const std::filesystem::path& path) {
    const Json sidecar = read_json_file(path.string() + ".json");
    require_schema(sidecar, kCoefficientsSchema);
    const Index rows = guarded("coefficient sidecar", [&] { return sidecar.at("rows").get<Index>(); });
    const Index cols = guarded("coefficient sidecar", [&] { return sidecar.at("cols").get<Index>(); });
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("row,col,value", 0) != 0) throw FormatError(path.string() + ": missing triplet header");
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        Index r = 0, c = 0;
        double v = 0;
        std::string rest;
        if (!(fields >> r >> c >> v) || (fields >> rest) || r < 1 || r > rows || c < 1 || c > cols)
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad triplet");
        triplets.emplace_back(r - 1, c - 1, v);
    }
    SparseCoefficients z(rows, cols);
    z.setFromTriplets(triplets.begin(), triplets.end());
    return z;
}

}  // namespace kssc
