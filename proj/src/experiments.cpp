#include "kssc/experiments.hpp"

#include "kssc/expression.hpp"
#include "kssc/kssc_solver.hpp"
#include "kssc/neighbors.hpp"
#include "kssc/parallel.hpp"
#include "kssc/rng.hpp"
#include "kssc/serialization.hpp"
#include "kssc/ssc_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>

namespace kssc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

const std::set<std::string>& integer_axes() {
    static const std::set<std::string> names{"num_subspaces", "subspace_dim", "points_per_subspace",
                                             "ambient_dim", "shared_basis"};
    return names;
}

const std::set<std::string>& real_axes() {
    static const std::set<std::string> names{"coefficient_mean", "coefficient_variance", "psnr"};
    return names;
}

int as_int(double v) { return static_cast<int>(std::lround(v)); }

Bindings k_bindings(const SyntheticSpec& s) {
    const double n_i = *std::min_element(s.points_per_subspace.begin(), s.points_per_subspace.end());
    const double d = *std::min_element(s.subspace_dims.begin(), s.subspace_dims.end());
    return {{"N_i", n_i},
            {"N", static_cast<double>(s.total_points())},
            {"D", static_cast<double>(s.ambient_dim)},
            {"d", d},
            {"p", static_cast<double>(s.num_subspaces)},
            {"t", static_cast<double>(s.shared_basis_count.value_or(0))}};
}

LabeledData generate_instance(const ExperimentSpec& spec, const SyntheticSpec& synth, const DataMatrix* library,
                              std::size_t cell) {
    if (spec.generator == Generator::orthonormal) return generate_union(synth);

    DataMatrix generated_library;
    if (!library) {
        Rng rng(derive_seed({spec.seed, cell, 0x6c6962ULL}));
        const Index columns = spec.library_columns > 0 ? spec.library_columns : synth.ambient_dim;
        generated_library = random_orthonormal(synth.ambient_dim, columns, rng);
        library = &generated_library;
    }
    LabeledData data = generate_from_library(*library, synth.num_subspaces, synth.subspace_dims[0],
                                             synth.points_per_subspace, synth.coefficient_law, synth.seed);
    if (synth.noise_psnr && std::isfinite(*synth.noise_psnr)) {
        const double peak = peak_value(data.x);
        if (peak > 0)
            data.x = add_noise(data.x, *synth.noise_psnr, peak, derive_seed({synth.seed, 0x6e6f697365ULL}));
    }
    return data;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string status_of(const InstanceRecord& r) {
    return r.skipped ? "skipped" : r.failed ? "failed" : "ok";
}

}  // namespace

std::string to_string(Generator g) { return g == Generator::orthonormal ? "orthonormal" : "library"; }

Generator generator_from_string(const std::string& s) {
    if (s == "orthonormal") return Generator::orthonormal;
    if (s == "library") return Generator::library;
    throw InvalidSpecError("unknown generator '" + s + "' (expected orthonormal or library)");
}

void ExperimentSpec::validate() const {
    if (instances_per_cell < 1) throw InvalidSpecError("instances_per_cell must be at least 1");
    if (methods.empty()) throw InvalidSpecError("methods must not be empty");
    if (library_columns < 0) throw InvalidSpecError("library_columns must be non-negative");
    if (library_path && generator != Generator::library)
        throw InvalidSpecError("library_path requires the library generator");
    std::set<std::string> seen;
    for (const auto& axis : axes) {
        if (!seen.insert(axis.name).second) throw InvalidSpecError("axis '" + axis.name + "' appears twice");
        const bool is_int = integer_axes().count(axis.name) > 0;
        if (!is_int && !real_axes().count(axis.name)) throw InvalidSpecError("unknown axis '" + axis.name + "'");
        if (axis.values.empty()) throw InvalidSpecError("axis '" + axis.name + "' has no values");
        for (double v : axis.values) {
            if (!std::isfinite(v)) throw InvalidSpecError("axis '" + axis.name + "' has a non-finite value");
            if (is_int && v != std::round(v))
                throw InvalidSpecError("axis '" + axis.name + "' needs integer values");
        }
        if ((axis.name == "coefficient_mean" || axis.name == "coefficient_variance") &&
            !std::holds_alternative<GaussianLaw>(coefficient_law))
            throw InvalidSpecError("axis '" + axis.name + "' requires the gaussian coefficient law");
    }
    if (generator == Generator::library && (seen.count("shared_basis") || shared_basis))
        throw InvalidSpecError("shared_basis is not available with the library generator");
    solver.validate();
    // Every cell must describe a valid generator and a parsable k rule.
    for (const auto& cell : grid_cells(*this)) {
        const SyntheticSpec s = cell_synthetic_spec(*this, cell, seed);
        s.validate();
        evaluate_k_rule(k_rule, k_bindings(s), std::max<Index>(2, s.total_points()));
    }
}

std::size_t ExperimentSpec::cell_count() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
}

std::vector<CellCoordinates> grid_cells(const ExperimentSpec& spec) {
    std::vector<CellCoordinates> cells{CellCoordinates{}};
    for (const auto& axis : spec.axes) {
        std::vector<CellCoordinates> next;
        next.reserve(cells.size() * axis.values.size());
        for (const auto& c : cells)
            for (double v : axis.values) {
                next.push_back(c);
                next.back()[axis.name] = v;
            }
        cells = std::move(next);
    }
    return cells;
}

SyntheticSpec cell_synthetic_spec(const ExperimentSpec& spec, const CellCoordinates& cell, std::uint64_t seed) {
    const auto value = [&](const char* name, double fallback) {
        const auto it = cell.find(name);
        return it == cell.end() ? fallback : it->second;
    };
    SyntheticSpec s;
    s.num_subspaces = as_int(value("num_subspaces", spec.num_subspaces));
    s.ambient_dim = as_int(value("ambient_dim", spec.ambient_dim));
    const int count = std::max(s.num_subspaces, 0);
    s.subspace_dims.assign(static_cast<std::size_t>(count), as_int(value("subspace_dim", spec.subspace_dim)));
    s.points_per_subspace.assign(static_cast<std::size_t>(count),
                                 as_int(value("points_per_subspace", spec.points_per_subspace)));
    s.coefficient_law = spec.coefficient_law;
    if (auto* g = std::get_if<GaussianLaw>(&s.coefficient_law)) {
        g->mean = value("coefficient_mean", g->mean);
        g->variance = value("coefficient_variance", g->variance);
    }
    if (cell.count("shared_basis")) s.shared_basis_count = as_int(cell.at("shared_basis"));
    else s.shared_basis_count = spec.shared_basis;
    if (cell.count("psnr")) s.noise_psnr = cell.at("psnr");
    else s.noise_psnr = spec.psnr;
    s.seed = seed;
    return s;
}

std::uint64_t instance_seed(std::uint64_t base, std::size_t cell, int instance) {
    return derive_seed({base, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(instance)});
}

InstanceRecord run_instance(const ExperimentSpec& spec, const LabeledData& data, Method method, Index k,
                            std::uint64_t seed) {
    InstanceRecord rec;
    rec.method = method;
    rec.seed = seed;
    rec.n = data.x.cols();
    rec.k = is_kssc(method) ? k : rec.n - 1;
    const int p = static_cast<int>(std::set<int>(data.labels.begin(), data.labels.end()).size());
    try {
        AffinityGraph graph;
        if (is_kssc(method)) {
            const auto start = Clock::now();
            const NeighborSets omega = knn_select(data.x, k, spec.solver.threads);
            rec.knn_seconds = seconds_since(start);
            const Variant variant = method == Method::kssc_relaxed ? Variant::relaxed : Variant::exact;
            const KsscSolution sol = solve_all(data.x, omega, spec.solver, variant);
            rec.coefficient_seconds = sol.report.seconds;
            rec.not_converged = sol.report.not_converged;
            double iters = 0;
            for (const auto& c : sol.report.columns) iters += c.iterations;
            rec.mean_iterations = iters / static_cast<double>(std::max<std::size_t>(1, sol.report.columns.size()));
            graph = build_affinity(sol.z);
        } else {
            const SscSolution sol = method == Method::ssc_relaxed ? ssc_relaxed(data.x, spec.solver)
                                                                   : ssc_exact(data.x, spec.solver);
            rec.coefficient_seconds = sol.report.seconds;
            rec.not_converged = sol.report.converged ? 0 : 1;
            rec.mean_iterations = sol.report.iterations;
            graph = build_affinity(sol.z);
        }
        const auto start = Clock::now();
        const SegmentationResult seg = ncut_segment(graph, p, derive_seed({seed, 0x73656775ULL}), spec.segmentation);
        rec.segmentation_seconds = seconds_since(start);
        rec.sce = sce(seg.labels, data.labels);
    } catch (const MemoryBudgetError& e) {
        rec.skipped = true;
        rec.message = e.what();
    } catch (const Error& e) {
        rec.failed = true;
        rec.message = e.what();
    }
    return rec;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentResult result;
    result.spec = spec;
    result.cells = grid_cells(spec);

    std::optional<DataMatrix> library;
    if (spec.library_path) library = load_matrix(*spec.library_path);

    ExperimentSpec inner = spec;
    const unsigned outer = spec.threads == 0 ? default_thread_count() : spec.threads;
    if (outer > 1) inner.solver.threads = 1;

    const std::size_t instances = static_cast<std::size_t>(spec.instances_per_cell);
    const std::size_t methods = spec.methods.size();
    result.records.resize(result.cells.size() * instances * methods);
    parallel_for(result.cells.size() * instances, outer, [&](std::size_t task) {
        const std::size_t cell = task / instances;
        const int instance = static_cast<int>(task % instances);
        const std::uint64_t seed = instance_seed(spec.seed, cell, instance);
        InstanceRecord* slots = &result.records[task * methods];
        try {
            const SyntheticSpec synth = cell_synthetic_spec(spec, result.cells[cell], seed);
            LabeledData data = generate_instance(spec, synth, library ? &*library : nullptr, cell);
            if (spec.normalize) data.x = normalize_columns(data.x);
            const Index k = evaluate_k_rule(spec.k_rule, k_bindings(synth), data.x.cols());
            for (std::size_t m = 0; m < methods; ++m) slots[m] = run_instance(inner, data, spec.methods[m], k, seed);
        } catch (const Error& e) {
            for (std::size_t m = 0; m < methods; ++m) {
                slots[m] = InstanceRecord{};
                slots[m].method = spec.methods[m];
                slots[m].seed = seed;
                slots[m].failed = true;
                slots[m].message = e.what();
            }
        }
        for (std::size_t m = 0; m < methods; ++m) {
            slots[m].cell = cell;
            slots[m].instance = instance;
        }
    });
    result.aggregates = aggregate_records(result.records, result.cells.size(), spec.methods);
    return result;
}

std::vector<CellAggregate> aggregate_records(const std::vector<InstanceRecord>& records, std::size_t cells,
                                             const std::vector<Method>& methods) {
    std::vector<CellAggregate> out;
    out.reserve(cells * methods.size());
    for (std::size_t c = 0; c < cells; ++c) {
        for (Method m : methods) {
            CellAggregate a;
            a.cell = c;
            a.method = m;
            std::vector<double> sces;
            double knn = 0, coef = 0, seg = 0, iters = 0;
            for (const auto& r : records) {
                if (r.cell != c || r.method != m) continue;
                if (r.skipped) ++a.skipped;
                if (r.failed) ++a.failed;
                if (!r.ok()) continue;
                sces.push_back(r.sce);
                knn += r.knn_seconds;
                coef += r.coefficient_seconds;
                seg += r.segmentation_seconds;
                iters += r.mean_iterations;
            }
            a.completed = static_cast<int>(sces.size());
            if (!sces.empty()) {
                const double n = static_cast<double>(sces.size());
                a.mean_sce = std::accumulate(sces.begin(), sces.end(), 0.0) / n;
                a.median_sce = median_of(sces);
                a.min_sce = *std::min_element(sces.begin(), sces.end());
                a.max_sce = *std::max_element(sces.begin(), sces.end());
                a.mean_knn_seconds = knn / n;
                a.mean_coefficient_seconds = coef / n;
                a.mean_segmentation_seconds = seg / n;
                a.mean_iterations = iters / n;
            }
            out.push_back(a);
        }
    }
    return out;
}

const CellAggregate& ExperimentResult::aggregate(std::size_t cell, Method method) const {
    for (const auto& a : aggregates)
        if (a.cell == cell && a.method == method) return a;
    throw ValidationError("no aggregate for cell " + std::to_string(cell) + " and method " + to_string(method));
}

void check_consistency(const ExperimentResult& result) {
    const std::size_t expected =
        result.cells.size() * static_cast<std::size_t>(result.spec.instances_per_cell) * result.spec.methods.size();
    if (result.records.size() != expected)
        throw FormatError("result holds " + std::to_string(result.records.size()) + " records, expected " +
                          std::to_string(expected));
    const auto recomputed = aggregate_records(result.records, result.cells.size(), result.spec.methods);
    if (recomputed.size() != result.aggregates.size()) throw FormatError("aggregate count mismatch");
    for (std::size_t i = 0; i < recomputed.size(); ++i) {
        const auto& a = recomputed[i];
        const auto& b = result.aggregates[i];
        const bool same = a.cell == b.cell && a.method == b.method && a.completed == b.completed &&
                          a.skipped == b.skipped && a.failed == b.failed && a.mean_sce == b.mean_sce &&
                          a.median_sce == b.median_sce && a.min_sce == b.min_sce && a.max_sce == b.max_sce &&
                          a.mean_knn_seconds == b.mean_knn_seconds &&
                          a.mean_coefficient_seconds == b.mean_coefficient_seconds &&
                          a.mean_segmentation_seconds == b.mean_segmentation_seconds &&
                          a.mean_iterations == b.mean_iterations;
        if (!same)
            throw FormatError("aggregate for cell " + std::to_string(a.cell) + " (" + to_string(a.method) +
                              ") disagrees with its instance records");
    }
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& path, ReportFormat format) {
    check_consistency(result);
    if (format == ReportFormat::json) {
        write_json_file(path, to_json(result));
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << std::setprecision(17) << "cell,instance,seed";
    for (const auto& axis : result.spec.axes) out << ',' << axis.name;
    for (Method m : result.spec.methods) {
        const std::string p = to_string(m) + "_";
        out << ',' << p << "status," << p << "sce," << p << "k," << p << "knn_seconds," << p
            << "coefficient_seconds," << p << "segmentation_seconds," << p << "mean_iterations," << p
            << "not_converged";
    }
    out << '\n';
    const std::size_t methods = result.spec.methods.size();
    for (std::size_t row = 0; row * methods < result.records.size(); ++row) {
        const InstanceRecord& first = result.records[row * methods];
        out << first.cell << ',' << first.instance << ',' << first.seed;
        for (const auto& axis : result.spec.axes) out << ',' << result.cells[first.cell].at(axis.name);
        for (std::size_t m = 0; m < methods; ++m) {
            const InstanceRecord& r = result.records[row * methods + m];
            out << ',' << status_of(r) << ',' << r.sce << ',' << r.k << ',' << r.knn_seconds << ','
                << r.coefficient_seconds << ',' << r.segmentation_seconds << ',' << r.mean_iterations << ','
                << r.not_converged;
        }
        out << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

ExperimentResult load_report(const std::filesystem::path& path) {
    ExperimentResult result = experiment_result_from_json(read_json_file(path));
    check_consistency(result);
    return result;
}

std::vector<PlotPoint> plot_data(const ExperimentResult& result, const std::string& axis, Method method) {
    std::vector<PlotPoint> points;
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
        const auto it = result.cells[c].find(axis);
        if (it == result.cells[c].end()) throw ValidationError("experiment has no axis '" + axis + "'");
        const CellAggregate& a = result.aggregate(c, method);
        if (a.completed == 0) continue;
        points.push_back({it->second, a.mean_sce, a.median_sce, a.min_sce, a.max_sce, a.mean_coefficient_seconds});
    }
    return points;
}

void write_plot_csv(const std::filesystem::path& path, const std::vector<PlotPoint>& points) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << std::setprecision(17) << "x,mean_sce,median_sce,min_sce,max_sce,mean_coefficient_seconds\n";
    for (const auto& p : points)
        out << p.x << ',' << p.mean_sce << ',' << p.median_sce << ',' << p.min_sce << ',' << p.max_sce << ','
            << p.mean_coefficient_seconds << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace kssc
