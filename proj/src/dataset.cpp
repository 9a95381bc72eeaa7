#include "kssc/dataset.hpp"

#include "kssc/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace kssc {

namespace {

constexpr char kMagic[4] = {'K', 'S', 'S', 'C'};
constexpr std::uint32_t kBinaryVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "binary matrix IO assumes a little-endian host");

Eigen::MatrixXd draw_coefficients(Index dim, Index count, const CoefficientLaw& law, Rng& rng) {
    Eigen::MatrixXd c(dim, count);
    if (const auto* u = std::get_if<UniformLaw>(&law)) {
        std::uniform_real_distribution<double> dist(u->low, u->high);
        for (Index j = 0; j < count; ++j)
            for (Index i = 0; i < dim; ++i) c(i, j) = dist(rng);
    } else {
        const auto& g = std::get<GaussianLaw>(law);
        std::normal_distribution<double> dist(g.mean, std::sqrt(g.variance));
        for (Index j = 0; j < count; ++j)
            for (Index i = 0; i < dim; ++i) c(i, j) = dist(rng);
    }
    return c;
}

void validate_law(const CoefficientLaw& law) {
    if (const auto* u = std::get_if<UniformLaw>(&law)) {
        if (!(u->low < u->high) || !std::isfinite(u->low) || !std::isfinite(u->high))
            throw InvalidSpecError("uniform coefficient law needs finite low < high");
    } else {
        const auto& g = std::get<GaussianLaw>(law);
        if (!std::isfinite(g.mean) || !(g.variance > 0) || !std::isfinite(g.variance))
            throw InvalidSpecError("gaussian coefficient law needs finite mean and variance > 0");
    }
}

}  // namespace

void SyntheticSpec::validate() const {
    if (num_subspaces < 1) throw InvalidSpecError("num_subspaces must be positive");
    if (ambient_dim < 1) throw InvalidSpecError("ambient_dim must be positive");
    if (static_cast<int>(subspace_dims.size()) != num_subspaces)
        throw InvalidSpecError("subspace_dims must have num_subspaces entries");
    if (static_cast<int>(points_per_subspace.size()) != num_subspaces)
        throw InvalidSpecError("points_per_subspace must have num_subspaces entries");
    for (int d : subspace_dims) {
        if (d < 1) throw InvalidSpecError("subspace dimensions must be positive");
        if (d > ambient_dim)
            throw InvalidSpecError("subspace dimension " + std::to_string(d) +
                                   " exceeds ambient dimension " + std::to_string(ambient_dim));
    }
    for (int n : points_per_subspace)
        if (n < 1) throw InvalidSpecError("points_per_subspace entries must be positive");
    validate_law(coefficient_law);
    if (shared_basis_count) {
        const int t = *shared_basis_count;
        if (num_subspaces != 2)
            throw InvalidSpecError("shared_basis_count requires exactly two subspaces");
        if (subspace_dims[0] != subspace_dims[1])
            throw InvalidSpecError("shared_basis_count requires equal subspace dimensions");
        const int d = subspace_dims[0];
        if (t < 0 || t > d) throw InvalidSpecError("shared_basis_count must lie in [0, d]");
        if (2 * d - t > ambient_dim)
            throw InvalidSpecError("2d - t basis vectors do not fit in the ambient dimension");
    }
    if (noise_psnr && std::isnan(*noise_psnr)) throw InvalidSpecError("noise_psnr is NaN");
}

Index SyntheticSpec::total_points() const {
    return std::accumulate(points_per_subspace.begin(), points_per_subspace.end(), Index{0});
}

LabeledData generate_union(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Index D = spec.ambient_dim;

    LabeledData out;
    if (spec.shared_basis_count) {
        const int d = spec.subspace_dims[0];
        const int t = *spec.shared_basis_count;
        const Eigen::MatrixXd pool = random_orthonormal(D, 2 * d - t, rng);
        out.bases.push_back(pool.leftCols(d));
        out.bases.push_back(pool.rightCols(d));
    } else {
        for (int d : spec.subspace_dims) out.bases.push_back(random_orthonormal(D, d, rng));
    }

    out.x.resize(D, spec.total_points());
    out.labels.reserve(static_cast<std::size_t>(spec.total_points()));
    Index offset = 0;
    for (int s = 0; s < spec.num_subspaces; ++s) {
        const Index n = spec.points_per_subspace[s];
        const auto& basis = out.bases[s];
        out.x.middleCols(offset, n) =
            basis * draw_coefficients(basis.cols(), n, spec.coefficient_law, rng);
        out.labels.insert(out.labels.end(), static_cast<std::size_t>(n), s + 1);
        offset += n;
    }

    if (spec.noise_psnr && std::isfinite(*spec.noise_psnr)) {
        const double peak = peak_value(out.x);
        if (peak > 0)
            out.x = add_noise(out.x, *spec.noise_psnr, peak, derive_seed({spec.seed, 0x6e6f697365ULL}));
    }
    return out;
}

LabeledData generate_from_library(const DataMatrix& library, int num_subspaces, int dim,
                                  const std::vector<int>& points_per_subspace,
                                  const CoefficientLaw& law, std::uint64_t seed) {
    validate_data(library);
    if (num_subspaces < 1 || dim < 1)
        throw InvalidSpecError("library generator needs positive subspace count and dimension");
    if (dim > library.cols())
        throw InvalidSpecError("library has fewer columns than the requested subspace dimension");
    if (static_cast<int>(points_per_subspace.size()) != num_subspaces)
        throw InvalidSpecError("points_per_subspace must have num_subspaces entries");
    validate_law(law);

    Rng rng(seed);
    std::vector<Index> columns(static_cast<std::size_t>(library.cols()));
    std::iota(columns.begin(), columns.end(), Index{0});

    LabeledData out;
    const Index total = std::accumulate(points_per_subspace.begin(), points_per_subspace.end(), Index{0});
    out.x.resize(library.rows(), total);
    Index offset = 0;
    for (int s = 0; s < num_subspaces; ++s) {
        const Index n = points_per_subspace[s];
        if (n < 1) throw InvalidSpecError("points_per_subspace entries must be positive");
        // Partial Fisher-Yates: the first `dim` entries become a uniform sample.
        for (int j = 0; j < dim; ++j) {
            std::uniform_int_distribution<Index> pick(j, library.cols() - 1);
            std::swap(columns[j], columns[pick(rng)]);
        }
        Eigen::MatrixXd span(library.rows(), dim);
        for (int j = 0; j < dim; ++j) span.col(j) = library.col(columns[j]);
        out.x.middleCols(offset, n) = span * draw_coefficients(dim, n, law, rng);
        out.labels.insert(out.labels.end(), static_cast<std::size_t>(n), s + 1);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
        out.bases.push_back(qr.householderQ() * Eigen::MatrixXd::Identity(span.rows(), dim));
        offset += n;
    }
    return out;
}

double peak_value(const DataMatrix& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

DataMatrix add_noise(const DataMatrix& x, double target_psnr, double peak, std::uint64_t seed) {
    if (std::isnan(target_psnr)) throw ValidationError("add_noise: target PSNR is NaN");
    if (!(peak > 0) || !std::isfinite(peak)) throw ValidationError("add_noise: peak must be positive");
    if (target_psnr == kNoNoise || x.size() == 0) return x;

    const double target_mse = peak * peak / std::pow(10.0, target_psnr / 10.0);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd noise(x.rows(), x.cols());
    for (Index j = 0; j < noise.cols(); ++j)
        for (Index i = 0; i < noise.rows(); ++i) noise(i, j) = normal(rng);
    const double realised = noise.squaredNorm() / static_cast<double>(noise.size());
    if (realised > 0) noise *= std::sqrt(target_mse / realised);
    return x + noise;
}

void validate_data(const DataMatrix& x) {
    if (x.rows() < 1 || x.cols() < 1) throw ValidationError("data matrix must be non-empty");
    if (!x.allFinite()) throw ValidationError("data matrix contains non-finite entries");
}

MatrixFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv" || ext == ".txt" ? MatrixFormat::csv : MatrixFormat::binary;
}

void save_matrix(const std::filesystem::path& path, const DataMatrix& x, MatrixFormat format) {
    if (format == MatrixFormat::binary) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open " + path.string() + " for writing");
        const std::uint64_t rows = static_cast<std::uint64_t>(x.rows());
        const std::uint64_t cols = static_cast<std::uint64_t>(x.cols());
        out.write(kMagic, 4);
        out.write(reinterpret_cast<const char*>(&kBinaryVersion), sizeof kBinaryVersion);
        out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
        out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
        out.write(reinterpret_cast<const char*>(x.data()),
                  static_cast<std::streamsize>(sizeof(double) * x.size()));
        if (!out) throw Error("write failed: " + path.string());
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(17);
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) {
            if (j) out << ',';
            out << x(i, j);
        }
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    if (format == MatrixFormat::binary) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open " + path.string());
        char magic[4];
        std::uint32_t version = 0;
        std::uint64_t rows = 0, cols = 0;
        in.read(magic, 4);
        in.read(reinterpret_cast<char*>(&version), sizeof version);
        in.read(reinterpret_cast<char*>(&rows), sizeof rows);
        in.read(reinterpret_cast<char*>(&cols), sizeof cols);
        if (!in || std::memcmp(magic, kMagic, 4) != 0)
            throw FormatError(path.string() + ": missing KSSC header");
        if (version != kBinaryVersion)
            throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
        in.seekg(0, std::ios::end);
        const auto payload = static_cast<std::uint64_t>(in.tellg()) - 24;
        const auto count = payload / sizeof(double);
        if (rows == 0 || cols == 0 || payload % sizeof(double) != 0 || count % rows != 0 ||
            count / rows != cols)
            throw FormatError(path.string() + ": header shape " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " disagrees with payload of " +
                              std::to_string(payload) + " bytes");
        in.seekg(24);
        DataMatrix x(static_cast<Index>(rows), static_cast<Index>(cols));
        in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(payload));
        if (!in) throw FormatError(path.string() + ": truncated payload");
        return x;
    }

    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw FormatError(path.string() + ": cannot parse '" + cell + "'");
            }
            if (cell.find_first_not_of(" \t", used) != std::string::npos)
                throw FormatError(path.string() + ": cannot parse '" + cell + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw FormatError(path.string() + ": ragged CSV row " + std::to_string(rows.size() + 1));
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty()) throw FormatError(path.string() + ": empty CSV");
    DataMatrix x(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j) x(i, j) = rows[i][j];
    return x;
}

void save_labels(const std::filesystem::path& path, const Labels& labels) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    for (int l : labels) out << l << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

Labels load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    Labels labels;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(line, &used);
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": bad label '" + line + "'");
        }
        if (line.find_first_not_of(" \t", used) != std::string::npos)
            throw FormatError(path.string() + ": bad label '" + line + "'");
        labels.push_back(v);
    }
    return labels;
}

}  // namespace kssc
