#include "opimc/data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace opimc {

namespace {

constexpr std::array<char, 4> kMagic{'M', 'V', 'C', '1'};
constexpr std::size_t kHeaderBytes = 4 + 8 + 8;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t lane) {
    return splitmix64(splitmix64(seed ^ splitmix64(index)) + lane);
}

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        std::array<unsigned char, sizeof(T)> bytes;
        std::memcpy(bytes.data(), &value, sizeof(T));
        std::reverse(bytes.begin(), bytes.end());
        std::memcpy(&value, bytes.data(), sizeof(T));
    }
    return value;
}

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw IoError("unexpected end of file in " + path.string());
    }
    return to_little(value);
}

template <typename T>
void write_le(std::ostream& out, T value) {
    value = to_little(value);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view token, const std::filesystem::path& path, std::size_t line) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') {
        token.remove_prefix(1);
    }
    T value{};
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || end != token.data() + token.size()) {
        throw IoError(path.string() + ":" + std::to_string(line) + ": not a number: '" + std::string(token) + "'");
    }
    return value;
}

template <typename T>
std::vector<std::vector<T>> read_csv_rows(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::vector<T>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<T> row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            row.push_back(parse_number<T>(rest.substr(0, comma), path, line_no));
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(rows.front().size()) + " fields, got " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void append_number(std::string& out, double value) {
    std::array<char, 32> buf;
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    out.append(buf.data(), end);
}

Matrix read_binary(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw IoError(path.string() + ": missing MVC1 header");
    }
    const auto rows = read_le<std::uint64_t>(in, path);
    const auto cols = read_le<std::uint64_t>(in, path);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::vector<double> row(cols);
    for (std::uint64_t r = 0; r < rows; ++r) {
        if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols * sizeof(double)))) {
            throw IoError(path.string() + ": truncated data");
        }
        for (std::uint64_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = to_little(row[c]);
        }
    }
    return m;
}

void check_present_finite(const Matrix& x, const PresenceMask& mask, std::size_t view, const std::string& where) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (mask.present(view, static_cast<std::size_t>(j)) && !x.col(j).allFinite()) {
            throw IoError(where + ": non-finite value in present instance " + std::to_string(j));
        }
    }
}

}  // namespace

MatrixFormat detect_format(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    return (in.gcount() == 4 && head == kMagic) ? MatrixFormat::Binary : MatrixFormat::Csv;
}

std::pair<std::size_t, std::size_t> matrix_shape(const std::filesystem::path& path) {
    if (detect_format(path) == MatrixFormat::Binary) {
        auto in = open_input(path);
        in.seekg(4);
        const auto rows = read_le<std::uint64_t>(in, path);
        const auto cols = read_le<std::uint64_t>(in, path);
        return {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
    }
    const Matrix m = read_matrix(path);
    return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
}

Matrix read_matrix(const std::filesystem::path& path) {
    if (detect_format(path) == MatrixFormat::Binary) {
        return read_binary(path);
    }
    const auto rows = read_csv_rows<double>(path);
    if (rows.empty()) {
        throw IoError(path.string() + ": empty matrix file");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    auto out = open_output(path);
    std::string line;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        line.clear();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) {
                line.push_back(',');
            }
            append_number(line, m(r, c));
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m) {
    auto out = open_output(path);
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            write_le<double>(out, m(r, c));
        }
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

Matrix load_view(const std::filesystem::path& path, std::size_t dims, const PresenceMask& mask,
                 std::size_t view) {
    Matrix x = read_matrix(path);
    if (static_cast<std::size_t>(x.rows()) != dims || static_cast<std::size_t>(x.cols()) != mask.n_instances()) {
        throw IoError(path.string() + ": expected " + std::to_string(dims) + "x" +
                      std::to_string(mask.n_instances()) + " matrix, found " + std::to_string(x.rows()) + "x" +
                      std::to_string(x.cols()));
    }
    if (view >= mask.n_views()) {
        throw std::out_of_range("view index beyond the mask");
    }
    check_present_finite(x, mask, view, path.string());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (!mask.present(view, static_cast<std::size_t>(j))) {
            x.col(j).setZero();
        }
    }
    return x;
}

PresenceMask read_mask(const std::filesystem::path& path) {
    const auto rows = read_csv_rows<int>(path);
    if (rows.empty()) {
        throw IoError(path.string() + ": empty mask file");
    }
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits(static_cast<Eigen::Index>(rows.size()),
                                                                     static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const int value = rows[r][c];
            if (value != 0 && value != 1) {
                throw IoError(path.string() + ": mask entries must be 0 or 1");
            }
            bits(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<std::uint8_t>(value);
        }
    }
    return PresenceMask(std::move(bits));
}

void write_mask(const std::filesystem::path& path, const PresenceMask& mask) {
    auto out = open_output(path);
    for (std::size_t v = 0; v < mask.n_views(); ++v) {
        std::string line;
        for (std::size_t j = 0; j < mask.n_instances(); ++j) {
            if (j > 0) {
                line.push_back(',');
            }
            line.push_back(mask.present(v, j) ? '1' : '0');
        }
        out << line << '\n';
    }
}

Assignments read_labels(const std::filesystem::path& path) {
    auto in = open_input(path);
    Assignments labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        labels.push_back(parse_number<Label>(line, path, line_no));
    }
    return labels;
}

void write_labels(const std::filesystem::path& path, std::span<const Label> labels) {
    auto out = open_output(path);
    for (auto l : labels) {
        out << l << '\n';
    }
}

void normalize_instances(Matrix& x, const PresenceMask& mask, std::size_t view) {
    if (static_cast<std::size_t>(x.cols()) != mask.n_instances()) {
        throw std::invalid_argument("view and mask disagree on the number of instances");
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (!mask.present(view, static_cast<std::size_t>(j))) {
            x.col(j).setZero();
            continue;
        }
        const double norm = x.col(j).norm();
        if (norm == 0.0) {
            throw std::invalid_argument("present instance " + std::to_string(j) + " in view " +
                                        std::to_string(view) + " is all zeros and cannot be normalized");
        }
        x.col(j) /= norm;
    }
}

PresenceMask simulate_missing(std::size_t n_views, std::size_t n_instances, double rate, std::uint64_t seed) {
    if (n_views == 0 || n_instances == 0) {
        throw std::invalid_argument("need at least one view and one instance");
    }
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw std::invalid_argument("missing rate must lie in [0, 1)");
    }
    const auto removed = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n_instances)));
    if (n_views * removed > (n_views - 1) * n_instances) {
        throw std::invalid_argument("missing rate " + std::to_string(rate) + " cannot keep every instance in a view");
    }

    PresenceMask mask(n_views, n_instances);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n_instances);
    for (std::size_t v = 0; v < n_views; ++v) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < removed; ++i) {
            mask.set(v, order[i], false);
        }
    }

    auto in_other_view = [&](std::size_t instance, std::size_t view) {
        for (std::size_t w = 0; w < n_views; ++w) {
            if (w != view && mask.present(w, instance)) {
                return true;
            }
        }
        return false;
    };

    std::uniform_int_distribution<std::size_t> pick_view(0, n_views - 1);
    std::uniform_int_distribution<std::size_t> pick_instance(0, n_instances - 1);
    for (std::size_t j = 0; j < n_instances; ++j) {
        bool any = false;
        for (std::size_t v = 0; v < n_views && !any; ++v) {
            any = mask.present(v, j);
        }
        if (any) {
            continue;
        }
        const std::size_t v = pick_view(rng);
        mask.set(v, j, true);

        // Take another instance out of v to keep its count, if one can spare it.
        auto swappable = [&](std::size_t i) { return i != j && mask.present(v, i) && in_other_view(i, v); };
        std::optional<std::size_t> victim;
        for (std::size_t attempt = 0; attempt < 64 && !victim; ++attempt) {
            const std::size_t i = pick_instance(rng);
            if (swappable(i)) {
                victim = i;
            }
        }
        if (!victim) {
            std::vector<std::size_t> candidates;
            for (std::size_t i = 0; i < n_instances; ++i) {
                if (swappable(i)) {
                    candidates.push_back(i);
                }
            }
            if (!candidates.empty()) {
                victim = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
            }
        }
        if (victim) {
            mask.set(v, *victim, false);
        }
    }
    return mask;
}

Dataset make_dataset(std::vector<Matrix> views, PresenceMask mask, std::size_t n_clusters,
                     std::optional<Assignments> labels) {
    if (views.size() != mask.n_views()) {
        throw std::invalid_argument("got " + std::to_string(views.size()) + " views but the mask has " +
                                    std::to_string(mask.n_views()) + " rows");
    }
    mask.validate();
    Dataset data;
    data.meta.n_views = views.size();
    data.meta.n_instances = mask.n_instances();
    data.meta.n_clusters = n_clusters;
    data.meta.missing_ratio = mask.missing_ratio();
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (static_cast<std::size_t>(views[v].cols()) != mask.n_instances()) {
            throw std::invalid_argument("view " + std::to_string(v) + " has " + std::to_string(views[v].cols()) +
                                        " instances, expected " + std::to_string(mask.n_instances()));
        }
        check_present_finite(views[v], mask, v, "view " + std::to_string(v));
        normalize_instances(views[v], mask, v);
        data.meta.dims.push_back(static_cast<std::size_t>(views[v].rows()));
    }
    data.meta.validate();
    if (labels && labels->size() != mask.n_instances()) {
        throw std::invalid_argument("expected one label per instance");
    }
    data.views = std::move(views);
    data.mask = std::move(mask);
    data.labels = std::move(labels);
    return data;
}

Dataset load_dataset(const DatasetManifest& manifest) {
    if (manifest.view_paths.empty()) {
        throw std::invalid_argument("no view files given");
    }
    if (!manifest.dims.empty() && manifest.dims.size() != manifest.view_paths.size()) {
        throw std::invalid_argument("expected dimensions must be given for every view");
    }
    std::vector<Matrix> raw;
    for (const auto& path : manifest.view_paths) {
        raw.push_back(read_matrix(path));
    }
    const auto n = static_cast<std::size_t>(raw.front().cols());
    PresenceMask mask = manifest.mask_path ? read_mask(*manifest.mask_path) : PresenceMask(raw.size(), n);
    if (mask.n_views() != raw.size() || mask.n_instances() != n) {
        throw IoError("mask shape does not match the view files");
    }

    std::vector<Matrix> views;
    for (std::size_t v = 0; v < raw.size(); ++v) {
        const std::size_t dims = manifest.dims.empty() ? static_cast<std::size_t>(raw[v].rows()) : manifest.dims[v];
        if (static_cast<std::size_t>(raw[v].rows()) != dims || static_cast<std::size_t>(raw[v].cols()) != n) {
            throw IoError(manifest.view_paths[v].string() + ": expected " + std::to_string(dims) + "x" +
                          std::to_string(n) + " matrix");
        }
        check_present_finite(raw[v], mask, v, manifest.view_paths[v].string());
        views.push_back(std::move(raw[v]));
    }

    std::optional<Assignments> labels;
    if (manifest.labels_path) {
        labels = read_labels(*manifest.labels_path);
        if (labels->size() != n) {
            throw IoError(manifest.labels_path->string() + ": expected " + std::to_string(n) + " labels, found " +
                          std::to_string(labels->size()));
        }
    }
    return make_dataset(std::move(views), std::move(mask), manifest.n_clusters, std::move(labels));
}

void permute_instances(Dataset& data, std::span<const std::size_t> order) {
    const std::size_t n = data.meta.n_instances;
    if (order.size() != n) {
        throw std::invalid_argument("permutation has the wrong length");
    }
    for (auto& x : data.views) {
        Matrix y(x.rows(), x.cols());
        for (std::size_t i = 0; i < n; ++i) {
            y.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(order[i]));
        }
        x = std::move(y);
    }
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits(data.mask.bits().rows(),
                                                                     data.mask.bits().cols());
    for (std::size_t i = 0; i < n; ++i) {
        bits.col(static_cast<Eigen::Index>(i)) = data.mask.bits().col(static_cast<Eigen::Index>(order[i]));
    }
    data.mask = PresenceMask(std::move(bits));
    if (data.labels) {
        Assignments permuted(n);
        for (std::size_t i = 0; i < n; ++i) {
            permuted[i] = (*data.labels)[order[i]];
        }
        data.labels = std::move(permuted);
    }
}

std::vector<std::size_t> shuffle_instances(Dataset& data, std::uint64_t seed) {
    std::vector<std::size_t> order(data.meta.n_instances);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    permute_instances(data, order);
    return order;
}

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> order) {
    std::vector<std::size_t> inverse(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        inverse[order[i]] = i;
    }
    return inverse;
}

namespace {

void check_spec(const SyntheticSpec& spec) {
    if (spec.n_clusters == 0) {
        throw std::invalid_argument("synthetic data needs at least one cluster");
    }
    if (spec.n_views == 0 || spec.dims.size() != spec.n_views) {
        throw std::invalid_argument("synthetic data needs one dimension per view");
    }
    if (!(spec.separation > 0.0) || !(spec.noise >= 0.0)) {
        throw std::invalid_argument("separation must be positive and noise nonnegative");
    }
    for (auto d : spec.dims) {
        if (d == 0) {
            throw std::invalid_argument("view dimension must be positive");
        }
    }
}

std::vector<Matrix> draw_centers(const SyntheticSpec& spec, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Matrix> centers;
    for (std::size_t v = 0; v < spec.n_views; ++v) {
        Matrix c(static_cast<Eigen::Index>(spec.dims[v]), static_cast<Eigen::Index>(spec.n_clusters));
        for (Eigen::Index k = 0; k < c.cols(); ++k) {
            double norm = 0.0;
            while (norm == 0.0) {
                for (Eigen::Index r = 0; r < c.rows(); ++r) {
                    c(r, k) = gauss(rng);
                }
                norm = c.col(k).norm();
            }
            c.col(k) *= spec.separation / norm;
        }
        centers.push_back(std::move(c));
    }
    return centers;
}

void draw_instance(Eigen::Ref<Vector> out, const Matrix& centers, Label label, double noise, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index r = 0; r < out.size(); ++r) {
        out(r) = centers(r, static_cast<Eigen::Index>(label)) + noise * gauss(rng);
    }
    const double norm = out.norm();
    if (norm > 0.0) {
        out /= norm;
    }
}

}  // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec) {
    check_spec(spec);
    if (spec.n_instances == 0) {
        throw std::invalid_argument("synthetic data needs at least one instance");
    }
    std::mt19937_64 rng(spec.seed);
    const auto centers = draw_centers(spec, rng);

    SyntheticData data;
    data.labels.resize(spec.n_instances);
    for (std::size_t i = 0; i < spec.n_instances; ++i) {
        data.labels[i] = static_cast<Label>(i * spec.n_clusters / spec.n_instances);
    }
    for (std::size_t v = 0; v < spec.n_views; ++v) {
        data.views.emplace_back(static_cast<Eigen::Index>(spec.dims[v]), static_cast<Eigen::Index>(spec.n_instances));
    }
    for (std::size_t i = 0; i < spec.n_instances; ++i) {
        for (std::size_t v = 0; v < spec.n_views; ++v) {
            Vector x(static_cast<Eigen::Index>(spec.dims[v]));
            draw_instance(x, centers[v], data.labels[i], spec.noise, rng);
            data.views[v].col(static_cast<Eigen::Index>(i)) = x;
        }
    }
    return data;
}

std::optional<MultiViewChunk> InMemorySource::read(std::size_t max_count) {
    const std::size_t n = data_.meta.n_instances;
    if (cursor_ >= n || max_count == 0) {
        return std::nullopt;
    }
    const std::size_t count = std::min(max_count, n - cursor_);
    MultiViewChunk chunk;
    chunk.offset = cursor_;
    chunk.mask = data_.mask.slice(cursor_, count);
    for (const auto& x : data_.views) {
        chunk.views.emplace_back(x.middleCols(static_cast<Eigen::Index>(cursor_), static_cast<Eigen::Index>(count)));
    }
    cursor_ += count;
    return chunk;
}

BinaryFileSource::BinaryFileSource(const std::vector<std::filesystem::path>& view_paths, PresenceMask mask,
                                   std::size_t n_clusters)
    : mask_(std::move(mask)) {
    if (view_paths.size() != mask_.n_views()) {
        throw std::invalid_argument("mask rows do not match the number of view files");
    }
    mask_.validate();
    meta_.n_views = view_paths.size();
    meta_.n_instances = mask_.n_instances();
    meta_.n_clusters = n_clusters;
    meta_.missing_ratio = mask_.missing_ratio();
    for (const auto& path : view_paths) {
        auto in = open_input(path);
        std::array<char, 4> magic{};
        if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
            throw IoError(path.string() + ": streaming requires the MVC1 binary format");
        }
        const auto rows = read_le<std::uint64_t>(in, path);
        const auto cols = read_le<std::uint64_t>(in, path);
        if (cols != meta_.n_instances) {
            throw IoError(path.string() + ": has " + std::to_string(cols) + " instances, mask has " +
                          std::to_string(meta_.n_instances));
        }
        meta_.dims.push_back(static_cast<std::size_t>(rows));
        files_.push_back(std::move(in));
    }
    meta_.validate();
}

std::optional<MultiViewChunk> BinaryFileSource::read(std::size_t max_count) {
    const std::size_t n = meta_.n_instances;
    if (cursor_ >= n || max_count == 0) {
        return std::nullopt;
    }
    const std::size_t count = std::min(max_count, n - cursor_);
    MultiViewChunk chunk;
    chunk.offset = cursor_;
    chunk.mask = mask_.slice(cursor_, count);
    std::vector<double> buffer(count);
    for (std::size_t v = 0; v < files_.size(); ++v) {
        auto& in = files_[v];
        Matrix x(static_cast<Eigen::Index>(meta_.dims[v]), static_cast<Eigen::Index>(count));
        for (std::size_t r = 0; r < meta_.dims[v]; ++r) {
            in.clear();
            in.seekg(static_cast<std::streamoff>(kHeaderBytes + (r * n + cursor_) * sizeof(double)));
            if (!in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
                throw IoError("truncated view file for view " + std::to_string(v));
            }
            for (std::size_t c = 0; c < count; ++c) {
                x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = to_little(buffer[c]);
            }
        }
        check_present_finite(x, chunk.mask, v, "view " + std::to_string(v));
        normalize_instances(x, chunk.mask, v);
        chunk.views.push_back(std::move(x));
    }
    cursor_ += count;
    return chunk;
}

SyntheticStreamSource::SyntheticStreamSource(const SyntheticSpec& spec, double missing_rate)
    : spec_(spec), missing_rate_(missing_rate) {
    check_spec(spec_);
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
        throw std::invalid_argument("missing rate must lie in [0, 1)");
    }
    std::mt19937_64 rng(spec_.seed);
    centers_ = draw_centers(spec_, rng);

    meta_.n_views = spec_.n_views;
    meta_.n_instances = spec_.n_instances;
    meta_.dims = spec_.dims;
    meta_.n_clusters = spec_.n_clusters;
    std::size_t present = 0;
    for (std::size_t j = 0; j < spec_.n_instances; ++j) {
        const auto p = presence_of(j);
        present += static_cast<std::size_t>(std::count(p.begin(), p.end(), true));
    }
    meta_.missing_ratio =
        1.0 - static_cast<double>(present) / static_cast<double>(spec_.n_views * spec_.n_instances);
    meta_.validate();
}

Label SyntheticStreamSource::label_of(std::size_t index) const {
    std::mt19937_64 rng(stream_seed(spec_.seed, index, 0));
    return std::uniform_int_distribution<Label>(0, static_cast<Label>(spec_.n_clusters - 1))(rng);
}

std::vector<bool> SyntheticStreamSource::presence_of(std::size_t index) const {
    std::mt19937_64 rng(stream_seed(spec_.seed, index, 1));
    std::bernoulli_distribution drop(missing_rate_);
    std::vector<bool> present(spec_.n_views);
    bool any = false;
    for (std::size_t v = 0; v < spec_.n_views; ++v) {
        present[v] = !drop(rng);
        any = any || present[v];
    }
    if (!any) {
        present[std::uniform_int_distribution<std::size_t>(0, spec_.n_views - 1)(rng)] = true;
    }
    return present;
}

Assignments SyntheticStreamSource::labels() const {
    Assignments out(spec_.n_instances);
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = label_of(j);
    }
    return out;
}

std::optional<MultiViewChunk> SyntheticStreamSource::read(std::size_t max_count) {
    const std::size_t n = spec_.n_instances;
    if (cursor_ >= n || max_count == 0) {
        return std::nullopt;
    }
    const std::size_t count = std::min(max_count, n - cursor_);
    MultiViewChunk chunk;
    chunk.offset = cursor_;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits(static_cast<Eigen::Index>(spec_.n_views),
                                                                     static_cast<Eigen::Index>(count));
    for (std::size_t v = 0; v < spec_.n_views; ++v) {
        chunk.views.push_back(Matrix::Zero(static_cast<Eigen::Index>(spec_.dims[v]), static_cast<Eigen::Index>(count)));
    }
    for (std::size_t c = 0; c < count; ++c) {
        const std::size_t j = cursor_ + c;
        const Label label = label_of(j);
        const auto present = presence_of(j);
        std::mt19937_64 rng(stream_seed(spec_.seed, j, 2));
        for (std::size_t v = 0; v < spec_.n_views; ++v) {
            bits(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(c)) = present[v] ? 1 : 0;
            if (present[v]) {
                draw_instance(chunk.views[v].col(static_cast<Eigen::Index>(c)), centers_[v], label, spec_.noise, rng);
            }
        }
    }
    chunk.mask = PresenceMask(std::move(bits));
    cursor_ += count;
    return chunk;
}

}  // namespace opimc
