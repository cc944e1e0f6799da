#ifndef OPIMC_DATA_HPP
#define OPIMC_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "opimc/model.hpp"
#include "opimc/source.hpp"

/**
 * @file data.hpp
 *
 * @brief Loading, preparing and generating multi-view datasets.
 *
 * File formats:
 *  - view CSV: one row per feature, one column per instance, comma separated.
 *  - view binary: "MVC1", uint64 LE rows, uint64 LE cols, then rows*cols
 *    float64 LE values in row-major order.
 *  - mask CSV: n_views rows of N entries in {0,1}.
 *  - labels: one nonnegative integer per line.
 */
namespace opimc {

enum class MatrixFormat { Csv, Binary };

/// Guess from the file's first four bytes.
MatrixFormat detect_format(const std::filesystem::path& path);

/// Rows and columns of a matrix file without reading its values (binary) or after parsing it (CSV).
std::pair<std::size_t, std::size_t> matrix_shape(const std::filesystem::path& path);

/// Reads a whole matrix in either format. Throws IoError on malformed input.
Matrix read_matrix(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
void write_matrix_binary(const std::filesystem::path& path, const Matrix& m);

/**
 * Reads a view file and zero-fills the columns `mask` marks absent in `view`.
 * The file must be `dims` x mask.n_instances(); NaN or Inf in a present
 * column is an error.
 */
Matrix load_view(const std::filesystem::path& path, std::size_t dims, const PresenceMask& mask,
                 std::size_t view);

PresenceMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const PresenceMask& mask);

Assignments read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, std::span<const Label> labels);

/**
 * Scales every present column of `x` to unit Euclidean norm and zeroes the
 * absent ones. A present all-zero column is an error.
 */
void normalize_instances(Matrix& x, const PresenceMask& mask, std::size_t view);

/**
 * Removes round(rate * N) instances from every view uniformly at random,
 * then re-enables any instance left in no view (taking a random other
 * instance out of the same view instead when that keeps both placed).
 * Throws std::invalid_argument when the removals cannot leave every instance
 * in some view.
 */
PresenceMask simulate_missing(std::size_t n_views, std::size_t n_instances, double rate, std::uint64_t seed);

/// Resident dataset: zero-filled, unit-normalized views.
struct Dataset {
    DatasetMeta meta;
    std::vector<Matrix> views;
    PresenceMask mask;
    std::optional<Assignments> labels;
};

/**
 * Builds a dataset from raw views: validates shapes and the mask, zero-fills
 * absent columns, normalizes present ones and fills in the metadata.
 */
Dataset make_dataset(std::vector<Matrix> views, PresenceMask mask, std::size_t n_clusters,
                     std::optional<Assignments> labels = std::nullopt);

struct DatasetManifest {
    std::vector<std::filesystem::path> view_paths;
    std::optional<std::filesystem::path> mask_path;
    std::optional<std::filesystem::path> labels_path;
    std::size_t n_clusters = 0;
    /// Expected dimensions per view; empty means take them from the files.
    std::vector<std::size_t> dims;
};

/// Loads every file named by the manifest and prepares the dataset. Without a mask all instances are present.
Dataset load_dataset(const DatasetManifest& manifest);

/**
 * Applies one random permutation to every view, the mask and the labels.
 * Returns `order`, where new position i holds old instance order[i].
 */
std::vector<std::size_t> shuffle_instances(Dataset& data, std::uint64_t seed);

/// Reorders the dataset so that new position i holds old instance order[i].
void permute_instances(Dataset& data, std::span<const std::size_t> order);

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> order);

struct SyntheticSpec {
    std::size_t n_clusters = 3;
    std::size_t n_views = 2;
    std::vector<std::size_t> dims{10, 10};
    std::size_t n_instances = 300;
    double separation = 10.0;
    double noise = 1.0;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    std::vector<Matrix> views;
    /// Balanced and sorted by class: instance i belongs to class floor(i * K / N).
    Assignments labels;
};

/**
 * Per view, K centers on a sphere of radius `separation`; each instance is
 * its class center plus N(0, noise^2) per coordinate, then unit-normalized.
 */
SyntheticData make_synthetic(const SyntheticSpec& spec);

/// Serves a resident dataset in order.
class InMemorySource : public ChunkSource {
public:
    explicit InMemorySource(const Dataset& data) : data_(data) {}

    const DatasetMeta& meta() const override { return data_.meta; }
    void rewind() override { cursor_ = 0; }
    std::optional<MultiViewChunk> read(std::size_t max_count) override;

private:
    const Dataset& data_;
    std::size_t cursor_ = 0;
};

/**
 * Streams binary view files column-block by column-block. Only the mask
 * (n_views x N bytes) is held in memory; chunks are zero-filled and
 * normalized on the way in.
 */
class BinaryFileSource : public ChunkSource {
public:
    BinaryFileSource(const std::vector<std::filesystem::path>& view_paths, PresenceMask mask,
                     std::size_t n_clusters);

    const DatasetMeta& meta() const override { return meta_; }
    void rewind() override { cursor_ = 0; }
    std::optional<MultiViewChunk> read(std::size_t max_count) override;

private:
    DatasetMeta meta_;
    PresenceMask mask_;
    std::vector<std::ifstream> files_;
    std::size_t cursor_ = 0;
};

/**
 * Generates a synthetic stream on the fly. Each instance is derived from
 * (seed, index) alone, so replays are exact and nothing proportional to N
 * is stored. Classes are drawn uniformly per instance, and each view drops
 * an instance independently with probability `missing_rate` (an instance
 * dropped everywhere is restored in one random view).
 */
class SyntheticStreamSource : public ChunkSource {
public:
    SyntheticStreamSource(const SyntheticSpec& spec, double missing_rate);

    const DatasetMeta& meta() const override { return meta_; }
    void rewind() override { cursor_ = 0; }
    std::optional<MultiViewChunk> read(std::size_t max_count) override;

    /// Class of every instance; O(N), for evaluation only.
    Assignments labels() const;

private:
    Label label_of(std::size_t index) const;
    std::vector<bool> presence_of(std::size_t index) const;

    SyntheticSpec spec_;
    double missing_rate_;
    DatasetMeta meta_;
    std::vector<Matrix> centers_;
    std::size_t cursor_ = 0;
};

}  // namespace opimc

#endif  // OPIMC_DATA_HPP
