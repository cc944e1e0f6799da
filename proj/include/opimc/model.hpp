#ifndef OPIMC_MODEL_HPP
#define OPIMC_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

/**
 * @file model.hpp
 *
 * @brief Domain types shared by the solver, the offline baseline and the
 * data layer, plus the two global statistics that make streaming possible.
 */
namespace opimc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using Label = std::uint32_t;

/**
 * Hard 1-of-K assignment, one cluster index per instance.
 * Row i of the indicator matrix has its single 1 in column `labels[i]`.
 */
using Assignments = std::vector<Label>;

/// Raised when a file or stream cannot deliver what was declared.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Shape information for a multi-view dataset.
 */
struct DatasetMeta {
    std::size_t n_views = 0;
    std::size_t n_instances = 0;
    std::vector<std::size_t> dims;
    std::size_t n_clusters = 0;
    /// Fraction of (view, instance) pairs that are absent.
    double missing_ratio = 0.0;

    /// Throws std::invalid_argument if the fields are inconsistent.
    void validate() const;
};

/**
 * @brief Binary n_views x N indicator of which instance exists in which view.
 *
 * Every instance must be present in at least one view; `validate()` checks it.
 */
class PresenceMask {
public:
    PresenceMask() = default;

    /// All-present mask.
    PresenceMask(std::size_t n_views, std::size_t n_instances);

    explicit PresenceMask(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits);

    std::size_t n_views() const { return static_cast<std::size_t>(bits_.rows()); }
    std::size_t n_instances() const { return static_cast<std::size_t>(bits_.cols()); }

    bool present(std::size_t view, std::size_t instance) const {
        return bits_(static_cast<Eigen::Index>(view), static_cast<Eigen::Index>(instance)) != 0;
    }

    void set(std::size_t view, std::size_t instance, bool value) {
        bits_(static_cast<Eigen::Index>(view), static_cast<Eigen::Index>(instance)) = value ? 1 : 0;
    }

    std::size_t present_in_view(std::size_t view) const;
    std::size_t present_pairs() const;
    double missing_ratio() const;

    /// Columns [offset, offset + count).
    PresenceMask slice(std::size_t offset, std::size_t count) const;

    /// Throws std::invalid_argument if some instance is absent from every view.
    void validate() const;

    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& bits() const { return bits_; }

    bool operator==(const PresenceMask& other) const { return bits_ == other.bits_; }

private:
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits_;
};

/**
 * @brief One contiguous block of instances across every view.
 *
 * `views[v]` is d_v x size(). Absent columns are zero.
 */
struct MultiViewChunk {
    std::size_t chunk_index = 0;
    /// Global index of the first column.
    std::size_t offset = 0;
    std::vector<Matrix> views;
    PresenceMask mask;

    std::size_t size() const { return mask.n_instances(); }
    std::size_t n_views() const { return views.size(); }
    bool present(std::size_t view, std::size_t i) const { return mask.present(view, i); }

    /// Checks shapes and the zero-filling convention.
    void validate() const;

    std::size_t bytes() const;
};

/**
 * @brief Per-view cluster centers; `centers[v]` is d_v x K.
 */
struct FactorSet {
    std::vector<Matrix> centers;

    std::size_t n_views() const { return centers.size(); }
    std::size_t n_clusters() const {
        return centers.empty() ? 0 : static_cast<std::size_t>(centers.front().cols());
    }
    bool all_finite() const;
    std::size_t bytes() const;
};

/// Per-view, per-cluster flags (`flags[v][k]`).
using ClusterFlags = std::vector<std::vector<bool>>;

/// Per-view, per-cluster counts of present instances.
using ClusterCounts = std::vector<std::vector<std::int64_t>>;

struct SolverConfig {
    double alpha = 1e-2;
    std::size_t chunk_size = 50;
    int max_inner_iters = 20;
    int n_passes = 1;
    std::uint64_t rng_seed = 0;
    /// Repair degenerate centers (chunk mean on the first chunk, previous value afterwards).
    bool fill_degenerate = true;

    void validate() const;
};

/**
 * @brief Running sums R^(v) = sum X V and diag(T^(v)) = diag(sum V^T W V).
 *
 * The labels last applied for every chunk are kept so that a chunk seen
 * again on a later pass replaces its old contribution instead of adding a
 * second one. Memory is O(N) labels plus O(n_views * d_max * K).
 */
class GlobalStats {
public:
    GlobalStats() = default;

    /// Zero statistics for the given shapes.
    explicit GlobalStats(const DatasetMeta& meta);
    GlobalStats(std::size_t n_clusters, const std::vector<std::size_t>& dims);

    std::size_t n_views() const { return sums_.size(); }
    std::size_t n_clusters() const { return n_clusters_; }

    /// R^(v), d_v x K.
    const Matrix& sums(std::size_t view) const { return sums_[view]; }
    /// diag(T^(v)), length K.
    const std::vector<std::int64_t>& counts(std::size_t view) const { return counts_[view]; }

    bool has_contribution(std::size_t chunk_index) const;
    const Assignments& contribution(std::size_t chunk_index) const;

    /**
     * Adds the chunk under `labels`. If the chunk already contributed, its
     * old contribution is subtracted first.
     */
    void apply_chunk(const MultiViewChunk& chunk, const Assignments& labels);

    /// Subtracts the chunk's recorded contribution, if any, and forgets it.
    void remove_chunk(const MultiViewChunk& chunk);

    /// Labels of every recorded chunk, concatenated in chunk order.
    Assignments labels() const;

    /// Number of instances covered by recorded chunks.
    std::size_t scanned() const;

    /// Present (view, instance) pairs covered, i.e. sum over v, k of T^(v)[k].
    std::int64_t present_pairs() const;

    /// Bytes held by R and T (chunk labels excluded).
    std::size_t bytes() const;

private:
    void check_labels(const MultiViewChunk& chunk, const Assignments& labels) const;
    void accumulate(const MultiViewChunk& chunk, const Assignments& labels, double sign);

    std::size_t n_clusters_ = 0;
    std::vector<Matrix> sums_;
    std::vector<std::vector<std::int64_t>> counts_;
    std::vector<std::optional<Assignments>> contribs_;
};

/// Count of present instances per (view, cluster) in one chunk.
ClusterCounts chunk_cluster_counts(const MultiViewChunk& chunk, const Assignments& labels,
                                   std::size_t n_clusters);

/// Dense V^T W^(v) V for a chunk; used to check that it is diagonal.
Matrix dense_assignment_gram(const MultiViewChunk& chunk, const Assignments& labels,
                             std::size_t view, std::size_t n_clusters);

}  // namespace opimc

#endif  // OPIMC_MODEL_HPP
