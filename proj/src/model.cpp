#include "opimc/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace opimc {

void DatasetMeta::validate() const {
    if (n_views == 0) {
        throw std::invalid_argument("dataset must have at least one view");
    }
    if (n_instances == 0) {
        throw std::invalid_argument("dataset must have at least one instance");
    }
    if (dims.size() != n_views) {
        throw std::invalid_argument("expected " + std::to_string(n_views) + " view dimensions, got " +
                                    std::to_string(dims.size()));
    }
    for (auto d : dims) {
        if (d == 0) {
            throw std::invalid_argument("view dimension must be positive");
        }
    }
    if (n_clusters == 0) {
        throw std::invalid_argument("number of clusters must be positive");
    }
    if (n_clusters > n_instances) {
        throw std::invalid_argument("more clusters (" + std::to_string(n_clusters) + ") than instances (" +
                                    std::to_string(n_instances) + ")");
    }
    if (!(missing_ratio >= 0.0 && missing_ratio <= 1.0)) {
        throw std::invalid_argument("missing ratio must lie in [0, 1]");
    }
}

PresenceMask::PresenceMask(std::size_t n_views, std::size_t n_instances)
    : bits_(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Ones(
          static_cast<Eigen::Index>(n_views), static_cast<Eigen::Index>(n_instances))) {}

PresenceMask::PresenceMask(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits)
    : bits_(std::move(bits)) {
    for (Eigen::Index j = 0; j < bits_.cols(); ++j) {
        for (Eigen::Index v = 0; v < bits_.rows(); ++v) {
            if (bits_(v, j) > 1) {
                throw std::invalid_argument("presence mask entries must be 0 or 1");
            }
        }
    }
}

std::size_t PresenceMask::present_in_view(std::size_t view) const {
    std::size_t n = 0;
    for (Eigen::Index j = 0; j < bits_.cols(); ++j) {
        n += bits_(static_cast<Eigen::Index>(view), j);
    }
    return n;
}

std::size_t PresenceMask::present_pairs() const {
    std::size_t n = 0;
    for (std::size_t v = 0; v < n_views(); ++v) {
        n += present_in_view(v);
    }
    return n;
}

double PresenceMask::missing_ratio() const {
    const auto total = static_cast<double>(n_views() * n_instances());
    if (total == 0) {
        return 0.0;
    }
    return 1.0 - static_cast<double>(present_pairs()) / total;
}

PresenceMask PresenceMask::slice(std::size_t offset, std::size_t count) const {
    if (offset + count > n_instances()) {
        throw std::out_of_range("mask slice past the last instance");
    }
    PresenceMask out;
    out.bits_ = bits_.middleCols(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(count));
    return out;
}

void PresenceMask::validate() const {
    for (Eigen::Index j = 0; j < bits_.cols(); ++j) {
        bool any = false;
        for (Eigen::Index v = 0; v < bits_.rows(); ++v) {
            any = any || bits_(v, j) != 0;
        }
        if (!any) {
            throw std::invalid_argument("instance " + std::to_string(j) + " is absent from every view");
        }
    }
}

void MultiViewChunk::validate() const {
    if (mask.n_views() != views.size()) {
        throw std::invalid_argument("chunk mask and data disagree on the number of views");
    }
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (static_cast<std::size_t>(views[v].cols()) != size()) {
            throw std::invalid_argument("chunk view " + std::to_string(v) + " has the wrong number of columns");
        }
        for (std::size_t i = 0; i < size(); ++i) {
            if (!present(v, i) && !views[v].col(static_cast<Eigen::Index>(i)).isZero(0.0)) {
                throw std::invalid_argument("absent column is not zero-filled");
            }
        }
    }
}

std::size_t MultiViewChunk::bytes() const {
    std::size_t total = static_cast<std::size_t>(mask.bits().size());
    for (const auto& x : views) {
        total += static_cast<std::size_t>(x.size()) * sizeof(double);
    }
    return total;
}

bool FactorSet::all_finite() const {
    return std::all_of(centers.begin(), centers.end(), [](const Matrix& u) { return u.allFinite(); });
}

std::size_t FactorSet::bytes() const {
    std::size_t total = 0;
    for (const auto& u : centers) {
        total += static_cast<std::size_t>(u.size()) * sizeof(double);
    }
    return total;
}

void SolverConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be a finite nonnegative number");
    }
    if (chunk_size < 1) {
        throw std::invalid_argument("chunk size must be at least 1");
    }
    if (max_inner_iters < 1) {
        throw std::invalid_argument("max inner iterations must be at least 1");
    }
    if (n_passes < 1) {
        throw std::invalid_argument("number of passes must be at least 1");
    }
}

GlobalStats::GlobalStats(const DatasetMeta& meta) : GlobalStats(meta.n_clusters, meta.dims) {}

GlobalStats::GlobalStats(std::size_t n_clusters, const std::vector<std::size_t>& dims)
    : n_clusters_(n_clusters) {
    const auto k = static_cast<Eigen::Index>(n_clusters);
    for (auto d : dims) {
        sums_.push_back(Matrix::Zero(static_cast<Eigen::Index>(d), k));
        counts_.emplace_back(n_clusters, 0);
    }
}

bool GlobalStats::has_contribution(std::size_t chunk_index) const {
    return chunk_index < contribs_.size() && contribs_[chunk_index].has_value();
}

const Assignments& GlobalStats::contribution(std::size_t chunk_index) const {
    if (!has_contribution(chunk_index)) {
        throw std::out_of_range("chunk " + std::to_string(chunk_index) + " has no recorded contribution");
    }
    return *contribs_[chunk_index];
}

void GlobalStats::check_labels(const MultiViewChunk& chunk, const Assignments& labels) const {
    if (labels.size() != chunk.size()) {
        throw std::invalid_argument("one label per chunk column is required");
    }
    if (chunk.n_views() != n_views()) {
        throw std::invalid_argument("chunk has a different number of views than the statistics");
    }
    for (std::size_t v = 0; v < n_views(); ++v) {
        if (chunk.views[v].rows() != sums_[v].rows()) {
            throw std::invalid_argument("chunk view " + std::to_string(v) + " has the wrong dimension");
        }
    }
    for (auto l : labels) {
        if (l >= n_clusters_) {
            throw std::out_of_range("cluster label " + std::to_string(l) + " out of range");
        }
    }
}

void GlobalStats::accumulate(const MultiViewChunk& chunk, const Assignments& labels, double sign) {
    const auto step = static_cast<std::int64_t>(sign);
    for (std::size_t v = 0; v < n_views(); ++v) {
        auto& r = sums_[v];
        auto& t = counts_[v];
        const auto& x = chunk.views[v];
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (!chunk.present(v, i)) {
                continue;
            }
            const auto k = static_cast<Eigen::Index>(labels[i]);
            if (sign > 0) {
                r.col(k) += x.col(static_cast<Eigen::Index>(i));
            } else {
                r.col(k) -= x.col(static_cast<Eigen::Index>(i));
            }
            t[labels[i]] += step;
        }
    }
}

void GlobalStats::apply_chunk(const MultiViewChunk& chunk, const Assignments& labels) {
    check_labels(chunk, labels);
    if (has_contribution(chunk.chunk_index)) {
        remove_chunk(chunk);
    }
    accumulate(chunk, labels, 1.0);
    if (contribs_.size() <= chunk.chunk_index) {
        contribs_.resize(chunk.chunk_index + 1);
    }
    contribs_[chunk.chunk_index] = labels;
}

void GlobalStats::remove_chunk(const MultiViewChunk& chunk) {
    if (!has_contribution(chunk.chunk_index)) {
        return;
    }
    accumulate(chunk, *contribs_[chunk.chunk_index], -1.0);
    contribs_[chunk.chunk_index].reset();
}

Assignments GlobalStats::labels() const {
    Assignments out;
    out.reserve(scanned());
    for (const auto& c : contribs_) {
        if (c) {
            out.insert(out.end(), c->begin(), c->end());
        }
    }
    return out;
}

std::size_t GlobalStats::scanned() const {
    std::size_t n = 0;
    for (const auto& c : contribs_) {
        if (c) {
            n += c->size();
        }
    }
    return n;
}

std::int64_t GlobalStats::present_pairs() const {
    std::int64_t n = 0;
    for (const auto& t : counts_) {
        for (auto c : t) {
            n += c;
        }
    }
    return n;
}

std::size_t GlobalStats::bytes() const {
    std::size_t total = 0;
    for (std::size_t v = 0; v < n_views(); ++v) {
        total += static_cast<std::size_t>(sums_[v].size()) * sizeof(double);
        total += counts_[v].size() * sizeof(std::int64_t);
    }
    return total;
}

ClusterCounts chunk_cluster_counts(const MultiViewChunk& chunk, const Assignments& labels,
                                   std::size_t n_clusters) {
    ClusterCounts counts(chunk.n_views(), std::vector<std::int64_t>(n_clusters, 0));
    for (std::size_t v = 0; v < chunk.n_views(); ++v) {
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (chunk.present(v, i)) {
                ++counts[v][labels[i]];
            }
        }
    }
    return counts;
}

Matrix dense_assignment_gram(const MultiViewChunk& chunk, const Assignments& labels, std::size_t view,
                             std::size_t n_clusters) {
    const auto s = static_cast<Eigen::Index>(chunk.size());
    const auto k = static_cast<Eigen::Index>(n_clusters);
    Matrix indicator = Matrix::Zero(s, k);
    Matrix weight = Matrix::Zero(s, s);
    for (Eigen::Index i = 0; i < s; ++i) {
        indicator(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) = 1.0;
        weight(i, i) = chunk.present(view, static_cast<std::size_t>(i)) ? 1.0 : 0.0;
    }
    return indicator.transpose() * weight * indicator;
}

}  // namespace opimc
